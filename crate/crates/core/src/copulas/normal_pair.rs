//! Bivariate normal copula on the probit scale.

use super::SignedLog;
use crate::error::{CdnError, Result};
use crate::margins::normal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalPairCopula {
    pub rho: f64,
}

impl NormalPairCopula {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(CdnError::ParamOutOfDomain { kind: "normal_pair", param: rho });
        }
        Ok(Self { rho })
    }
}

fn check(rho: f64, w: [f64; 2], mask: u32) -> Result<()> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(CdnError::ParamOutOfDomain { kind: "normal_pair", param: rho });
    }
    for (i, x) in w.iter().enumerate() {
        if mask >> i & 1 == 1 && !x.is_finite() {
            return Err(CdnError::InvalidMask { mask });
        }
    }
    Ok(())
}

pub(crate) fn value(rho: f64, w: [f64; 2], mask: u32) -> SignedLog {
    let s = ((1.0 - rho) * (1.0 + rho)).sqrt();
    match mask {
        0 => SignedLog::from_f64(normal::bvn_cdf(w[0], w[1], rho)),
        1 | 2 => {
            let (a, b) = if mask == 1 { (w[0], w[1]) } else { (w[1], w[0]) };
            SignedLog::from_ln(normal::ln_pdf(a) + normal::ln_cdf((b - rho * a) / s))
        }
        _ => SignedLog::from_ln(normal::ln_bvn_pdf(w[0], w[1], rho)),
    }
}

pub(crate) fn param(rho: f64, w: [f64; 2], mask: u32) -> SignedLog {
    let one_m = (1.0 - rho) * (1.0 + rho);
    match mask {
        0 => {
            if w.iter().any(|x| !x.is_finite()) {
                SignedLog::ZERO
            } else {
                SignedLog::from_ln(normal::ln_bvn_pdf(w[0], w[1], rho))
            }
        }
        1 | 2 => {
            let (a, b) = if mask == 1 { (w[0], w[1]) } else { (w[1], w[0]) };
            if !b.is_finite() {
                return SignedLog::ZERO;
            }
            SignedLog::from_ln(normal::ln_bvn_pdf(a, b, rho)).scale((rho * b - a) / one_m)
        }
        _ => {
            let (a, b) = (w[0], w[1]);
            let g = (rho * a - b) * (rho * b - a) / (one_m * one_m) + rho / one_m;
            SignedLog::from_ln(normal::ln_bvn_pdf(a, b, rho)).scale(g)
        }
    }
}

/// ln of the partial of Φ₂(w₁, w₂; ρ) in the probit coordinates named by `diff_mask`.
pub fn normal_pair_log_partial(c: &NormalPairCopula, w: [f64; 2], diff_mask: u32) -> Result<SignedLog> {
    check(c.rho, w, diff_mask)?;
    Ok(value(c.rho, w, diff_mask & 3))
}

/// ∂/∂ρ of the probit-scale partial named by `diff_mask`.
pub fn normal_pair_log_param_partial(
    c: &NormalPairCopula,
    w: [f64; 2],
    diff_mask: u32,
) -> Result<SignedLog> {
    check(c.rho, w, diff_mask)?;
    Ok(param(c.rho, w, diff_mask & 3))
}

/// Tables of partials in the copula coordinates v (not w): each
/// differentiated coordinate picks up the probit chain factor 1/φ(w_i).
pub(crate) fn tables(
    rho: f64,
    w: [f64; 2],
    diffable: u32,
    value_out: &mut [SignedLog],
    param_out: Option<&mut [SignedLog]>,
) {
    value_out.fill(SignedLog::ZERO);
    let mut param_out = param_out;
    if let Some(p) = param_out.as_deref_mut() {
        p.fill(SignedLog::ZERO);
    }
    if w[0] == f64::NEG_INFINITY || w[1] == f64::NEG_INFINITY {
        return;
    }
    let chain = [-normal::ln_pdf(w[0]), -normal::ln_pdf(w[1])];
    for mask in 0..4u32 {
        if mask & !diffable != 0 {
            continue;
        }
        let mut c = 0.0;
        for (i, ch) in chain.iter().enumerate() {
            if mask >> i & 1 == 1 {
                c += ch;
            }
        }
        value_out[mask as usize] = value(rho, w, mask).scale_ln(c);
        if let Some(p) = param_out.as_deref_mut() {
            p[mask as usize] = param(rho, w, mask).scale_ln(c);
        }
    }
}
