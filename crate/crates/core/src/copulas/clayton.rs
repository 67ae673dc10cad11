//! n-ary Clayton copula C(u) = (Σ u_i^-θ - n + 1)^(-1/θ).
//!
//! All quantities are evaluated through the u_min-scaled log form
//! L = ln(Σ u_i^-θ - n + 1) = -θ ln u_min + ln(1 + x), where
//! x = Σ_{i≠min} u_min^θ (u_i^-θ - 1) ≥ 0 is summed from `expm1` differences.

use super::SignedLog;
use crate::error::{CdnError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaytonCopula {
    pub theta: f64,
    pub arity: usize,
}

impl ClaytonCopula {
    pub fn new(theta: f64, arity: usize) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(CdnError::ParamOutOfDomain { kind: "clayton", param: theta });
        }
        if arity < 2 {
            return Err(CdnError::UnsupportedArity { kind: "clayton", arity });
        }
        Ok(Self { theta, arity })
    }
}

/// Per-point quantities shared by every mask.
#[derive(Debug, Clone, Default)]
pub(crate) struct Prepared {
    ln_u: Vec<f64>,
    /// L = ln(Σ u_i^(-θ) - n + 1)
    big_l: f64,
    /// ln(1 + x), L without its -θ ln u_min part
    ln1p_x: f64,
    ln_min: f64,
    /// (Σ_i ln u_i u_i^(-θ)) / s - ln u_min, formed without cancellation
    excess: f64,
}

pub(crate) fn prepare(theta: f64, u: &[f64]) -> Option<Prepared> {
    let mut p = Prepared::default();
    prepare_into(theta, u, &mut p).then_some(p)
}

/// Fills `p` in place; false when some coordinate is zero (C vanishes).
pub(crate) fn prepare_into(theta: f64, u: &[f64], p: &mut Prepared) -> bool {
    if u.iter().any(|&x| x <= 0.0) {
        return false;
    }
    p.ln_u.clear();
    p.ln_u.extend(u.iter().map(|x| x.ln()));
    let mut imin = 0;
    for (i, l) in p.ln_u.iter().enumerate() {
        if *l < p.ln_u[imin] {
            imin = i;
        }
    }
    let ln_min = p.ln_u[imin];
    // x = Σ_{i≠min} (u_min/u_i)^θ (1 - u_i^θ), each term free of cancellation
    let mut x = 0.0;
    let mut ex = 0.0;
    for (i, &l) in p.ln_u.iter().enumerate() {
        if i != imin {
            let r = (theta * (ln_min - l)).exp();
            let pw = (theta * l).exp();
            x -= r * (theta * l).exp_m1();
            ex += r * ((l - ln_min) + ln_min * pw);
        }
    }
    p.ln1p_x = x.ln_1p();
    p.big_l = -theta * ln_min + p.ln1p_x;
    p.ln_min = ln_min;
    p.excess = ex / (1.0 + x);
    true
}

fn mask_terms(theta: f64, p: &Prepared, mask: u32) -> (f64, f64, f64, f64) {
    // (m, Σ_a ln u, Σ_{k<m} ln(1+kθ), Σ_{k<m} k/(1+kθ))
    let mut m = 0u32;
    let mut sum_ln = 0.0;
    for (i, l) in p.ln_u.iter().enumerate() {
        if mask >> i & 1 == 1 {
            m += 1;
            sum_ln += l;
        }
    }
    let mut lg = 0.0;
    let mut dg = 0.0;
    for k in 1..m {
        let kt = f64::from(k) * theta;
        lg += kt.ln_1p();
        dg += f64::from(k) / (1.0 + kt);
    }
    (f64::from(m), sum_ln, lg, dg)
}

pub(crate) fn log_value(theta: f64, p: &Prepared, mask: u32) -> f64 {
    let (m, sum_ln, lg, _) = mask_terms(theta, p, mask);
    lg - (1.0 + theta) * sum_ln - (1.0 / theta + m) * p.big_l
}

/// d/dθ ln ∂C/∂a.
pub(crate) fn log_grad(theta: f64, p: &Prepared, mask: u32) -> f64 {
    // The ln u_min parts of -Σ_a ln u, L/θ² and (1/θ + m)(ln u_min + excess)
    // cancel exactly; drop them before summing.
    let (m, sum_ln, _, dg) = mask_terms(theta, p, mask);
    dg - (sum_ln - m * p.ln_min) + p.ln1p_x / (theta * theta) + (1.0 / theta + m) * p.excess
}

fn check(c: &ClaytonCopula, u: &[f64], mask: u32) -> Result<()> {
    if !(c.theta > 0.0) {
        return Err(CdnError::ParamOutOfDomain { kind: "clayton", param: c.theta });
    }
    for (i, &x) in u.iter().enumerate() {
        if mask >> i & 1 == 1 && x >= 1.0 {
            return Err(CdnError::InvalidMask { mask });
        }
    }
    Ok(())
}

/// ln ∂C/∂u_a where a is the set of positions in `diff_mask`.
pub fn clayton_log_partial(c: &ClaytonCopula, u: &[f64], diff_mask: u32) -> Result<SignedLog> {
    check(c, u, diff_mask)?;
    Ok(match prepare(c.theta, u) {
        None => SignedLog::ZERO,
        Some(p) => SignedLog::from_ln(log_value(c.theta, &p, diff_mask)),
    })
}

/// (∂/∂θ)(∂C/∂u_a) as a signed value.
pub fn clayton_log_param_partial(c: &ClaytonCopula, u: &[f64], diff_mask: u32) -> Result<SignedLog> {
    check(c, u, diff_mask)?;
    Ok(match prepare(c.theta, u) {
        None => SignedLog::ZERO,
        Some(p) => {
            let g = log_grad(c.theta, &p, diff_mask);
            SignedLog::from_ln(log_value(c.theta, &p, diff_mask)).scale(g)
        }
    })
}

/// Fills value and (optionally) parameter-partial tables for every mask
/// that is a subset of `diffable`; other entries are zero.
pub(crate) fn tables(
    theta: f64,
    u: &[f64],
    diffable: u32,
    value: &mut [SignedLog],
    param: Option<&mut [SignedLog]>,
) {
    value.fill(SignedLog::ZERO);
    let prep = prepare(theta, u);
    let mut param = param;
    if let Some(pt) = param.as_deref_mut() {
        pt.fill(SignedLog::ZERO);
    }
    let Some(p) = prep else { return };
    let mut sub = diffable;
    loop {
        let lv = log_value(theta, &p, sub);
        value[sub as usize] = SignedLog::from_ln(lv);
        if let Some(pt) = param.as_deref_mut() {
            let g = log_grad(theta, &p, sub);
            pt[sub as usize] = SignedLog::from_ln(lv).scale(g);
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & diffable;
    }
}

/// Plain CDF value, for tests and bounds checks.
pub fn clayton_cdf(theta: f64, u: &[f64]) -> f64 {
    match prepare(theta, u) {
        None => 0.0,
        Some(p) => (-p.big_l / theta).exp(),
    }
}
