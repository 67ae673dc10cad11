//! Univariate margins and the u -> v -> w coordinate transforms.

pub mod normal;

use serde::{Deserialize, Serialize};

use crate::error::{CdnError, Result};

/// A normal margin N(mu, sigma²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalMargin {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for NormalMargin {
    fn default() -> Self {
        Self::standard()
    }
}

impl NormalMargin {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(CdnError::InvalidModel(vec![format!(
                "margin needs finite mu and sigma > 0, got ({mu}, {sigma})"
            )]));
        }
        Ok(Self { mu, sigma })
    }

    pub fn standard() -> Self {
        Self { mu: 0.0, sigma: 1.0 }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        normal::cdf((x - self.mu) / self.sigma)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        normal::ln_pdf((x - self.mu) / self.sigma) - self.sigma.ln()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.mu + self.sigma * normal::quantile(p)
    }
}

/// Maximum-likelihood normal fit; the scale uses the 1/m convention.
pub fn fit_mle(samples: &[f64]) -> Result<NormalMargin> {
    let m = samples.len();
    if m < 2 {
        return Err(CdnError::DegenerateSample);
    }
    let mean = samples.iter().sum::<f64>() / m as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64;
    if !(var > 0.0) || !var.is_finite() {
        return Err(CdnError::DegenerateSample);
    }
    Ok(NormalMargin { mu: mean, sigma: var.sqrt() })
}

/// u = F(x), with +∞ -> 1 and -∞ -> 0.
pub fn to_copula_coord(m: &NormalMargin, x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        m.cdf(x)
    }
}

/// dΦ⁻¹/dv = 1 / φ(Φ⁻¹(v)).
///
/// Arguments are clamped like every other probit in the crate, so tiny
/// positive values give a large finite result.
pub fn probit_chain_term(v: f64) -> Result<f64> {
    if !(v > 0.0 && v < 1.0) {
        return Err(CdnError::OutOfUnitInterval(v));
    }
    let w = normal::probit(v);
    Ok((-normal::ln_pdf(w)).exp())
}

/// Clamp applied to every finite-argument copula coordinate.
pub fn clamp_unit(u: f64) -> f64 {
    u.clamp(normal::U_CLAMP, 1.0 - normal::U_CLAMP)
}

/// A finite-support integer margin on {0, 1, ..., K-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMargin {
    cum: Vec<f64>,
}

impl DiscreteMargin {
    /// Builds from a probability vector; it is renormalized to sum to one.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(CdnError::InvalidModel(vec!["discrete margin needs nonnegative probabilities".into()]));
        }
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) {
            return Err(CdnError::InvalidModel(vec!["discrete margin has zero mass".into()]));
        }
        let mut acc = 0.0;
        let mut cum: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p / total;
                acc
            })
            .collect();
        *cum.last_mut().unwrap() = 1.0;
        Ok(Self { cum })
    }

    pub fn bernoulli(p_one: f64) -> Result<Self> {
        Self::from_probs(&[1.0 - p_one, p_one])
    }

    pub fn support_size(&self) -> usize {
        self.cum.len()
    }

    /// F(x) for integer x; below the support this is 0.
    pub fn cdf(&self, x: i64) -> f64 {
        if x < 0 {
            0.0
        } else if x as usize >= self.cum.len() {
            1.0
        } else {
            self.cum[x as usize]
        }
    }

    pub fn pmf(&self, x: i64) -> f64 {
        self.cdf(x) - self.cdf(x - 1)
    }
}
