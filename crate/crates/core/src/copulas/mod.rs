//! Copula factor kernels with log-space subset and parameter partials.

pub mod clayton;
pub mod normal_pair;
mod signed_log;

pub use clayton::{clayton_log_param_partial, clayton_log_partial, ClaytonCopula};
pub use normal_pair::{normal_pair_log_param_partial, normal_pair_log_partial, NormalPairCopula};
pub use signed_log::SignedLog;

use serde::{Deserialize, Serialize};

use crate::error::{CdnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopulaKind {
    Clayton,
    NormalPair,
}

impl CopulaKind {
    pub fn name(self) -> &'static str {
        match self {
            CopulaKind::Clayton => "clayton",
            CopulaKind::NormalPair => "normal_pair",
        }
    }
}

/// Open parameter interval (lo, hi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

pub fn param_domain(kind: CopulaKind, arity: usize) -> Result<Domain> {
    match kind {
        CopulaKind::Clayton if arity >= 2 => Ok(Domain { lo: 0.0, hi: f64::INFINITY }),
        CopulaKind::NormalPair if arity == 2 => Ok(Domain { lo: -1.0, hi: 1.0 }),
        k => Err(CdnError::UnsupportedArity { kind: k.name(), arity }),
    }
}

/// Fills factor partial tables in copula coordinates.
///
/// `v` and `w` are the factor's arguments in slot order (w = probit(v),
/// only read for normal factors). Entries for masks outside `diffable`
/// are zero.
pub fn factor_tables(
    kind: CopulaKind,
    param: f64,
    v: &[f64],
    w: &[f64],
    diffable: u32,
    value: &mut [SignedLog],
    param_out: Option<&mut [SignedLog]>,
) {
    match kind {
        CopulaKind::Clayton => clayton::tables(param, v, diffable, value, param_out),
        CopulaKind::NormalPair => normal_pair::tables(param, [w[0], w[1]], diffable, value, param_out),
    }
}

/// Factor CDF value (mask ∅) in copula coordinates.
pub fn factor_cdf(kind: CopulaKind, param: f64, v: &[f64]) -> f64 {
    match kind {
        CopulaKind::Clayton => clayton::clayton_cdf(param, v),
        CopulaKind::NormalPair => {
            let w: Vec<f64> = v.iter().map(|&x| crate::margins::normal::probit(x)).collect();
            crate::margins::normal::bvn_cdf(w[0], w[1], param)
        }
    }
}
