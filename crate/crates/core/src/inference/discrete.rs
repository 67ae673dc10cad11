//! CDNs over finite-support integer variables.

use super::engine::{Engine, Mode, PointArgs};
use crate::cliquetree::build_min_fill;
use crate::copulas::SignedLog;
use crate::error::{CdnError, Result};
use crate::margins::DiscreteMargin;
use crate::model::{validate, CopulaFactor};

/// Copula CDN whose margins are step-function CDFs.
#[derive(Debug, Clone)]
pub struct DiscreteCdn {
    margins: Vec<DiscreteMargin>,
    factors: Vec<CopulaFactor>,
    d: Vec<f64>,
    engine: Engine<SignedLog>,
}

impl DiscreteCdn {
    pub fn new(margins: Vec<DiscreteMargin>, factors: Vec<CopulaFactor>) -> Result<Self> {
        validate(margins.len(), &factors)
            .map_err(|v| CdnError::InvalidModel(v.iter().map(|x| x.to_string()).collect()))?;
        let mut k = vec![0usize; margins.len()];
        for f in &factors {
            for &x in &f.scope {
                k[x] += 1;
            }
        }
        let d = k.iter().map(|&c| 1.0 / c as f64).collect();
        let scopes: Vec<Vec<usize>> = factors.iter().map(|f| f.scope.clone()).collect();
        let tree = build_min_fill(&scopes)?;
        let engine = Engine::new(&tree, &factors, Mode::Discrete)?;
        Ok(Self { margins, factors, d, engine })
    }

    pub fn n_vars(&self) -> usize {
        self.margins.len()
    }

    pub fn margins(&self) -> &[DiscreteMargin] {
        &self.margins
    }

    pub fn factors(&self) -> &[CopulaFactor] {
        &self.factors
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// Joint CDF P(X ≤ x) evaluated directly as the factor product.
    pub fn cdf(&self, x: &[i64]) -> f64 {
        self.factors
            .iter()
            .map(|f| {
                let v: Vec<f64> = f.scope.iter().map(|&i| self.margins[i].cdf(x[i]).powf(self.d[i])).collect();
                crate::copulas::factor_cdf(f.kind, f.param, &v)
            })
            .product()
    }
}

/// p(x) by backward-difference message passing.
pub fn discrete_pmf(cdn: &mut DiscreteCdn, x: &[i64]) -> Result<f64> {
    let n = cdn.n_vars();
    if x.len() != n {
        return Err(CdnError::OutOfSupport);
    }
    let mut args = PointArgs::ones(n);
    for i in 0..n {
        if x[i] < 0 || x[i] as usize >= cdn.margins[i].support_size() {
            return Err(CdnError::OutOfSupport);
        }
        let d = cdn.d[i];
        args.v[i] = cdn.margins[i].cdf(x[i]).powf(d);
        args.lower_v[i] = cdn.margins[i].cdf(x[i] - 1).powf(d);
        args.diff[i] = true;
    }
    cdn.engine.set_point(&cdn.factors, &args);
    Ok(cdn.engine.evaluate()?.to_f64())
}
