//! Exact inference by derivative-sum-product message passing.

mod discrete;
mod engine;
mod factor_cache;
mod value;

pub use discrete::{discrete_pmf, DiscreteCdn};
pub use engine::{Engine, Mode, PointArgs, MAX_CLIQUE};
pub use value::Scalar;

use crate::cliquetree::{build_min_fill, CliqueTree};
use crate::copulas::SignedLog;
use crate::error::Result;
use crate::model::{reduce, transform_point, transform_u, CdnModel, Evidence, VarState};

/// Computes the message set from clique `i` to neighbour `j`.
pub fn dsp_messages<V: Scalar>(e: &mut Engine<V>, i: usize, j: usize) -> Result<Vec<V>> {
    e.compute_message(i, j)?;
    Ok(e.message(i, j).expect("just computed").to_vec())
}

/// Upward pass plus root evaluation; copula-space derivative of the product.
pub fn pass_messages<V: Scalar>(e: &mut Engine<V>) -> Result<V> {
    e.evaluate()
}

pub fn calibrate<V: Scalar>(e: &mut Engine<V>) -> Result<()> {
    e.calibrate()
}

/// Query front end over one model and its min-fill clique tree.
#[derive(Debug, Clone)]
pub struct Inference {
    model: CdnModel,
    engine: Engine<SignedLog>,
}

impl Inference {
    pub fn new(model: &CdnModel) -> Result<Self> {
        let tree = build_min_fill(&model.scopes())?;
        let engine = Engine::new(&tree, model.factors(), Mode::Continuous)?;
        Ok(Self { model: model.clone(), engine })
    }

    pub fn model(&self) -> &CdnModel {
        &self.model
    }

    pub fn tree(&self) -> &CliqueTree {
        self.engine.tree()
    }

    /// ∂^D F(x) for the evidence: D holds the Point variables, Bound
    /// variables are fixed, everything else is marginalized.
    pub fn evaluate(&mut self, e: &Evidence) -> Result<SignedLog> {
        let r = reduce(&self.model, e);
        let t = transform_point(&self.model, &r.x, &r.diff)?;
        self.engine.set_point(self.model.factors(), &t.args);
        Ok(self.engine.evaluate()?.scale_ln(t.ln_kappa))
    }

    /// ln f(x) for a complete point.
    pub fn log_density(&mut self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate(&Evidence::point(x))?.ln())
    }

    /// ln c(u), the copula density at u.
    pub fn copula_log_density(&mut self, u: &[f64]) -> Result<f64> {
        let diff = vec![true; u.len()];
        let t = transform_u(&self.model, u, &diff, None);
        self.engine.set_point(self.model.factors(), &t.args);
        Ok(self.engine.evaluate()?.ln() + t.ln_kappa)
    }

    /// P(X_i ≤ x) with everything else marginalized.
    pub fn marginal_cdf(&mut self, i: usize, x: f64) -> Result<f64> {
        let e = Evidence::marginalized(self.model.n_vars()).with(i, VarState::CumulativeBound(x));
        Ok(self.evaluate(&e)?.to_f64())
    }

    /// Ratio query: evaluate(target ∧ given) / evaluate(given).
    pub fn conditional(&mut self, target: &Evidence, given: &Evidence) -> Result<SignedLog> {
        let joint = given.merge(target);
        let num = self.evaluate(&joint)?;
        let den = self.evaluate(given)?;
        Ok(SignedLog { log_abs: num.log_abs - den.log_abs, sign: num.sign * den.sign })
    }
}

/// ln f(x) evaluated per the evidence (Point variables differentiated).
pub fn density(model: &CdnModel, e: &Evidence) -> Result<SignedLog> {
    Inference::new(model)?.evaluate(e)
}
