//! Two-stage estimation: margins by MLE, then copula parameters by
//! descent on the energy.

mod energy;
mod optim;
mod piecewise;

pub use energy::EnergyEvaluator;
pub use optim::{gradient_descent, lbfgs_barrier, lbfgs_restart, Objective, Quadratic};
pub use piecewise::{piecewise_learn, ParameterGraph};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::copulas::CopulaKind;
use crate::error::{CdnError, Result};
use crate::margins::{fit_mle, NormalMargin};
use crate::model::{CdnModel, Evidence, VarState};
use crate::sampling::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "gd")]
    Gd,
    #[serde(rename = "lbfgs-restart")]
    LbfgsRestart,
    #[serde(rename = "lbfgs-barrier")]
    LbfgsBarrier,
    #[serde(rename = "piecewise")]
    Piecewise,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Gd, Method::LbfgsRestart, Method::LbfgsBarrier, Method::Piecewise];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::LbfgsRestart => "lbfgs-restart",
            Method::LbfgsBarrier => "lbfgs-barrier",
            Method::Piecewise => "piecewise",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = CdnError;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CdnError::InvalidSpec(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    NotStarted,
    RelativeChange,
    StepLength,
    GradientNorm,
    BarrierGap,
    AllActive,
    LineSearchFailed,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub epsilon: f64,
    pub max_iter: usize,
    pub alpha: f64,
    pub beta: f64,
    pub lbfgs_memory: usize,
    pub barrier_t0: f64,
    pub barrier_mu: f64,
    /// Random initializations tried by [`fit`].
    pub restarts: usize,
    pub seed: u64,
    pub max_backtracks: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            max_iter: 100,
            alpha: 0.001,
            beta: 0.9,
            lbfgs_memory: 10,
            barrier_t0: 1.0,
            barrier_mu: 10.0,
            restarts: 3,
            seed: 0,
            max_backtracks: 400,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(CdnError::InvalidSpec(format!("optimizer {what}")));
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return bad("alpha must lie in (0, 0.5)");
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.barrier_t0 > 0.0 && self.barrier_mu > 1.0) {
            return bad("barrier needs t0 > 0 and mu > 1");
        }
        if self.lbfgs_memory == 0 {
            return bad("lbfgs memory must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnReport {
    pub method: Method,
    pub theta: Vec<f64>,
    pub energy: f64,
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
    pub termination: Termination,
}

impl LearnReport {
    pub(crate) fn start(method: Method, energy: f64) -> Self {
        Self {
            method,
            theta: Vec::new(),
            energy,
            energy_trace: vec![energy],
            iterations: 0,
            restarts: 0,
            converged: false,
            termination: Termination::MaxIterations,
        }
    }
}

/// Turns a non-convergence error back into its (unconverged) report.
pub fn report_of(r: Result<LearnReport>) -> Result<LearnReport> {
    match r {
        Err(CdnError::DidNotConverge(rep)) => Ok(*rep),
        other => other,
    }
}

/// Clayton parameter for Kendall's τ.
pub fn clayton_theta_from_tau(tau: f64) -> f64 {
    2.0 * tau / (1.0 - tau)
}

/// Random start: Clayton via τ ~ U(0, 0.5), normal ρ ~ U(0, 1).
pub fn random_init<R: Rng>(model: &CdnModel, rng: &mut R) -> Vec<f64> {
    model
        .factors()
        .iter()
        .map(|f| match f.kind {
            CopulaKind::Clayton => clayton_theta_from_tau(rng.random_range(0.0..0.5)).max(1e-6),
            CopulaKind::NormalPair => rng.random_range(0.0..1.0),
        })
        .collect()
}

/// Runs one optimizer from `init` on the full energy (or piecewise).
pub fn learn_from(model: &CdnModel, data: &[Evidence], method: Method, init: &[f64], cfg: &OptimizerConfig) -> Result<LearnReport> {
    if method == Method::Piecewise {
        return piecewise_learn(model, data, init, cfg);
    }
    let mut ev = EnergyEvaluator::new(model, data)?;
    match method {
        Method::Gd => gradient_descent(&mut ev, init, cfg),
        Method::LbfgsRestart => lbfgs_restart(&mut ev, init, cfg),
        Method::LbfgsBarrier => lbfgs_barrier(&mut ev, init, cfg),
        Method::Piecewise => unreachable!(),
    }
}

/// Stage 1: each margin by MLE over that variable's observed values.
pub fn fit_margins(n_vars: usize, data: &[Evidence]) -> Result<Vec<NormalMargin>> {
    (0..n_vars)
        .map(|i| {
            let xs: Vec<f64> = data
                .iter()
                .filter_map(|e| match e.states.get(i) {
                    Some(VarState::Point(x)) => Some(*x),
                    _ => None,
                })
                .collect();
            fit_mle(&xs)
        })
        .collect()
}

/// Two-stage fit with `cfg.restarts` random starts; returns the model with
/// fitted margins and the best parameters, plus the best run's report.
pub fn fit(model: &CdnModel, data: &[Evidence], method: Method, cfg: &OptimizerConfig) -> Result<(CdnModel, LearnReport)> {
    cfg.validate()?;
    let mut m = model.clone();
    m.set_margins(&fit_margins(model.n_vars(), data)?);
    let mut rng = rng_from_seed(cfg.seed);
    let mut best: Option<LearnReport> = None;
    for _ in 0..cfg.restarts.max(1) {
        let init = random_init(&m, &mut rng);
        let r = report_of(learn_from(&m, data, method, &init, cfg))?;
        let better = match &best {
            None => true,
            Some(b) => (r.converged && !b.converged) || (r.converged == b.converged && r.energy < b.energy),
        };
        if better {
            best = Some(r);
        }
    }
    let best = best.expect("at least one start");
    m.set_params(&best.theta)?;
    if best.converged {
        Ok((m, best))
    } else {
        Err(CdnError::DidNotConverge(Box::new(best)))
    }
}

/// Mean squared error between parameter vectors.
pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len().max(1) as f64
}
