//! Piecewise composite-likelihood learning over the parameter graph.

use rand::seq::SliceRandom;

use super::energy::EnergyEvaluator;
use super::optim::lbfgs_restart;
use super::{report_of, LearnReport, Method, OptimizerConfig, Termination};
use crate::cliquetree::{build_restricted, CliqueTree};
use crate::error::{CdnError, Result};
use crate::model::{CdnModel, Evidence};
use crate::sampling::rng_from_seed;

/// Factors as nodes, joined when their scopes intersect, with the clique
/// tree of each node's subproblem.
#[derive(Debug, Clone)]
pub struct ParameterGraph {
    pub edges: Vec<(usize, usize)>,
    pub neighbours: Vec<Vec<usize>>,
    pub trees: Vec<CliqueTree>,
}

impl ParameterGraph {
    pub fn new(model: &CdnModel) -> Result<Self> {
        let scopes = model.scopes();
        let nf = scopes.len();
        let mut edges = Vec::new();
        let mut neighbours = vec![Vec::new(); nf];
        for a in 0..nf {
            for b in a + 1..nf {
                if scopes[a].iter().any(|x| scopes[b].contains(x)) {
                    edges.push((a, b));
                    neighbours[a].push(b);
                    neighbours[b].push(a);
                }
            }
        }
        let trees = scopes.iter().map(|s| build_restricted(&scopes, Some(s))).collect::<Result<Vec<_>>>()?;
        Ok(Self { edges, neighbours, trees })
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

/// Iterates one-parameter L-BFGS solves per factor, each on the model
/// marginalized to that factor's scope, until every subproblem is active.
pub fn piecewise_learn(model: &CdnModel, data: &[Evidence], init: &[f64], cfg: &OptimizerConfig) -> Result<LearnReport> {
    cfg.validate()?;
    let nf = model.factors().len();
    if nf == 0 {
        return Err(CdnError::EmptyModel);
    }
    let mut subs = (0..nf)
        .map(|f| EnergyEvaluator::restricted(model, data, Some(&model.factors()[f].scope), &[f]))
        .collect::<Result<Vec<_>>>()?;
    let mut theta = init.to_vec();
    let mut prev_obj: Vec<f64> = subs
        .iter_mut()
        .enumerate()
        .map(|(f, sub)| {
            sub.set_all(&theta);
            sub.energy(&[theta[f]])
        })
        .collect();
    let mut rng = rng_from_seed(cfg.seed);
    let mut order: Vec<usize> = (0..nf).collect();
    let mut report = LearnReport::start(Method::Piecewise, prev_obj.iter().sum());
    let mut capped = vec![false; nf];
    while report.iterations < cfg.max_iter {
        order.shuffle(&mut rng);
        let mut all_active = true;
        for &f in &order {
            let sub = &mut subs[f];
            sub.set_all(&theta);
            let r = report_of(lbfgs_restart(sub, &[theta[f]], cfg))?;
            report.restarts += r.restarts;
            capped[f] = r.iterations >= cfg.max_iter;
            let dtheta = (r.theta[0] - theta[f]).powi(2);
            let dobj = (r.energy - prev_obj[f]).abs();
            let active = dtheta < cfg.epsilon || dobj < cfg.epsilon;
            all_active &= active;
            theta[f] = r.theta[0];
            prev_obj[f] = r.energy;
        }
        report.iterations += 1;
        report.energy_trace.push(prev_obj.iter().sum());
        if all_active {
            report.converged = true;
            report.termination = Termination::AllActive;
            break;
        }
        if capped.iter().all(|&c| c) {
            report.termination = Termination::MaxIterations;
            break;
        }
    }
    report.energy = prev_obj.iter().sum();
    report.theta = theta;
    if report.converged {
        Ok(report)
    } else {
        Err(CdnError::DidNotConverge(Box::new(report)))
    }
}
