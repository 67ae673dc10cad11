//! Exact sampling by the conditional method.

mod brent;
mod plan;

pub use brent::{brent_root, Root, RootProblem, MAX_ITER};
pub use plan::{make_sampling_cliques, plan_conditional, plan_from_order, PlanStep, SamplingPlan};

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;

use crate::copulas::{factor_cdf, SignedLog};
use crate::error::{CdnError, Result};
use crate::inference::{Engine, Mode, PointArgs};
use crate::margins::{clamp_unit, normal, to_copula_coord};
use crate::model::CdnModel;

pub const ROOT_TOL: f64 = 1e-12;
pub const BRACKET: (f64, f64) = (1e-12, 1.0 - 1e-12);

/// The crate's seedable generator.
pub fn rng_from_seed(seed: u64) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(seed)
}

/// Uniform draw on the open interval (0, 1).
pub fn uniform_open<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let k: f64 = rng.random();
        if k > 0.0 {
            return k;
        }
    }
}

/// Samples with their variable columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    pub columns: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl SampleMatrix {
    pub fn column(&self, var: usize) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|&v| v == var)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }
}

/// Per-plan workspace: one engine per step, plus the argument buffer.
#[derive(Debug, Clone)]
pub struct Sampler<'m> {
    model: &'m CdnModel,
    plan: &'m SamplingPlan,
    engines: Vec<Option<Engine<SignedLog>>>,
    args: PointArgs,
    probit: Vec<bool>,
    /// Solve the root problem on ln F rather than F.
    pub log_space: bool,
    pub root_solves: usize,
}

impl<'m> Sampler<'m> {
    pub fn new(model: &'m CdnModel, plan: &'m SamplingPlan) -> Result<Self> {
        let engines = plan
            .steps
            .iter()
            .map(|s| s.tree.as_ref().map(|t| Engine::new(t, model.factors(), Mode::Continuous)).transpose())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model,
            plan,
            engines,
            args: PointArgs::ones(model.n_vars()),
            probit: model.needs_probit(),
            log_space: true,
            root_solves: 0,
        })
    }

    fn set_var(&mut self, i: usize, u: f64) {
        let v = if u >= 1.0 { 1.0 } else { u.powf(self.model.d()[i]) };
        self.args.v[i] = v;
        self.args.w[i] = if self.probit[i] { normal::probit(v) } else { f64::INFINITY };
    }

    /// ∂_branch F in copula coordinates with the step variable at `u`,
    /// times the extra factors.
    fn log_joint(&mut self, step: usize, u: f64) -> Result<f64> {
        let s = &self.plan.steps[step];
        self.set_var(s.var, u);
        let mut ln = 0.0;
        if let Some(e) = self.engines[step].as_mut() {
            e.set_point(self.model.factors(), &self.args);
            let r = e.evaluate()?;
            if r.sign < 0 {
                return Ok(f64::NAN);
            }
            ln += r.ln();
        }
        for &f in &s.extras {
            let fac = &self.model.factors()[f];
            let v: Vec<f64> = fac.scope.iter().map(|&x| self.args.v[x]).collect();
            ln += factor_cdf(fac.kind, fac.param, &v).ln();
        }
        Ok(ln)
    }

    fn load_branch(&mut self, step: usize, on: bool) {
        for k in 0..self.plan.steps[step].branch.len() {
            let x = self.plan.steps[step].branch[k];
            self.args.diff[x] = on;
        }
    }

    /// P(U_var ≤ u | branch at `row`) for plan step `step`.
    pub fn cond_cdf(&mut self, step: usize, row: &[f64], u: f64) -> Result<f64> {
        self.prime(row);
        self.load_branch(step, true);
        let den = self.log_joint(step, 1.0);
        let num = self.log_joint(step, u);
        self.load_branch(step, false);
        Ok((num? - den?).exp())
    }

    fn prime(&mut self, row: &[f64]) {
        for (i, &u) in row.iter().enumerate() {
            self.set_var(i, u);
            self.args.diff[i] = false;
        }
    }

    /// Draws one copula-space row; `row` holds observed values on entry
    /// (1 elsewhere) and the sampled values on exit.
    pub fn draw<R: Rng>(&mut self, rng: &mut R, row: &mut [f64]) -> Result<()> {
        self.prime(row);
        for step in 0..self.plan.steps.len() {
            let var = self.plan.steps[step].var;
            let k = uniform_open(rng);
            if self.engines[step].is_none() {
                row[var] = k;
                self.set_var(var, k);
                continue;
            }
            self.load_branch(step, true);
            let den = self.log_joint(step, 1.0)?;
            let ln_k = k.ln();
            let log_space = self.log_space;
            let mut err = None;
            let res = {
                let mut g = |u: f64| -> f64 {
                    match self.log_joint(step, u) {
                        Ok(l) if log_space => l - den - ln_k,
                        Ok(l) => (l - den).exp() - k,
                        Err(e) => {
                            err.get_or_insert(e);
                            f64::NAN
                        }
                    }
                };
                brent_root(&mut g, BRACKET.0, BRACKET.1, ROOT_TOL)
            };
            if let Some(e) = err {
                return Err(e);
            }
            self.root_solves += 1;
            let u = match res {
                Ok(r) => r.x,
                // the conditional CDF does not reach k inside the bracket:
                // the root lies beyond an endpoint
                Err(CdnError::NoBracket { lo, hi }) => {
                    let at_lo = self.log_joint(step, lo)? - den - ln_k;
                    if at_lo > 0.0 {
                        lo
                    } else {
                        hi
                    }
                }
                Err(e) => return Err(e),
            };
            self.load_branch(step, false);
            row[var] = u;
            self.set_var(var, u);
        }
        Ok(())
    }
}

/// `count` copula-space rows over all variables.
pub fn sample_copula(model: &CdnModel, plan: &SamplingPlan, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = rng_from_seed(seed);
    let mut s = Sampler::new(model, plan)?;
    let n = model.n_vars();
    (0..count)
        .map(|_| {
            let mut row = vec![1.0; n];
            s.draw(&mut rng, &mut row)?;
            Ok(row)
        })
        .collect()
}

/// `count` samples in the original variable space.
pub fn sample_cdn(model: &CdnModel, plan: &SamplingPlan, count: usize, seed: u64) -> Result<SampleMatrix> {
    let rows = sample_copula(model, plan, count, seed)?
        .into_iter()
        .map(|r| r.iter().enumerate().map(|(i, &u)| model.margin(i).quantile(u)).collect())
        .collect();
    Ok(SampleMatrix { columns: (0..model.n_vars()).collect(), rows })
}

/// Builds the greedy plan from `seed` and samples with the same seed.
pub fn sample_model(model: &CdnModel, count: usize, seed: u64) -> Result<SampleMatrix> {
    let mut rng = rng_from_seed(seed);
    let plan = make_sampling_cliques(model, &mut rng)?;
    sample_cdn(model, &plan, count, seed.wrapping_add(1))
}

/// Samples `targets` given observed x-space values. The result has the
/// columns observed ∪ targets in ascending order.
pub fn sample_conditional(
    model: &CdnModel,
    observed: &[(usize, f64)],
    targets: &[usize],
    count: usize,
    seed: u64,
) -> Result<SampleMatrix> {
    let n = model.n_vars();
    let mut base = vec![1.0; n];
    for &(i, x) in observed {
        if !x.is_finite() {
            return Err(CdnError::InvalidSpec(format!("observed value for variable {i} is not finite")));
        }
        base[i] = clamp_unit(to_copula_coord(model.margin(i), x));
    }
    let obs: Vec<usize> = observed.iter().map(|o| o.0).collect();
    let mut rng = rng_from_seed(seed);
    let plan = plan_conditional(model, &obs, targets, &mut rng)?;
    let mut s = Sampler::new(model, &plan)?;
    let mut columns: Vec<usize> = obs.iter().chain(targets).copied().collect();
    columns.sort_unstable();
    columns.dedup();
    let mut rows = Vec::with_capacity(count);
    for _ in 0..count {
        let mut row = base.clone();
        s.draw(&mut rng, &mut row)?;
        rows.push(
            columns
                .iter()
                .map(|&i| match observed.iter().find(|o| o.0 == i) {
                    Some(&(_, x)) => x,
                    None => model.margin(i).quantile(row[i]),
                })
                .collect(),
        );
    }
    Ok(SampleMatrix { columns, rows })
}
