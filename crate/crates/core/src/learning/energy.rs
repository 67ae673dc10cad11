//! Mean negative copula log-likelihood and its calibrated-tree gradient.

use super::optim::Objective;
use crate::cliquetree::build_restricted;
use crate::copulas::{param_domain, Domain, SignedLog};
use crate::error::Result;
use crate::inference::{Engine, Mode, PointArgs};
use crate::margins::{clamp_unit, to_copula_coord};
use crate::model::{reduce, transform_u, CdnModel, CopulaFactor, Evidence};

#[derive(Debug, Clone)]
struct SampleArgs {
    args: PointArgs,
    ln_kappa: f64,
    /// Every argument is 1: the term is exactly zero.
    trivial: bool,
}

/// Energy over a dataset for a subset of the factor parameters.
#[derive(Debug, Clone)]
pub struct EnergyEvaluator {
    factors: Vec<CopulaFactor>,
    free: Vec<usize>,
    domains: Vec<Domain>,
    samples: Vec<SampleArgs>,
    engine: Engine<SignedLog>,
    bases: Vec<Option<SignedLog>>,
}

impl EnergyEvaluator {
    /// Full-model energy over every factor parameter.
    pub fn new(model: &CdnModel, data: &[Evidence]) -> Result<Self> {
        let free: Vec<usize> = (0..model.factors().len()).collect();
        Self::restricted(model, data, None, &free)
    }

    /// Energy of the model marginalized to `keep` (all variables when
    /// `None`), optimized over the factors in `free`.
    pub fn restricted(model: &CdnModel, data: &[Evidence], keep: Option<&[usize]>, free: &[usize]) -> Result<Self> {
        let n = model.n_vars();
        let tree = build_restricted(&model.scopes(), keep)?;
        let engine = Engine::new(&tree, model.factors(), Mode::Continuous)?;
        let mut kept = vec![keep.is_none(); n];
        if let Some(k) = keep {
            for &v in k {
                kept[v] = true;
            }
        }
        let samples = data
            .iter()
            .map(|e| {
                let r = reduce(model, e);
                let mut u = vec![1.0; n];
                let mut diff = r.diff.clone();
                for i in 0..n {
                    if !kept[i] {
                        diff[i] = false;
                        continue;
                    }
                    if r.x[i].is_finite() {
                        u[i] = clamp_unit(to_copula_coord(model.margin(i), r.x[i]));
                    } else if r.x[i] == f64::NEG_INFINITY {
                        u[i] = 0.0;
                    }
                }
                let trivial = u.iter().all(|&x| x >= 1.0);
                let t = transform_u(model, &u, &diff, None);
                SampleArgs { args: t.args, ln_kappa: t.ln_kappa, trivial }
            })
            .collect();
        let domains = free
            .iter()
            .map(|&f| param_domain(model.factors()[f].kind, model.factors()[f].scope.len()))
            .collect::<Result<Vec<_>>>()?;
        let bases = vec![None; tree.len()];
        Ok(Self { factors: model.factors().to_vec(), free: free.to_vec(), domains, samples, engine, bases })
    }

    pub fn m(&self) -> usize {
        self.samples.len()
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    /// Current values of the free parameters.
    pub fn params(&self) -> Vec<f64> {
        self.free.iter().map(|&f| self.factors[f].param).collect()
    }

    /// Sets every factor parameter (fixed and free).
    pub fn set_all(&mut self, params: &[f64]) {
        for (f, &p) in self.factors.iter_mut().zip(params) {
            f.param = p;
        }
    }

    pub fn in_domain(&self, theta: &[f64]) -> bool {
        theta.iter().zip(&self.domains).all(|(t, d)| d.contains(*t))
    }

    fn load(&mut self, theta: &[f64]) {
        for (&f, &t) in self.free.iter().zip(theta) {
            self.factors[f].param = t;
        }
    }

    /// Copula log density of sample `i` at `theta`.
    pub fn sample_log_density(&mut self, theta: &[f64], i: usize) -> Result<f64> {
        self.load(theta);
        let s = &self.samples[i];
        if s.trivial {
            return Ok(0.0);
        }
        self.engine.set_point(&self.factors, &s.args);
        Ok(self.engine.evaluate()?.ln() + s.ln_kappa)
    }

    /// E(θ) = −(1/m) Σ ln c(u_i); +∞ outside the parameter domain.
    pub fn energy(&mut self, theta: &[f64]) -> f64 {
        if !self.in_domain(theta) {
            return f64::INFINITY;
        }
        let mut acc = 0.0;
        for i in 0..self.samples.len() {
            match self.sample_log_density(theta, i) {
                Ok(l) if !l.is_nan() => acc -= l,
                _ => return f64::INFINITY,
            }
        }
        if acc.is_nan() {
            return f64::INFINITY;
        }
        acc / self.samples.len().max(1) as f64
    }

    /// ln c(u_i) and its gradient in the free parameters, from one
    /// calibration of the tree.
    pub fn grad_loglik(&mut self, theta: &[f64], i: usize) -> Result<(SignedLog, Vec<f64>)> {
        self.load(theta);
        let k = self.free.len();
        let s = &self.samples[i];
        if s.trivial {
            return Ok((SignedLog::ONE, vec![0.0; k]));
        }
        let ln_kappa = s.ln_kappa;
        self.engine.set_point(&self.factors, &s.args);
        self.engine.calibrate()?;
        self.bases.fill(None);
        let mut density = SignedLog::ONE;
        for r in self.engine.tree().roots() {
            let b = self.engine.root_value(r, None)?;
            self.bases[r] = Some(b);
            density = density * b;
        }
        let mut grad = vec![0.0; k];
        for (g, idx) in grad.iter_mut().zip(0..k) {
            let f = self.free[idx];
            let Some(c) = self.engine.tree().factor_clique[f] else { continue };
            let root = self.engine.tree().root_of(c);
            let base = self.bases[root].expect("roots evaluated");
            let num = self.engine.root_value(c, Some(f))?;
            if !num.is_zero() && !base.is_zero() {
                *g = f64::from(num.sign * base.sign) * (num.log_abs - base.log_abs).exp();
            }
        }
        Ok((density.scale_ln(ln_kappa), grad))
    }

    /// Energy and its gradient; +∞ and zeros outside the domain.
    pub fn energy_grad(&mut self, theta: &[f64]) -> (f64, Vec<f64>) {
        let k = self.free.len();
        if !self.in_domain(theta) {
            return (f64::INFINITY, vec![0.0; k]);
        }
        let m = self.samples.len().max(1) as f64;
        let mut e = 0.0;
        let mut g = vec![0.0; k];
        for i in 0..self.samples.len() {
            match self.grad_loglik(theta, i) {
                Ok((d, gi)) if d.sign > 0 => {
                    e -= d.log_abs;
                    for (a, b) in g.iter_mut().zip(&gi) {
                        *a -= b;
                    }
                }
                _ => return (f64::INFINITY, vec![0.0; k]),
            }
        }
        if !e.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return (f64::INFINITY, vec![0.0; k]);
        }
        (e / m, g.iter().map(|x| x / m).collect())
    }
}

impl Objective for EnergyEvaluator {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn value(&mut self, x: &[f64]) -> f64 {
        self.energy(x)
    }

    fn value_grad(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        self.energy_grad(x)
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        self.domains.iter().map(|d| (d.lo, d.hi)).collect()
    }
}
