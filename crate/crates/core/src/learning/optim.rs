//! Gradient descent and L-BFGS drivers over a generic objective.

use std::collections::VecDeque;

use super::{LearnReport, Method, OptimizerConfig, Termination};
use crate::error::{CdnError, Result};

/// A differentiable objective; `value` returns +∞ outside the domain.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&mut self, x: &[f64]) -> f64;
    fn value_grad(&mut self, x: &[f64]) -> (f64, Vec<f64>);
    /// Open box per coordinate, used by the barrier method.
    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(f64::NEG_INFINITY, f64::INFINITY); self.dim()]
    }
}

/// (x - c)ᵀ(x - c), a convex test objective.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub c: Vec<f64>,
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&mut self, x: &[f64]) -> f64 {
        x.iter().zip(&self.c).map(|(a, b)| (a - b).powi(2)).sum()
    }

    fn value_grad(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), x.iter().zip(&self.c).map(|(a, b)| 2.0 * (a - b)).collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

/// Backtracking from η = 1: take x + η d, shrink η ← βη, and accept once
/// f(x + η d) ≤ f + α η' slope with the shrunk η'.
fn backtrack<O: Objective>(obj: &mut O, cfg: &OptimizerConfig, x: &[f64], f: f64, d: &[f64], slope: f64) -> Option<(Vec<f64>, f64)> {
    let mut eta = 1.0;
    for _ in 0..cfg.max_backtracks {
        let xn = axpy(x, eta, d);
        eta *= cfg.beta;
        let fnew = obj.value(&xn);
        if fnew.is_finite() && fnew <= f + cfg.alpha * eta * slope {
            return Some((xn, fnew));
        }
    }
    None
}

fn check(cfg: &OptimizerConfig, f_old: f64, f_new: f64, step: f64, gnorm: f64) -> Option<Termination> {
    if (f_old - f_new) / f_old.abs().max(f64::MIN_POSITIVE) < cfg.epsilon {
        Some(Termination::RelativeChange)
    } else if step < cfg.epsilon {
        Some(Termination::StepLength)
    } else if gnorm < cfg.epsilon {
        Some(Termination::GradientNorm)
    } else {
        None
    }
}

fn finish(r: LearnReport) -> Result<LearnReport> {
    if r.converged {
        Ok(r)
    } else {
        Err(CdnError::DidNotConverge(Box::new(r)))
    }
}

fn infeasible(method: Method, x0: &[f64]) -> Result<LearnReport> {
    Err(CdnError::ParamOutOfDomain { kind: method.name(), param: x0.first().copied().unwrap_or(f64::NAN) })
}

/// Steepest descent with a backtracking line search.
pub fn gradient_descent<O: Objective>(obj: &mut O, x0: &[f64], cfg: &OptimizerConfig) -> Result<LearnReport> {
    cfg.validate()?;
    let mut x = x0.to_vec();
    let (mut f, mut g) = obj.value_grad(&x);
    if !f.is_finite() {
        return infeasible(Method::Gd, x0);
    }
    let mut r = LearnReport::start(Method::Gd, f);
    if norm(&g) < cfg.epsilon {
        r.converged = true;
        r.termination = Termination::GradientNorm;
    }
    while !r.converged && r.iterations < cfg.max_iter {
        let d: Vec<f64> = g.iter().map(|v| -v).collect();
        let slope = -dot(&g, &g);
        let Some((xn, _)) = backtrack(obj, cfg, &x, f, &d, slope) else {
            r.termination = Termination::LineSearchFailed;
            break;
        };
        let (fnew, gnew) = obj.value_grad(&xn);
        let step = norm(&xn.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
        r.iterations += 1;
        r.energy_trace.push(fnew);
        let t = check(cfg, f, fnew, step, norm(&gnew));
        x = xn;
        f = fnew;
        g = gnew;
        if let Some(t) = t {
            r.converged = true;
            r.termination = t;
        }
    }
    r.theta = x;
    r.energy = f;
    finish(r)
}

/// L-BFGS direction −H g by the two-loop recursion.
fn two_loop(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = hist.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// L-BFGS that discards its curvature history whenever the line search
/// fails and carries on from the current iterate.
pub fn lbfgs_restart<O: Objective>(obj: &mut O, x0: &[f64], cfg: &OptimizerConfig) -> Result<LearnReport> {
    cfg.validate()?;
    let r = lbfgs_run(obj, x0, cfg, Method::LbfgsRestart)?;
    finish(r)
}

fn lbfgs_run<O: Objective>(obj: &mut O, x0: &[f64], cfg: &OptimizerConfig, method: Method) -> Result<LearnReport> {
    let mut x = x0.to_vec();
    let (mut f, mut g) = obj.value_grad(&x);
    if !f.is_finite() {
        return infeasible(method, x0);
    }
    let mut r = LearnReport::start(method, f);
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut concave = false;
    if norm(&g) < cfg.epsilon {
        r.converged = true;
        r.termination = Termination::GradientNorm;
    }
    while !r.converged && r.iterations < cfg.max_iter {
        let mut d = two_loop(&g, &hist);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hist.clear();
        }
        if hist.is_empty() {
            // after negative curvature, take unit-length steepest descent so
            // flat concave stretches are not crossed in steps of size ‖g‖
            let scale = if concave { 1.0 / norm(&g) } else { 1.0 };
            d = g.iter().map(|v| -v * scale).collect();
            slope = -dot(&g, &g) * scale;
        }
        let Some((xn, _)) = backtrack(obj, cfg, &x, f, &d, slope) else {
            if hist.is_empty() {
                r.termination = Termination::LineSearchFailed;
                break;
            }
            hist.clear();
            r.restarts += 1;
            continue;
        };
        let (fnew, gnew) = obj.value_grad(&xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        concave = sy <= 0.0;
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            hist.push_back((s.clone(), y, 1.0 / sy));
            if hist.len() > cfg.lbfgs_memory {
                hist.pop_front();
            }
        }
        r.iterations += 1;
        r.energy_trace.push(fnew);
        let t = check(cfg, f, fnew, norm(&s), norm(&gnew));
        x = xn;
        f = fnew;
        g = gnew;
        if let Some(t) = t {
            r.converged = true;
            r.termination = t;
        }
    }
    r.theta = x;
    r.energy = f;
    Ok(r)
}

/// Objective plus the log barrier −(1/t) Σ ln(−f_i) of the box constraints.
struct Barrier<'a, O: Objective> {
    inner: &'a mut O,
    bounds: Vec<(f64, f64)>,
    t: f64,
}

impl<O: Objective> Barrier<'_, O> {
    fn penalty(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let mut v = 0.0;
        let mut g = vec![0.0; x.len()];
        for (i, (&xi, &(lo, hi))) in x.iter().zip(&self.bounds).enumerate() {
            if lo.is_finite() {
                if xi <= lo {
                    return None;
                }
                v -= (xi - lo).ln() / self.t;
                g[i] -= 1.0 / (self.t * (xi - lo));
            }
            if hi.is_finite() {
                if xi >= hi {
                    return None;
                }
                v -= (hi - xi).ln() / self.t;
                g[i] += 1.0 / (self.t * (hi - xi));
            }
        }
        Some((v, g))
    }
}

impl<O: Objective> Objective for Barrier<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&mut self, x: &[f64]) -> f64 {
        match self.penalty(x) {
            None => f64::INFINITY,
            Some((p, _)) => self.inner.value(x) + p,
        }
    }

    fn value_grad(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        match self.penalty(x) {
            None => (f64::INFINITY, vec![0.0; x.len()]),
            Some((p, pg)) => {
                let (v, g) = self.inner.value_grad(x);
                (v + p, g.iter().zip(&pg).map(|(a, b)| a + b).collect())
            }
        }
    }
}

/// Interior-point L-BFGS: a warm-started sequence of barrier problems with
/// t ← μ t until (#constraints)/t < ε.
pub fn lbfgs_barrier<O: Objective>(obj: &mut O, x0: &[f64], cfg: &OptimizerConfig) -> Result<LearnReport> {
    cfg.validate()?;
    let bounds = obj.bounds();
    let n_cons: usize = bounds.iter().map(|(lo, hi)| lo.is_finite() as usize + hi.is_finite() as usize).sum();
    let mut x = x0.to_vec();
    let mut total = LearnReport::start(Method::LbfgsBarrier, obj.value(&x));
    if !total.energy.is_finite() {
        return infeasible(Method::LbfgsBarrier, x0);
    }
    let mut t = cfg.barrier_t0;
    loop {
        let mut b = Barrier { inner: &mut *obj, bounds: bounds.clone(), t };
        let r = lbfgs_run(&mut b, &x, cfg, Method::LbfgsBarrier)?;
        x = r.theta.clone();
        total.iterations += r.iterations;
        total.restarts += r.restarts;
        total.energy_trace.extend(r.energy_trace.iter().skip(1));
        if n_cons == 0 || (n_cons as f64) / t < cfg.epsilon {
            total.converged = r.converged;
            total.termination = if n_cons == 0 { r.termination } else { Termination::BarrierGap };
            break;
        }
        // budget across the whole barrier sequence
        if total.iterations >= cfg.max_iter * 20 {
            total.termination = Termination::MaxIterations;
            break;
        }
        t *= cfg.barrier_mu;
    }
    total.energy = obj.value(&x);
    total.theta = x;
    finish(total)
}
