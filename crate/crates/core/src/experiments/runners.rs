//! The five batch experiments. Each returns typed rows; `fields` renders a
//! row in its table's column order with round-trip decimals.

use std::time::Instant;

use rand::Rng;

use super::{copula_label, generate, par_map, trial_seed, ArchetypeSpec, ExperimentConfig, Family};
use crate::cliquetree::build_min_fill;
use crate::copulas::SignedLog;
use crate::error::{CdnError, Result};
use crate::inference::{Engine, Mode, Scalar};
use crate::learning::{fit, fit_margins, mse, LearnReport, Method, OptimizerConfig};
use crate::model::{transform_point, CdnModel, Evidence, VarState};
use crate::sampling::{rng_from_seed, sample_model};

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceRow {
    pub family: Family,
    pub n: usize,
    pub copula: &'static str,
    pub n_vars: usize,
    /// "normal" (linear arithmetic) or "log".
    pub space: &'static str,
    pub reps: usize,
    pub samples: usize,
    /// Mean over repetitions of the per-sample density time.
    pub mean_seconds: f64,
    pub sd_seconds: f64,
}

impl InferenceRow {
    pub const HEADER: &'static [&'static str] =
        &["family", "n", "copula", "n_vars", "space", "reps", "samples", "mean_seconds", "sd_seconds"];

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.family.to_string(),
            self.n.to_string(),
            self.copula.to_string(),
            self.n_vars.to_string(),
            self.space.to_string(),
            self.reps.to_string(),
            self.samples.to_string(),
            self.mean_seconds.to_string(),
            self.sd_seconds.to_string(),
        ]
    }
}

/// One fitted trial of the learning, MCAR and piecewise experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnRow {
    pub family: Family,
    pub n: usize,
    pub copula: &'static str,
    pub samples: usize,
    pub missing_frac: f64,
    pub method: Method,
    pub trial: usize,
    pub mse: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
    pub energy: f64,
    pub seconds: f64,
}

impl LearnRow {
    pub const HEADER: &'static [&'static str] = &[
        "family",
        "n",
        "copula",
        "samples",
        "missing_frac",
        "method",
        "trial",
        "mse",
        "iterations",
        "restarts",
        "converged",
        "energy",
        "seconds",
    ];

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.family.to_string(),
            self.n.to_string(),
            self.copula.to_string(),
            self.samples.to_string(),
            self.missing_frac.to_string(),
            self.method.to_string(),
            self.trial.to_string(),
            self.mse.to_string(),
            self.iterations.to_string(),
            self.restarts.to_string(),
            self.converged.to_string(),
            self.energy.to_string(),
            self.seconds.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitationRow {
    pub family: Family,
    pub n: usize,
    pub trial: usize,
    pub samples: usize,
    /// Fraction of samples whose first and last pixels agree in sign.
    pub agreement: f64,
    /// Fraction of samples with every pixel in the same state.
    pub all_agree: f64,
    pub converged: bool,
    pub params: Vec<f64>,
}

impl LimitationRow {
    pub const HEADER: &'static [&'static str] =
        &["family", "n", "trial", "samples", "agreement", "all_agree", "converged", "params"];

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.family.to_string(),
            self.n.to_string(),
            self.trial.to_string(),
            self.samples.to_string(),
            self.agreement.to_string(),
            self.all_agree.to_string(),
            self.converged.to_string(),
            self.params.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(";"),
        ]
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

fn time_space<V: Scalar>(m: &CdnModel, points: &[Vec<f64>], reps: usize) -> Result<Vec<f64>> {
    let tree = build_min_fill(&m.scopes())?;
    let mut engine = Engine::<V>::new(&tree, m.factors(), Mode::Continuous)?;
    let diff = vec![true; m.n_vars()];
    let args = points.iter().map(|x| transform_point(m, x, &diff)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        for a in &args {
            engine.set_point(m.factors(), &a.args);
            std::hint::black_box(engine.evaluate()?);
        }
        out.push(t.elapsed().as_secs_f64() / args.len().max(1) as f64);
    }
    Ok(out)
}

/// Mean per-sample density time in linear and log arithmetic. Runs
/// sequentially so timings do not contend.
pub fn inference_timing(cfg: &ExperimentConfig) -> Result<Vec<InferenceRow>> {
    cfg.validate()?;
    let samples = cfg.sample_sizes[0];
    let mut rows = Vec::new();
    for (s, (family, n)) in cfg.shapes().into_iter().enumerate() {
        let m = generate(&ArchetypeSpec::new(family, n, cfg.copula), trial_seed(cfg.seed, 0, 2 * s as u64))?;
        let points = sample_model(&m, samples, trial_seed(cfg.seed, 0, 2 * s as u64 + 1))?.rows;
        for space in ["normal", "log"] {
            let times = if space == "normal" { time_space::<f64>(&m, &points, cfg.reps)? } else { time_space::<SignedLog>(&m, &points, cfg.reps)? };
            let (mean_seconds, sd_seconds) = mean_sd(&times);
            rows.push(InferenceRow {
                family,
                n,
                copula: copula_label(cfg.copula),
                n_vars: m.n_vars(),
                space,
                reps: cfg.reps,
                samples,
                mean_seconds,
                sd_seconds,
            });
        }
    }
    Ok(rows)
}

/// `fit`, keeping the best parameters when no start converged.
pub fn fit_keep(model: &CdnModel, data: &[Evidence], method: Method, cfg: &OptimizerConfig) -> Result<(CdnModel, LearnReport)> {
    match fit(model, data, method, cfg) {
        Err(CdnError::DidNotConverge(rep)) => {
            let mut m = model.clone();
            m.set_margins(&fit_margins(model.n_vars(), data)?);
            m.set_params(&rep.theta)?;
            Ok((m, *rep))
        }
        other => other,
    }
}

struct Job {
    family: Family,
    n: usize,
    shape: usize,
    trial: usize,
}

impl Job {
    fn seed(&self, cfg: &ExperimentConfig, stream: u64) -> u64 {
        trial_seed(cfg.seed, self.trial, 64 * self.shape as u64 + stream)
    }
}

fn jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    cfg.shapes()
        .into_iter()
        .enumerate()
        .flat_map(|(shape, (family, n))| (0..cfg.trials).map(move |trial| Job { family, n, shape, trial }))
        .collect()
}

/// Erases each entry independently with probability `frac`.
fn mask<R: Rng>(data: &[Vec<f64>], frac: f64, rng: &mut R) -> Vec<Evidence> {
    data.iter()
        .map(|x| Evidence {
            states: x.iter().map(|&v| if frac > 0.0 && rng.random_bool(frac) { VarState::Marginalized } else { VarState::Point(v) }).collect(),
        })
        .collect()
}

fn run_trial(cfg: &ExperimentConfig, job: &Job, fracs: &[f64]) -> Result<Vec<LearnRow>> {
    let truth = generate(&ArchetypeSpec::new(job.family, job.n, cfg.copula), job.seed(cfg, 0))?;
    let max_m = *cfg.sample_sizes.iter().max().expect("validated");
    let data = sample_model(&truth, max_m, job.seed(cfg, 1))?.rows;
    let opt = OptimizerConfig { seed: job.seed(cfg, 2), ..cfg.optimizer.clone() };
    let mut rows = Vec::new();
    for (k, &frac) in fracs.iter().enumerate() {
        let ev = mask(&data, frac, &mut rng_from_seed(job.seed(cfg, 3 + k as u64)));
        for &m in &cfg.sample_sizes {
            for &method in &cfg.methods {
                let t = Instant::now();
                let (fitted, rep) = fit_keep(&truth, &ev[..m], method, &opt)?;
                let seconds = t.elapsed().as_secs_f64();
                rows.push(LearnRow {
                    family: job.family,
                    n: job.n,
                    copula: copula_label(cfg.copula),
                    samples: m,
                    missing_frac: frac,
                    method,
                    trial: job.trial,
                    mse: mse(&fitted.params(), &truth.params()),
                    iterations: rep.iterations,
                    restarts: rep.restarts,
                    converged: rep.converged,
                    energy: rep.energy,
                    seconds,
                });
            }
        }
    }
    Ok(rows)
}

fn trials(cfg: &ExperimentConfig, fracs: &[f64]) -> Result<Vec<LearnRow>> {
    cfg.validate()?;
    let per_job = par_map(jobs(cfg), cfg.worker_count(), |job| run_trial(cfg, &job, fracs))?;
    Ok(per_job.into_iter().flatten().collect())
}

/// Complete-data recovery: random truth per trial, nested sample sizes
/// drawn from one dataset, every method from the same start.
pub fn learning_trials(cfg: &ExperimentConfig) -> Result<Vec<LearnRow>> {
    trials(cfg, &[0.0])
}

/// As `learning_trials`, once per missing fraction (entries erased
/// completely at random).
pub fn mcar_trials(cfg: &ExperimentConfig) -> Result<Vec<LearnRow>> {
    trials(cfg, &cfg.missing_fracs)
}

/// Full-likelihood against piecewise learning; same protocol as
/// `learning_trials` with the configured methods.
pub fn piecewise_trials(cfg: &ExperimentConfig) -> Result<Vec<LearnRow>> {
    trials(cfg, &[0.0])
}

/// Binary-pixel models trained on the two all-clear / all-set images, then
/// sampled; pixel i is set when X_i > 0.
pub fn limitation_runs(cfg: &ExperimentConfig) -> Result<Vec<LimitationRow>> {
    cfg.validate()?;
    let method = *cfg.methods.first().ok_or_else(|| CdnError::InvalidSpec("no learning method".into()))?;
    let samples = cfg.sample_sizes[0];
    let per_job = par_map(jobs(cfg), cfg.worker_count(), |job| {
        let start = generate(&ArchetypeSpec::new(job.family, job.n, cfg.copula).fixed(0.5), 0)?;
        let n = start.n_vars();
        let data = [Evidence::point(&vec![-1.0; n]), Evidence::point(&vec![1.0; n])];
        let opt = OptimizerConfig { seed: job.seed(cfg, 0), ..cfg.optimizer.clone() };
        let (m, rep) = fit_keep(&start, &data, method, &opt)?;
        let rows = sample_model(&m, samples, job.seed(cfg, 1))?.rows;
        let ends = rows.iter().filter(|r| (r[0] > 0.0) == (r[n - 1] > 0.0)).count();
        let all = rows.iter().filter(|r| r.iter().all(|&x| (x > 0.0) == (r[0] > 0.0))).count();
        Ok(LimitationRow {
            family: job.family,
            n: job.n,
            trial: job.trial,
            samples,
            agreement: ends as f64 / samples as f64,
            all_agree: all as f64 / samples as f64,
            converged: rep.converged,
            params: m.params(),
        })
    })?;
    Ok(per_job)
}
