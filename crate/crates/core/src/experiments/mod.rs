//! Archetypal models and the batch experiments.

mod archetypes;
mod runners;
mod table;

pub use archetypes::{edges, generate, ArchetypeSpec, Family, ParamPolicy};
pub use runners::{
    fit_keep, inference_timing, learning_trials, limitation_runs, mcar_trials, piecewise_trials, InferenceRow, LearnRow,
    LimitationRow,
};
pub use table::Table;

use std::fmt;
use std::str::FromStr;
use std::thread;

use crate::copulas::CopulaKind;
use crate::error::{CdnError, Result};
use crate::learning::{Method, OptimizerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    Inference,
    Learning,
    Mcar,
    Piecewise,
    Limitation,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] =
        [ExperimentId::Inference, ExperimentId::Learning, ExperimentId::Mcar, ExperimentId::Piecewise, ExperimentId::Limitation];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Inference => "inference",
            ExperimentId::Learning => "learning",
            ExperimentId::Mcar => "mcar",
            ExperimentId::Piecewise => "piecewise",
            ExperimentId::Limitation => "limitation",
        }
    }

    /// CSV column names, fixed per experiment.
    pub fn header(self) -> &'static [&'static str] {
        match self {
            ExperimentId::Inference => InferenceRow::HEADER,
            ExperimentId::Learning | ExperimentId::Mcar | ExperimentId::Piecewise => LearnRow::HEADER,
            ExperimentId::Limitation => LimitationRow::HEADER,
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = CdnError;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CdnError::InvalidSpec(format!("unknown experiment {s:?}")))
    }
}

/// Short copula name used in CSV output and on the command line.
pub fn copula_label(kind: CopulaKind) -> &'static str {
    match kind {
        CopulaKind::Clayton => "clayton",
        CopulaKind::NormalPair => "normal",
    }
}

pub fn parse_copula(s: &str) -> Result<CopulaKind> {
    match s {
        "clayton" => Ok(CopulaKind::Clayton),
        "normal" | "normal_pair" => Ok(CopulaKind::NormalPair),
        _ => Err(CdnError::InvalidSpec(format!("unknown copula {s:?}"))),
    }
}

/// Ranges and settings for one experiment run. Families whose minimum size
/// exceeds an entry of `sizes` skip that entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub families: Vec<Family>,
    pub sizes: Vec<usize>,
    pub copula: CopulaKind,
    pub sample_sizes: Vec<usize>,
    pub methods: Vec<Method>,
    pub missing_fracs: Vec<f64>,
    pub trials: usize,
    /// Timing repetitions (inference experiment).
    pub reps: usize,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
    /// Worker cap; `None` reads `CDN_THREADS`, then the core count.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn defaults(id: ExperimentId) -> Self {
        let base = Self {
            families: vec![Family::Chain],
            sizes: vec![5],
            copula: CopulaKind::NormalPair,
            sample_sizes: vec![1000],
            methods: vec![Method::LbfgsRestart],
            missing_fracs: vec![0.0],
            trials: 20,
            reps: 30,
            seed: 0,
            optimizer: OptimizerConfig { restarts: 1, ..OptimizerConfig::default() },
            threads: None,
        };
        match id {
            ExperimentId::Inference => Self {
                families: vec![Family::Chain, Family::Loop, Family::Tree, Family::Grid],
                sizes: (2..=5).collect(),
                copula: CopulaKind::Clayton,
                sample_sizes: vec![100],
                trials: 1,
                ..base
            },
            ExperimentId::Learning => Self {
                sample_sizes: vec![100, 1000, 10000],
                methods: vec![Method::Gd, Method::LbfgsRestart, Method::LbfgsBarrier],
                trials: 50,
                ..base
            },
            ExperimentId::Mcar => Self { sample_sizes: vec![100, 10000], missing_fracs: vec![0.0, 0.5, 0.9], ..base },
            ExperimentId::Piecewise => Self {
                families: vec![Family::Grid],
                sizes: vec![2, 3, 4, 5],
                copula: CopulaKind::Clayton,
                methods: vec![Method::LbfgsRestart, Method::Piecewise],
                trials: 11,
                ..base
            },
            ExperimentId::Limitation => Self {
                families: vec![Family::Chain, Family::Loop],
                sizes: vec![3],
                sample_sizes: vec![10000],
                trials: 1,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(CdnError::InvalidSpec(what));
        if self.families.is_empty() || self.sizes.is_empty() {
            return bad("experiment needs at least one family and size".into());
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.iter().any(|&m| m == 0) {
            return bad("sample sizes must be non-empty and positive".into());
        }
        if let Some(f) = self.missing_fracs.iter().find(|f| !(0.0..1.0).contains(*f)) {
            return bad(format!("missing fraction {f} outside [0, 1)"));
        }
        if self.trials == 0 || self.reps == 0 {
            return bad("trials and reps must be positive".into());
        }
        self.optimizer.validate()
    }

    /// (family, n) pairs in run order.
    pub fn shapes(&self) -> Vec<(Family, usize)> {
        self.families
            .iter()
            .flat_map(|&f| self.sizes.iter().filter(move |&&n| n >= f.min_n()).map(move |&n| (f, n)))
            .collect()
    }

    pub fn worker_count(&self) -> usize {
        self.threads
            .or_else(|| std::env::var("CDN_THREADS").ok().and_then(|s| s.parse().ok()))
            .or_else(|| thread::available_parallelism().ok().map(|n| n.get()))
            .unwrap_or(1)
            .max(1)
    }
}

/// Seed for stream `stream` of trial `trial`; fixed so that results do not
/// depend on scheduling.
pub fn trial_seed(master: u64, trial: usize, stream: u64) -> u64 {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    master
        .wrapping_mul(GOLDEN)
        .wrapping_add((trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(stream.wrapping_mul(GOLDEN))
}

/// Maps `f` over `items` on up to `workers` scoped threads, keeping the
/// input order in the output.
pub(crate) fn par_map<T, R, F>(items: Vec<T>, workers: usize, f: F) -> Result<Vec<R>>
where
    T: Send,
    R: Send,
    F: Fn(T) -> Result<R> + Sync,
{
    let workers = workers.min(items.len()).max(1);
    if workers == 1 {
        return items.into_iter().map(f).collect();
    }
    let mut lanes: Vec<Vec<(usize, T)>> = (0..workers).map(|_| Vec::new()).collect();
    for (i, t) in items.into_iter().enumerate() {
        lanes[i % workers].push((i, t));
    }
    let f = &f;
    let mut out: Vec<(usize, R)> = thread::scope(|s| {
        let handles: Vec<_> = lanes
            .into_iter()
            .map(|lane| s.spawn(move || lane.into_iter().map(|(i, t)| f(t).map(|r| (i, r))).collect::<Result<Vec<_>>>()))
            .collect();
        let mut all = Vec::new();
        for h in handles {
            all.extend(h.join().expect("experiment worker panicked")?);
        }
        Ok::<_, CdnError>(all)
    })?;
    out.sort_by_key(|(i, _)| *i);
    Ok(out.into_iter().map(|(_, r)| r).collect())
}

/// Runs one experiment and returns its table.
pub fn run_experiment(id: ExperimentId, cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    Ok(match id {
        ExperimentId::Inference => Table::from_rows(InferenceRow::HEADER, inference_timing(cfg)?.iter().map(|r| r.fields())),
        ExperimentId::Learning => Table::from_rows(LearnRow::HEADER, learning_trials(cfg)?.iter().map(|r| r.fields())),
        ExperimentId::Mcar => Table::from_rows(LearnRow::HEADER, mcar_trials(cfg)?.iter().map(|r| r.fields())),
        ExperimentId::Piecewise => Table::from_rows(LearnRow::HEADER, piecewise_trials(cfg)?.iter().map(|r| r.fields())),
        ExperimentId::Limitation => Table::from_rows(LimitationRow::HEADER, limitation_runs(cfg)?.iter().map(|r| r.fields())),
    })
}
