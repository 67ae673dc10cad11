use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cdn_core::experiments::{fit_keep, generate, parse_copula, run_experiment, ArchetypeSpec, ExperimentConfig, ExperimentId, Family};
use cdn_core::inference::Inference;
use cdn_core::learning::{Method, OptimizerConfig};
use cdn_core::model::{learned_to_json, model_to_json, parse_model, CdnModel, Evidence, ReportJson, VarState};
use cdn_core::sampling::{sample_conditional, sample_model};

#[derive(Parser)]
#[command(name = "cdn", version, about = "Copula cumulative distribution networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an archetypal model as JSON.
    Generate(GenerateArgs),
    /// Evaluate a probability or density query; prints its log and value.
    Query(QueryArgs),
    /// Draw samples as CSV.
    Sample(SampleArgs),
    /// Fit margins and copula parameters to a CSV dataset.
    Learn(LearnArgs),
    /// Run a batch experiment and write its CSV table.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "clayton")]
    copula: String,
    /// Fixed parameter for every factor; random when omitted.
    #[arg(long)]
    param: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryType {
    /// P(X_A ≤ a) over the --at variables.
    MarginalCdf,
    /// Density of the --at variables.
    Density,
    /// Density of the --at variables jointly with P(X_B ≤ b) over --bound.
    Mixed,
    /// Target (--at and --bound) given --given and --given-bound.
    Conditional,
}

impl QueryType {
    fn name(self) -> &'static str {
        match self {
            QueryType::MarginalCdf => "marginal-cdf",
            QueryType::Density => "density",
            QueryType::Mixed => "mixed",
            QueryType::Conditional => "conditional",
        }
    }
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "type", value_enum)]
    kind: QueryType,
    /// NAME=VALUE pairs, comma separated.
    #[arg(long, value_delimiter = ',')]
    at: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    bound: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    given: Vec<String>,
    #[arg(long = "given-bound", value_delimiter = ',')]
    given_bound: Vec<String>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Observed NAME=VALUE pairs; the other variables are sampled given them.
    #[arg(long, value_delimiter = ',')]
    given: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LearnArgs {
    /// Model structure; its parameters are ignored.
    #[arg(long)]
    model: PathBuf,
    /// CSV with one column per variable; empty cells are missing.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "lbfgs-restart")]
    method: Method,
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
    /// Additionally erase this fraction of the entries at random.
    #[arg(long = "missing-frac", default_value_t = 0.0)]
    missing_frac: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// inference, learning, mcar, piecewise or limitation.
    id: ExperimentId,
    #[arg(long, value_delimiter = ',')]
    family: Vec<Family>,
    /// Sizes, as a list (2,3,4) or an inclusive range (2-8).
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    copula: Option<String>,
    /// Sample sizes.
    #[arg(long, value_delimiter = ',')]
    count: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    #[arg(long = "missing-frac", value_delimiter = ',')]
    missing_frac: Vec<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_model(path: &Path) -> Result<CdnModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model(&text).with_context(|| format!("model {}", path.display()))
}

fn var_of(m: &CdnModel, name: &str) -> Result<usize> {
    m.var_index(name)
        .or_else(|| name.parse::<usize>().ok().filter(|&i| i < m.n_vars()))
        .ok_or_else(|| anyhow!("unknown variable {name:?}"))
}

/// Parses NAME=VALUE assignments.
fn assignments(m: &CdnModel, items: &[String]) -> Result<Vec<(usize, f64)>> {
    items
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (k, v) = s.split_once('=').ok_or_else(|| anyhow!("expected NAME=VALUE, got {s:?}"))?;
            let x: f64 = v.trim().parse().with_context(|| format!("value in {s:?}"))?;
            Ok((var_of(m, k.trim())?, x))
        })
        .collect()
}

fn evidence(m: &CdnModel, points: &[(usize, f64)], bounds: &[(usize, f64)]) -> Evidence {
    let mut e = Evidence::free(m.n_vars());
    for &(i, x) in points {
        e.states[i] = VarState::Point(x);
    }
    for &(i, x) in bounds {
        e.states[i] = VarState::CumulativeBound(x);
    }
    e
}

fn query(a: &QueryArgs) -> Result<()> {
    let m = load_model(&a.model)?;
    let at = assignments(&m, &a.at)?;
    let bound = assignments(&m, &a.bound)?;
    let given = assignments(&m, &a.given)?;
    let given_bound = assignments(&m, &a.given_bound)?;
    if at.is_empty() && bound.is_empty() {
        bail!("query needs --at or --bound");
    }
    let mut inf = Inference::new(&m)?;
    let v = match a.kind {
        QueryType::MarginalCdf => inf.evaluate(&evidence(&m, &[], &[at, bound].concat()))?,
        QueryType::Density => {
            if !bound.is_empty() {
                bail!("density takes --at only; use --type mixed for bounds");
            }
            inf.evaluate(&evidence(&m, &at, &[]))?
        }
        QueryType::Mixed => inf.evaluate(&evidence(&m, &at, &bound))?,
        QueryType::Conditional => {
            if given.is_empty() && given_bound.is_empty() {
                bail!("conditional needs --given or --given-bound");
            }
            inf.conditional(&evidence(&m, &at, &bound), &evidence(&m, &given, &given_bound))?
        }
    };
    println!("{} log={} value={}", a.kind.name(), v.ln(), v.to_f64());
    Ok(())
}

fn sample(a: &SampleArgs) -> Result<()> {
    let m = load_model(&a.model)?;
    let given = assignments(&m, &a.given)?;
    let s = if given.is_empty() {
        sample_model(&m, a.count, a.seed)?
    } else {
        let targets: Vec<usize> = (0..m.n_vars()).filter(|i| !given.iter().any(|g| g.0 == *i)).collect();
        sample_conditional(&m, &given, &targets, a.count, a.seed)?
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(s.columns.iter().map(|&i| m.variables()[i].name.as_str()))?;
    for r in &s.rows {
        w.write_record(r.iter().map(|x| x.to_string()))?;
    }
    write_out(a.out.as_deref(), &String::from_utf8(w.into_inner()?)?)
}

fn read_data(m: &CdnModel, path: &Path) -> Result<Vec<Evidence>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let cols = r.headers()?.iter().map(|h| var_of(m, h.trim())).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.with_context(|| format!("{} record {}", path.display(), line + 1))?;
        let mut e = Evidence::marginalized(m.n_vars());
        for (cell, &i) in rec.iter().zip(&cols) {
            let cell = cell.trim();
            if !cell.is_empty() && cell != "NA" {
                let x: f64 = cell.parse().with_context(|| format!("{} line {}: {cell:?}", path.display(), line + 2))?;
                e.states[i] = VarState::Point(x);
            }
        }
        out.push(e);
    }
    Ok(out)
}

fn learn(a: &LearnArgs) -> Result<()> {
    let m = load_model(&a.model)?;
    let mut data = read_data(&m, &a.data)?;
    if !(0.0..1.0).contains(&a.missing_frac) {
        bail!("--missing-frac must lie in [0, 1)");
    }
    if a.missing_frac > 0.0 {
        use rand::Rng;
        let mut rng = cdn_core::sampling::rng_from_seed(a.seed.wrapping_add(1));
        for e in &mut data {
            for s in &mut e.states {
                if rng.random_bool(a.missing_frac) {
                    *s = VarState::Marginalized;
                }
            }
        }
    }
    let cfg = OptimizerConfig { epsilon: a.eps, seed: a.seed, restarts: a.restarts, max_iter: a.max_iter, ..Default::default() };
    let (fitted, rep) = fit_keep(&m, &data, a.method, &cfg)?;
    let report = ReportJson {
        energy: rep.energy,
        iterations: rep.iterations,
        restarts: rep.restarts,
        converged: rep.converged,
        method: rep.method.name().to_string(),
    };
    write_out(a.out.as_deref(), &(learned_to_json(&fitted, report) + "\n"))?;
    if !rep.converged {
        eprintln!("warning: optimizer did not converge ({} iterations)", rep.iterations);
    }
    Ok(())
}

fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = s.split_once('-') {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
        if a > b {
            bail!("empty size range {s:?}");
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse::<usize>().with_context(|| format!("size {x:?}"))).collect()
}

fn experiment(a: &ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::defaults(a.id);
    cfg.seed = a.seed;
    if !a.family.is_empty() {
        cfg.families = a.family.clone();
    }
    if let Some(n) = &a.n {
        cfg.sizes = parse_sizes(n)?;
    }
    if let Some(c) = &a.copula {
        cfg.copula = parse_copula(c)?;
    }
    if !a.count.is_empty() {
        cfg.sample_sizes = a.count.clone();
    }
    if !a.method.is_empty() {
        cfg.methods = a.method.clone();
    }
    if !a.missing_frac.is_empty() {
        cfg.missing_fracs = a.missing_frac.clone();
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(r) = a.reps {
        cfg.reps = r;
    }
    if let Some(e) = a.eps {
        cfg.optimizer.epsilon = e;
    }
    let table = run_experiment(a.id, &cfg)?;
    match &a.out {
        Some(p) => table.write_csv(p)?,
        None => write_out(None, &table.to_csv()?)?,
    }
    Ok(())
}

fn gen(a: &GenerateArgs) -> Result<()> {
    let family: Family = a.family.parse()?;
    let mut spec = ArchetypeSpec::new(family, a.n, parse_copula(&a.copula)?);
    if let Some(p) = a.param {
        spec = spec.fixed(p);
    }
    let m = generate(&spec, a.seed)?;
    write_out(a.out.as_deref(), &(model_to_json(&m) + "\n"))
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => gen(a),
        Command::Query(a) => query(a),
        Command::Sample(a) => sample(a),
        Command::Learn(a) => learn(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
