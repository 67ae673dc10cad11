//! Assertion-free checks shared by the module tests and the acceptance
//! target. Each returns `Ok(summary)` or `Err(reason)`.

use std::time::Instant;

use cdn_core::cliquetree::{build_min_fill, build_restricted, validate_tree};
use cdn_core::copulas::SignedLog;
use cdn_core::experiments::{generate, ArchetypeSpec, Family};
use cdn_core::inference::{discrete_pmf, DiscreteCdn, Engine, Inference, Mode};
use cdn_core::margins::DiscreteMargin;
use cdn_core::model::{transform_u, CdnModel, CopulaFactor};
use cdn_core::copulas::CopulaKind;
use cdn_core::sampling::rng_from_seed;
use rand::Rng;

use super::*;

pub type Check = std::result::Result<String, String>;

fn within(label: &str, worst: f64, tol: f64, secs: f64, limit: f64) -> Check {
    let msg = format!("{label}: worst {worst:.3e} (tol {tol:e}), {secs:.2}s (limit {limit}s)");
    if worst <= tol && secs < limit {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn engine_value<V: cdn_core::inference::Scalar>(m: &CdnModel, u: &[f64], diff: &[bool]) -> V {
    let tree = build_min_fill(&m.scopes()).unwrap();
    let mut e = Engine::<V>::new(&tree, m.factors(), Mode::Continuous).unwrap();
    let t = transform_u(m, u, diff, None);
    e.set_point(m.factors(), &t.args);
    e.evaluate().unwrap()
}

/// Random point with each variable differentiated, bounded or marginalized.
fn random_query<R: Rng>(rng: &mut R, n: usize) -> (Vec<f64>, Vec<bool>) {
    let mut u = vec![1.0; n];
    let mut diff = vec![false; n];
    for i in 0..n {
        match rng.random_range(0..4) {
            0 => {}
            1 => u[i] = rng.random_range(0.05..0.95),
            _ => {
                u[i] = rng.random_range(0.05..0.95);
                diff[i] = true;
            }
        }
    }
    (u, diff)
}

/// The copula-partial grid against high-precision central differences.
pub fn copula_partials() -> Check {
    let t = Instant::now();
    let bad = grid_failures(1e-4);
    let n = copula_grid().len();
    let secs = t.elapsed().as_secs_f64();
    let msg = format!("{} of {n} grid partials off by more than 1e-4 relative, {secs:.2}s", bad.len());
    if bad.is_empty() && secs < 10.0 {
        Ok(msg)
    } else {
        Err(format!("{msg}; first: {:?}", bad.first()))
    }
}

/// Message passing against the exhaustive product-rule expansion.
pub fn dsp_vs_product_rule(models: usize, seed: u64) -> (f64, usize) {
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..models {
        let m = random_model(&mut rng, 4, 3);
        for _ in 0..4 {
            let (u, diff) = random_query(&mut rng, m.n_vars());
            let got = engine_value::<SignedLog>(&m, &u, &diff).to_f64();
            let want = brute_force(&m, &u, &diff);
            worst = worst.max(rel_err(got, want));
        }
    }
    (worst, models)
}

/// Density of a Clayton chain of three against nested differences of the
/// explicit product of factor CDFs in x-space.
pub fn chain3_finite_difference(points: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let (a, b) = (rng.random_range(0.5..3.0), rng.random_range(0.5..3.0));
        let m = CdnModel::with_standard_margins(3, vec![CopulaFactor::clayton(a, vec![0, 1]), CopulaFactor::clayton(b, vec![1, 2])])
            .unwrap();
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut inf = Inference::new(&m).unwrap();
        let got = inf.log_density(&x).unwrap().exp();
        let f = |y: &[f64]| {
            let u: Vec<f64> = y.iter().enumerate().map(|(i, &v)| m.margin(i).cdf(v)).collect();
            product_cdf(&m, &u)
        };
        let want = nested_central(&f, &x, &[0, 1, 2], 1e-4);
        worst = worst.max(rel_err(got, want));
    }
    worst
}

pub fn dsp_equivalence() -> Check {
    let t = Instant::now();
    let (worst, n) = dsp_vs_product_rule(200, 2);
    let fd = chain3_finite_difference(20, 3);
    let secs = t.elapsed().as_secs_f64();
    let msg = format!("{n} random models: worst {worst:.2e} (tol 1e-9); chain-3 vs differences {fd:.2e} (tol 1e-3); {secs:.2}s");
    if worst <= 1e-9 && fd <= 1e-3 && secs < 30.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

pub fn normal_closed_form() -> Check {
    let t = Instant::now();
    let mut rng = rng_from_seed(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rho = rng.random_range(-0.95..0.95);
        let m = CdnModel::with_standard_margins(2, vec![CopulaFactor::normal_pair(rho, 0, 1)]).unwrap();
        let u = [rng.random_range(0.01..0.99), rng.random_range(0.01..0.99)];
        let got = Inference::new(&m).unwrap().copula_log_density(&u).unwrap().exp();
        worst = worst.max(rel_err(got, normal_copula_density(rho, u[0], u[1])));
    }
    within("100 points", worst, 1e-9, t.elapsed().as_secs_f64(), 10.0)
}

/// Linear against log-space message passing on random models.
pub fn log_vs_linear(models: usize, seed: u64) -> (f64, usize) {
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for _ in 0..models {
        let m = random_model(&mut rng, 6, 5);
        let (u, diff) = random_query(&mut rng, m.n_vars());
        let lin: f64 = engine_value(&m, &u, &diff);
        let log: SignedLog = engine_value(&m, &u, &diff);
        if lin.is_finite() && lin != 0.0 {
            worst = worst.max(rel_err(lin, log.to_f64()));
            compared += 1;
        }
    }
    (worst, compared)
}

/// Clayton θ = 500 on chains and loops: every density must be finite.
pub fn extreme_theta(points: usize, seed: u64) -> std::result::Result<usize, String> {
    let mut rng = rng_from_seed(seed);
    let mut n_ok = 0;
    for fam in [Family::Chain, Family::Loop] {
        for n in 3..=6 {
            let m = generate(&ArchetypeSpec::new(fam, n, CopulaKind::Clayton).fixed(500.0), 0).unwrap();
            let mut inf = Inference::new(&m).unwrap();
            for _ in 0..points {
                let u: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-8.0..0.0)).min(0.999)).collect();
                let l = inf.copula_log_density(&u).map_err(|e| e.to_string())?;
                if !l.is_finite() {
                    return Err(format!("{fam} n={n} u={u:?}: ln c = {l}"));
                }
                n_ok += 1;
            }
        }
    }
    Ok(n_ok)
}

pub fn log_space_integrity() -> Check {
    let (worst, compared) = log_vs_linear(300, 5);
    let extreme = extreme_theta(25, 6);
    let msg = format!("{compared} finite comparisons, worst {worst:.2e} (tol 1e-10); θ=500: {extreme:?}");
    if worst <= 1e-10 && extreme.is_ok() {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Every discrete structure over two or three variables.
pub fn discrete_structures() -> Vec<(usize, Vec<(Vec<usize>, bool)>)> {
    let mut out = vec![(2, vec![(vec![0, 1], true)]), (2, vec![(vec![0, 1], false)])];
    let scopes = [vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 1, 2]];
    for bits in 1u32..16 {
        let chosen: Vec<&Vec<usize>> = (0..4).filter(|b| bits >> b & 1 == 1).map(|b| &scopes[b]).collect();
        let covered = (0..3).all(|v| chosen.iter().any(|s| s.contains(&v)));
        if !covered {
            continue;
        }
        let pairs = chosen.iter().filter(|s| s.len() == 2).count();
        // each pair factor may be Clayton (true) or normal (false)
        for kinds in 0u32..(1 << pairs) {
            let mut k = 0;
            let fs = chosen
                .iter()
                .map(|s| {
                    if s.len() == 3 {
                        ((*s).clone(), true)
                    } else {
                        k += 1;
                        ((*s).clone(), kinds >> (k - 1) & 1 == 1)
                    }
                })
                .collect();
            out.push((3, fs));
        }
    }
    out
}

pub fn discrete_variant() -> Check {
    let mut rng = rng_from_seed(7);
    let structures = discrete_structures();
    let (mut worst_pmf, mut worst_total): (f64, f64) = (0.0, 0.0);
    for (n, fs) in &structures {
        for _ in 0..3 {
            let margins: Vec<DiscreteMargin> = (0..*n)
                .map(|_| {
                    let k = rng.random_range(2..=3);
                    let p: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
                    DiscreteMargin::from_probs(&p).unwrap()
                })
                .collect();
            let factors = fs
                .iter()
                .map(|(s, clayton)| {
                    if *clayton {
                        CopulaFactor::clayton(rng.random_range(0.2..5.0), s.clone())
                    } else {
                        CopulaFactor::normal_pair(rng.random_range(-0.9..0.9), s[0], s[1])
                    }
                })
                .collect();
            let mut cdn = DiscreteCdn::new(margins.clone(), factors).unwrap();
            let sizes: Vec<usize> = margins.iter().map(|m| m.support_size()).collect();
            let mut total = 0.0;
            for x in grid_points(&sizes) {
                let p = discrete_pmf(&mut cdn, &x).unwrap();
                let want = inclusion_exclusion(&cdn, &x);
                worst_pmf = worst_pmf.max((p - want).abs());
                total += p;
            }
            worst_total = worst_total.max((total - 1.0).abs());
        }
    }
    let msg = format!(
        "{} structures x3: pmf worst {worst_pmf:.2e} (tol 1e-10), total worst {worst_total:.2e} (tol 1e-9)",
        structures.len()
    );
    if worst_pmf <= 1e-10 && worst_total <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

pub fn grid_points(sizes: &[usize]) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for &k in sizes {
        out = out.into_iter().flat_map(|p: Vec<i64>| (0..k as i64).map(move |x| [p.clone(), vec![x]].concat())).collect();
    }
    out
}

/// p(x) = Σ_S (-1)^{|S|} F(x - 1_S).
pub fn inclusion_exclusion(cdn: &DiscreteCdn, x: &[i64]) -> f64 {
    let n = x.len();
    (0u32..1 << n)
        .map(|s| {
            let y: Vec<i64> = (0..n).map(|i| x[i] - i64::from(s >> i & 1 == 1)).collect();
            let sign = if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            sign * cdn.cdf(&y)
        })
        .sum()
}

/// Family preservation and running intersection on random scope sets.
pub fn random_trees(count: usize, seed: u64) -> std::result::Result<usize, String> {
    let mut rng = rng_from_seed(seed);
    for i in 0..count {
        let n = rng.random_range(2..=10);
        let nf = rng.random_range(1..=8);
        let scopes: Vec<Vec<usize>> = (0..nf)
            .map(|_| {
                let k = rng.random_range(1..=n.min(4));
                let mut pool: Vec<usize> = (0..n).collect();
                (0..k).map(|_| pool.swap_remove(rng.random_range(0..pool.len()))).collect()
            })
            .collect();
        let t = build_min_fill(&scopes).map_err(|e| e.to_string())?;
        validate_tree(&t, &scopes).map_err(|v| format!("tree {i}: {v:?}"))?;
        // always keep one covered variable so the restriction is non-empty
        let anchor = scopes[0][0];
        let keep: Vec<usize> = (0..n).filter(|&x| x == anchor || rng.random_bool(0.6)).collect();
        let r = build_restricted(&scopes, Some(&keep)).map_err(|e| e.to_string())?;
        validate_tree(&r, &r.scopes).map_err(|v| format!("restricted tree {i}: {v:?}"))?;
    }
    Ok(count)
}

/// Same density from every clique after calibration.
pub fn calibration_spread(seed: u64) -> std::result::Result<(f64, usize), String> {
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    let mut models = 0;
    for fam in [Family::Chain, Family::Loop, Family::Tree] {
        for n in fam.min_n()..=6 {
            for kind in [CopulaKind::Clayton, CopulaKind::NormalPair] {
                let m = generate(&ArchetypeSpec::new(fam, n, kind), rng.random()).map_err(|e| e.to_string())?;
                let tree = build_min_fill(&m.scopes()).map_err(|e| e.to_string())?;
                let mut e = Engine::<SignedLog>::new(&tree, m.factors(), Mode::Continuous).map_err(|e| e.to_string())?;
                let u: Vec<f64> = (0..m.n_vars()).map(|_| rng.random_range(0.05..0.95)).collect();
                let t = transform_u(&m, &u, &vec![true; m.n_vars()], None);
                e.set_point(m.factors(), &t.args);
                let base = e.evaluate().map_err(|e| e.to_string())?;
                e.calibrate().map_err(|e| e.to_string())?;
                for c in 0..tree.len() {
                    let v = e.root_value(c, None).map_err(|e| e.to_string())?;
                    worst = worst.max((v.log_abs - base.log_abs).abs());
                    if v.sign != base.sign {
                        return Err(format!("{fam} n={n}: sign differs at clique {c}"));
                    }
                }
                models += 1;
            }
        }
    }
    Ok((worst, models))
}

pub fn structural_suite() -> Check {
    let trees = random_trees(100, 8);
    let cal = calibration_spread(9);
    let msg = format!("random trees: {trees:?}; calibration (worst |Δ ln|, models): {cal:?} (tol 1e-9)");
    match (&trees, &cal) {
        (Ok(_), Ok((w, _))) if *w <= 1e-9 => Ok(msg),
        _ => Err(msg),
    }
}

/// Copula-space margins of several models against U[0, 1].
pub fn sampling_margins(count: usize) -> std::result::Result<String, String> {
    use cdn_core::sampling::{make_sampling_cliques, sample_copula};
    let models = [
        generate(&ArchetypeSpec::new(Family::Chain, 4, CopulaKind::Clayton).fixed(2.0), 0).unwrap(),
        generate(&ArchetypeSpec::new(Family::Loop, 4, CopulaKind::NormalPair).fixed(0.5), 0).unwrap(),
        CdnModel::with_standard_margins(
            4,
            vec![CopulaFactor::clayton(1.5, vec![0, 1, 2]), CopulaFactor::normal_pair(-0.4, 2, 3), CopulaFactor::clayton(3.0, vec![1, 3])],
        )
        .unwrap(),
    ];
    let crit = ks_critical_01(count);
    let mut worst: f64 = 0.0;
    for (k, m) in models.iter().enumerate() {
        let plan = make_sampling_cliques(m, &mut rng_from_seed(20 + k as u64)).map_err(|e| e.to_string())?;
        let rows = sample_copula(m, &plan, count, 30 + k as u64).map_err(|e| e.to_string())?;
        for i in 0..m.n_vars() {
            let col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            let d = ks_uniform(&col);
            worst = worst.max(d);
            if d > crit {
                return Err(format!("model {k} variable {i}: KS {d:.4} > {crit:.4}"));
            }
        }
    }
    Ok(format!("worst KS {worst:.4} (critical {crit:.4})"))
}

/// Sample τ of a single Clayton factor and probit correlation of a single
/// normal factor.
pub fn sampling_dependence(count: usize) -> (f64, f64) {
    use cdn_core::sampling::{make_sampling_cliques, sample_copula};
    let c = CdnModel::with_standard_margins(2, vec![CopulaFactor::clayton(2.0, vec![0, 1])]).unwrap();
    let plan = make_sampling_cliques(&c, &mut rng_from_seed(40)).unwrap();
    let rows = sample_copula(&c, &plan, count, 41).unwrap();
    let (a, b): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r[0], r[1])).unzip();
    let tau = kendall_tau(&a, &b);
    let nm = CdnModel::with_standard_margins(2, vec![CopulaFactor::normal_pair(0.8, 0, 1)]).unwrap();
    let plan = make_sampling_cliques(&nm, &mut rng_from_seed(42)).unwrap();
    let rows = sample_copula(&nm, &plan, count, 43).unwrap();
    let (a, b): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (cdn_core::margins::normal::quantile(r[0]), cdn_core::margins::normal::quantile(r[1]))).unzip();
    (tau, pearson(&a, &b))
}

pub fn sampling_statistics() -> Check {
    let t = Instant::now();
    let margins = sampling_margins(10_000);
    let (tau, rho) = sampling_dependence(10_000);
    let secs = t.elapsed().as_secs_f64();
    let msg = format!("margins: {margins:?}; Clayton θ=2 τ̂ = {tau:.4} (want 0.5 ± 0.03); normal ρ̂ = {rho:.4} (want 0.8 ± 0.03); {secs:.1}s");
    if margins.is_ok() && (tau - 0.5).abs() <= 0.03 && (rho - 0.8).abs() <= 0.03 && secs < 120.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}
