#![allow(dead_code)]

pub mod checks;

use cdn_core::copulas::{factor_tables, CopulaKind, SignedLog};
use cdn_core::margins::normal;
use cdn_core::model::{CdnModel, CopulaFactor};
use rand::Rng;

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

/// Random valid model with `2..=max_vars` variables and `1..=max_factors` factors.
pub fn random_model<R: Rng>(rng: &mut R, max_vars: usize, max_factors: usize) -> CdnModel {
    loop {
        let n = rng.random_range(2..=max_vars);
        let nf = rng.random_range(1..=max_factors);
        let mut factors = Vec::new();
        for _ in 0..nf {
            if rng.random_bool(0.5) {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                factors.push(CopulaFactor::normal_pair(rng.random_range(-0.9..0.9), a, b));
            } else {
                let k = rng.random_range(2..=n);
                let mut pool: Vec<usize> = (0..n).collect();
                let mut scope = Vec::new();
                for _ in 0..k {
                    scope.push(pool.swap_remove(rng.random_range(0..pool.len())));
                }
                factors.push(CopulaFactor::clayton(rng.random_range(0.2..4.0), scope));
            }
        }
        if let Ok(m) = CdnModel::with_standard_margins(n, factors) {
            return m;
        }
    }
}

/// v-space partial tables of every factor, indexed by slot masks.
pub fn factor_partials(m: &CdnModel, u: &[f64]) -> Vec<Vec<f64>> {
    m.factors()
        .iter()
        .map(|f| {
            let v: Vec<f64> = f.scope.iter().map(|&x| if u[x] >= 1.0 { 1.0 } else { u[x].powf(m.d()[x]) }).collect();
            let w: Vec<f64> = v.iter().map(|&x| normal::probit(x)).collect();
            let all = (1u32 << f.scope.len()) - 1;
            let diffable = f.scope.iter().enumerate().fold(0, |acc, (s, &x)| if u[x] < 1.0 { acc | 1 << s } else { acc }) & all;
            let mut t = vec![SignedLog::ZERO; 1 << f.scope.len()];
            factor_tables(f.kind, f.param, &v, &w, diffable, &mut t, None);
            t.iter().map(|x| x.to_f64()).collect()
        })
        .collect()
}

/// ∂^D Π_f φ_f(v) by summing over every assignment of each differentiated
/// variable to one factor containing it.
pub fn brute_force(m: &CdnModel, u: &[f64], diff: &[bool]) -> f64 {
    let tabs = factor_partials(m, u);
    let dvars: Vec<usize> = (0..m.n_vars()).filter(|&i| diff[i]).collect();
    let holders: Vec<Vec<usize>> =
        dvars.iter().map(|&x| (0..m.factors().len()).filter(|&f| m.factors()[f].scope.contains(&x)).collect()).collect();
    let mut choice = vec![0usize; dvars.len()];
    let mut total = 0.0;
    loop {
        let mut masks = vec![0u32; m.factors().len()];
        for (k, &x) in dvars.iter().enumerate() {
            let f = holders[k][choice[k]];
            let slot = m.factors()[f].scope.iter().position(|&y| y == x).unwrap();
            masks[f] |= 1 << slot;
        }
        total += masks.iter().enumerate().map(|(f, &mk)| tabs[f][mk as usize]).product::<f64>();
        // odometer
        let mut k = 0;
        loop {
            if k == choice.len() {
                return total;
            }
            choice[k] += 1;
            if choice[k] < holders[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Plain factor product F(u) in copula coordinates.
pub fn product_cdf(m: &CdnModel, u: &[f64]) -> f64 {
    m.factors()
        .iter()
        .map(|f| {
            let v: Vec<f64> = f.scope.iter().map(|&x| if u[x] >= 1.0 { 1.0 } else { u[x].powf(m.d()[x]) }).collect();
            cdn_core::copulas::factor_cdf(f.kind, f.param, &v)
        })
        .product()
}

/// Bivariate normal copula density at (u1, u2).
pub fn normal_copula_density(rho: f64, u1: f64, u2: f64) -> f64 {
    let (a, b) = (normal::quantile(u1), normal::quantile(u2));
    let q = (a * a - 2.0 * rho * a * b + b * b) / (1.0 - rho * rho) - a * a - b * b;
    (-0.5 * q).exp() / (1.0 - rho * rho).sqrt()
}

pub fn is_normal(kind: CopulaKind) -> bool {
    kind == CopulaKind::NormalPair
}

/// Kolmogorov–Smirnov statistic against U[0, 1].
pub fn ks_uniform(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Critical KS value at α = 0.01 (asymptotic).
pub fn ks_critical_01(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
    // O(n log n) would be nicer; samples here are small enough for O(n²)
    let n = a.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let x = (a[i] - a[j]) * (b[i] - b[j]);
            s += if x > 0.0 { 1 } else if x < 0.0 { -1 } else { 0 };
        }
    }
    s as f64 * 2.0 / (n as f64 * (n as f64 - 1.0))
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One row of the high-precision finite-difference table of copula partials.
#[derive(Debug, Clone)]
pub struct GridRow {
    pub family: String,
    pub param: f64,
    pub u: [f64; 2],
    pub mask: u32,
    pub wrt_param: bool,
    pub ln_abs: f64,
    pub sign: i8,
}

pub fn copula_grid() -> Vec<GridRow> {
    include_str!("../data/copula_partials.csv")
        .lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            GridRow {
                family: c[0].to_string(),
                param: c[1].parse().unwrap(),
                u: [c[2].parse().unwrap(), c[3].parse().unwrap()],
                mask: c[4].parse().unwrap(),
                wrt_param: c[5] == "param",
                ln_abs: c[6].parse().unwrap(),
                sign: c[7].parse().unwrap(),
            }
        })
        .collect()
}

/// Evaluates the library partial named by a grid row. Normal rows are in
/// probit coordinates w = Φ⁻¹(u).
pub fn grid_value(r: &GridRow) -> SignedLog {
    use cdn_core::copulas::*;
    match (r.family.as_str(), r.wrt_param) {
        ("clayton", false) => clayton_log_partial(&ClaytonCopula::new(r.param, 2).unwrap(), &r.u, r.mask).unwrap(),
        ("clayton", true) => clayton_log_param_partial(&ClaytonCopula::new(r.param, 2).unwrap(), &r.u, r.mask).unwrap(),
        (_, wrt) => {
            let c = NormalPairCopula::new(r.param).unwrap();
            let w = [normal::quantile(r.u[0]), normal::quantile(r.u[1])];
            if wrt {
                normal_pair_log_param_partial(&c, w, r.mask).unwrap()
            } else {
                normal_pair_log_partial(&c, w, r.mask).unwrap()
            }
        }
    }
}

/// Rows where the library disagrees with the oracle beyond `rel` (compared
/// on the log scale, so tiny magnitudes are checked as strictly as large ones).
pub fn grid_failures(rel: f64) -> Vec<(GridRow, SignedLog)> {
    copula_grid()
        .into_iter()
        .filter_map(|r| {
            let got = grid_value(&r);
            let ok = if r.sign == 0 {
                got.is_zero() || got.log_abs < -700.0
            } else {
                got.sign == r.sign && (got.log_abs - r.ln_abs).abs() < rel
            };
            (!ok).then_some((r, got))
        })
        .collect()
}

/// Central difference of `f` at `x` in coordinate `k`.
pub fn central<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], k: usize, h: f64) -> f64 {
    let mut a = x.to_vec();
    let mut b = x.to_vec();
    a[k] += h;
    b[k] -= h;
    (f(&a) - f(&b)) / (2.0 * h)
}

/// Nested central differences of `f` over the coordinates in `ks`.
pub fn nested_central(f: &dyn Fn(&[f64]) -> f64, x: &[f64], ks: &[usize], h: f64) -> f64 {
    match ks.split_first() {
        None => f(x),
        Some((&k, rest)) => {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[k] += h;
            b[k] -= h;
            (nested_central(f, &a, rest, h) - nested_central(f, &b, rest, h)) / (2.0 * h)
        }
    }
}
