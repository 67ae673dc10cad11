//! Standard normal kernel: φ, Φ, ln Φ, Φ⁻¹ and the bivariate CDF Φ₂.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Lower clamp applied to copula coordinates before the probit.
pub const U_CLAMP: f64 = 1e-15;

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

pub fn ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

pub fn cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail 1 - Φ(x), accurate for large x.
pub fn sf(x: f64) -> f64 {
    cdf(-x)
}

pub fn ln_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x > 0.0 {
        return (-sf(x)).ln_1p();
    }
    if x > -37.0 {
        return cdf(x).ln();
    }
    // asymptotic expansion of the Mills ratio
    let z = 1.0 / (x * x);
    let series = 1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z)));
    ln_pdf(x) - (-x).ln() + series.ln()
}

const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

/// Φ⁻¹(p) for p ∈ [0, 1]; the endpoints map to ∓∞.
pub fn quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        // 1 - p is exact here
        return -lower_quantile(1.0 - p);
    }
    lower_quantile(p)
}

fn lower_quantile(p: f64) -> f64 {
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    // one Halley step; for deep tails use the log residual to stay relative
    let e = if p < 1e-300 { (ln_cdf(x) - p.ln()).exp_m1() * p } else { cdf(x) - p };
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    if !u.is_finite() {
        return x;
    }
    x - u / (1.0 + 0.5 * x * u)
}

/// Probit used by the copula parameterization.
///
/// Exact 0 and 1 map to ∓∞; interior values are clamped to
/// `[U_CLAMP, 1 - U_CLAMP]` first.
pub fn probit(v: f64) -> f64 {
    if v >= 1.0 {
        f64::INFINITY
    } else if v <= 0.0 {
        f64::NEG_INFINITY
    } else {
        quantile(v.clamp(U_CLAMP, 1.0 - U_CLAMP))
    }
}

// Gauss-Legendre half-rules (weight, abscissa) used by the Drezner-Wesolowsky reduction.
const GL6: [(f64, f64); 3] = [
    (0.171_324_492_379_170_5, -0.932_469_514_203_152_2),
    (0.360_761_573_048_138_4, -0.661_209_386_466_264_7),
    (0.467_913_934_572_690_4, -0.238_619_186_083_197),
];
const GL12: [(f64, f64); 6] = [
    (0.471_753_363_865_117_7e-1, -0.981_560_634_246_719_1),
    (0.106_939_325_995_318_3, -0.904_117_256_370_475),
    (0.160_078_328_543_346_4, -0.769_902_674_194_305),
    (0.203_167_426_723_065_9, -0.587_317_954_286_617_1),
    (0.233_492_536_538_354_7, -0.367_831_498_998_180_2),
    (0.249_147_045_813_402_9, -0.125_233_408_511_469_2),
];
const GL20: [(f64, f64); 10] = [
    (0.176_140_071_391_521_2e-1, -0.993_128_599_185_094_9),
    (0.406_014_298_003_869_4e-1, -0.963_971_927_277_913_8),
    (0.626_720_483_341_090_6e-1, -0.912_234_428_251_325_9),
    (0.832_767_415_767_047_5e-1, -0.839_116_971_822_218_8),
    (0.101_930_119_817_240_4, -0.746_331_906_460_150_8),
    (0.118_194_531_961_518_4, -0.636_053_680_726_515),
    (0.131_688_638_449_176_6, -0.510_867_001_950_827_1),
    (0.142_096_109_318_382_1, -0.373_706_088_715_419_6),
    (0.149_172_986_472_603_7, -0.227_785_851_141_645_1),
    (0.152_753_387_130_725_9, -0.765_265_211_334_973_3e-1),
];

/// Φ₂(h, k; ρ) = P(X ≤ h, Y ≤ k) for a standard bivariate normal with correlation ρ.
pub fn bvn_cdf(h: f64, k: f64, rho: f64) -> f64 {
    Bvn::new(rho).cdf(h, k)
}

/// Φ₂ for one fixed ρ, with the ρ-only quadrature terms precomputed;
/// cheaper than `bvn_cdf` when many points share a correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct Bvn {
    rho: f64,
    nodes: SineNodes,
}

impl Bvn {
    pub fn new(rho: f64) -> Self {
        Self { rho, nodes: SineNodes::new(rho) }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn cdf(&self, h: f64, k: f64) -> f64 {
        bvn_with(h, k, self.rho, &self.nodes)
    }
}

/// sin terms of the |ρ| < 0.925 branch: (weight, sin, 1 / (1 - sin²)).
#[derive(Debug, Clone, PartialEq)]
struct SineNodes {
    scale: f64,
    len: usize,
    nodes: [(f64, f64, f64); 20],
}

impl SineNodes {
    fn new(r: f64) -> Self {
        let mut out = Self { scale: 0.0, len: 0, nodes: [(0.0, 0.0, 0.0); 20] };
        if !(r.abs() < 0.925) || r == 0.0 {
            return out;
        }
        let asr = r.asin();
        out.scale = asr / (4.0 * PI);
        for &(w, x) in rule_for(r) {
            for is in [-1.0, 1.0] {
                let sn = (asr * (is * x + 1.0) / 2.0).sin();
                out.nodes[out.len] = (w, sn, 1.0 / (1.0 - sn * sn));
                out.len += 1;
            }
        }
        out
    }

    fn sum(&self, hk: f64, hs: f64) -> f64 {
        self.nodes[..self.len].iter().map(|&(w, sn, inv)| w * ((sn * hk - hs) * inv).exp()).sum::<f64>() * self.scale
    }
}

fn rule_for(r: f64) -> &'static [(f64, f64)] {
    if r.abs() < 0.3 {
        &GL6
    } else if r.abs() < 0.75 {
        &GL12
    } else {
        &GL20
    }
}

fn bvn_with(h: f64, k: f64, rho: f64, nodes: &SineNodes) -> f64 {
    if h == f64::NEG_INFINITY || k == f64::NEG_INFINITY {
        return 0.0;
    }
    if h == f64::INFINITY {
        return cdf(k);
    }
    if k == f64::INFINITY {
        return cdf(h);
    }
    let v = bvnu(-h, -k, rho, nodes).clamp(0.0, 1.0);
    // Negative correlation deep in the lower tail: the series above
    // subtracts nearly equal numbers, so integrate the small value directly.
    if rho < 0.0 && h + k < 0.0 && v < 1e-6 * cdf(h).min(cdf(k)) {
        return bvn_negative_tail(h, k, rho);
    }
    v
}

const KRONROD: [(f64, f64, f64); 8] = [
    // (node, Kronrod weight, Gauss weight or 0)
    (0.991_455_371_120_812_6, 0.022_935_322_010_529_22, 0.0),
    (0.949_107_912_342_758_5, 0.063_092_092_629_978_55, 0.129_484_966_168_869_7),
    (0.864_864_423_359_769_1, 0.104_790_010_322_250_2, 0.0),
    (0.741_531_185_599_394_4, 0.140_653_259_715_525_9, 0.279_705_391_489_276_7),
    (0.586_087_235_467_691_1, 0.169_004_726_639_267_9, 0.0),
    (0.405_845_151_377_397_2, 0.190_350_578_064_785_4, 0.381_830_050_505_118_9),
    (0.207_784_955_007_898_5, 0.204_432_940_075_298_9, 0.0),
    (0.0, 0.209_482_141_084_727_8, 0.417_959_183_673_469_4),
];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let (mut rk, mut rg) = (0.0, 0.0);
    for &(x, wk, wg) in &KRONROD {
        let s = if x == 0.0 { f(c) } else { f(c - hl * x) + f(c + hl * x) };
        rk += wk * s;
        rg += wg * s;
    }
    (rk * hl, ((rk - rg) * hl).abs())
}

/// Φ₂ for ρ < 0 and h + k < 0 as ∫_{-1}^{ρ} φ₂(h, k; t) dt, written with
/// t = -cos φ so the integrand is smooth.
fn bvn_negative_tail(h: f64, k: f64, rho: f64) -> f64 {
    let end = (-rho).acos();
    let ln_g = |p: f64| {
        let s = p.sin();
        if s <= 0.0 {
            f64::NEG_INFINITY
        } else {
            -(h * h + 2.0 * p.cos() * h * k + k * k) / (2.0 * s * s)
        }
    };
    const SCAN: usize = 64;
    let peak = (1..=SCAN).map(|i| ln_g(end * i as f64 / SCAN as f64)).fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return 0.0;
    }
    let g = |p: f64| (ln_g(p) - peak).exp();
    let coarse = (1..=SCAN).map(|i| g(end * i as f64 / SCAN as f64)).sum::<f64>() * end / SCAN as f64;
    let tol = 1e-14 * coarse;
    let mut total = 0.0;
    let mut stack = vec![(0.0, end, 0u32)];
    while let Some((a, b, depth)) = stack.pop() {
        let (v, err) = gauss_kronrod(&g, a, b);
        if err <= tol || depth >= 40 {
            total += v;
        } else {
            let m = 0.5 * (a + b);
            stack.push((a, m, depth + 1));
            stack.push((m, b, depth + 1));
        }
    }
    total * peak.exp() / (2.0 * PI)
}

/// Upper orthant P(X > h, Y > k).
fn bvnu(h: f64, k: f64, r: f64, nodes: &SineNodes) -> f64 {
    let rule = rule_for(r);
    let two_pi = 2.0 * PI;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        if r != 0.0 {
            let hs = 0.5 * (h * h + k * k);
            bvn = nodes.sum(hk, hs);
        }
        return bvn + cdf(-h) * cdf(-k);
    }
    let mut k = k;
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    if r.abs() < 1.0 {
        let a_s = (1.0 - r) * (1.0 + r);
        let mut a = a_s.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        bvn = a
            * (-(bs / a_s + hk) / 2.0).exp()
            * (1.0 - c * (bs - a_s) * (1.0 - d * bs / 5.0) / 3.0 + c * d * a_s * a_s / 5.0);
        if hk > -160.0 {
            let b = bs.sqrt();
            bvn -= (-hk / 2.0).exp()
                * two_pi.sqrt()
                * cdf(-b / a)
                * b
                * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for &(w, x) in rule {
            for is in [-1.0, 1.0] {
                let xs = (a * (is * x + 1.0)).powi(2);
                let rs = (1.0 - xs).sqrt();
                let asr = -(bs / xs + hk) / 2.0;
                if asr > -100.0 {
                    bvn += a
                        * w
                        * asr.exp()
                        * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                            - (1.0 + c * xs * (1.0 + d * xs)));
                }
            }
        }
        bvn = -bvn / two_pi;
    }
    if r > 0.0 {
        bvn + cdf(-h.max(k))
    } else {
        bvn = -bvn;
        if k > h {
            if h < 0.0 {
                bvn += cdf(k) - cdf(h);
            } else {
                bvn += cdf(-h) - cdf(-k);
            }
        }
        bvn
    }
}

/// ln of the standard bivariate normal density.
pub fn ln_bvn_pdf(x: f64, y: f64, rho: f64) -> f64 {
    let one_m = (1.0 - rho) * (1.0 + rho);
    -(x * x - 2.0 * rho * x * y + y * y) / (2.0 * one_m) - (2.0 * PI).ln() - 0.5 * one_m.ln()
}
