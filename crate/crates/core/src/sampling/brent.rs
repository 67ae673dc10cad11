//! Bracketing root finder combining bisection, secant and inverse
//! quadratic interpolation.

use crate::error::{CdnError, Result};

pub const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub iterations: usize,
}

/// One-dimensional root problem `g(u) = objective(u) - k` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootProblem {
    pub lo: f64,
    pub hi: f64,
    pub k: f64,
}

impl Default for RootProblem {
    fn default() -> Self {
        Self { lo: 1e-12, hi: 1.0 - 1e-12, k: 0.5 }
    }
}

/// Moves an endpoint toward `mid` until `f` is finite there.
fn nudge<F: FnMut(f64) -> f64>(f: &mut F, mut x: f64, mid: f64) -> (f64, f64) {
    let mut fx = f(x);
    let mut step = (mid - x) * 1e-9;
    while !fx.is_finite() && (x - mid).abs() > 1e-3 * (mid.abs() + 1.0) {
        x += step;
        step *= 10.0;
        if (step > 0.0 && x > mid) || (step < 0.0 && x < mid) {
            x = mid;
        }
        fx = f(x);
    }
    (x, fx)
}

/// Finds a root of `f` in `[lo, hi]` to absolute tolerance `tol` on x.
///
/// Endpoints where `f` is not finite are nudged inward first. Fails with
/// `NoBracket` when the endpoint values share a sign.
pub fn brent_root<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<Root> {
    let mid = 0.5 * (lo + hi);
    let (mut a, mut fa) = nudge(&mut f, lo, mid);
    let (mut b, mut fb) = nudge(&mut f, hi, mid);
    if fa == 0.0 {
        return Ok(Root { x: a, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, iterations: 0 });
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(CdnError::NoBracket { lo: a, hi: b });
    }
    let (mut c, mut fc) = (b, fb);
    let (mut d, mut e) = (b - a, b - a);
    for it in 1..=MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(Root { x: b, iterations: it });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if fb.is_nan() {
            // treat as a sign change toward the bracket partner
            fb = -fc.signum() * f64::MIN_POSITIVE;
        }
    }
    Err(CdnError::MaxIterations)
}
