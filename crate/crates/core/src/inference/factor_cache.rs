//! Lazily evaluated partial-derivative tables of one factor at one point.

use crate::copulas::{clayton, normal_pair, CopulaKind, SignedLog};
use crate::margins::normal;

#[derive(Debug, Clone)]
pub(crate) struct FactorCache {
    kind: CopulaKind,
    param: f64,
    discrete: bool,
    v: Vec<f64>,
    w: Vec<f64>,
    lower_v: Vec<f64>,
    lower_w: Vec<f64>,
    prep: clayton::Prepared,
    prep_ok: Option<bool>,
    val: Vec<Option<SignedLog>>,
    par: Vec<Option<SignedLog>>,
    corner: Vec<Option<SignedLog>>,
    scratch: Vec<f64>,
    /// Φ₂ terms for the current correlation, kept across points.
    bvn: Option<normal::Bvn>,
}

impl FactorCache {
    pub fn new(kind: CopulaKind, arity: usize) -> Self {
        let n = 1usize << arity;
        Self {
            kind,
            param: f64::NAN,
            discrete: false,
            v: vec![1.0; arity],
            w: vec![f64::INFINITY; arity],
            lower_v: vec![0.0; arity],
            lower_w: vec![f64::NEG_INFINITY; arity],
            prep: clayton::Prepared::default(),
            prep_ok: None,
            val: vec![None; n],
            par: vec![None; n],
            corner: vec![None; n],
            scratch: vec![0.0; arity],
            bvn: None,
        }
    }

    /// Loads a new point. Slot vectors must have the factor's arity.
    pub fn reset(&mut self, param: f64, v: impl Iterator<Item = (f64, f64)>) {
        self.param = param;
        self.discrete = false;
        for (slot, (vv, ww)) in v.enumerate() {
            self.v[slot] = vv;
            self.w[slot] = ww;
        }
        self.clear();
    }

    pub fn reset_discrete(&mut self, param: f64, args: impl Iterator<Item = (f64, f64)>) {
        self.param = param;
        self.discrete = true;
        for (slot, (hi, lo)) in args.enumerate() {
            self.v[slot] = hi;
            self.lower_v[slot] = lo;
            if self.kind == CopulaKind::NormalPair {
                self.w[slot] = normal::probit(hi);
                self.lower_w[slot] = normal::probit(lo);
            }
        }
        self.clear();
    }

    fn clear(&mut self) {
        self.prep_ok = None;
        self.val.fill(None);
        self.par.fill(None);
        self.corner.fill(None);
    }

    fn bvn_cdf(&mut self, h: f64, k: f64) -> f64 {
        let rho = self.param;
        let b = match &mut self.bvn {
            Some(b) if b.rho().to_bits() == rho.to_bits() => b,
            slot => slot.insert(normal::Bvn::new(rho)),
        };
        b.cdf(h, k)
    }

    fn prepared(&mut self) -> bool {
        if let Some(ok) = self.prep_ok {
            return ok;
        }
        let ok = clayton::prepare_into(self.param, &self.v, &mut self.prep);
        self.prep_ok = Some(ok);
        ok
    }

    /// Partial of the factor in copula coordinates with respect to the
    /// slots in `mask` (a backward difference in discrete mode).
    pub fn value(&mut self, mask: u32) -> SignedLog {
        if let Some(x) = self.val[mask as usize] {
            return x;
        }
        let x = if self.discrete { self.difference(mask) } else { self.partial(mask, false) };
        self.val[mask as usize] = Some(x);
        x
    }

    /// Parameter derivative of `value(mask)` (continuous mode only).
    pub fn param_partial(&mut self, mask: u32) -> SignedLog {
        if let Some(x) = self.par[mask as usize] {
            return x;
        }
        let x = if self.discrete { SignedLog::ZERO } else { self.partial(mask, true) };
        self.par[mask as usize] = Some(x);
        x
    }

    fn partial(&mut self, mask: u32, wrt_param: bool) -> SignedLog {
        match self.kind {
            CopulaKind::Clayton => {
                if !self.prepared() {
                    return SignedLog::ZERO;
                }
                let lv = clayton::log_value(self.param, &self.prep, mask);
                let base = SignedLog::from_ln(lv);
                if wrt_param {
                    base.scale(clayton::log_grad(self.param, &self.prep, mask))
                } else {
                    base
                }
            }
            CopulaKind::NormalPair => {
                let w = [self.w[0], self.w[1]];
                if w[0] == f64::NEG_INFINITY || w[1] == f64::NEG_INFINITY {
                    return SignedLog::ZERO;
                }
                let mut chain = 0.0;
                for (i, wi) in w.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        chain -= normal::ln_pdf(*wi);
                    }
                }
                let base = if wrt_param {
                    normal_pair::param(self.param, w, mask)
                } else if mask == 0 {
                    SignedLog::from_f64(self.bvn_cdf(w[0], w[1]))
                } else {
                    normal_pair::value(self.param, w, mask)
                };
                base.scale_ln(chain)
            }
        }
    }

    /// φ with the slots in `low` moved to their lower arguments.
    fn corner_value(&mut self, low: u32) -> SignedLog {
        if let Some(x) = self.corner[low as usize] {
            return x;
        }
        let x = match self.kind {
            CopulaKind::Clayton => {
                for i in 0..self.v.len() {
                    self.scratch[i] = if low >> i & 1 == 1 { self.lower_v[i] } else { self.v[i] };
                }
                match clayton::prepare(self.param, &self.scratch) {
                    None => SignedLog::ZERO,
                    Some(p) => SignedLog::from_ln(clayton::log_value(self.param, &p, 0)),
                }
            }
            CopulaKind::NormalPair => {
                let pick = |i: usize| if low >> i & 1 == 1 { self.lower_w[i] } else { self.w[i] };
                let (h, k) = (pick(0), pick(1));
                SignedLog::from_f64(self.bvn_cdf(h, k))
            }
        };
        self.corner[low as usize] = Some(x);
        x
    }

    fn difference(&mut self, mask: u32) -> SignedLog {
        let mut acc = SignedLog::ZERO;
        let mut t = mask;
        loop {
            let c = self.corner_value(t);
            acc = if t.count_ones() % 2 == 1 { acc - c } else { acc + c };
            if t == 0 {
                break;
            }
            t = (t - 1) & mask;
        }
        acc
    }
}
