use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// A real number stored as sign and natural log of its magnitude.
///
/// Zero is `sign == 0` with `log_abs == -inf`.
#[derive(Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub log_abs: f64,
    pub sign: i8,
}

impl fmt::Debug for SignedLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "SignedLog(0)"),
            s => write!(f, "SignedLog({}exp({}))", if s > 0 { "+" } else { "-" }, self.log_abs),
        }
    }
}

impl Default for SignedLog {
    fn default() -> Self {
        Self::ZERO
    }
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog { log_abs: f64::NEG_INFINITY, sign: 0 };
    pub const ONE: SignedLog = SignedLog { log_abs: 0.0, sign: 1 };

    /// Positive number e^l; l = -inf gives zero.
    pub fn from_ln(l: f64) -> Self {
        if l == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self { log_abs: l, sign: 1 }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self { log_abs: x.abs().ln(), sign: if x > 0.0 { 1 } else { -1 } }
        }
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_abs.exp(),
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// Multiply by a positive factor e^l.
    pub fn scale_ln(self, l: f64) -> Self {
        if self.sign == 0 || l == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self { log_abs: self.log_abs + l, sign: self.sign }
        }
    }

    /// Multiply by an ordinary real.
    pub fn scale(self, x: f64) -> Self {
        self * Self::from_f64(x)
    }

    /// ln of the value; only meaningful for positive values.
    pub fn ln(self) -> f64 {
        match self.sign {
            1 => self.log_abs,
            0 => f64::NEG_INFINITY,
            _ => f64::NAN,
        }
    }
}

impl Mul for SignedLog {
    type Output = SignedLog;
    fn mul(self, o: SignedLog) -> SignedLog {
        if self.sign == 0 || o.sign == 0 {
            return SignedLog::ZERO;
        }
        SignedLog { log_abs: self.log_abs + o.log_abs, sign: self.sign * o.sign }
    }
}

impl Neg for SignedLog {
    type Output = SignedLog;
    fn neg(self) -> SignedLog {
        SignedLog { log_abs: self.log_abs, sign: -self.sign }
    }
}

impl Add for SignedLog {
    type Output = SignedLog;
    fn add(self, o: SignedLog) -> SignedLog {
        if self.sign == 0 {
            return o;
        }
        if o.sign == 0 {
            return self;
        }
        let (hi, lo) = if self.log_abs >= o.log_abs { (self, o) } else { (o, self) };
        if hi.log_abs == f64::INFINITY {
            return hi;
        }
        let r = (lo.log_abs - hi.log_abs).exp();
        if hi.sign == lo.sign {
            SignedLog { log_abs: hi.log_abs + r.ln_1p(), sign: hi.sign }
        } else if r == 1.0 {
            SignedLog::ZERO
        } else {
            SignedLog { log_abs: hi.log_abs + (-r).ln_1p(), sign: hi.sign }
        }
    }
}

impl Sub for SignedLog {
    type Output = SignedLog;
    fn sub(self, o: SignedLog) -> SignedLog {
        self + (-o)
    }
}

impl std::iter::Sum for SignedLog {
    fn sum<I: Iterator<Item = SignedLog>>(iter: I) -> SignedLog {
        iter.fold(SignedLog::ZERO, |a, b| a + b)
    }
}
