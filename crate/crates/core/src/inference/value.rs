use crate::copulas::SignedLog;

/// Arithmetic used by message passing. Implemented for signed log-space
/// values and for plain linear `f64`.
pub trait Scalar: Copy + Send + Sync + std::fmt::Debug + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn is_zero(self) -> bool;
    fn from_sl(x: SignedLog) -> Self;
    fn to_sl(self) -> SignedLog;
}

impl Scalar for SignedLog {
    fn zero() -> Self {
        SignedLog::ZERO
    }
    fn one() -> Self {
        SignedLog::ONE
    }
    #[inline]
    fn add(self, o: Self) -> Self {
        self + o
    }
    #[inline]
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn neg(self) -> Self {
        -self
    }
    fn is_zero(self) -> bool {
        self.sign == 0
    }
    fn from_sl(x: SignedLog) -> Self {
        x
    }
    fn to_sl(self) -> SignedLog {
        self
    }
}

/// Linear-space arithmetic, for comparison against the log-space engine.
impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn add(self, o: Self) -> Self {
        self + o
    }
    #[inline]
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn neg(self) -> Self {
        -self
    }
    fn is_zero(self) -> bool {
        self == 0.0
    }
    fn from_sl(x: SignedLog) -> Self {
        x.to_f64()
    }
    fn to_sl(self) -> SignedLog {
        SignedLog::from_f64(self)
    }
}
