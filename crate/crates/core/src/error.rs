use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CdnError {
    #[error("degenerate sample: need at least two distinct values")]
    DegenerateSample,
    #[error("value {0} is outside the open unit interval")]
    OutOfUnitInterval(f64),
    #[error("diff mask {mask:#b} covers a marginalized coordinate")]
    InvalidMask { mask: u32 },
    #[error("parameter {param} outside the domain of {kind}")]
    ParamOutOfDomain { kind: &'static str, param: f64 },
    #[error("{kind} copula does not support arity {arity}")]
    UnsupportedArity { kind: &'static str, arity: usize },
    #[error("model has no factors")]
    EmptyModel,
    #[error("invalid model: {}", .0.join("; "))]
    InvalidModel(Vec<String>),
    #[error("message from clique {from} to {to} requested before its inputs")]
    ScheduleViolation { from: usize, to: usize },
    #[error("point is outside the discrete support")]
    OutOfSupport,
    #[error("root is not bracketed: g(lo)={lo}, g(hi)={hi}")]
    NoBracket { lo: f64, hi: f64 },
    #[error("root finder hit the iteration cap")]
    MaxIterations,
    #[error("optimizer did not converge within {} iterations", .0.iterations)]
    DidNotConverge(Box<crate::learning::LearnReport>),
    #[error("invalid archetype spec: {0}")]
    InvalidSpec(String),
    #[error("io error at {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("json error: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, CdnError>;
