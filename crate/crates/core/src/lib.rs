//! Copula cumulative distribution networks: exact inference by
//! derivative-sum-product message passing, sampling by the conditional
//! method, and gradient-based and piecewise parameter learning.

pub mod cliquetree;
pub mod copulas;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod learning;
pub mod margins;
pub mod model;
pub mod sampling;

pub use error::{CdnError, Result};
