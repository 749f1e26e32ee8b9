//! Potential kernel, ladder variables, Green functions and exit probabilities for
//! recurrent random walks on the integers.

pub mod asymptotics;
pub mod corpus;
pub mod error;
pub mod exit;
pub mod green;
pub mod increment;
pub mod kernel;
pub mod montecarlo;
pub mod ladder;
pub mod quadrature;
pub mod special;
pub mod verify;

pub use error::{Result, WalkError};
pub use increment::{IncrementLaw, LawSpec, MomentSummary, Side, TailModel};

/// A computed value with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

impl Estimate {
    pub fn new(value: f64, err: f64) -> Self {
        Estimate { value, err }
    }

    pub fn exact(value: f64) -> Self {
        Estimate { value, err: 0.0 }
    }

    /// True when `|value - target| <= err + extra`.
    pub fn agrees_with(&self, target: f64, extra: f64) -> bool {
        (self.value - target).abs() <= self.err + extra
    }
}
