use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("total mass {mass} differs from 1 by more than {tol:e}")]
    MassNotOne { mass: f64, tol: f64 },
    #[error("mean {mean} differs from 0 by more than {tol:e}")]
    MeanNotZero { mean: f64, tol: f64 },
    #[error("support points have gcd {gcd}; the walk is not irreducible on Z")]
    Reducible { gcd: u64 },
    #[error("{side} tail starting at {start} overlaps the core window")]
    TailOverlap { side: &'static str, start: u64 },
    #[error("invalid tail model: {0}")]
    InvalidTail(String),
    #[error("negative probability {value} at site {site}")]
    NegativeMass { site: i64, value: f64 },
    #[error("escaped mass {escaped:e} exceeds cap {cap:e}; enlarge the window")]
    WindowTooSmall { escaped: f64, cap: f64 },
    #[error("state window cap {cap} exceeded")]
    WindowExceeded { cap: usize },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("linear solve failed: {0}")]
    SolveFailure(String),
    #[error("remainder of hitting functional cannot be controlled: {0}")]
    Unbounded(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
    #[error("not in regime: {0}")]
    NotInRegime(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("law file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, WalkError>;
