use thiserror::Error;

/// Errors raised by distribution, fitting, interval and simulation routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate shape: all observations are equal")]
    DegenerateShape,

    #[error("no events observed")]
    NoEvents,

    #[error("complete separation: 2x2 cell {cell} is zero")]
    Separation { cell: &'static str },

    #[error("{what} failed to converge after {iterations} iterations (trace: {trace:?})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        trace: Vec<f64>,
    },

    #[error("covariance matrix is singular or not positive semidefinite")]
    NumericalRank,

    #[error("fitted mean is not positive at period {period}")]
    Constraint { period: f64 },

    #[error("target not reached within the maximum horizon of {max} periods")]
    HorizonExceeded { max: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("too many failed runs in cell n={n}, N={big_n}: {failures} of {runs}")]
    SimulationBudget {
        n: usize,
        big_n: usize,
        failures: usize,
        runs: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn check_prob_open(p: f64, name: &str) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in (0, 1), got {p}")))
    }
}

pub(crate) fn check_positive(x: f64, name: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive and finite, got {x}")))
    }
}
