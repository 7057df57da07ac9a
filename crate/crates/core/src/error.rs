use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("edge list line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("matrix is not symmetric (|a[{row}][{col}] - a[{col}][{row}]| = {gap:e})")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("empty graph: mean degree is zero, normalized moments undefined")]
    EmptyGraph,

    #[error("cubic has a complex-conjugate root pair")]
    ComplexRoots,

    #[error("moments not realizable by a triangular density (complex abscissae)")]
    NotRealizable,

    #[error("support extends below zero (x1 = {x1})")]
    NegativeSupport { x1: f64 },

    #[error("non-finite state at t = {time}")]
    BlowUp { time: f64 },

    #[error("fundamental matrix overflowed at sigma = {sigma}")]
    Overflow { sigma: f64 },

    #[error("no Poincare section crossing within {horizon} time units")]
    NoCrossing { horizon: f64 },

    #[error(
        "period estimate not converging (spread {spread:e}); the attractor may not be periodic, \
         use the Lyapunov exponent path instead"
    )]
    NotPeriodic { spread: f64 },

    #[error("limit cycle does not close: |phi(T) - phi(0)| = {gap:e}")]
    NotClosed { gap: f64 },

    #[error("no finite sigma_max in [{start}, {end}]")]
    NoSigmaMax { start: f64, end: f64 },

    #[error("master stability function changes sign {count} times in the sweep; expected a single interval")]
    MultipleSignChanges { count: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("estimated lower support x1 = {x1} is not positive; prediction is empty")]
    EmptyPrediction { x1: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
