use thiserror::Error;

/// Errors produced by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e} K/s)")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("Jacobian is not stable: largest eigenvalue real part {0:.3e} s^-1 is not negative")]
    Unstable(f64),

    #[error("complex eigenvalues: |Im λ|/max|λ| = {ratio:.3e} exceeds {tolerance:.1e}")]
    ComplexEigenvalues { ratio: f64, tolerance: f64 },

    #[error("defective matrix: eigenvalue {eigenvalue:.6e} has multiplicity {multiplicity} but eigenspace dimension {rank}")]
    Defective {
        eigenvalue: f64,
        multiplicity: usize,
        rank: usize,
    },

    #[error("Perron mode is not strictly positive (components {0:?})")]
    NotPositive(Vec<usize>),

    #[error("driving samples are not zero-mean: node {node} has relative mean {relative:.3e}")]
    NonZeroMean { node: usize, relative: f64 },

    #[error("step size underflow at t = {t:.6e} s (h = {h:.3e} s); check the coupling coefficients for stiffness")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite or non-positive state at t = {0:.6e} s")]
    NonFinite(f64),

    #[error("cyclic solution not reached after {periods} periods (last mismatch {mismatch:.3e} K)")]
    MaxPeriods { periods: usize, mismatch: f64 },

    #[error("sample grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
