use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes across the crate. Numerical routines return these instead of
/// panicking so the CLI can map them onto its exit-code contract.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },

    #[error("Hurst index {h} outside (1/3, 1/2]")]
    InvalidHurst { h: f64 },

    #[error("Hoelder exponent {alpha} outside (1/3, 1/2)")]
    InvalidAlpha { alpha: f64 },

    #[error("regularity parameters out of range: {message}")]
    InvalidRegularity { message: String },

    #[error("time grid must contain at least two points")]
    EmptyGrid,

    #[error("time grid not strictly increasing at index {index}")]
    GridNotIncreasing { index: usize },

    #[error("time grid must start at 0, got {t0}")]
    GridOrigin { t0: f64 },

    #[error("grids disagree: left has {left_len} points over [0, {left_span}], right has {right_len} points over [0, {right_span}]")]
    GridMismatch {
        left_len: usize,
        left_span: f64,
        right_len: usize,
        right_span: f64,
    },

    #[error("index pair out of order: s = {s}, t = {t}")]
    IndexOrder { s: usize, t: usize },

    #[error("index {index} out of range for {len} grid points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("field shapes disagree: (dim {left_dim}, cutoff {left_cutoff}) vs (dim {right_dim}, cutoff {right_cutoff})")]
    ShapeMismatch {
        left_dim: usize,
        left_cutoff: usize,
        right_dim: usize,
        right_cutoff: usize,
    },

    #[error("semigroup time must be nonnegative, got {t}")]
    NegativeTime { t: f64 },

    #[error("covariance embedding not positive semidefinite (H = {h}, n = {n}); circulant eigenvalue {eigenvalue}")]
    CovarianceFactorization { h: f64, n: usize, eigenvalue: f64 },

    #[error(
        "dyadic refinement not Cauchy at t = {t}: depth {depth} moved by {delta} (tolerance {tol})"
    )]
    NonCauchyRefinement {
        t: f64,
        depth: u32,
        delta: f64,
        tol: f64,
    },

    #[error("fixed-point iteration not contracting: successive distances {previous} -> {current}")]
    NonContraction { previous: f64, current: f64 },

    #[error("fixed-point iteration stalled after {iterations} sweeps at relative distance {last_distance}")]
    FixedPointStalled {
        iterations: usize,
        last_distance: f64,
    },

    #[error("solution norm {norm} exceeded blow-up ceiling {ceiling} at t = {t}")]
    BlowUp { t: f64, norm: f64, ceiling: f64 },

    #[error("invalid configuration: {message}")]
    InvalidConfig { message: String },

    #[error("malformed input: {message}")]
    Format { message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_config(message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            message: message.into(),
        }
    }

    pub fn format(message: impl Into<String>) -> Self {
        Error::Format {
            message: message.into(),
        }
    }
}
