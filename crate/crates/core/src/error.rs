use thiserror::Error;

/// Every failure the library can report.
///
/// Numeric payloads are stored as `f64` regardless of the scalar type used by
/// the computation so that the error type stays non-generic.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid too coarse: dx = {dx} exceeds {max_dx} (quarter of the coherent width)")]
    GridTooCoarse { dx: f64, max_dx: f64 },
    #[error("grid too small: half-length {half_length} < required {required}")]
    GridTooSmall { half_length: f64, required: f64 },
    #[error("state not normalized: |norm - 1| = {deviation:e}")]
    NotNormalized { deviation: f64 },
    #[error("wave functions live on different grids or carry different hbar")]
    GridMismatch,
    #[error("dilated state does not fit the grid: extent {extent} > {limit}")]
    GridOverflow { extent: f64, limit: f64 },
    #[error("estimated resampling error {estimate:e} exceeds {limit:e}")]
    InterpolationLoss { estimate: f64, limit: f64 },
    #[error("invalid hbar {0}: must satisfy 0 < hbar <= 1")]
    InvalidHbar(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unstable parameters: momentum density at grid edge is {ratio:e} of its maximum")]
    UnstableParameters { ratio: f64 },
    #[error("classical trajectory left the bounded region (|q| or |p| > 1e6) at t = {t}")]
    FlowBlowup { t: f64 },
    #[error("fixed point is not hyperbolic")]
    NotHyperbolic,
    #[error("operation not supported for this model: {0}")]
    UnsupportedModel(String),
    #[error("collapse window removed all probability mass (norm^2 = {norm_sqr:e})")]
    ZeroMass { norm_sqr: f64 },
    #[error("curve set is empty")]
    EmptyCurve,
    #[error("scaling sweep needs at least 4 hbar values spanning 2 decades: {0}")]
    InsufficientSpan(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of a numerical guard (as opposed to bad input).
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::GridOverflow { .. }
                | Error::InterpolationLoss { .. }
                | Error::UnstableParameters { .. }
                | Error::FlowBlowup { .. }
                | Error::ZeroMass { .. }
                | Error::NotNormalized { .. }
        )
    }

    /// Process exit status for the command-line tool: 3 for numerical
    /// guards, 1 for i/o failures, 2 for everything else (bad input).
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical_guard() {
            3
        } else if matches!(self, Error::Io(_)) {
            1
        } else {
            2
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
