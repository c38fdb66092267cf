use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state norm {norm:e} is below the zero threshold")]
    ZeroState { norm: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operation needs a {expected}-mode object, got {got}")]
    ModeCount { expected: usize, got: usize },
    #[error("truncation tail mass {tail:e} exceeds tolerance {tol:e}")]
    Truncation { tail: f64, tol: f64 },
    #[error("quasiprobability series did not settle: {0}")]
    DivergentSeries(String),
    #[error("phase-space window too small: boundary mass {mass:e}")]
    WindowTooSmall { mass: f64 },
    #[error("fidelity needs at least one pure argument")]
    BothMixed,
    #[error("state is not pure (purity {purity})")]
    NotPure { purity: f64 },
    #[error("leading coefficient {0:e} is too small")]
    DegenerateLeading(f64),
    #[error("mean photon number is zero")]
    ZeroMean,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroState { .. }
                | Error::DivergentSeries(_)
                | Error::Truncation { .. }
                | Error::WindowTooSmall { .. }
                | Error::NotPure { .. }
                | Error::ZeroMean
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
