use thiserror::Error;

/// Errors produced by the modelling, fitting and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{quantity} = {value} outside valid range [{min}, {max}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// Eigenstates could not be assigned to (m_s, m_I) manifolds.
    #[error("ambiguous state assignment (max overlap {max_overlap:.3}); eigenvalues {eigenvalues:?}")]
    AmbiguousLabeling {
        eigenvalues: Vec<f64>,
        max_overlap: f64,
    },

    #[error("rank-deficient normal equations: {0}")]
    RankDeficient(String),

    #[error("ill-conditioned problem: {0}")]
    IllConditioned(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid fit window: {0}")]
    InvalidWindow(String),

    #[error("pipeline instability: {failed} of {trials} trial fits failed")]
    PipelineInstability { failed: usize, trials: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by bad inputs rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::InvalidInput(_)
                | Error::OutOfRange { .. }
                | Error::InvalidWindow(_)
                | Error::Parse(_)
                | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}
