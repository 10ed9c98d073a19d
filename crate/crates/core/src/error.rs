use thiserror::Error;

/// Errors raised by the frame toolbox.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    Shape {
        context: String,
        expected: String,
        found: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("range inclusion fails: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    RangeInclusion { residual: f64, tolerance: f64 },

    #[error("operator is not positive: minimum eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("operator is singular: minimum eigenvalue {min_eigenvalue:.3e}")]
    Singular { min_eigenvalue: f64 },

    #[error("frame operator is singular (lower bound {lower:.3e}); the system is not a frame")]
    SingularFrameOperator { lower: f64 },

    #[error("hypothesis not met: {hypothesis} ({detail})")]
    HypothesisNotMet { hypothesis: String, detail: String },

    #[error("K is the zero operator; the K-frame condition is vacuous")]
    DegenerateK,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("certificate cross-check failed: {0}")]
    CertificateViolation(String),

    #[error("{path}: {message}")]
    Load { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(
        context: impl Into<String>,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        Error::Shape {
            context: context.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn hypothesis(hypothesis: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::HypothesisNotMet {
            hypothesis: hypothesis.into(),
            detail: detail.into(),
        }
    }
}
