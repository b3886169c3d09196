use thiserror::Error;

/// Errors produced by the library. The CLI maps these onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("{what}: projected size {projected} exceeds cap {cap}")]
    Resource { what: &'static str, projected: f64, cap: f64 },

    #[error("sequence generation failed for alpha = {alpha:?}: {reason}")]
    Generation { alpha: Vec<f64>, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("insufficient precision: {0}")]
    Precision(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate column: {0}")]
    DegenerateColumn(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn resource(what: &'static str, projected: f64, cap: f64) -> Self {
        Error::Resource { what, projected, cap }
    }

    /// True for errors that come from a size cap rather than bad input.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
