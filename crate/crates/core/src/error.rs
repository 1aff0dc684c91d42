use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The trajectory left the bounded region (|x_i| > 1e12 or non-finite).
    #[error("trajectory diverged at step {step}")]
    Divergence { step: u64 },

    #[error("numerical collapse: {0}")]
    NumericalCollapse(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("key parse error at token {index}: {reason}")]
    KeyParse { index: usize, reason: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("envelope format error in field `{field}`: {reason}")]
    Format { field: &'static str, reason: String },

    #[error("{test} requires at least {min} bits, got {got}")]
    SequenceTooShort {
        test: &'static str,
        min: usize,
        got: usize,
    },

    #[error("hex parse error at token {index}: {reason}")]
    HexParse { index: usize, reason: String },

    #[error("{format} image error: {reason}")]
    Image { format: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (divergence, collapse, degenerate data).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. }
                | Error::NumericalCollapse(_)
                | Error::Degenerate(_)
                | Error::Domain(_)
        )
    }
}
