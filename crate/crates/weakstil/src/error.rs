use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user input: malformed flags, out-of-range values, bad bags.
    #[error("validation error: {0}")]
    Validation(String),

    /// Structural problem in a binary or CSV input file.
    #[error("{msg} at offset {offset}")]
    Format { msg: String, offset: u64 },

    /// A metric has no defined value for the given inputs.
    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),

    #[error("non-finite gradient at parameter {index}")]
    NonFiniteGradient { index: usize },

    #[error("non-finite loss on slide {slide_id}")]
    NonFiniteLoss { slide_id: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Runtime(String),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn format(msg: impl Into<String>, offset: u64) -> Self {
        Error::Format { msg: msg.into(), offset }
    }

    /// Process exit status: 1 for rejected input, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::UndefinedMetric(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
