use thiserror::Error;

/// Errors produced anywhere in the simulation and learning stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),

    #[error("length error: expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },

    #[error("pairing error: {0}")]
    Pairing(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("singular kernel: {0}")]
    SingularKernel(String),

    #[error("unsupported version {found}, expected {expected}")]
    Version { expected: u32, found: u32 },

    #[error("corrupt data: {0}")]
    Corruption(String),

    #[error("architecture error: {0}")]
    Architecture(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("training diverged at epoch {epoch}: {reason}")]
    Divergence { epoch: usize, reason: String },

    #[error("split error: {0}")]
    Split(String),

    #[error("sample for digit {digit} at sweep point {sweep}: {source}")]
    Sample {
        digit: usize,
        sweep: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
