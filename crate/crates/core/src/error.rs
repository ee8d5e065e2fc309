use thiserror::Error;

/// Which arm of a two-group experiment an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Treatment,
    Control,
}

impl std::fmt::Display for Arm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Arm::Treatment => write!(f, "treatment"),
            Arm::Control => write!(f, "control"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate population: need at least 2 units, got {0}")]
    DegeneratePopulation(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{arm} arm has {got} units, need at least {need}")]
    InsufficientArm { arm: Arm, got: usize, need: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("enumeration of {count} assignments exceeds cap {cap}; use Monte Carlo")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("malformed contrast: {0}")]
    MalformedContrast(String),

    #[error("non-binary outcome {value} at position {index}")]
    NonBinary { index: usize, value: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
