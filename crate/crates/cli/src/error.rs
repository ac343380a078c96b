use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qiso_core::Error),

    #[error("catalog entry '{name}' is invalid: {reason}")]
    CatalogEntryInvalid { name: String, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INVALID_INPUT: i32 = 2;
    pub const CONDITION_FAILED: i32 = 3;
    pub const SIZE_GUARD: i32 = 4;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(qiso_core::Error::SizeGuardExceeded { .. }) => exit::SIZE_GUARD,
            _ => exit::INVALID_INPUT,
        }
    }
}
