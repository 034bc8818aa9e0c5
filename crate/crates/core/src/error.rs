use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("key material exhausted after {max_periods} periods")]
    Exhausted { max_periods: u64 },

    #[error("precomputation for period {period} was already consumed")]
    Reuse { period: u64 },

    #[error("period desynchronized: expected {expected}, got {got}")]
    Desync { expected: u64, got: u64 },

    #[error("epoch boundary violated: {0}")]
    EpochBoundary(String),

    #[error("aggregate tag verification failed")]
    AuthenticationFailed,

    #[error("malformed frame at offset {offset}: {reason}")]
    Malformed { offset: usize, reason: String },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("unknown scheme id {0:#04x}")]
    UnknownScheme(u8),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
