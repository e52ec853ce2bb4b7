use thiserror::Error;

/// Errors produced by the decoder toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid code parameters: {0}")]
    InvalidCode(String),

    #[error("alist parse error at line {line}: {msg}")]
    Alist { line: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("code dimension k = {k} is too large for exhaustive enumeration (limit {limit}); use OSD instead")]
    TooManyCodewords { k: usize, limit: usize },

    #[error("automorphism group unknown: {0}")]
    UnknownAutomorphisms(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("non-finite gradient for weight {weight} (example {example})")]
    NonFiniteGradient { weight: usize, example: usize },

    #[error("training diverged at epoch {epoch}: {reason}")]
    Diverged {
        epoch: usize,
        reason: String,
        /// Weights after the last epoch that finished with a finite loss.
        last_good: Box<crate::decoder::DecoderParams>,
    },

    #[error("decoder {decoder} failed at {snr_db} dB (seed {seed}, stream {stream}): {source}")]
    Frame {
        decoder: String,
        snr_db: f64,
        seed: u64,
        stream: u64,
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
