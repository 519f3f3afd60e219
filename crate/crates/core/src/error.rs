use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chain needs at least 2 sites, got {0}")]
    TooFewSites(usize),

    #[error("exchange strength must be finite and nonzero, got {0}")]
    BadExchange(f64),

    #[error("time must be finite, got {0}")]
    NonFiniteTime(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state is not normalized: |psi|^2 = {0}")]
    NotNormalized(f64),

    #[error("invalid site pair ({i}, {j}) for a chain of {n} sites")]
    BadPair { i: usize, j: usize, n: usize },

    #[error("state carries weight {0:e} outside the one-down-spin sector")]
    OutsideSector(f64),

    #[error("density matrix violates the fixed-magnetization zeros (max |E,F,G,I,J| = {0:e})")]
    NotInSector(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("eigen-solver did not converge")]
    NoConvergence,

    #[error("oracle is limited to 2..={max} sites, got {got}")]
    OracleSize { got: usize, max: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("entanglement front not detected: {0}")]
    FrontNotDetected(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
