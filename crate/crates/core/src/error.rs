//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no amplification gap: v = {v} but rho*d = {rho_d}; need v < rho*d")]
    NoAmplificationGap { v: u64, rho_d: f64 },

    #[error(
        "infeasible subset count: t = {t}, u = {u}, estimated {estimated_bytes} bytes \
         exceeds budget of {budget_bytes} bytes"
    )]
    InfeasibleSubsetCount {
        t: String,
        u: String,
        estimated_bytes: String,
        budget_bytes: u64,
    },

    #[error("format error at byte {offset}: {what}")]
    Format { offset: u64, what: String },

    #[error("insufficient randomness: needed {needed} bits, harvested {available}")]
    InsufficientRandomness { needed: u64, available: u64 },

    #[error("backend refused: {0}")]
    BackendRefused(String),

    #[error("malformed hash seed: {0}")]
    MalformedSeed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
