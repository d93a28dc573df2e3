//! Heavy inner-product pair identification between two sets of sign vectors.
//!
//! Given two sets `A, B ⊂ {−1,+1}^d` of `n` vectors each, of which exactly `k`
//! pairs `(a, b) ∈ A × B` satisfy `⟨a, b⟩ ≥ ρ·d`, the detector in this crate
//! locates all `k` heavy pairs without scanning all `n²` products. It hashes
//! both sets into `h` groups, amplifies the correlated/uncorrelated gap by
//! raising inner products to the `r`-th power via a multilinearized polynomial,
//! and scores every group pair with a sign-randomized moment-matrix product.
//! Cells whose score repeatedly clears a threshold are brute-forced and every
//! candidate pair is re-verified exactly, so the output never contains a false
//! positive.
//!
//! The crate also ships the exact `O(n²)` oracle, a planted-instance generator
//! with a binary file format, a deterministic detector variant that harvests
//! its randomness from uncorrelated input vectors, and a two-layer shifted-ReLU
//! forward pass that touches only activated neurons.
//!
//! All scoring arithmetic is exact. The matrix kernels are generic over an
//! integer scalar (see [`matrix::Scalar`]); fixed-width paths are guarded by
//! a-priori bounds and fall back to arbitrary precision when the bounds do not
//! certify.

pub mod detector;
pub mod error;
pub mod instance;
pub mod matrix;
pub mod multilinear;
pub mod nn;
pub mod oracle;
pub mod params;
pub mod partition;
pub mod rng;
pub mod scores;
pub mod vectors;

pub use detector::{DetectionReport, DetectorConfig};
pub use error::Error;
pub use instance::{Instance, PlantSpec};
pub use params::Params;
pub use vectors::SignVector;

/// Widest fixed-width scalar used by the guarded score backends.
pub type Wide = i128;

/// Arbitrary-precision scalar `ScoreMatrix` entries are stored in.
pub type Big = num_bigint::BigInt;

/// Exact rational used for network output weights and forward-pass values.
pub type Rational = num_rational::BigRational;

/// Convenience alias for results carrying this crate's [`Error`].
pub type Result<T> = std::result::Result<T, Error>;
