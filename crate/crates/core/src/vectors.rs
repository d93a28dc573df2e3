//! Packed ±1 vectors and exact inner-product arithmetic.
//!
//! A [`SignVector`] stores one bit per coordinate (bit 1 ↔ entry `+1`,
//! bit 0 ↔ entry `−1`), packed little-endian into `u64` words. The inner
//! product of two vectors of dimension `d` is recovered exactly from the
//! Hamming distance of their bit patterns: `⟨x, y⟩ = d − 2·hamming(x, y)`,
//! one XOR + popcount per word.

use crate::error::Error;
use rand::Rng;
use std::fmt;

/// A `d`-dimensional vector over `{−1, +1}`, one bit per coordinate.
///
/// Padding bits beyond `d` are always zero, so equality and hashing on the
/// packed words agree with coordinate-wise equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignVector {
    dim: usize,
    words: Vec<u64>,
}

impl SignVector {
    /// All-`+1` vector (all bits set).
    pub fn ones(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        let mut v = Self {
            dim,
            words: vec![!0u64; dim.div_ceil(64)],
        };
        v.clear_padding();
        v
    }

    /// All-`−1` vector (all bits clear).
    pub fn neg_ones(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self {
            dim,
            words: vec![0u64; dim.div_ceil(64)],
        }
    }

    /// Builds a vector from `+1`/`−1` entries.
    pub fn from_signs(signs: &[i8]) -> Result<Self, Error> {
        if signs.is_empty() {
            return Err(Error::InvalidInput("empty sign vector".into()));
        }
        let mut v = Self::neg_ones(signs.len());
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => v.words[i / 64] |= 1u64 << (i % 64),
                -1 => {}
                other => {
                    return Err(Error::InvalidInput(format!(
                        "entry {i} is {other}, expected +1 or -1"
                    )))
                }
            }
        }
        Ok(v)
    }

    /// Uniform random vector drawn from `rng`.
    pub fn random<R: Rng>(dim: usize, rng: &mut R) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        let mut v = Self {
            dim,
            words: (0..dim.div_ceil(64)).map(|_| rng.gen::<u64>()).collect(),
        };
        v.clear_padding();
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Packed words, little-endian bit order; padding bits are zero.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Entry `i` as `+1` or `−1`. Panics if `i >= dim`.
    #[inline]
    pub fn entry(&self, i: usize) -> i8 {
        assert!(i < self.dim, "entry {} out of range for dim {}", i, self.dim);
        if (self.words[i / 64] >> (i % 64)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// Coordinate-wise negation.
    pub fn negate(&self) -> Self {
        let mut v = Self {
            dim: self.dim,
            words: self.words.iter().map(|w| !w).collect(),
        };
        v.clear_padding();
        v
    }

    /// Number of coordinates where `self` and `other` differ.
    #[inline]
    pub fn hamming(&self, other: &Self) -> Result<u32, Error> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum())
    }

    /// Exact inner product `Σᵢ xᵢ·yᵢ = d − 2·hamming(x, y)`.
    ///
    /// The result is in `[−d, d]` and has the same parity as `d`.
    #[inline]
    pub fn inner_product(&self, other: &Self) -> Result<i64, Error> {
        let ham = self.hamming(other)?;
        Ok(self.dim as i64 - 2 * ham as i64)
    }

    /// Subset product `x_M = Πᵢ∈M xᵢ ∈ {−1, +1}`; the empty product is `1`.
    pub fn subset_product(&self, subset: &[usize]) -> Result<i32, Error> {
        let mut negatives = 0u32;
        for &i in subset {
            if i >= self.dim {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    dim: self.dim,
                });
            }
            negatives += ((self.words[i / 64] >> (i % 64)) & 1) as u32 ^ 1;
        }
        Ok(if negatives % 2 == 0 { 1 } else { -1 })
    }

    /// Like [`subset_product`](Self::subset_product) for a subset given as a
    /// packed bit mask over the full dimension. The mask must not address
    /// padding bits.
    #[inline]
    pub fn masked_product(&self, mask: &[u64]) -> i32 {
        debug_assert_eq!(mask.len(), self.words.len());
        let negatives: u32 = self
            .words
            .iter()
            .zip(mask)
            .map(|(w, m)| (!w & m).count_ones())
            .sum();
        if negatives % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Serializes to exactly `⌈d/8⌉` bytes, little-endian bit order;
    /// padding bits in the last byte are zero.
    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.dim.div_ceil(8);
        (0..nbytes)
            .map(|k| (self.words[k / 8] >> (8 * (k % 8))) as u8)
            .collect()
    }

    /// Parses the [`to_bytes`](Self::to_bytes) representation.
    pub fn from_bytes(dim: usize, bytes: &[u8]) -> Result<Self, Error> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        let nbytes = dim.div_ceil(8);
        if bytes.len() != nbytes {
            return Err(Error::InvalidInput(format!(
                "expected {nbytes} bytes for dim {dim}, got {}",
                bytes.len()
            )));
        }
        let mut v = Self::neg_ones(dim);
        for (k, &b) in bytes.iter().enumerate() {
            v.words[k / 8] |= (b as u64) << (8 * (k % 8));
        }
        if dim % 8 != 0 {
            let padding = bytes[nbytes - 1] >> (dim % 8);
            if padding != 0 {
                return Err(Error::InvalidInput(format!(
                    "nonzero padding bits in final byte: {padding:#010b}"
                )));
            }
        }
        Ok(v)
    }

    fn clear_padding(&mut self) {
        if self.dim % 64 != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << (self.dim % 64)) - 1;
        }
    }
}

impl fmt::Debug for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignVector(d={}, ", self.dim)?;
        for i in 0..self.dim.min(32) {
            write!(f, "{}", if self.entry(i) == 1 { '+' } else { '-' })?;
        }
        if self.dim > 32 {
            write!(f, "…")?;
        }
        write!(f, ")")
    }
}
