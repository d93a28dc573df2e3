//! Pairwise-independent assignment of element indices into `h` groups.
//!
//! The hash family is affine over GF(2): a key (the element's index, written
//! as `⌈log₂ n⌉` bits) is multiplied by a random bit matrix and offset by a
//! random bit vector. For any two distinct keys the pair of outputs is uniform
//! over `[h]²`, so distinct keys collide with probability exactly `1/h`.
//! Elements are hashed by index rather than by vector content so duplicate
//! vectors still count as distinct keys.

use crate::error::Error;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Seed of one affine GF(2) hash function `[n] → [h]`.
///
/// `h` must be a power of two; the seed holds `log₂ h` matrix rows of
/// `⌈log₂ n⌉` bits each plus `log₂ h` offset bits, exactly
/// `log₂(h)·(⌈log₂ n⌉ + 1)` bits in total.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashSeed {
    rows: Vec<u64>,
    offset: u64,
    key_bits: u32,
    out_bits: u32,
}

/// `⌈log₂ n⌉`, with a floor of 1 so degenerate domains still have a key bit.
pub fn key_bits(n: usize) -> u32 {
    ((n.max(2) - 1).ilog2() + 1).max(1)
}

/// Total seed bits for one hash function `[n] → [h]`.
pub fn seed_bits(n: usize, h: usize) -> u64 {
    let out = h.trailing_zeros() as u64;
    out * (key_bits(n) as u64 + 1)
}

impl HashSeed {
    /// Draws a uniform seed for a function `[n] → [h]`.
    pub fn random<R: Rng>(n: usize, h: usize, rng: &mut R) -> Result<Self, Error> {
        if !h.is_power_of_two() {
            return Err(Error::MalformedSeed(format!("h = {h} is not a power of two")));
        }
        let kb = key_bits(n);
        let ob = h.trailing_zeros();
        let mask = if kb == 64 { !0u64 } else { (1u64 << kb) - 1 };
        let rows = (0..ob).map(|_| rng.gen::<u64>() & mask).collect();
        let offset = if ob == 0 {
            0
        } else {
            rng.gen::<u64>() & ((1u64 << ob) - 1)
        };
        Ok(Self {
            rows,
            offset,
            key_bits: kb,
            out_bits: ob,
        })
    }

    /// Builds a seed from explicit rows and offset (used by the deterministic
    /// detector, which feeds bits harvested from the input).
    pub fn from_rows(
        n: usize,
        h: usize,
        rows: Vec<u64>,
        offset: u64,
    ) -> Result<Self, Error> {
        if !h.is_power_of_two() {
            return Err(Error::MalformedSeed(format!("h = {h} is not a power of two")));
        }
        let kb = key_bits(n);
        let ob = h.trailing_zeros();
        if rows.len() != ob as usize {
            return Err(Error::MalformedSeed(format!(
                "expected {ob} rows, got {}",
                rows.len()
            )));
        }
        let mask = if kb == 64 { !0u64 } else { (1u64 << kb) - 1 };
        if rows.iter().any(|r| r & !mask != 0) {
            return Err(Error::MalformedSeed(format!(
                "row uses bits beyond the {kb}-bit key"
            )));
        }
        if ob < 64 && offset >> ob != 0 {
            return Err(Error::MalformedSeed("offset wider than output".into()));
        }
        Ok(Self {
            rows,
            offset,
            key_bits: kb,
            out_bits: ob,
        })
    }

    /// Group of `key`: `M·bin(key) + offset` over GF(2).
    #[inline]
    pub fn group(&self, key: usize) -> usize {
        let k = key as u64;
        let mut out = self.offset;
        for (b, row) in self.rows.iter().enumerate() {
            out ^= (((row & k).count_ones() as u64) & 1) << b;
        }
        out as usize
    }

    pub fn output_groups(&self) -> usize {
        1usize << self.out_bits
    }

    fn expected_key_bits(&self, n: usize) -> bool {
        self.key_bits == key_bits(n)
    }
}

/// A partition of `[n]` into `h` groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grouping {
    assignment: Vec<u32>,
    groups: Vec<Vec<u32>>,
}

impl Grouping {
    pub fn group_of(&self, index: usize) -> usize {
        self.assignment[index] as usize
    }

    pub fn groups(&self) -> &[Vec<u32>] {
        &self.groups
    }

    pub fn members(&self, group: usize) -> &[u32] {
        &self.groups[group]
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn max_group_size(&self) -> usize {
        self.groups.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Hashes indices `0..n` into `h` groups with `seed`.
pub fn assign(n: usize, h: usize, seed: &HashSeed) -> Result<Grouping, Error> {
    if seed.output_groups() != h {
        return Err(Error::MalformedSeed(format!(
            "seed targets {} groups, expected {h}",
            seed.output_groups()
        )));
    }
    if !seed.expected_key_bits(n) {
        return Err(Error::MalformedSeed(format!(
            "seed built for a different key width than n = {n}"
        )));
    }
    let mut assignment = Vec::with_capacity(n);
    let mut groups = vec![Vec::new(); h];
    for i in 0..n {
        let g = seed.group(i);
        assignment.push(g as u32);
        groups[g].push(i as u32);
    }
    Ok(Grouping { assignment, groups })
}

/// Fraction of trials in which two distinct planted pairs land in the same
/// `(A-group, B-group)` cell. `truth` holds `(a index, b index)` pairs.
pub fn planted_collision_rate(
    trials: &[(Grouping, Grouping)],
    truth: &[(u64, u64)],
) -> f64 {
    if trials.is_empty() || truth.len() < 2 {
        return 0.0;
    }
    let mut collided = 0usize;
    for (ga, gb) in trials {
        let cells: Vec<(usize, usize)> = truth
            .iter()
            .map(|&(a, b)| (ga.group_of(a as usize), gb.group_of(b as usize)))
            .collect();
        let mut sorted = cells.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() < cells.len() {
            collided += 1;
        }
    }
    collided as f64 / trials.len() as f64
}
