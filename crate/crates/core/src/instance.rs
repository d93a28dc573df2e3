//! Planted-instance generation, ground-truth bookkeeping, and serialization.
//!
//! An [`Instance`] holds the two vector sets plus the planted pairs (if the
//! instance was generated rather than imported). Generation draws every
//! vector from its own counter-addressed stream, so the output is a pure
//! function of `(n, d, spec)` regardless of evaluation order.
//!
//! # File format (`HIP1`)
//!
//! Little-endian throughout:
//!
//! | offset            | field                                   |
//! |-------------------|-----------------------------------------|
//! | 0                 | magic `"HIP1"`                          |
//! | 4                 | `u32` version = 1                       |
//! | 8                 | `u64` n                                 |
//! | 16                | `u32` d                                 |
//! | 20                | `u32` k                                 |
//! | 24                | n rows of A, `⌈d/8⌉` bytes each         |
//! | 24 + n·rb         | n rows of B                             |
//! | 24 + 2·n·rb       | k records of `(u64 aIdx, u64 bIdx)`     |
//!
//! Row bytes are the [`SignVector`] little-endian bit packing.

use crate::error::Error;
use crate::rng::{self, streams};
use crate::vectors::SignVector;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

const MAGIC: &[u8; 4] = b"HIP1";
const VERSION: u32 = 1;

/// How a planted pair reaches the heavy threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PlantMode {
    /// Each coordinate of `b` agrees with `a` independently with probability
    /// `match_prob`; the inner product concentrates at `d·(2p−1)`.
    Agreement,
    /// Agreement sampling, re-drawn until `⟨a, b⟩ ≥ ρ·d` holds exactly.
    ExactThreshold { rho: f64 },
}

/// Recipe for the planted pairs of a generated instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub k: usize,
    /// Probability that a planted pair agrees on a coordinate; in (1/2, 1].
    pub match_prob: f64,
    pub seed: u64,
    pub mode: PlantMode,
}

impl PlantSpec {
    pub fn new(k: usize, match_prob: f64, seed: u64) -> Self {
        Self {
            k,
            match_prob,
            seed,
            mode: PlantMode::Agreement,
        }
    }
}

/// Two sets of `n` sign vectors plus the planted ground truth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    n: usize,
    d: usize,
    a: Vec<SignVector>,
    b: Vec<SignVector>,
    /// `(a index, b index)` pairs; empty when no truth is known.
    truth: Vec<(u64, u64)>,
}

impl Instance {
    pub fn new(
        a: Vec<SignVector>,
        b: Vec<SignVector>,
        truth: Vec<(u64, u64)>,
    ) -> Result<Self, Error> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::InvalidInput(format!(
                "|A| = {} and |B| = {} must be equal and positive",
                a.len(),
                b.len()
            )));
        }
        let d = a[0].dim();
        if a.iter().chain(&b).any(|v| v.dim() != d) {
            return Err(Error::InvalidInput("inconsistent vector dimensions".into()));
        }
        let n = a.len();
        let mut a_seen = std::collections::HashSet::new();
        let mut b_seen = std::collections::HashSet::new();
        for &(ai, bi) in &truth {
            if ai as usize >= n || bi as usize >= n {
                return Err(Error::InvalidInput(format!(
                    "truth pair ({ai}, {bi}) out of range for n = {n}"
                )));
            }
            if !a_seen.insert(ai) || !b_seen.insert(bi) {
                return Err(Error::InvalidInput(
                    "truth pairs must have distinct A-indices and distinct B-indices".into(),
                ));
            }
        }
        Ok(Self { n, d, a, b, truth })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn a(&self) -> &[SignVector] {
        &self.a
    }

    pub fn b(&self) -> &[SignVector] {
        &self.b
    }

    pub fn truth(&self) -> &[(u64, u64)] {
        &self.truth
    }

    pub fn has_truth(&self) -> bool {
        !self.truth.is_empty()
    }
}

/// Generates an instance: uniform background, `spec.k` planted pairs.
pub fn generate(n: usize, d: usize, spec: &PlantSpec) -> Result<Instance, Error> {
    if n < 1 || d < 1 {
        return Err(Error::InvalidInput("n and d must be at least 1".into()));
    }
    if spec.k > n {
        return Err(Error::InvalidInput(format!(
            "k = {} exceeds n = {n}",
            spec.k
        )));
    }
    if !(spec.match_prob > 0.5 && spec.match_prob <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "match_prob = {} must lie in (1/2, 1]",
            spec.match_prob
        )));
    }
    // Planted positions come from the metadata stream: k distinct indices on
    // each side, paired up in draw order.
    let mut meta = rng::stream(spec.seed, streams::INSTANCE_META);
    let a_idx = sample_distinct(n, spec.k, &mut meta);
    let b_idx = sample_distinct(n, spec.k, &mut meta);
    let mut planted_partner = vec![None; n]; // b index -> a index
    let mut truth: Vec<(u64, u64)> = Vec::with_capacity(spec.k);
    for (&ai, &bi) in a_idx.iter().zip(&b_idx) {
        planted_partner[bi] = Some(ai);
        truth.push((ai as u64, bi as u64));
    }
    truth.sort_unstable();

    let a: Vec<SignVector> = (0..n)
        .map(|i| SignVector::random(d, &mut rng::stream(spec.seed, streams::INSTANCE_A + i as u64)))
        .collect();

    let mut b = Vec::with_capacity(n);
    for j in 0..n {
        let mut vrng = rng::stream(spec.seed, streams::instance_b(n as u64, j as u64));
        let vec = match planted_partner[j] {
            None => SignVector::random(d, &mut vrng),
            Some(ai) => plant_partner(&a[ai], spec, &mut vrng)?,
        };
        b.push(vec);
    }
    Instance::new(a, b, truth)
}

/// Draws `b` correlated with `a`: each coordinate agrees with probability
/// `match_prob`. In exact-threshold mode the draw repeats until the inner
/// product clears `⌈ρd⌉`.
fn plant_partner<R: Rng>(
    a: &SignVector,
    spec: &PlantSpec,
    rng: &mut R,
) -> Result<SignVector, Error> {
    let d = a.dim();
    let threshold = match spec.mode {
        PlantMode::Agreement => i64::MIN,
        PlantMode::ExactThreshold { rho } => (rho * d as f64).ceil() as i64,
    };
    const MAX_ATTEMPTS: usize = 100_000;
    for _ in 0..MAX_ATTEMPTS {
        let signs: Vec<i8> = (0..d)
            .map(|i| {
                if rng.gen_bool(spec.match_prob) {
                    a.entry(i)
                } else {
                    -a.entry(i)
                }
            })
            .collect();
        let b = SignVector::from_signs(&signs)?;
        if a.inner_product(&b).expect("equal dims") >= threshold {
            return Ok(b);
        }
    }
    Err(Error::InvalidInput(format!(
        "exact-threshold resampling failed after {MAX_ATTEMPTS} attempts \
         (match_prob = {}, threshold = {threshold})",
        spec.match_prob
    )))
}

fn sample_distinct<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.partial_shuffle(rng, k);
    all.truncate(k);
    all
}

/// Serialized byte size of an instance.
pub fn file_size(n: usize, d: usize, k: usize) -> u64 {
    24 + 2 * n as u64 * d.div_ceil(8) as u64 + 16 * k as u64
}

/// Encodes to the `HIP1` byte layout.
pub fn to_bytes(inst: &Instance) -> Vec<u8> {
    let rb = inst.d.div_ceil(8);
    let mut out = Vec::with_capacity(file_size(inst.n, inst.d, inst.truth.len()) as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(inst.n as u64).to_le_bytes());
    out.extend_from_slice(&(inst.d as u32).to_le_bytes());
    out.extend_from_slice(&(inst.truth.len() as u32).to_le_bytes());
    for v in inst.a.iter().chain(&inst.b) {
        let bytes = v.to_bytes();
        debug_assert_eq!(bytes.len(), rb);
        out.extend_from_slice(&bytes);
    }
    for &(ai, bi) in &inst.truth {
        out.extend_from_slice(&ai.to_le_bytes());
        out.extend_from_slice(&bi.to_le_bytes());
    }
    out
}

/// Parses the `HIP1` byte layout; errors carry the offending byte offset.
pub fn from_bytes(bytes: &[u8]) -> Result<Instance, Error> {
    let need = |offset: u64, len: usize, what: &str| -> Result<(), Error> {
        if (offset as usize) + len > bytes.len() {
            Err(Error::Format {
                offset,
                what: format!("truncated: need {len} bytes for {what}"),
            })
        } else {
            Ok(())
        }
    };
    need(0, 24, "header")?;
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format {
            offset: 0,
            what: format!("bad magic {:02x?}, expected \"HIP1\"", &bytes[0..4]),
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format {
            offset: 4,
            what: format!("unsupported version {version}"),
        });
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
    let k = u32::from_le_bytes(bytes[20..24].try_into().unwrap()) as usize;
    if n == 0 || d == 0 {
        return Err(Error::Format {
            offset: 8,
            what: format!("n = {n}, d = {d}: both must be positive"),
        });
    }
    let rb = d.div_ceil(8);
    let mut offset = 24u64;
    let read_side = |offset: &mut u64| -> Result<Vec<SignVector>, Error> {
        let mut side = Vec::with_capacity(n);
        for row in 0..n {
            need(*offset, rb, "vector row")?;
            let start = *offset as usize;
            let v = SignVector::from_bytes(d, &bytes[start..start + rb]).map_err(|e| {
                Error::Format {
                    offset: *offset,
                    what: format!("row {row}: {e}"),
                }
            })?;
            side.push(v);
            *offset += rb as u64;
        }
        Ok(side)
    };
    let a = read_side(&mut offset)?;
    let b = read_side(&mut offset)?;
    let mut truth = Vec::with_capacity(k);
    for rec in 0..k {
        need(offset, 16, "truth record")?;
        let s = offset as usize;
        let ai = u64::from_le_bytes(bytes[s..s + 8].try_into().unwrap());
        let bi = u64::from_le_bytes(bytes[s + 8..s + 16].try_into().unwrap());
        if ai as usize >= n || bi as usize >= n {
            return Err(Error::Format {
                offset,
                what: format!("truth record {rec}: ({ai}, {bi}) out of range"),
            });
        }
        truth.push((ai, bi));
        offset += 16;
    }
    if (offset as usize) != bytes.len() {
        return Err(Error::Format {
            offset,
            what: format!("{} trailing bytes", bytes.len() - offset as usize),
        });
    }
    Instance::new(a, b, truth).map_err(|e| Error::Format {
        offset: 24,
        what: e.to_string(),
    })
}

pub fn save(inst: &Instance, path: &Path) -> Result<(), Error> {
    std::fs::write(path, to_bytes(inst))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Instance, Error> {
    from_bytes(&std::fs::read(path)?)
}

/// Bench-bookkeeping sidecar for a saved instance file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub seed: Option<u64>,
    pub match_prob: Option<f64>,
    pub sha256: String,
}

impl Manifest {
    pub fn describe(inst: &Instance, spec: Option<&PlantSpec>, file_bytes: &[u8]) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(file_bytes);
        Self {
            n: inst.n(),
            d: inst.d(),
            k: inst.truth().len(),
            seed: spec.map(|s| s.seed),
            match_prob: spec.map(|s| s.match_prob),
            sha256: format!("{:x}", hasher.finalize()),
        }
    }
}
