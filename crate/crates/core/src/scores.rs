//! Sign-weighted moment matrices and the exact group-pair score matrix.
//!
//! For a partition of each side into `h` groups and a ±1 sign per element,
//! the moment matrix holds `U[i][s] = Σ_{x ∈ group i} sign(x)·x_{M_s}` over
//! all enumerated subsets `M_s`. The score of a group pair is
//! `C[i][j] = Σ_s c_s·U[i][s]·W[j][s]`, i.e. `C = U·Vᵀ` for the
//! coefficient-scaled B-side matrix `V[j][s] = c_s·W[j][s]`.
//!
//! Three interchangeable exact backends compute `C`: an arbitrary-precision
//! cubic product, a guarded fixed-width cubic path, and Strassen over `i128`.
//! The fixed-width path additionally narrows to `i32`/`i64` lanes when a
//! Cauchy–Schwarz certificate computed from the actual matrices proves that
//! no intermediate value can overflow; the certificate bounds the sum of
//! absolute terms, so any accumulation order is safe.

use crate::error::Error;
use crate::matrix::{strassen_depth, Matrix};
use crate::multilinear::{split_symmetric_difference, CoeffTable, SubsetIndex};
use crate::partition::Grouping;
use crate::vectors::SignVector;
use crate::Big;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Exact group-pair scores `C_{i,j}`.
pub type ScoreMatrix = Matrix<Big>;

/// Pairwise-independent ±1 assignment for both sides.
///
/// The sign of an element is `(−1)^(⟨r, key⟩ ⊕ b)` over GF(2), where the key
/// is the element's index (A side) or `n_a +` index (B side). Distinct keys
/// give pairwise-independent signs, and the whole assignment costs
/// `⌈log₂(n_a+n_b)⌉ + 1` random bits, which is what lets the deterministic
/// variant feed it from a harvested bit pool.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignAssignment {
    a: Vec<i8>,
    b: Vec<i8>,
}

impl SignAssignment {
    /// Key width for a joint domain of `n_a + n_b` elements.
    pub fn key_bits(n_a: usize, n_b: usize) -> u32 {
        crate::partition::key_bits(n_a + n_b)
    }

    /// Random bits consumed per assignment: key width plus one offset bit.
    pub fn bit_budget(n_a: usize, n_b: usize) -> u64 {
        Self::key_bits(n_a, n_b) as u64 + 1
    }

    /// Builds the assignment from an explicit GF(2) row and offset bit.
    pub fn from_bits(row: u64, offset: bool, n_a: usize, n_b: usize) -> Self {
        let sign = |key: usize| -> i8 {
            let parity = ((row & key as u64).count_ones() & 1) as u8 ^ offset as u8;
            if parity == 0 {
                1
            } else {
                -1
            }
        };
        Self {
            a: (0..n_a).map(sign).collect(),
            b: (0..n_b).map(|i| sign(n_a + i)).collect(),
        }
    }

    pub fn random<R: Rng>(rng: &mut R, n_a: usize, n_b: usize) -> Self {
        let kb = Self::key_bits(n_a, n_b);
        let mask = if kb == 64 { !0 } else { (1u64 << kb) - 1 };
        let row = rng.gen::<u64>() & mask;
        let offset = rng.gen::<bool>();
        Self::from_bits(row, offset, n_a, n_b)
    }

    pub fn a(&self) -> &[i8] {
        &self.a
    }

    pub fn b(&self) -> &[i8] {
        &self.b
    }

    /// A-side signs all scaled by −1 (used by the symmetry tests).
    pub fn negate_a(&self) -> Self {
        Self {
            a: self.a.iter().map(|s| -s).collect(),
            b: self.b.clone(),
        }
    }
}

/// Exact integer moment matrix, `h` group rows by `t` subset columns.
///
/// Entries are bounded by the group size, so 32 bits always suffice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i32>,
}

impl MomentMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, s: usize) -> i32 {
        self.data[i * self.cols + s]
    }

    pub fn row(&self, i: usize) -> &[i32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn max_abs(&self) -> i64 {
        self.data.iter().map(|&v| (v as i64).abs()).max().unwrap_or(0)
    }
}

/// Direct triple loop over (group, member, subset). The reference moment
/// builder the faster paths are tested against.
pub fn build_moments_naive(
    grouping: &Grouping,
    vectors: &[SignVector],
    signs: &[i8],
    idx: &SubsetIndex,
) -> MomentMatrix {
    let h = grouping.group_count();
    let t = idx.total();
    let mut data = vec![0i32; h * t];
    for (gi, members) in grouping.groups().iter().enumerate() {
        let row = &mut data[gi * t..(gi + 1) * t];
        for &x in members {
            let s = signs[x as usize] as i32;
            let v = &vectors[x as usize];
            idx.for_each(|rank, subset| {
                row[rank] += s * v.subset_product(subset).expect("index in range");
            });
        }
    }
    MomentMatrix {
        rows: h,
        cols: t,
        data,
    }
}

/// Moment builder via the symmetric-difference trick: for each group, form
/// `L[s][x] = x_{N_s}` and `L̃[s][x] = sign(x)·x_{N_s}` over the half-size
/// family, compute `P = L·L̃ᵀ`, and read `U[i][s]` at the canonical split
/// ranks of `M_s` (since `P[s][s'] = Σ_x sign(x)·x_{N_s ⊕ N_s'}`).
pub fn build_moments_fast(
    grouping: &Grouping,
    vectors: &[SignVector],
    signs: &[i8],
    idx: &SubsetIndex,
    half_idx: &SubsetIndex,
) -> MomentMatrix {
    let h = grouping.group_count();
    let t = idx.total();
    let u = half_idx.total();
    let mut data = vec![0i32; h * t];

    // The split ranks depend only on the enumeration, not the group.
    let mut splits = Vec::with_capacity(t);
    idx.for_each(|_, subset| {
        splits.push(split_symmetric_difference(subset, half_idx));
    });

    for (gi, members) in grouping.groups().iter().enumerate() {
        let g = members.len();
        if g == 0 {
            continue;
        }
        let mut l = Matrix::<i64>::zeros(u, g);
        let mut lt = Matrix::<i64>::zeros(u, g);
        half_idx.for_each(|rank, subset| {
            for (col, &x) in members.iter().enumerate() {
                let p = vectors[x as usize]
                    .subset_product(subset)
                    .expect("index in range") as i64;
                *l.at_mut(rank, col) = p;
                *lt.at_mut(rank, col) = signs[x as usize] as i64 * p;
            }
        });
        let p = l.mul_transposed(&lt); // u×u, P[s][s'] = Σ_x sign·x_{N_s ⊕ N_s'}
        let row = &mut data[gi * t..(gi + 1) * t];
        for (rank, &(ra, rb)) in splits.iter().enumerate() {
            row[rank] = *p.at(ra, rb) as i32;
        }
    }
    MomentMatrix {
        rows: h,
        cols: t,
        data,
    }
}

/// Bit-packed table of subset products, one row per element.
///
/// The products `x_{M_s}` do not depend on signs or partition, so the
/// detector builds this once per run and re-derives moment matrices from it
/// on every repetition with plain signed bit-sums.
pub struct SubsetProductCache {
    n: usize,
    t: usize,
    words_per_row: usize,
    /// bit = 1 ↔ product +1
    bits: Vec<u64>,
}

impl SubsetProductCache {
    pub fn build(vectors: &[SignVector], idx: &SubsetIndex) -> Self {
        let n = vectors.len();
        let t = idx.total();
        let wpr = t.div_ceil(64);
        let mut bits = vec![0u64; n * wpr];
        let d = idx.dim();
        let mask_words = d.div_ceil(64);
        let mut mask = vec![0u64; mask_words];
        idx.for_each(|rank, subset| {
            for w in mask.iter_mut() {
                *w = 0;
            }
            for &i in subset {
                mask[i / 64] |= 1 << (i % 64);
            }
            let word = rank / 64;
            let bit = rank % 64;
            for (x, v) in vectors.iter().enumerate() {
                if v.masked_product(&mask) == 1 {
                    bits[x * wpr + word] |= 1 << bit;
                }
            }
        });
        Self {
            n,
            t,
            words_per_row: wpr,
            bits,
        }
    }

    pub fn total(&self) -> usize {
        self.t
    }

    fn row(&self, x: usize) -> &[u64] {
        &self.bits[x * self.words_per_row..(x + 1) * self.words_per_row]
    }

    /// Moment matrix from cached products; equals [`build_moments_naive`].
    pub fn moments(&self, grouping: &Grouping, signs: &[i8]) -> MomentMatrix {
        assert_eq!(grouping.len(), self.n);
        let h = grouping.group_count();
        let t = self.t;
        let mut data = vec![0i32; h * t];
        for (gi, members) in grouping.groups().iter().enumerate() {
            let row = &mut data[gi * t..(gi + 1) * t];
            for &x in members {
                // Folding the sign into the bits turns the update into
                // "+1 where bit set, −1 where clear" uniformly.
                let flip = if signs[x as usize] < 0 { !0u64 } else { 0u64 };
                for (wi, &w) in self.row(x as usize).iter().enumerate() {
                    let w = w ^ flip;
                    let base = wi * 64;
                    let lanes = 64.min(t - base);
                    let out = &mut row[base..base + lanes];
                    for (b, slot) in out.iter_mut().enumerate() {
                        *slot += (((w >> b) & 1) as i32) * 2 - 1;
                    }
                }
            }
        }
        MomentMatrix {
            rows: h,
            cols: t,
            data,
        }
    }
}

/// Exact matrix-product backend for the score computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatmulBackend {
    /// Arbitrary-precision cubic product; never refuses.
    BigCubic,
    /// Fixed-width cubic product, guarded by `t·g²·c_max < 2¹²⁷`; lanes
    /// narrow to 32/64 bits when the data-derived certificate allows.
    WideCubic,
    /// Strassen recursion over `i128`, guard widened by the recursion's
    /// `4^depth` growth factor.
    WideStrassen,
}

/// What the score computation actually did.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ScoreDiagnostics {
    pub backend: String,
    /// Lane width used by the fixed-width paths.
    pub width_bits: Option<u32>,
    /// Set when a guarded backend refused and the caller fell back.
    pub fell_back: bool,
    /// log₂ of the a-priori bound `t·g_max²·c_max`.
    pub guard_bound_log2: f64,
}

fn spec_guard_bound(u: &MomentMatrix, w: &MomentMatrix, coeffs: &CoeffTable) -> Big {
    let t = Big::from(u.cols() as u64);
    let gmax = Big::from(u.max_abs().max(1)) * Big::from(w.max_abs().max(1));
    let c_max = coeffs.coeffs().iter().map(|c| c.abs()).max().unwrap_or_else(Big::one);
    t * gmax * c_max
}

/// `max_i Σ_s c_s·U[i][s]²`, exact. By Cauchy–Schwarz (with the non-negative
/// `c_s` as weights), `Σ_s c_s·|U[i][s]|·|W[j][s]| ≤ √(cert_u)·√(cert_w)`,
/// which bounds every partial sum of the score dot product.
fn cs_certificate(m: &MomentMatrix, coeffs: &CoeffTable, offsets: &[usize]) -> Big {
    let mut worst = Big::zero();
    for i in 0..m.rows() {
        let row = m.row(i);
        let mut total = Big::zero();
        for size in 0..offsets.len() - 1 {
            let q = coeffs.coeff(size);
            if q.is_zero() {
                continue;
            }
            let mut block_sq: u128 = 0;
            for &v in &row[offsets[size]..offsets[size + 1]] {
                block_sq += (v as i64 * v as i64) as u128;
            }
            if block_sq != 0 {
                total += q * Big::from(block_sq);
            }
        }
        if total > worst {
            worst = total;
        }
    }
    worst
}

trait LaneInt: Copy + Send + Sync {
    fn max_big() -> Big;
    fn from_i128(v: i128) -> Self;
    fn to_big(self) -> Big;
    fn mul_add_dot(a: &[Self], b: &[Self]) -> Self;
}

macro_rules! lane_int {
    ($ty:ty, $bits:expr) => {
        impl LaneInt for $ty {
            fn max_big() -> Big {
                Big::from(<$ty>::MAX)
            }
            fn from_i128(v: i128) -> Self {
                v as $ty
            }
            fn to_big(self) -> Big {
                Big::from(self)
            }
            #[inline]
            fn mul_add_dot(a: &[Self], b: &[Self]) -> Self {
                debug_assert_eq!(a.len(), b.len());
                let mut acc: $ty = 0;
                for (x, y) in a.iter().zip(b) {
                    acc += x * y;
                }
                acc
            }
        }
    };
}

lane_int!(i32, 32);
lane_int!(i64, 64);
lane_int!(i128, 128);

/// Checks the three overflow conditions for lane type `L`:
/// coefficients fit, scaled entries fit, and the CS-certified score bound
/// (which also bounds every partial sum) fits.
fn lane_certified<L: LaneInt>(
    c_max: &Big,
    gmax_u: i64,
    cert_u: &Big,
    cert_w: &Big,
) -> bool {
    let max = L::max_big();
    if c_max > &max {
        return false;
    }
    if c_max * gmax_u > max {
        return false;
    }
    cert_u * cert_w <= &max * &max
}

fn run_lane<L: LaneInt>(
    u: &MomentMatrix,
    w: &MomentMatrix,
    coeffs: &CoeffTable,
    offsets: &[usize],
) -> ScoreMatrix {
    let t = u.cols();
    let q: Vec<i128> = coeffs
        .coeffs()
        .iter()
        .map(|c| c.to_i128().expect("certified to fit"))
        .collect();
    // B side once, scaled A row per i.
    let w_flat: Vec<L> = w.data.iter().map(|&v| L::from_i128(v as i128)).collect();
    let mut scaled: Vec<L> = vec![L::from_i128(0); t];
    let mut out = Matrix::<Big>::zeros(u.rows(), w.rows());
    for i in 0..u.rows() {
        let urow = u.row(i);
        for size in 0..offsets.len() - 1 {
            let qm = q[size];
            for s in offsets[size]..offsets[size + 1] {
                scaled[s] = L::from_i128(qm * urow[s] as i128);
            }
        }
        for j in 0..w.rows() {
            let acc = L::mul_add_dot(&scaled, &w_flat[j * t..(j + 1) * t]);
            *out.at_mut(i, j) = acc.to_big();
        }
    }
    out
}

/// Computes `C = U·Vᵀ` (with `V[j][s] = c_s·W[j][s]`) using `backend`.
///
/// The result is exact and identical across backends. Guarded backends
/// return [`Error::BackendRefused`] when their a-priori bound does not
/// certify; [`score_matrix_auto`] handles the fallback.
pub fn score_matrix(
    u: &MomentMatrix,
    w: &MomentMatrix,
    coeffs: &CoeffTable,
    idx: &SubsetIndex,
    backend: MatmulBackend,
) -> Result<(ScoreMatrix, ScoreDiagnostics), Error> {
    assert_eq!(u.cols(), idx.total(), "moment width must match the enumeration");
    assert_eq!(w.cols(), idx.total());
    // Subsets larger than d do not exist, so the enumeration caps there even
    // when the polynomial degree exceeds the dimension.
    assert_eq!(idx.max_size(), coeffs.degree().min(idx.dim()));
    let offsets = idx.size_offsets();
    let guard = spec_guard_bound(u, w, coeffs);
    let guard_log2 = big_log2(&guard);
    let limit = Big::one() << 127u32;

    match backend {
        MatmulBackend::BigCubic => {
            let u_big = big_matrix(u, None, offsets);
            let v_big = big_matrix(w, Some(coeffs), offsets);
            let c = u_big.mul_transposed(&v_big);
            Ok((
                c,
                ScoreDiagnostics {
                    backend: "big-cubic".into(),
                    width_bits: None,
                    fell_back: false,
                    guard_bound_log2: guard_log2,
                },
            ))
        }
        MatmulBackend::WideCubic => {
            if guard >= limit {
                return Err(Error::BackendRefused(format!(
                    "wide-cubic: t·g²·c_max has log2 = {guard_log2:.1} ≥ 127"
                )));
            }
            let c_max = coeffs
                .coeffs()
                .iter()
                .map(|c| c.abs())
                .max()
                .unwrap_or_else(Big::one);
            let cert_u = cs_certificate(u, coeffs, offsets);
            let cert_w = cs_certificate(w, coeffs, offsets);
            let gmax_u = u.max_abs().max(1);
            let (c, width) = if lane_certified::<i32>(&c_max, gmax_u, &cert_u, &cert_w) {
                (run_lane::<i32>(u, w, coeffs, offsets), 32)
            } else if lane_certified::<i64>(&c_max, gmax_u, &cert_u, &cert_w) {
                (run_lane::<i64>(u, w, coeffs, offsets), 64)
            } else {
                (run_lane::<i128>(u, w, coeffs, offsets), 128)
            };
            Ok((
                c,
                ScoreDiagnostics {
                    backend: "wide-cubic".into(),
                    width_bits: Some(width),
                    fell_back: false,
                    guard_bound_log2: guard_log2,
                },
            ))
        }
        MatmulBackend::WideStrassen => {
            const CUTOFF: usize = 64;
            let depth = strassen_depth(u.rows(), u.cols(), w.rows(), CUTOFF);
            // Strassen's intermediate sums can exceed the naive bound by
            // 4^depth, so widen the guard accordingly.
            let grown = &guard << (2 * depth);
            if grown >= limit {
                return Err(Error::BackendRefused(format!(
                    "strassen: guard with 4^{depth} growth has log2 = {:.1} ≥ 127",
                    big_log2(&grown)
                )));
            }
            let u_wide = wide_matrix(u, None, offsets);
            let v_wide = wide_matrix(w, Some(coeffs), offsets);
            let c = u_wide.mul_strassen(&v_wide.transpose(), CUTOFF);
            Ok((
                c.map(|v| Big::from(*v)),
                ScoreDiagnostics {
                    backend: "wide-strassen".into(),
                    width_bits: Some(128),
                    fell_back: false,
                    guard_bound_log2: guard_log2,
                },
            ))
        }
    }
}

/// `backend` with automatic fallback to the arbitrary-precision path when a
/// guarded backend refuses; the fallback is recorded in the diagnostics.
pub fn score_matrix_auto(
    u: &MomentMatrix,
    w: &MomentMatrix,
    coeffs: &CoeffTable,
    idx: &SubsetIndex,
    backend: MatmulBackend,
) -> (ScoreMatrix, ScoreDiagnostics) {
    match score_matrix(u, w, coeffs, idx, backend) {
        Ok(out) => out,
        Err(_) => {
            let (c, mut diag) =
                score_matrix(u, w, coeffs, idx, MatmulBackend::BigCubic).expect("big never refuses");
            diag.fell_back = true;
            (c, diag)
        }
    }
}

fn big_matrix(m: &MomentMatrix, scale: Option<&CoeffTable>, offsets: &[usize]) -> Matrix<Big> {
    Matrix::from_fn(m.rows(), m.cols(), |i, s| {
        let v = Big::from(m.at(i, s));
        match scale {
            None => v,
            Some(c) => {
                let size = offsets.partition_point(|&o| o <= s) - 1;
                v * c.coeff(size)
            }
        }
    })
}

fn wide_matrix(m: &MomentMatrix, scale: Option<&CoeffTable>, offsets: &[usize]) -> Matrix<i128> {
    Matrix::from_fn(m.rows(), m.cols(), |i, s| {
        let v = m.at(i, s) as i128;
        match scale {
            None => v,
            Some(c) => {
                let size = offsets.partition_point(|&o| o <= s) - 1;
                v * c.coeff(size).to_i128().expect("guarded")
            }
        }
    })
}

fn big_log2(v: &Big) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    // Leading 53 bits give the mantissa; enough precision for diagnostics.
    let shift = bits.saturating_sub(53);
    let head = (v.abs() >> shift).to_f64().unwrap_or(f64::MAX);
    head.log2() + shift as f64
}

/// The per-cell definition evaluated directly:
/// `C[i][j] = Σ_{x ∈ A_i} Σ_{y ∈ B_j} sign(x)·sign(y)·⟨x, y⟩^r`.
/// Quadratic in the group sizes; the independent oracle for the moment path.
pub fn score_matrix_reference(
    grouping_a: &Grouping,
    grouping_b: &Grouping,
    vectors_a: &[SignVector],
    vectors_b: &[SignVector],
    signs: &SignAssignment,
    r: u32,
) -> ScoreMatrix {
    let h_a = grouping_a.group_count();
    let h_b = grouping_b.group_count();
    let mut out = Matrix::<Big>::zeros(h_a, h_b);
    for (i, ga) in grouping_a.groups().iter().enumerate() {
        for (j, gb) in grouping_b.groups().iter().enumerate() {
            let mut acc = Big::zero();
            for &x in ga {
                for &y in gb {
                    let ip = vectors_a[x as usize]
                        .inner_product(&vectors_b[y as usize])
                        .expect("equal dims");
                    let term = Big::from(ip).pow(r)
                        * (signs.a[x as usize] as i64 * signs.b[y as usize] as i64);
                    acc += term;
                }
            }
            *out.at_mut(i, j) = acc;
        }
    }
    out
}
