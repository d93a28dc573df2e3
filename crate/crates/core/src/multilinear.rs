//! Subset enumeration and the multilinearization of `(z₁+⋯+z_d)^r`.
//!
//! Over ±1 inputs `z_i² = 1`, so the power polynomial collapses onto the
//! multilinear monomials `z_M = Πᵢ∈M zᵢ` with `|M| ≤ r`. The coefficient of
//! `z_M` depends only on `|M|` and `r`, which lets the whole table be computed
//! by a one-dimensional recurrence in `O(r²)` exact-integer steps instead of
//! expanding the polynomial. [`expand_symbolic`] keeps the full expansion as
//! an independent reference path.

use crate::error::Error;
use crate::vectors::SignVector;
use num_bigint::BigInt;
use num_traits::{One, Zero};

/// Default cap on the number of enumerated subsets.
pub const DEFAULT_SUBSET_LIMIT: usize = 1 << 28;

/// Enumeration of all subsets of `[d]` of size at most `max_size`, ordered by
/// cardinality ascending and lexicographically within each cardinality.
///
/// `rank` and `unrank` are mutually inverse bijections between `0..total` and
/// the subset family; `unrank(0)` is the empty set.
#[derive(Clone, Debug)]
pub struct SubsetIndex {
    d: usize,
    max_size: usize,
    total: usize,
    /// `offsets[m]` = number of subsets of size `< m`.
    offsets: Vec<usize>,
    /// `binom[a][b]` = C(a, b) for `a ≤ d`, `b ≤ max_size`.
    binom: Vec<Vec<u64>>,
}

impl SubsetIndex {
    pub fn new(d: usize, max_size: usize) -> Result<Self, Error> {
        Self::with_limit(d, max_size, DEFAULT_SUBSET_LIMIT)
    }

    /// Builds the index, rejecting families larger than `limit` subsets.
    pub fn with_limit(d: usize, max_size: usize, limit: usize) -> Result<Self, Error> {
        if max_size > d {
            return Err(Error::InvalidInput(format!(
                "max subset size {max_size} exceeds dimension {d}"
            )));
        }
        // Pascal triangle, checked: every entry is bounded by the family size,
        // so overflow implies infeasibility anyway.
        let mut binom = vec![vec![0u64; max_size + 1]; d + 1];
        for a in 0..=d {
            binom[a][0] = 1;
            for b in 1..=max_size.min(a) {
                let v = if b == a {
                    1
                } else {
                    binom[a - 1][b - 1].checked_add(binom[a - 1][b]).unwrap_or(u64::MAX)
                };
                binom[a][b] = v;
            }
        }
        let mut offsets = Vec::with_capacity(max_size + 2);
        let mut total: u128 = 0;
        offsets.push(0usize);
        for m in 0..=max_size {
            total += binom[d][m] as u128;
            if total > limit as u128 {
                return Err(Error::InfeasibleSubsetCount {
                    t: format!("> {limit}"),
                    u: String::from("n/a"),
                    estimated_bytes: format!("> {}", limit as u128 * 8),
                    budget_bytes: limit as u64 * 8,
                });
            }
            offsets.push(total as usize);
        }
        Ok(Self {
            d,
            max_size,
            total: total as usize,
            offsets,
            binom,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    /// Total number of subsets in the family (`t` or `u`).
    pub fn total(&self) -> usize {
        self.total
    }

    /// `size_offsets()[m]` = rank of the first subset of cardinality `m`;
    /// the final entry is `total()`. Subsets of one cardinality are contiguous.
    pub fn size_offsets(&self) -> &[usize] {
        &self.offsets
    }

    fn c(&self, a: usize, b: usize) -> usize {
        if b > self.max_size || b > a {
            if b <= a {
                unreachable!("binomial table too small");
            }
            return 0;
        }
        self.binom[a][b] as usize
    }

    /// Rank of a sorted subset within the family.
    pub fn rank(&self, subset: &[usize]) -> usize {
        let m = subset.len();
        debug_assert!(m <= self.max_size);
        let mut r = self.offsets[m];
        let mut prev: isize = -1;
        for (i, &s) in subset.iter().enumerate() {
            debug_assert!(s < self.d && s as isize > prev);
            // Count subsets that agree on the first i elements and pick a
            // smaller element next.
            for j in (prev + 1) as usize..s {
                r += self.c(self.d - 1 - j, m - 1 - i);
            }
            prev = s as isize;
        }
        r
    }

    /// Inverse of [`rank`](Self::rank); writes the subset into `out`.
    pub fn unrank_into(&self, rank: usize, out: &mut Vec<usize>) {
        debug_assert!(rank < self.total);
        out.clear();
        let m = match self.offsets[1..].iter().position(|&o| rank < o) {
            Some(m) => m,
            None => unreachable!("rank out of range"),
        };
        let mut rem = rank - self.offsets[m];
        let mut next = 0usize;
        for i in 0..m {
            let mut j = next;
            loop {
                let below = self.c(self.d - 1 - j, m - 1 - i);
                if rem < below {
                    out.push(j);
                    next = j + 1;
                    break;
                }
                rem -= below;
                j += 1;
            }
        }
    }

    pub fn unrank(&self, rank: usize) -> Vec<usize> {
        let mut out = Vec::new();
        self.unrank_into(rank, &mut out);
        out
    }

    /// Visits every subset in rank order as `(rank, sorted indices)`.
    ///
    /// Enumeration is incremental (classic next-combination stepping), so the
    /// whole family costs `O(total)` amortized rather than `O(total·d)`.
    pub fn for_each<F: FnMut(usize, &[usize])>(&self, mut f: F) {
        let mut rank = 0usize;
        let mut cur: Vec<usize> = Vec::with_capacity(self.max_size);
        for m in 0..=self.max_size {
            cur.clear();
            cur.extend(0..m);
            if m > self.d {
                break;
            }
            loop {
                f(rank, &cur);
                rank += 1;
                // Advance to the next m-combination in lex order.
                let mut i = m;
                while i > 0 {
                    i -= 1;
                    if cur[i] < self.d - (m - i) {
                        cur[i] += 1;
                        for j in i + 1..m {
                            cur[j] = cur[j - 1] + 1;
                        }
                        break;
                    }
                    if i == 0 {
                        i = usize::MAX;
                        break;
                    }
                }
                if m == 0 || i == usize::MAX {
                    break;
                }
            }
        }
        debug_assert_eq!(rank, self.total);
    }
}

/// Multilinearization coefficients of `(z₁+⋯+z_d)^r` over ±1 inputs.
///
/// `q[m]` is the coefficient of any monomial `z_M` with `|M| = m`; it is zero
/// whenever `m` and `r` have different parity and non-negative otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffTable {
    d: usize,
    r: usize,
    q: Vec<BigInt>,
}

impl CoeffTable {
    /// Computes the table by repeatedly multiplying by `(z₁+⋯+z_d)`:
    /// a monomial of size `m` arises from size `m−1` (choose one of its `m`
    /// elements) or from size `m+1` (cancel one of the `d−m` others), giving
    /// `q_{j+1}[m] = m·q_j[m−1] + (d−m)·q_j[m+1]`.
    pub fn new(d: usize, r: usize) -> Self {
        assert!(d >= 1);
        let mut q: Vec<BigInt> = vec![BigInt::zero(); r + 1];
        q[0] = BigInt::one();
        let mut next = vec![BigInt::zero(); r + 1];
        for _ in 0..r {
            for (m, slot) in next.iter_mut().enumerate() {
                // No multilinear monomial has more than d variables.
                if m > d {
                    *slot = BigInt::zero();
                    continue;
                }
                let mut v = BigInt::zero();
                if m > 0 {
                    v += m * &q[m - 1];
                }
                if m + 1 <= r && m < d {
                    v += (d - m) * &q[m + 1];
                }
                *slot = v;
            }
            std::mem::swap(&mut q, &mut next);
        }
        Self { d, r, q }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.r
    }

    /// Coefficient of any subset of size `m`.
    pub fn coeff(&self, m: usize) -> &BigInt {
        &self.q[m]
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.q
    }

    /// `Σ_m q[m]·C(d,m)`, which must equal `d^r` (the value of the
    /// multilinearized polynomial at the all-ones point).
    pub fn total_mass(&self) -> BigInt {
        let mut c = BigInt::one();
        let mut sum = BigInt::zero();
        for (m, qm) in self.q.iter().enumerate().take(self.d + 1) {
            if m > 0 {
                c = c * (self.d - m + 1) / m;
            }
            sum += qm * &c;
        }
        sum
    }
}

/// Full symbolic expansion of `(z₁+⋯+z_d)^r` over multilinear monomials,
/// reducing exponents mod 2 after each multiplication. Returns the coefficient
/// of each subset-mask in `0..2^d`. Exponential in `d`; reference path only.
pub fn expand_symbolic(d: usize, r: usize) -> Vec<BigInt> {
    assert!(d <= 20, "symbolic expansion is exponential in d");
    let size = 1usize << d;
    let mut poly = vec![BigInt::zero(); size];
    poly[0] = BigInt::one();
    for _ in 0..r {
        let mut next = vec![BigInt::zero(); size];
        for (mask, coef) in poly.iter().enumerate() {
            if coef.is_zero() {
                continue;
            }
            for i in 0..d {
                next[mask ^ (1 << i)] += coef;
            }
        }
        poly = next;
    }
    poly
}

/// Evaluates the multilinearized polynomial at `(x₁y₁, …, x_dy_d)`:
/// `Σ_s c_s·x_{M_s}·y_{M_s}`. Equals `⟨x, y⟩^r` exactly.
pub fn amplified_eval(
    x: &SignVector,
    y: &SignVector,
    coeffs: &CoeffTable,
    idx: &SubsetIndex,
) -> Result<BigInt, Error> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    assert_eq!(
        idx.max_size(),
        coeffs.degree().min(idx.dim()),
        "index/coefficient degree mismatch"
    );
    assert_eq!(idx.dim(), x.dim(), "index dimension mismatch");
    // x_M·y_M = z_M for the coordinate-wise product z (bit = XNOR of the two
    // sign bits); group counts by |M| since the coefficient only depends on
    // the size.
    let signs: Vec<i8> = (0..x.dim())
        .map(|i| x.entry(i) * y.entry(i))
        .collect();
    let z = SignVector::from_signs(&signs)?;

    let mut per_size = vec![0i64; idx.max_size() + 1];
    idx.for_each(|_, subset| {
        per_size[subset.len()] += z.subset_product(subset).expect("indices in range") as i64;
    });
    let mut sum = BigInt::zero();
    for (m, cnt) in per_size.iter().enumerate() {
        if *cnt != 0 {
            sum += coeffs.coeff(m) * *cnt;
        }
    }
    Ok(sum)
}

/// Canonical split of a subset of size ≤ `r` into two disjoint halves of size
/// at most `⌈r/2⌉`: the first `⌈|M|/2⌉` sorted elements and the remainder.
/// Their symmetric difference recovers `M`. Returns ranks in `half_index`.
pub fn split_symmetric_difference(
    subset: &[usize],
    half_index: &SubsetIndex,
) -> (usize, usize) {
    let cut = subset.len().div_ceil(2);
    debug_assert!(cut <= half_index.max_size());
    debug_assert!(subset.len() - cut <= half_index.max_size());
    (
        half_index.rank(&subset[..cut]),
        half_index.rank(&subset[cut..]),
    )
}
