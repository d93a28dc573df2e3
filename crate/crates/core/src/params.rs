//! Derivation and validation of every algorithm constant from `(n, d, ρ)`.
//!
//! The detector needs a bound `v` on uncorrelated inner products, the
//! amplification gap `w = ρd/v`, the polynomial degree `r`, the subset counts
//! `t` and `u`, the group count `h` and nominal group size `g`, the flagging
//! threshold `θ = τ·g·v^r/3` with `τ = √10`, and the repetition count. All of
//! them follow from `(n, d, ρ, v)` by fixed formulas; everything downstream
//! treats a `Params` value as immutable.
//!
//! Two derivation modes exist. *Theory* mode picks `v` so that an uncorrelated
//! pair exceeds it with probability at most `n^{−13}` (the per-pair tail the
//! correctness argument consumes); at desk scale this `v` exceeds `ρd` and the
//! construction is rejected rather than silently degraded. *Empirical* mode
//! takes `v` from an override (or a 1%-failure union-bound default) so the
//! algorithm can actually be run and measured.

use crate::error::Error;
use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

/// How `v` is chosen by [`Params::derive`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeriveMode {
    /// `v` = smallest integer with `2·exp(−v²/(2d)) ≤ n^{−13}`.
    Theory,
    /// `v` from overrides, defaulting to `⌈√(2d·ln(2n²/0.01))⌉`.
    Empirical,
}

/// Explicit parameter overrides; every field is optional.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Overrides {
    /// Uncorrelated inner-product bound.
    pub v: Option<u64>,
    /// Target amplification gap; translated to `v = ⌊ρd/w⌋`. Ignored when
    /// `v` is given.
    pub w: Option<f64>,
    /// Repetition count.
    pub reps: Option<u32>,
    /// Memory budget for the subset family and derived tables, in bytes.
    pub max_bytes: Option<u64>,
}

/// Default memory budget: 2 GiB.
pub const DEFAULT_MAX_BYTES: u64 = 2 << 30;

/// Right-hand side of the exact flagging comparison.
///
/// A score `c` is flagged iff `|c| ≥ 2θ` with `θ = τ·g·v^r/3` and `τ² = 10`,
/// evaluated without rounding as `9·c² ≥ scale·gsq_v2r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaCmp {
    /// Constant `40` (= 4·τ²).
    pub scale: u64,
    /// `g²·v^{2r}`, exact.
    pub gsq_v2r: BigInt,
}

/// All derived algorithm constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub d: usize,
    pub rho: f64,
    /// Bound on uncorrelated |⟨x, y⟩|.
    pub v: u64,
    /// Amplification gap `ρd/v`, always > 1.
    pub w: f64,
    /// `τ²` stored exactly; `τ = √10`.
    pub tau_sq: u64,
    /// Amplification exponent `⌈log_w(τ·n^{1/3})⌉`.
    pub r: u32,
    /// Number of subsets of `[d]` of size ≤ r.
    pub t: u64,
    /// Number of subsets of size ≤ ⌈r/2⌉.
    pub u: u64,
    /// Group count: smallest power of two ≥ ⌈n^{2/3}⌉.
    pub h: usize,
    /// Nominal group size ⌈n/h⌉.
    pub g: usize,
    pub theta_cmp: ThetaCmp,
    /// Sign-redraw repetitions, default ⌈10·log₂ n⌉.
    pub reps: u32,
}

impl Params {
    /// Derives all constants from `(n, d, ρ)`.
    ///
    /// Fails with [`Error::NoAmplificationGap`] when `v ≥ ρd` (so `w ≤ 1`)
    /// and with [`Error::InfeasibleSubsetCount`] when the subset family or
    /// its derived tables exceed the memory budget.
    pub fn derive(
        n: usize,
        d: usize,
        rho: f64,
        mode: DeriveMode,
        overrides: &Overrides,
    ) -> Result<Self, Error> {
        if n < 8 {
            return Err(Error::InvalidInput(format!("n = {n}, need n >= 8")));
        }
        if d < 1 {
            return Err(Error::InvalidInput("d must be at least 1".into()));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "rho = {rho}, need 0 < rho <= 1"
            )));
        }
        let rho_d = rho * d as f64;
        let v = match mode {
            DeriveMode::Theory => theory_v(n, d),
            DeriveMode::Empirical => match (overrides.v, overrides.w) {
                (Some(v), _) => v,
                (None, Some(w)) => {
                    if w <= 1.0 {
                        return Err(Error::InvalidInput(format!(
                            "override w = {w}, need w > 1"
                        )));
                    }
                    ((rho_d / w).floor() as u64).max(1)
                }
                (None, None) => empirical_default_v(n, d),
            },
        };
        if v == 0 || (v as f64) >= rho_d {
            return Err(Error::NoAmplificationGap { v, rho_d });
        }
        let w = rho_d / v as f64;
        let target = 10f64.sqrt() * (n as f64).cbrt();
        let r = (target.ln() / w.ln()).ceil().max(1.0) as u32;

        let t = subset_family_size(d, r as usize);
        let u = subset_family_size(d, (r as usize).div_ceil(2));
        let budget = overrides.max_bytes.unwrap_or(DEFAULT_MAX_BYTES);
        let h = group_count(n);
        // Dominant allocations: two packed product tables (n·t bits each) and
        // two moment matrices (h·t four-byte entries each).
        let estimated: u128 = 2 * (n as u128 * t / 8) + 2 * (h as u128 * t * 4);
        if t > u64::MAX as u128 || estimated > budget as u128 {
            return Err(Error::InfeasibleSubsetCount {
                t: t.to_string(),
                u: u.to_string(),
                estimated_bytes: estimated.to_string(),
                budget_bytes: budget,
            });
        }
        let g = n.div_ceil(h);
        let gsq_v2r = BigInt::from(g) * g * BigInt::from(v).pow(2 * r);
        let reps = overrides
            .reps
            .unwrap_or_else(|| (10.0 * (n as f64).log2()).ceil() as u32)
            .max(1);
        Ok(Self {
            n,
            d,
            rho,
            v,
            w,
            tau_sq: 10,
            r,
            t: t as u64,
            u: u as u64,
            h,
            g,
            theta_cmp: ThetaCmp {
                scale: 40,
                gsq_v2r,
            },
            reps,
        })
    }

    /// Verification threshold for a heavy pair: `⟨a, b⟩ ≥ ⌈ρd⌉`.
    pub fn heavy_threshold(&self) -> i64 {
        (self.rho * self.d as f64).ceil() as i64
    }

    /// `θ = τ·g·v^r/3` as a float, for diagnostics only; flagging itself uses
    /// the exact comparison in [`flag_threshold_check`].
    pub fn theta_float(&self) -> f64 {
        let log_vr = self.r as f64 * (self.v as f64).ln();
        ((10f64.sqrt() * self.g as f64 / 3.0).ln() + log_vr).exp()
    }
}

/// Exact flag test: `|c| ≥ 2θ`, evaluated as `9·c² ≥ 40·g²·v^{2r}`.
pub fn flag_threshold_check(c: &BigInt, p: &Params) -> bool {
    if c.is_zero() {
        return false;
    }
    let lhs = 9u32 * c * c;
    let rhs = p.theta_cmp.scale * &p.theta_cmp.gsq_v2r;
    lhs >= rhs
}

/// Smallest `v` with `2·exp(−v²/(2d)) ≤ n^{−13}`, i.e. the per-pair Hoeffding
/// tail used by the correctness argument.
fn theory_v(n: usize, d: usize) -> u64 {
    // v² ≥ 2d·(ln 2 + 13·ln n)
    let need = 2.0 * d as f64 * (2f64.ln() + 13.0 * (n as f64).ln());
    let mut v = need.sqrt().floor() as u64;
    while (v as f64) * (v as f64) < need {
        v += 1;
    }
    while v > 1 && ((v - 1) as f64) * ((v - 1) as f64) >= need {
        v -= 1;
    }
    v
}

/// `⌈√(2d·ln(2n²/0.01))⌉`: union bound over n² pairs with a 1% failure budget.
fn empirical_default_v(n: usize, d: usize) -> u64 {
    let need = 2.0 * d as f64 * (2.0 * (n as f64) * (n as f64) / 0.01).ln();
    need.sqrt().ceil() as u64
}

/// `Σ_{i=0}^{min(cap, d)} C(d, i)` without overflow (saturates above u128).
fn subset_family_size(d: usize, cap: usize) -> u128 {
    let cap = cap.min(d);
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for i in 0..=cap {
        if i > 0 {
            c = match c.checked_mul((d - i + 1) as u128) {
                Some(x) => x / i as u128,
                None => return u128::MAX,
            };
        }
        total = match total.checked_add(c) {
            Some(x) => x,
            None => return u128::MAX,
        };
    }
    total
}

/// Smallest power of two ≥ ⌈n^{2/3}⌉, computed in integers to dodge float
/// boundary cases like n = 512.
fn group_count(n: usize) -> usize {
    let nn = (n as u128) * (n as u128);
    let mut m = ((n as f64).powf(2.0 / 3.0).floor() as u128).max(1);
    while m * m * m < nn {
        m += 1;
    }
    while m > 1 && (m - 1) * (m - 1) * (m - 1) >= nn {
        m -= 1;
    }
    (m as usize).next_power_of_two()
}

/// Measurable restatement of the premises behind a parameter choice.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    /// `2·exp(−v²/(2d))`: per-pair probability that an uncorrelated inner
    /// product reaches `v`.
    pub tail_bound_per_pair: f64,
    /// The above times `n²` (union over all pairs). Values ≥ 1 mean the
    /// parameter choice has no per-run guarantee; reported as a warning.
    pub union_bound: f64,
    /// Standard-deviation bound `g·v^r` on an uncorrelated cell score, exact.
    pub sigma_bound: BigInt,
    /// `θ = τ·g·v^r/3` (float view of the exact comparison).
    pub theta: f64,
    pub t: u64,
    pub u: u64,
    pub h: usize,
    /// Estimated bytes for product tables and moment matrices.
    pub estimated_bytes: u128,
    pub warnings: Vec<String>,
}

/// Reports the tail/union bounds, score deviation scale, and memory estimates
/// implied by `p`. Never fails: out-of-guarantee parameters are surfaced as
/// warnings so empirical runs stay possible.
pub fn validate_report(p: &Params) -> ValidationReport {
    let tail = 2.0 * (-((p.v as f64).powi(2)) / (2.0 * p.d as f64)).exp();
    let union = tail * (p.n as f64) * (p.n as f64);
    let sigma_bound = BigInt::from(p.g) * BigInt::from(p.v).pow(p.r);
    let estimated =
        2 * (p.n as u128 * p.t as u128 / 8) + 2 * (p.h as u128 * p.t as u128 * 4);
    let mut warnings = Vec::new();
    if union >= 1.0 {
        warnings.push(format!(
            "union bound {union:.3e} >= 1: uncorrelated pairs may exceed v = {}",
            p.v
        ));
    }
    if (p.w).powi(p.r as i32) < 10f64.sqrt() * (p.n as f64).cbrt() {
        warnings.push("w^r below tau*n^(1/3): amplified gap may not separate".into());
    }
    ValidationReport {
        tail_bound_per_pair: tail,
        union_bound: union,
        sigma_bound,
        theta: p.theta_float(),
        t: p.t,
        u: p.u,
        h: p.h,
        estimated_bytes: estimated,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn empirical(n: usize, d: usize, rho: f64, v: u64) -> Params {
        Params::derive(
            n,
            d,
            rho,
            DeriveMode::Empirical,
            &Overrides {
                v: Some(v),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn theory_mode_rejects_at_desk_scale() {
        // Solving 2·exp(−v²/128) ≤ 4096^{−13} gives v = 119 > ρd = 64.
        let err = Params::derive(4096, 64, 1.0, DeriveMode::Theory, &Overrides::default())
            .unwrap_err();
        match err {
            Error::NoAmplificationGap { v, rho_d } => {
                assert_eq!(v, 119);
                assert_eq!(rho_d, 64.0);
            }
            other => panic!("expected NoAmplificationGap, got {other:?}"),
        }
    }

    #[test]
    fn fig2_subset_count() {
        // d=5, r=2: 16 distinct subsets.
        assert_eq!(subset_family_size(5, 2), 16);
    }

    #[test]
    fn reference_empirical_parameters() {
        let p = empirical(256, 60, 0.9, 18);
        assert_eq!(p.w, 3.0);
        assert_eq!(p.r, 3);
        assert_eq!(p.h, 64);
        assert_eq!(p.g, 4);
        assert_eq!(p.t, 1 + 60 + 1770 + 34220);
        assert_eq!(p.u, 1 + 60 + 1770);
        assert_eq!(p.reps, 80);
    }

    #[test]
    fn acceptance_scale_parameters() {
        let p = empirical(256, 60, 0.8, 18);
        assert_eq!(p.r, 4);
        assert_eq!(p.t, 523_686);
        assert_eq!(p.u, 1831);
        assert_eq!(p.h, 64);
        assert_eq!(p.g, 4);
    }

    #[test]
    fn group_count_integer_boundaries() {
        assert_eq!(group_count(512), 64); // 512^(2/3) = 64 exactly
        assert_eq!(group_count(256), 64); // ceil(40.32) = 41 → 64
        assert_eq!(group_count(1024), 128); // ceil(101.6) = 102 → 128
        assert_eq!(group_count(8), 4);
    }

    #[test]
    fn flag_threshold_examples() {
        let p = empirical(256, 60, 0.9, 18);
        // g=4, v=18, r=3.
        assert!(!flag_threshold_check(&BigInt::zero(), &p));
        assert!(flag_threshold_check(&BigInt::from(166_375), &p)); // 55³
        assert!(!flag_threshold_check(&BigInt::from(20_000), &p));
        // Exact boundary arithmetic on both sides.
        let rhs: BigInt = 40u32 * BigInt::from(16) * BigInt::from(18u64).pow(6);
        assert_eq!(p.theta_cmp.scale * &p.theta_cmp.gsq_v2r, rhs);
    }

    #[test]
    fn flag_threshold_symmetry_and_monotonicity() {
        let p = empirical(256, 60, 0.9, 18);
        let mut last = false;
        for c in (0..3_000_000i64).step_by(7_919) {
            let pos = flag_threshold_check(&BigInt::from(c), &p);
            let neg = flag_threshold_check(&BigInt::from(-c), &p);
            assert_eq!(pos, neg);
            assert!(!(last && !pos), "flagging must be monotone in |c|");
            last = pos;
        }
    }

    #[test]
    fn validation_report_values() {
        let p = empirical(256, 60, 0.9, 18);
        let rep = validate_report(&p);
        // 2·exp(−324/120) = 2·exp(−2.7)
        let tail = 2.0 * (-2.7f64).exp();
        assert!((rep.tail_bound_per_pair - tail).abs() < 1e-12);
        let union = 65536.0 * tail;
        assert!((rep.union_bound - union).abs() < 1e-6);
        assert!((rep.union_bound - 8.8e3).abs() < 0.1e3);
        assert!(!rep.warnings.is_empty(), "premise violation must warn");
        assert_eq!(rep.sigma_bound, BigInt::from(4) * BigInt::from(18).pow(3));
        // θ consistency: τ·g·v^r/3 within rounding.
        let theta = 10f64.sqrt() * 4.0 * 18f64.powi(3) / 3.0;
        assert!((rep.theta - theta).abs() / theta < 1e-9);
    }

    #[test]
    fn tail_bound_formula_at_v_eq_d() {
        let p = empirical(64, 60, 0.9, 30);
        let rep = validate_report(&p);
        assert!(
            (rep.tail_bound_per_pair
                - 2.0 * (-(30f64 * 30.0) / 120.0).exp())
            .abs()
                < 1e-15
        );
    }

    #[test]
    fn empirical_default_rejects_or_fails_budget() {
        // The 1% union-bound default yields v = 45 ≥ ρd at (256, 60, 0.8):
        // rejected rather than silently producing w ≤ 1.
        let err =
            Params::derive(256, 60, 0.8, DeriveMode::Empirical, &Overrides::default())
                .unwrap_err();
        assert!(matches!(
            err,
            Error::NoAmplificationGap { .. } | Error::InfeasibleSubsetCount { .. }
        ));
    }

    #[test]
    fn budget_rejection_reports_sizes() {
        let err = Params::derive(
            1 << 20,
            4096,
            0.9,
            DeriveMode::Empirical,
            &Overrides {
                v: Some(64),
                max_bytes: Some(1 << 20),
                ..Default::default()
            },
        )
        .unwrap_err();
        match err {
            Error::InfeasibleSubsetCount { t, u, .. } => {
                assert!(!t.is_empty() && !u.is_empty());
            }
            other => panic!("expected InfeasibleSubsetCount, got {other:?}"),
        }
    }

    #[test]
    fn w_override_translates_to_v() {
        let p = Params::derive(
            256,
            60,
            0.9,
            DeriveMode::Empirical,
            &Overrides {
                w: Some(3.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(p.v, 18);
    }

    #[test]
    fn json_roundtrip() {
        let p = empirical(256, 60, 0.8, 18);
        let s = serde_json::to_string(&p).unwrap();
        let back: Params = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
    }

    proptest! {
        /// r, t, u, h, g recomputed from (n, d, rho, v) always match stored.
        #[test]
        fn derived_fields_consistent(
            n in 8usize..4096,
            d in 16usize..128,
            v in 2u64..32,
        ) {
            let rho = 0.9;
            if (v as f64) < rho * d as f64 {
                if let Ok(p) = Params::derive(
                    n, d, rho, DeriveMode::Empirical,
                    &Overrides { v: Some(v), ..Default::default() },
                ) {
                    let w = rho * d as f64 / v as f64;
                    let r = ((10f64.sqrt() * (n as f64).cbrt()).ln() / w.ln())
                        .ceil().max(1.0) as u32;
                    prop_assert_eq!(p.r, r);
                    prop_assert_eq!(p.t as u128, subset_family_size(d, r as usize));
                    prop_assert_eq!(p.u as u128,
                        subset_family_size(d, (r as usize).div_ceil(2)));
                    prop_assert_eq!(p.h, group_count(n));
                    prop_assert_eq!(p.g, n.div_ceil(p.h));
                    prop_assert!(p.u <= p.t);
                    prop_assert!(p.h.is_power_of_two());
                }
            }
        }
    }
}
