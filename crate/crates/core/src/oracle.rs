//! Exact brute-force solver and statistical probes.
//!
//! The oracle is the arbiter for every end-to-end test: it scans all `n²`
//! pairs with packed inner products and returns exactly the heavy set. It
//! deliberately shares nothing with the detector modules.

use crate::instance::Instance;
use crate::rng;
use crate::vectors::SignVector;
use rayon::prelude::*;

/// All `(i, j)` with `⟨a_i, b_j⟩ ≥ ⌈ρd⌉`, sorted by `(i, j)`.
pub fn brute_force_sets(a: &[SignVector], b: &[SignVector], rho: f64) -> Vec<(u64, u64)> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let d = a[0].dim();
    let threshold = (rho * d as f64).ceil() as i64;
    let mut found: Vec<(u64, u64)> = a
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, x)| {
            b.iter()
                .enumerate()
                .filter_map(move |(j, y)| {
                    let ip = x.inner_product(y).expect("equal dims");
                    (ip >= threshold).then_some((i as u64, j as u64))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    found.sort_unstable();
    found
}

/// [`brute_force_sets`] on an instance's two sides.
pub fn brute_force(inst: &Instance, rho: f64) -> Vec<(u64, u64)> {
    brute_force_sets(inst.a(), inst.b(), rho)
}

/// Monte-Carlo estimate of `Pr[|⟨x, y⟩| ≥ v]` for uniform `x, y ∈ {±1}^d`.
pub fn tail_probe(d: usize, v: u64, samples: usize, seed: u64) -> f64 {
    if v == 0 {
        return 1.0;
    }
    if v as usize > d {
        return 0.0;
    }
    let mut rng = rng::stream(seed, 0);
    let mut hits = 0usize;
    for _ in 0..samples {
        let x = SignVector::random(d, &mut rng);
        let y = SignVector::random(d, &mut rng);
        if x.inner_product(&y).unwrap().unsigned_abs() >= v {
            hits += 1;
        }
    }
    hits as f64 / samples as f64
}
