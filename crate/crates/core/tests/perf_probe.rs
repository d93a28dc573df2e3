//! Manual timing probe for the detection pipeline at acceptance scale.
//! Run with: cargo test -p heavyprod --test perf_probe -- --ignored --nocapture

use heavyprod::detector::{find_correlated, DetectorConfig};
use heavyprod::instance::{generate, PlantSpec};
use heavyprod::oracle;
use heavyprod::params::{DeriveMode, Overrides, Params};
use std::time::Instant;

#[test]
#[ignore]
fn probe_acceptance_scale() {
    let n = 256;
    let d = 60;
    let rho = 0.8;
    let p = Params::derive(
        n,
        d,
        rho,
        DeriveMode::Empirical,
        &Overrides {
            v: Some(18),
            reps: Some(80),
            ..Default::default()
        },
    )
    .unwrap();
    println!(
        "params: v={} w={:.3} r={} t={} u={} h={} g={} reps={}",
        p.v, p.w, p.r, p.t, p.u, p.h, p.g, p.reps
    );
    let inst = generate(n, d, &PlantSpec::new(3, 0.96, 1)).unwrap();

    let t0 = Instant::now();
    let oracle_pairs = oracle::brute_force(&inst, rho);
    println!("oracle: {:?} ({} pairs)", t0.elapsed(), oracle_pairs.len());

    let t0 = Instant::now();
    let rep = find_correlated(&inst, &p, 7, &DetectorConfig::default()).unwrap();
    let total = t0.elapsed();
    println!(
        "detect: {total:?}  partition={:.3}s cache={:.3}s scoring={:.3}s brute={:.3}s",
        rep.timings.partition_s,
        rep.timings.product_cache_s,
        rep.timings.scoring_s,
        rep.timings.brute_force_s
    );
    println!(
        "found={:?} candidates={} skipped={} lanes={:?}",
        rep.found_pairs(),
        rep.candidate_cells,
        rep.skipped_cells,
        rep.backend.lane_usage
    );
    println!("oracle match: {}", rep.found_pairs() == oracle_pairs);
}
