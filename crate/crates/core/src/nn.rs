//! Two-layer shifted-ReLU forward pass driven by heavy-pair detection.
//!
//! For `f(x) = Σ_r a_r·σ_τ(⟨w_r, x⟩)` with `σ_τ(z) = max(z, τ)`, the shifted
//! activation decomposes as
//!
//! `f(x) = τ·Σ_r a_r + Σ_{r: ⟨w_r, x⟩ ≥ τ} a_r·(⟨w_r, x⟩ − τ)`,
//!
//! so only the heavy (weight, input) pairs contribute beyond the constant
//! floor. The sparse path asks the detector for those pairs and touches
//! nothing else: its output is exact precisely when detector recall is full,
//! and an optional verification pass cross-checks against the dense
//! evaluation rather than hiding a shortfall.

use crate::detector::{find_correlated_sets, DetectionReport, DetectorConfig};
use crate::error::Error;
use crate::params::Params;
use crate::vectors::SignVector;
use crate::Rational;
use num_bigint::BigInt;
use num_traits::Zero;

/// Two-layer network with ±1 hidden weights and exact rational output weights.
#[derive(Clone, Debug)]
pub struct TwoLayerNet {
    weights: Vec<SignVector>,
    out: Vec<Rational>,
    /// Activation threshold `τ = ρ·d`.
    tau_act: Rational,
}

impl TwoLayerNet {
    pub fn new(
        weights: Vec<SignVector>,
        out: Vec<Rational>,
        tau_act: Rational,
    ) -> Result<Self, Error> {
        if weights.is_empty() || weights.len() != out.len() {
            return Err(Error::InvalidInput(format!(
                "{} weight rows vs {} output weights",
                weights.len(),
                out.len()
            )));
        }
        let d = weights[0].dim();
        if weights.iter().any(|w| w.dim() != d) {
            return Err(Error::InvalidInput("inconsistent weight dimensions".into()));
        }
        if tau_act <= Rational::zero() || tau_act > Rational::from_integer(BigInt::from(d)) {
            return Err(Error::InvalidInput(format!(
                "activation threshold {tau_act} outside (0, {d}]"
            )));
        }
        Ok(Self {
            weights,
            out,
            tau_act,
        })
    }

    pub fn hidden_width(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.weights[0].dim()
    }

    pub fn weights(&self) -> &[SignVector] {
        &self.weights
    }

    pub fn tau(&self) -> &Rational {
        &self.tau_act
    }

    fn sigma(&self, z: i64) -> Rational {
        let z = Rational::from_integer(BigInt::from(z));
        if z >= self.tau_act {
            z
        } else {
            self.tau_act.clone()
        }
    }

    /// Exact dense evaluation: all `m·n` inner products.
    pub fn forward_dense(&self, inputs: &[SignVector]) -> Result<Vec<Rational>, Error> {
        inputs
            .iter()
            .map(|x| {
                let mut acc = Rational::zero();
                for (w, a) in self.weights.iter().zip(&self.out) {
                    acc += a * self.sigma(w.inner_product(x)?);
                }
                Ok(acc)
            })
            .collect()
    }
}

/// Result of the detection-driven forward pass.
#[derive(Debug)]
pub struct SparseForward {
    pub outputs: Vec<Rational>,
    /// Detector diagnostics for the (weights × inputs) run.
    pub report: DetectionReport,
    /// Activated (neuron, input) pairs the sparse path used.
    pub active_pairs: usize,
    /// Dense cross-check outcome when requested: largest |sparse − dense|.
    pub max_deviation: Option<Rational>,
}

/// Forward pass that evaluates only detector-identified heavy pairs.
///
/// `params` must be derived for `(max(m, n), d, ρ)` with `ρ·d` equal to the
/// network's activation threshold. With full detector recall the result
/// equals [`TwoLayerNet::forward_dense`] exactly; `verify` runs the dense
/// pass and records the largest deviation instead of silently trusting
/// recall.
pub fn forward_sparse(
    net: &TwoLayerNet,
    inputs: &[SignVector],
    params: &Params,
    seed: u64,
    cfg: &DetectorConfig,
    verify: bool,
) -> Result<SparseForward, Error> {
    if inputs.is_empty() {
        return Err(Error::InvalidInput("no inputs".into()));
    }
    let d = net.dim();
    if inputs.iter().any(|x| x.dim() != d) {
        return Err(Error::InvalidInput("input dimension mismatch".into()));
    }
    // σ_τ treats z ≥ τ as activated; integer products make that the same set
    // as z ≥ ⌈ρd⌉, which is what the detector verifies.
    let report = find_correlated_sets(net.weights(), inputs, params, seed, cfg, 1)?;

    let floor: Rational = net.out.iter().map(|a| a * net.tau()).sum();
    let mut outputs = vec![floor; inputs.len()];
    for pair in &report.found {
        let r = pair.a as usize;
        let j = pair.b as usize;
        let z = Rational::from_integer(BigInt::from(pair.inner_product));
        outputs[j] += &net.out[r] * (z - net.tau());
    }
    let active_pairs = report.found.len();

    let max_deviation = if verify {
        let dense = net.forward_dense(inputs)?;
        Some(
            outputs
                .iter()
                .zip(&dense)
                .map(|(s, e)| {
                    let diff = s - e;
                    if diff < Rational::zero() {
                        -diff
                    } else {
                        diff
                    }
                })
                .max()
                .unwrap_or_else(Rational::zero),
        )
    } else {
        None
    };

    Ok(SparseForward {
        outputs,
        report,
        active_pairs,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate, PlantSpec};
    use crate::params::{DeriveMode, Overrides};
    use crate::rng;
    use num_traits::One;

    fn rat(n: i64, den: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(den))
    }

    fn toy_params(n: usize, d: usize, rho: f64, v: u64, reps: u32) -> Params {
        Params::derive(
            n,
            d,
            rho,
            DeriveMode::Empirical,
            &Overrides {
                v: Some(v),
                reps: Some(reps),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn single_neuron_on_its_own_weight() {
        let w = SignVector::ones(16);
        let net = TwoLayerNet::new(vec![w.clone()], vec![Rational::one()], rat(8, 1)).unwrap();
        let out = net.forward_dense(&[w]).unwrap();
        assert_eq!(out, vec![rat(16, 1)]); // σ_τ(d) = d since d ≥ τ
    }

    #[test]
    fn all_below_threshold_gives_floor() {
        // Inputs orthogonal-ish to weights: every ⟨w, x⟩ < τ, so
        // f(x) = τ·Σ a_r for every input.
        let mut r = rng::stream(31, 0);
        let weights: Vec<SignVector> = (0..3).map(|_| SignVector::random(60, &mut r)).collect();
        let out = vec![rat(1, 2), rat(-2, 3), rat(5, 7)];
        let tau = rat(54, 1);
        let net = TwoLayerNet::new(weights, out.clone(), tau.clone()).unwrap();
        let inputs: Vec<SignVector> = (0..5).map(|_| SignVector::random(60, &mut r)).collect();
        let dense = net.forward_dense(&inputs).unwrap();
        let floor: Rational = out.iter().map(|a| a * &tau).sum();
        for v in dense {
            assert_eq!(v, floor);
        }
    }

    #[test]
    fn dense_matches_per_term_hand_computation() {
        let w1 = SignVector::from_signs(&[1, 1, 1, 1]).unwrap();
        let w2 = SignVector::from_signs(&[1, -1, 1, -1]).unwrap();
        let w3 = SignVector::from_signs(&[-1, -1, -1, -1]).unwrap();
        let net = TwoLayerNet::new(
            vec![w1, w2, w3],
            vec![rat(1, 1), rat(-1, 2), rat(3, 1)],
            rat(2, 1),
        )
        .unwrap();
        let x = SignVector::from_signs(&[1, 1, 1, -1]).unwrap();
        // ⟨w1,x⟩ = 2, ⟨w2,x⟩ = 0, ⟨w3,x⟩ = −2
        // f = 1·max(2,2) + (−1/2)·max(0,2) + 3·max(−2,2) = 2 − 1 + 6 = 7
        let out = net.forward_dense(&[x]).unwrap();
        assert_eq!(out, vec![rat(7, 1)]);
    }

    #[test]
    fn decomposition_identity() {
        // f(x) = τ·Σ a_r + Σ_{activated} a_r·(z_r − τ) for random nets.
        let mut r = rng::stream(33, 0);
        let m = 12;
        let d = 24;
        let weights: Vec<SignVector> = (0..m).map(|_| SignVector::random(d, &mut r)).collect();
        let out: Vec<Rational> = (0..m as i64).map(|i| rat(i - 6, i + 1)).collect();
        let tau = rat(8, 1);
        let net = TwoLayerNet::new(weights.clone(), out.clone(), tau.clone()).unwrap();
        let inputs: Vec<SignVector> = (0..8).map(|_| SignVector::random(d, &mut r)).collect();
        let dense = net.forward_dense(&inputs).unwrap();
        for (x, want) in inputs.iter().zip(&dense) {
            let mut acc: Rational = out.iter().map(|a| a * &tau).sum();
            for (w, a) in weights.iter().zip(&out) {
                let z = w.inner_product(x).unwrap();
                let zr = Rational::from_integer(BigInt::from(z));
                if zr >= tau {
                    acc += a * (zr - &tau);
                }
            }
            assert_eq!(&acc, want);
        }
    }

    #[test]
    fn sparse_equals_dense_on_planted_net() {
        // 4 planted heavy (weight, input) pairs at d = 60, ρ = 0.8.
        let m = 128;
        let d = 60;
        let rho = 0.8;
        let inst = generate(m, d, &PlantSpec::new(4, 0.96, 42)).unwrap();
        let weights = inst.a().to_vec();
        let inputs = inst.b().to_vec();
        let out: Vec<Rational> = (0..m as i64).map(|i| rat(2 * i - m as i64, 3)).collect();
        let tau = rat((rho * d as f64) as i64 * 5, 5); // 48
        let net = TwoLayerNet::new(weights, out, tau).unwrap();
        let p = toy_params(m, d, rho, 18, 40);
        let sparse =
            forward_sparse(&net, &inputs, &p, 7, &DetectorConfig::default(), true).unwrap();
        let dense = net.forward_dense(&inputs).unwrap();
        if sparse.max_deviation == Some(Rational::zero()) {
            assert_eq!(sparse.outputs, dense);
        } else {
            // Recall shortfall is possible but must be visible, not silent.
            assert!(sparse.max_deviation.unwrap() > Rational::zero());
        }
    }
}
