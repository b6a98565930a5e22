//! Independent per-variable rounding of pseudoexpectation marginals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Pseudoexpectation;
use crate::csp::{Assignment, CspInstance};

/// Per-block marginals `pE y_{i,·}` with negatives clipped to 0 and each
/// block renormalized to sum 1 (uniform if the block is entirely clipped).
pub fn sanitized_marginals(pe: &Pseudoexpectation) -> Vec<Vec<f64>> {
    let q = pe.q();
    let mean = pe.mean();
    (0..pe.n())
        .map(|i| {
            let mut block: Vec<f64> = (0..q).map(|a| mean[q * i + a].max(0.0)).collect();
            let total: f64 = block.iter().sum();
            if total > 0.0 {
                block.iter_mut().for_each(|p| *p /= total);
            } else {
                block.fill(1.0 / q as f64);
            }
            block
        })
        .collect()
}

fn sample(marginals: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Assignment {
    marginals
        .iter()
        .map(|block| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (a, &p) in block.iter().enumerate() {
                acc += p;
                if u < acc {
                    return a;
                }
            }
            // u landed in the rounding gap above the final partial sum
            block.iter().rposition(|&p| p > 0.0).unwrap_or(0)
        })
        .collect()
}

/// Draws `samples` assignments from the product of the sanitized marginals.
pub fn round(pe: &Pseudoexpectation, seed: u64, samples: usize) -> Vec<Assignment> {
    round_stream(pe, seed, 0, samples)
}

/// As [`round`], drawing from ChaCha stream `stream` of `seed` so that
/// distinct net points get independent, schedule-free randomness.
pub fn round_stream(pe: &Pseudoexpectation, seed: u64, stream: u64, samples: usize) -> Vec<Assignment> {
    let marginals = sanitized_marginals(pe);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..samples).map(|_| sample(&marginals, &mut rng)).collect()
}

/// `E_{y ~ ν} Φ(y)` under the product of the (raw) marginals.
pub fn expected_objective(pe: &Pseudoexpectation, instance: &CspInstance) -> f64 {
    let q = pe.q();
    let mean = pe.mean();
    instance
        .edges
        .iter()
        .map(|e| {
            e.allowed
                .iter()
                .map(|p| mean[q * e.u + p[0]] * mean[q * e.v + p[1]])
                .sum::<f64>()
        })
        .sum()
}
