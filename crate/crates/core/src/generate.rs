//! Seeded instance generators.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csp::{Assignment, Constraint, CspInstance};
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Instance families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GenSpec {
    /// Uniform-ish `d`-regular MAX-CUT graph on `n` vertices.
    RandomRegular { n: usize, d: usize },
    /// `K_{a,b}` plus every same-side pair independently with probability `rho`,
    /// encoded as MAX-CUT.
    CompleteBipartiteNoise { a: usize, b: usize, rho: f64 },
    /// `m` random constraints that all accept a hidden assignment.
    PlantedAssignment { n: usize, q: usize, m: usize },
    /// `m` random constraints, each pair allowed with probability `density`.
    RandomCsp { n: usize, q: usize, m: usize, density: f64 },
}

/// A generated instance, with the hidden assignment for planted families.
#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: CspInstance,
    pub planted: Option<Assignment>,
}

pub fn generate(spec: &GenSpec, seed: u64) -> Result<Generated> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *spec {
        GenSpec::RandomRegular { n, d } => random_regular(n, d, &mut rng),
        GenSpec::CompleteBipartiteNoise { a, b, rho } => bipartite_noise(a, b, rho, &mut rng),
        GenSpec::PlantedAssignment { n, q, m } => planted(n, q, m, &mut rng),
        GenSpec::RandomCsp { n, q, m, density } => random_csp(n, q, m, density, &mut rng),
    }
}

fn random_regular(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<Generated> {
    if d == 0 || d >= n {
        return Err(Error::InvalidParameter(format!(
            "regular degree {d} must lie in [1, {n})"
        )));
    }
    if (n * d) % 2 == 1 {
        return Err(Error::InvalidParameter(format!(
            "n * d = {} is odd; no {d}-regular graph on {n} vertices",
            n * d
        )));
    }
    // Pairing model with restarts until the multigraph is simple.
    for _ in 0..10_000 {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        stubs.shuffle(rng);
        let mut edges = BTreeSet::new();
        let mut ok = true;
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !edges.insert((u, v)) {
                ok = false;
                break;
            }
        }
        if ok {
            let edges: Vec<_> = edges.into_iter().collect();
            let inst = CspInstance::maxcut(n, &edges).with_name(format!("regular-n{n}-d{d}"));
            return Ok(Generated {
                instance: inst,
                planted: None,
            });
        }
    }
    Err(Error::InvalidParameter(format!(
        "failed to sample a simple {d}-regular graph on {n} vertices"
    )))
}

fn bipartite_noise(a: usize, b: usize, rho: f64, rng: &mut ChaCha8Rng) -> Result<Generated> {
    if a == 0 || b == 0 {
        return Err(Error::InvalidParameter("both sides must be non-empty".into()));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("rho = {rho} outside [0, 1]")));
    }
    let n = a + b;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let crossing = (u < a) != (v < a);
            if crossing || rng.random::<f64>() < rho {
                edges.push((u, v));
            }
        }
    }
    let inst = CspInstance::maxcut(n, &edges).with_name(format!("kbip-{a}-{b}-rho{rho}"));
    Ok(Generated {
        instance: inst,
        planted: None,
    })
}

fn random_pairs(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    let max = n * n.saturating_sub(1) / 2;
    if m > max {
        return Err(Error::InvalidParameter(format!(
            "{m} constraints requested but only {max} variable pairs exist"
        )));
    }
    let mut all: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    all.shuffle(rng);
    let mut chosen: Vec<_> = all.into_iter().take(m).collect();
    chosen.sort_unstable();
    Ok(chosen)
}

fn check_csp_params(n: usize, q: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least 2 variables".into()));
    }
    if q < 2 {
        return Err(Error::InvalidParameter("alphabet size must be at least 2".into()));
    }
    Ok(())
}

fn planted(n: usize, q: usize, m: usize, rng: &mut ChaCha8Rng) -> Result<Generated> {
    check_csp_params(n, q)?;
    let hidden: Assignment = (0..n).map(|_| rng.random_range(0..q)).collect();
    let pairs = random_pairs(n, m, rng)?;
    let edges = pairs
        .into_iter()
        .map(|(u, v)| {
            let mut allowed = Vec::new();
            for a in 0..q {
                for b in 0..q {
                    let forced = a == hidden[u] && b == hidden[v];
                    if forced || rng.random::<f64>() < 0.5 {
                        allowed.push([a, b]);
                    }
                }
            }
            Constraint::new(u, v, allowed)
        })
        .collect();
    let inst = CspInstance::new(n, q, edges).with_name(format!("planted-n{n}-q{q}-m{m}"));
    Ok(Generated {
        instance: inst,
        planted: Some(hidden),
    })
}

fn random_csp(n: usize, q: usize, m: usize, density: f64, rng: &mut ChaCha8Rng) -> Result<Generated> {
    check_csp_params(n, q)?;
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "density {density} outside (0, 1]"
        )));
    }
    let pairs = random_pairs(n, m, rng)?;
    let edges = pairs
        .into_iter()
        .map(|(u, v)| {
            let mut allowed: Vec<[usize; 2]> = (0..q * q)
                .filter(|_| rng.random::<f64>() < density)
                .map(|c| [c / q, c % q])
                .collect();
            if allowed.is_empty() {
                let c = rng.random_range(0..q * q);
                allowed.push([c / q, c % q]);
            }
            Constraint::new(u, v, allowed)
        })
        .collect();
    let inst = CspInstance::new(n, q, edges).with_name(format!("random-n{n}-q{q}-m{m}"));
    Ok(Generated {
        instance: inst,
        planted: None,
    })
}

/// A random graph without isolated vertices: either `G(n, p)` or a union of
/// a few random cliques joined by sparse cross edges (many eigenvalues near
/// 1 in normalized form).
fn random_graph(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut edges = BTreeSet::new();
    if rng.random::<bool>() {
        let p = rng.random_range(0.1..0.6);
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    edges.insert((u, v));
                }
            }
        }
    } else {
        let parts = rng.random_range(1..=n.clamp(1, 5));
        let label: Vec<usize> = (0..n).map(|_| rng.random_range(0..parts)).collect();
        let cross = rng.random_range(0.0..0.1);
        for u in 0..n {
            for v in u + 1..n {
                if label[u] == label[v] || rng.random::<f64>() < cross {
                    edges.insert((u, v));
                }
            }
        }
    }
    for u in 0..n {
        if !edges.iter().any(|&(a, b)| a == u || b == u) {
            let mut v = rng.random_range(0..n - 1);
            if v >= u {
                v += 1;
            }
            edges.insert((u.min(v), u.max(v)));
        }
    }
    edges.into_iter().collect()
}

/// A random pair `(A, B)` with `A >= 0` entrywise, `‖A‖ <= 1` and
/// `|B[(i,a),(j,b)]| <= A[i,j]` for `B` of dimension `n q` (`q = 1` is a
/// plain signing). `A` is a normalized adjacency matrix; each entry of `B`
/// is drawn as a random sign, a uniform multiplier in `[-1, 1]`, or a random
/// 0/1 predicate pattern, chosen per pair.
pub fn admissible_pair(n: usize, q: usize, seed: u64) -> Result<(SymMatrix, SymMatrix)> {
    if n < 2 || q < 1 {
        return Err(Error::InvalidParameter(format!(
            "admissible pair needs n >= 2 and q >= 1, got n = {n}, q = {q}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = random_graph(n, &mut rng);
    let a = CspInstance::maxcut(n, &edges).normalized_adjacency()?;
    let style = rng.random_range(0..3);
    let mut b = SymMatrix::zeros(n * q);
    for &(u, v) in &edges {
        let w = a.get(u, v);
        for x in 0..q {
            for y in 0..q {
                let factor = match style {
                    0 => {
                        if rng.random::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    1 => rng.random_range(-1.0..=1.0),
                    _ => f64::from(u8::from(rng.random::<bool>())),
                };
                b.set_sym(q * u + x, q * v + y, w * factor);
            }
        }
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bipartite_without_noise_is_k33() {
        let g = generate(
            &GenSpec::CompleteBipartiteNoise {
                a: 3,
                b: 3,
                rho: 0.0,
            },
            0,
        )
        .unwrap();
        assert_eq!(g.instance.m(), 9);
        assert!(g.instance.validate().is_empty());
        assert_eq!(g.instance.evaluate(&[0, 0, 0, 1, 1, 1]).unwrap(), 9);
    }

    #[test]
    fn planted_is_fully_satisfied() {
        let g = generate(&GenSpec::PlantedAssignment { n: 8, q: 3, m: 12 }, 7).unwrap();
        assert_eq!(g.instance.m(), 12);
        assert!(g.instance.validate().is_empty());
        let hidden = g.planted.unwrap();
        assert_eq!(g.instance.evaluate(&hidden).unwrap(), 12);
    }

    #[test]
    fn random_regular_handshake() {
        let g = generate(&GenSpec::RandomRegular { n: 10, d: 3 }, 1).unwrap();
        assert_eq!(g.instance.m(), 15);
        assert!(g.instance.validate().is_empty());
        assert!(g.instance.degrees().iter().all(|&d| d == 3));
    }

    #[test]
    fn random_regular_rejects_odd_product() {
        assert!(generate(&GenSpec::RandomRegular { n: 9, d: 3 }, 1).is_err());
        assert!(generate(&GenSpec::RandomRegular { n: 4, d: 4 }, 1).is_err());
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let spec = GenSpec::RandomCsp {
            n: 7,
            q: 3,
            m: 10,
            density: 0.4,
        };
        let a = generate(&spec, 42).unwrap().instance;
        let b = generate(&spec, 42).unwrap().instance;
        let c = generate(&spec, 43).unwrap().instance;
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.validate().is_empty());
    }

    #[test]
    fn too_many_constraints_refused() {
        assert!(generate(&GenSpec::PlantedAssignment { n: 3, q: 2, m: 4 }, 0).is_err());
    }

    #[test]
    fn admissible_pairs_are_dominated() {
        for seed in 0..20 {
            for q in [1, 2, 3] {
                let (a, b) = admissible_pair(7, q, seed).unwrap();
                for r in 0..7 * q {
                    for c in 0..7 * q {
                        assert!(b.get(r, c).abs() <= a.get(r / q, c / q));
                    }
                }
                let norm = crate::oracle::jacobi_eigenvalues(&a)
                    .iter()
                    .fold(0.0_f64, |m, l| m.max(l.abs()));
                assert!(norm <= 1.0 + 1e-9);
            }
        }
    }
}
