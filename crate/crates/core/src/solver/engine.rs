//! The enumerate-solve-round loop shared by every frontend.

use std::sync::Arc;
use std::thread;
use std::time::Instant;

use serde::Serialize;

use super::SolveOptions;
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::net::{build_net, size_bound, EpsilonNet};
use crate::sdp::{round_stream, solve_sdp, SdpOutcome, SdpProblem, SdpTemplate};
use crate::spectral::{eig_sym, top_eigenspace, EigMode, Projector};

/// Applies `f` to `0..len` on up to `workers` threads, each taking one
/// contiguous slice; results come back in index order.
pub(crate) fn parallel_map<T, F>(len: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if workers <= 1 || len <= 1 {
        return (0..len).map(f).collect();
    }
    let chunk = len.div_ceil(workers);
    thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                s.spawn(move || {
                    (w * chunk..((w + 1) * chunk).min(len))
                        .map(f)
                        .collect::<Vec<T>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// What the report records about the spectrum of `M`.
#[derive(Debug, Clone, Serialize)]
pub struct EigenSummary {
    pub mode: &'static str,
    pub dim: usize,
    pub threshold: f64,
    /// Eigenvalues (or Ritz values) of the retained space, descending.
    pub retained: Vec<f64>,
    /// Up to eight largest eigenvalues (exact mode only).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub top: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
}

/// Wall-clock milliseconds per phase.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct PhaseTimings {
    pub spectral_ms: f64,
    pub net_ms: f64,
    pub sdp_ms: f64,
    pub rounding_ms: f64,
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Spectral step, net and every per-point SDP solve. Rounding is separate
/// so the same solves can be rounded under several seeds.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub template: Arc<SdpTemplate>,
    pub projector: Projector,
    /// The algorithm's threshold (`ε'` for general 2CSPs).
    pub eps: f64,
    pub eigen: EigenSummary,
    pub net: EpsilonNet,
    pub net_bound: u128,
    pub outcomes: Vec<SdpOutcome>,
    pub timings: PhaseTimings,
}

fn summarize(m: &SymMatrix, eps: f64, mode: EigMode) -> Result<(Projector, EigenSummary)> {
    match mode {
        EigMode::Exact => {
            let spec = eig_sym(m);
            let projector = top_eigenspace(m, eps, EigMode::Exact)?;
            let summary = EigenSummary {
                mode: "exact",
                dim: spec.dim(),
                threshold: eps,
                retained: projector.values.clone(),
                top: spec.eigenvalues.iter().take(8).copied().collect(),
                max: Some(spec.max()),
                min: Some(spec.min()),
            };
            Ok((projector, summary))
        }
        EigMode::Power { .. } => {
            let projector = top_eigenspace(m, eps, mode)?;
            let summary = EigenSummary {
                mode: "power",
                dim: m.dim(),
                threshold: eps,
                retained: projector.values.clone(),
                top: Vec::new(),
                max: None,
                min: None,
            };
            Ok((projector, summary))
        }
    }
}

/// Runs the spectral step, builds the net and solves every point's SDP.
/// `e` is the diagonal of `E = D ⊗ I_q`.
pub fn prepare(m: &SymMatrix, e: &[f64], q: usize, eps: f64, options: &SolveOptions) -> Result<Prepared> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    let mut timings = PhaseTimings::default();

    let start = Instant::now();
    let (projector, eigen) = summarize(m, eps, options.eig)?;
    let template = Arc::new(SdpTemplate::new(m, e, q, &projector)?);
    timings.spectral_ms = millis(start);

    let start = Instant::now();
    let trace_d = template.trace_d();
    let k = projector.rank();
    let radius = trace_d.sqrt();
    let mesh = (eps * trace_d).sqrt();
    let net = build_net(k, radius, mesh, options.net_cap)?;
    timings.net_ms = millis(start);

    let start = Instant::now();
    let problems = net
        .points
        .iter()
        .map(|c| Ok(SdpProblem::new(template.clone(), c, eps)?.with_settings(options.sdp)))
        .collect::<Result<Vec<_>>>()?;
    let outcomes = parallel_map(problems.len(), options.workers, |i| solve_sdp(&problems[i]));
    timings.sdp_ms = millis(start);

    Ok(Prepared {
        template,
        projector,
        eps,
        eigen,
        net_bound: size_bound(k, radius, mesh),
        net,
        outcomes,
        timings,
    })
}

/// Per-net-point diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub coords: Vec<f64>,
    pub status: &'static str,
    /// SDP value in the frontend's objective units.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sdp_value: Option<f64>,
    /// Raw `⟨E^{1/2} M E^{1/2}, pE y yᵀ⟩`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sdp_form: Option<f64>,
    /// Measured `pE ‖Π E^{1/2} y - v‖²` (its minimum for infeasible points).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ball: Option<f64>,
    /// `sdp_form - mᵀ C m` with `m = pE y`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounding_gap: Option<f64>,
    /// `ε Tr D + 4 ball + 1e-4 scale`, the allowance for `rounding_gap`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounding_allowance: Option<f64>,
    /// Expected objective of one rounded sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Result of rounding every solved point.
#[derive(Debug, Clone)]
pub struct Selection {
    pub best_value: f64,
    pub best: Vec<usize>,
    pub net_index: Option<usize>,
    pub fallback: bool,
    pub points: Vec<PointRecord>,
    pub rounding_ms: f64,
}

/// `Some(candidate)` beats `current` on a strictly higher value or an equal
/// value with a lexicographically smaller assignment.
fn better(candidate: (f64, &[usize]), current: Option<&(f64, Vec<usize>)>) -> bool {
    match current {
        None => true,
        Some((v, a)) => candidate.0 > *v || (candidate.0 == *v && candidate.1 < a.as_slice()),
    }
}

impl Prepared {
    /// Rounds each solved point with `samples` draws from stream `index` of
    /// `seed`, scores them with `score`, and keeps the best.
    ///
    /// `affine = (a, b)` maps the raw SDP form to objective units as
    /// `a * form + b`.
    pub fn select<F>(&self, seed: u64, samples: usize, workers: usize, affine: (f64, f64), score: F) -> Selection
    where
        F: Fn(&[usize]) -> f64 + Sync,
    {
        let start = Instant::now();
        let t = &self.template;
        let c = t.objective();
        let allowance_base = self.eps * t.trace_d() + 1e-4 * t.scale();
        let to_obj = |form: f64| affine.0 * form + affine.1;

        let per_point = parallel_map(self.outcomes.len(), workers, |i| {
            let mut rec = PointRecord {
                index: i,
                coords: self.net.points[i].clone(),
                status: self.outcomes[i].status(),
                sdp_value: None,
                sdp_form: None,
                ball: None,
                rounding_gap: None,
                rounding_allowance: None,
                expected_value: None,
                best_value: None,
                iterations: None,
                note: None,
            };
            let mut best: Option<(f64, Vec<usize>)> = None;
            match &self.outcomes[i] {
                SdpOutcome::Solved(sol) => {
                    let mean = sol.pe.mean();
                    let expected_form = (mean.transpose() * c * &mean)[(0, 0)];
                    rec.sdp_form = Some(sol.value);
                    rec.sdp_value = Some(to_obj(sol.value));
                    rec.ball = Some(sol.ball);
                    rec.rounding_gap = Some(sol.value - expected_form);
                    rec.rounding_allowance = Some(allowance_base + 4.0 * sol.ball.max(0.0));
                    rec.expected_value = Some(to_obj(expected_form));
                    rec.iterations = Some(sol.iterations);
                    for a in round_stream(&sol.pe, seed, i as u64, samples) {
                        let v = score(&a);
                        if better((v, &a), best.as_ref()) {
                            best = Some((v, a));
                        }
                    }
                    rec.best_value = best.as_ref().map(|b| b.0);
                }
                SdpOutcome::Infeasible { min_ball } => rec.ball = Some(*min_ball),
                SdpOutcome::Unresolved { reason } => rec.note = Some(reason.clone()),
            }
            (rec, best)
        });

        let mut points = Vec::with_capacity(per_point.len());
        let mut overall: Option<(f64, Vec<usize>)> = None;
        let mut net_index = None;
        for (rec, best) in per_point {
            if let Some((v, a)) = best {
                // Equal values keep the earlier net point.
                if overall.as_ref().is_none_or(|o| v > o.0) {
                    net_index = Some(rec.index);
                    overall = Some((v, a));
                }
            }
            points.push(rec);
        }

        let fallback = overall.is_none();
        let (best_value, best) = match overall {
            Some(o) => o,
            None => self.fallback(seed, &score),
        };
        Selection {
            best_value,
            best,
            net_index,
            fallback,
            points,
            rounding_ms: millis(start),
        }
    }

    /// Best of 100 uniform assignments, used only when no point was solved.
    fn fallback<F: Fn(&[usize]) -> f64>(&self, seed: u64, score: &F) -> (f64, Vec<usize>) {
        use rand::{Rng, SeedableRng};
        let (n, q) = (self.template.n(), self.template.q());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        let mut best: Option<(f64, Vec<usize>)> = None;
        for _ in 0..100 {
            let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..q)).collect();
            let v = score(&a);
            if better((v, &a), best.as_ref()) {
                best = Some((v, a));
            }
        }
        best.expect("at least one sample")
    }

    pub fn k(&self) -> usize {
        self.projector.rank()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_preserves_order() {
        for workers in [1, 2, 3, 8] {
            let v = parallel_map(10, workers, |i| i * i);
            assert_eq!(v, (0..10).map(|i| i * i).collect::<Vec<_>>());
        }
        assert!(parallel_map(0, 4, |i| i).is_empty());
    }

    #[test]
    fn tie_break_prefers_smaller_assignment() {
        let cur = Some((3.0, vec![1, 0]));
        assert!(better((3.0, &[0, 1]), cur.as_ref()));
        assert!(!better((3.0, &[1, 1]), cur.as_ref()));
        assert!(better((4.0, &[1, 1]), cur.as_ref()));
        assert!(better((0.0, &[1, 1]), None));
    }
}
