//! End-to-end frontends: general 2CSPs, MAX-CUT and Boolean quadratic
//! maximization over `{±1}^n`.

mod engine;

use serde::Serialize;

pub use engine::{prepare, EigenSummary, PhaseTimings, PointRecord, Prepared, Selection};

use crate::csp::{reattach, CspInstance};
use crate::error::{Error, Result};
use crate::io::Graph;
use crate::matrix::SymMatrix;
use crate::net::DEFAULT_NET_CAP;
use crate::oracle::{brute_force, brute_force_quadratic};
use crate::sdp::SdpSettings;
use crate::spectral::{eig_sym, EigMode};

/// Knobs shared by all frontends.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub eig: EigMode,
    pub workers: usize,
    pub net_cap: u64,
    /// Rounding samples per net point; `None` means `max(16, ⌈4/ε⌉)`.
    pub samples: Option<usize>,
    /// Compute OPT by exhaustive search when the instance is small enough.
    pub oracle: bool,
    pub sdp: SdpSettings,
    /// Include wall-clock timings in the report (breaks byte-stability).
    pub timings: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            eig: EigMode::Exact,
            workers: 1,
            net_cap: DEFAULT_NET_CAP,
            samples: None,
            oracle: false,
            sdp: SdpSettings::default(),
            timings: false,
        }
    }
}

/// Default rounding samples per net point.
pub fn default_samples(eps: f64) -> usize {
    16.max((4.0 / eps).ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Csp,
    Maxcut,
    Quadratic,
}

#[derive(Debug, Clone, Serialize)]
pub struct BestRecord {
    pub value: f64,
    pub assignment: Vec<usize>,
    /// Net point that produced it; absent for the uniform fallback.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub net_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OutcomeCounts {
    pub solved: usize,
    pub infeasible: usize,
    pub unresolved: usize,
}

/// Quadratic-frontend extras.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticInfo {
    /// Off-diagonal part was divided by this to reach operator norm <= 1.
    pub scale: f64,
    /// `Tr A`, added back to every reported value.
    pub diagonal_trace: f64,
    pub signs: Vec<i8>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub problem: Problem,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub q: usize,
    /// Constraint count (absent for quadratic programs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub eps: f64,
    /// Threshold actually used by the algorithm.
    pub eps_algorithm: f64,
    pub seed: u64,
    pub samples: usize,
    pub k: usize,
    pub net_size: usize,
    pub net_bound: u64,
    pub radius: f64,
    pub mesh: f64,
    pub trace_d: f64,
    /// `‖E^{1/2} M E^{1/2}‖_F · n q`.
    pub scale: f64,
    pub eigen: EigenSummary,
    pub best: BestRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    pub fallback: bool,
    pub counts: OutcomeCounts,
    /// Degree-0 variables removed before the spectral step.
    pub stripped: Vec<usize>,
    pub points: Vec<PointRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<QuadraticInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<PhaseTimings>,
}

impl SolveReport {
    /// `best=<v> OPT=<v|n/a> gap=<v|n/a> |S|=<v> k=<v>`.
    pub fn summary(&self) -> String {
        let fmt = |v: f64| {
            if v.fract() == 0.0 && v.abs() < 1e15 {
                format!("{v:.0}")
            } else {
                format!("{v:.6}")
            }
        };
        let opt = self.opt.map(fmt).unwrap_or_else(|| "n/a".into());
        let gap = self.gap.map(fmt).unwrap_or_else(|| "n/a".into());
        format!(
            "best={} OPT={opt} gap={gap} |S|={} k={}",
            fmt(self.best.value),
            self.net_size,
            self.k
        )
    }
}

enum Scorer {
    Csp(CspInstance),
    Cut(Graph),
    Quadratic(SymMatrix),
}

impl Scorer {
    fn score(&self, a: &[usize]) -> f64 {
        match self {
            Scorer::Csp(inst) => inst.count_satisfied(a) as f64,
            Scorer::Cut(g) => g.cut_size(a) as f64,
            Scorer::Quadratic(m) => {
                let x = signs(a);
                let n = x.len();
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += f64::from(x[i]) * m.get(i, j) * f64::from(x[j]);
                    }
                }
                s
            }
        }
    }
}

/// Block symbol 0 is `+1`, symbol 1 is `-1`.
pub fn signs(a: &[usize]) -> Vec<i8> {
    a.iter().map(|&s| if s == 0 { 1 } else { -1 }).collect()
}

/// A frontend with its SDP solves done, ready to be rounded under any seed.
pub struct Solver {
    problem: Problem,
    name: Option<String>,
    full_n: usize,
    kept: Vec<usize>,
    q: usize,
    m: Option<usize>,
    eps: f64,
    affine: (f64, f64),
    scorer: Scorer,
    opt: Option<f64>,
    quadratic: Option<(f64, f64)>,
    options: SolveOptions,
    prepared: Prepared,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("eps = {eps} must lie in (0, 1)")))
    }
}

fn diag_of(e: &SymMatrix) -> Vec<f64> {
    (0..e.dim()).map(|i| e.get(i, i)).collect()
}

/// `[[1, -1], [-1, 1]]`.
fn sign_tensor() -> SymMatrix {
    SymMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).expect("symmetric")
}

impl Solver {
    /// General 2CSP: `M = (1/q)` normalized label-extended matrix,
    /// `E = q D ⊗ I_q`, threshold `2 ε`.
    pub fn csp(instance: &CspInstance, eps: f64, options: SolveOptions) -> Result<Self> {
        check_eps(eps)?;
        instance.check()?;
        if instance.m() == 0 {
            return Err(Error::InvalidInstance("instance has no constraints".into()));
        }
        let (reduced, kept) = instance.strip_isolated();
        let (m, e) = reduced.normalized_label_extended()?;
        let eps_alg = 2.0 * eps;
        let prepared = prepare(&m, &diag_of(&e), reduced.q, eps_alg, &options)?;
        let opt = if options.oracle {
            brute_force(instance).ok().map(|(v, _)| v as f64)
        } else {
            None
        };
        Ok(Self {
            problem: Problem::Csp,
            name: instance.name.clone(),
            full_n: instance.n,
            kept,
            q: instance.q,
            m: Some(instance.m()),
            eps,
            affine: (0.5, 0.0),
            scorer: Scorer::Csp(reduced),
            opt,
            quadratic: None,
            options,
            prepared,
        })
    }

    /// MAX-CUT: `M = -(1/2) D^{-1/2} A D^{-1/2} ⊗ [[1,-1],[-1,1]]`,
    /// `E = D ⊗ I_2`, so `k` is the number of normalized adjacency
    /// eigenvalues at most `-ε`.
    pub fn maxcut(graph: &Graph, eps: f64, options: SolveOptions) -> Result<Self> {
        check_eps(eps)?;
        if graph.m() == 0 {
            return Err(Error::InvalidInstance("graph has no edges".into()));
        }
        let instance = graph.to_instance();
        let (reduced, kept) = instance.strip_isolated();
        let reduced_graph = Graph::from_instance(&reduced)?;
        let a_hat = reduced.normalized_adjacency()?;
        let m = a_hat.kron(&sign_tensor()).scaled(-0.5);
        let e: Vec<f64> = reduced
            .degrees()
            .iter()
            .flat_map(|&d| [d as f64, d as f64])
            .collect();
        let prepared = prepare(&m, &e, 2, eps, &options)?;
        let opt = if options.oracle {
            brute_force(&instance).ok().map(|(v, _)| v as f64)
        } else {
            None
        };
        let edges = graph.m() as f64;
        Ok(Self {
            problem: Problem::Maxcut,
            name: None,
            full_n: graph.n,
            kept,
            q: 2,
            m: Some(graph.m()),
            eps,
            affine: (0.5, 0.5 * edges),
            scorer: Scorer::Cut(reduced_graph),
            opt,
            quadratic: None,
            options,
            prepared,
        })
    }

    /// `max xᵀ A x` over `x ∈ {±1}^n`: the diagonal is dropped (it adds
    /// `Tr A` to every value), the rest is scaled to operator norm at most 1
    /// and run with `M = (1/2) Â ⊗ [[1,-1],[-1,1]]`, `E = I`.
    pub fn quadratic(a: &SymMatrix, eps: f64, options: SolveOptions) -> Result<Self> {
        check_eps(eps)?;
        let n = a.dim();
        if n == 0 {
            return Err(Error::InvalidInstance("matrix is empty".into()));
        }
        let mut off = a.clone();
        for i in 0..n {
            off.set_sym(i, i, 0.0);
        }
        let trace: f64 = (0..n).map(|i| a.get(i, i)).sum();
        let norm = eig_sym(&off)
            .eigenvalues
            .iter()
            .fold(0.0_f64, |acc, l| acc.max(l.abs()));
        let scale = norm.max(1.0);
        let a_hat = off.scaled(1.0 / scale);
        let m = a_hat.kron(&sign_tensor()).scaled(0.5);
        let prepared = prepare(&m, &vec![1.0; 2 * n], 2, eps, &options)?;
        let opt = if options.oracle {
            brute_force_quadratic(a).ok().map(|(v, _)| v)
        } else {
            None
        };
        Ok(Self {
            problem: Problem::Quadratic,
            name: None,
            full_n: n,
            kept: (0..n).collect(),
            q: 2,
            m: None,
            eps,
            affine: (2.0 * scale, trace),
            scorer: Scorer::Quadratic(a.clone()),
            opt,
            quadratic: Some((scale, trace)),
            options,
            prepared,
        })
    }

    pub fn prepared(&self) -> &Prepared {
        &self.prepared
    }

    pub fn opt(&self) -> Option<f64> {
        self.opt
    }

    /// Maps a raw SDP form value to the frontend's objective units.
    pub fn form_to_objective(&self, form: f64) -> f64 {
        self.affine.0 * form + self.affine.1
    }

    pub fn samples(&self) -> usize {
        self.options.samples.unwrap_or_else(|| default_samples(self.eps))
    }

    /// Rounds the prepared solves under `seed` and assembles the report.
    pub fn solve(&self, seed: u64) -> SolveReport {
        let p = &self.prepared;
        let samples = self.samples();
        let sel = p.select(seed, samples, self.options.workers, self.affine, |a| {
            self.scorer.score(a)
        });
        let assignment = reattach(self.full_n, &self.kept, &sel.best);
        let mut timings = p.timings;
        timings.rounding_ms = sel.rounding_ms;

        let counts = OutcomeCounts {
            solved: sel.points.iter().filter(|r| r.status == "solved").count(),
            infeasible: sel.points.iter().filter(|r| r.status == "infeasible").count(),
            unresolved: sel.points.iter().filter(|r| r.status == "unresolved").count(),
        };
        let kept: std::collections::BTreeSet<usize> = self.kept.iter().copied().collect();
        let stripped = (0..self.full_n).filter(|i| !kept.contains(i)).collect();
        let t = &p.template;
        SolveReport {
            problem: self.problem,
            name: self.name.clone(),
            n: self.full_n,
            q: self.q,
            m: self.m,
            eps: self.eps,
            eps_algorithm: p.eps,
            seed,
            samples,
            k: p.projector.rank(),
            net_size: p.net.len(),
            net_bound: u64::try_from(p.net_bound).unwrap_or(u64::MAX),
            radius: p.net.radius,
            mesh: p.net.mesh,
            trace_d: t.trace_d(),
            scale: t.scale(),
            eigen: p.eigen.clone(),
            opt: self.opt,
            gap: self.opt.map(|o| o - sel.best_value),
            best: BestRecord {
                value: sel.best_value,
                assignment: assignment.clone(),
                net_index: sel.net_index,
            },
            fallback: sel.fallback,
            counts,
            stripped,
            points: sel.points,
            quadratic: self.quadratic.map(|(scale, diagonal_trace)| QuadraticInfo {
                scale,
                diagonal_trace,
                signs: signs(&assignment),
            }),
            timings: self.options.timings.then_some(timings),
        }
    }
}

/// Runs the full pipeline on a general 2CSP with user-facing `eps`.
pub fn solve_2csp(instance: &CspInstance, eps: f64, seed: u64, options: SolveOptions) -> Result<SolveReport> {
    Ok(Solver::csp(instance, eps, options)?.solve(seed))
}

pub fn solve_maxcut(graph: &Graph, eps: f64, seed: u64, options: SolveOptions) -> Result<SolveReport> {
    Ok(Solver::maxcut(graph, eps, options)?.solve(seed))
}

pub fn solve_boolean_quadratic(a: &SymMatrix, eps: f64, seed: u64, options: SolveOptions) -> Result<SolveReport> {
    Ok(Solver::quadratic(a, eps, options)?.solve(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::Constraint;
    use crate::io::parse_graph;

    fn oracle() -> SolveOptions {
        SolveOptions {
            oracle: true,
            ..SolveOptions::default()
        }
    }

    #[test]
    fn single_equality_edge() {
        let inst = CspInstance::new(2, 2, vec![Constraint::new(0, 1, vec![[0, 0], [1, 1]])]);
        let r = solve_2csp(&inst, 0.1, 1, oracle()).unwrap();
        assert_eq!(r.best.value, 1.0);
        assert_eq!(r.opt, Some(1.0));
        assert!(!r.fallback);
    }

    #[test]
    fn all_pairs_allowed_reaches_m() {
        let all = vec![[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [1, 2], [2, 0], [2, 1], [2, 2]];
        let edges = [(0, 1), (1, 2), (0, 3)]
            .iter()
            .map(|&(u, v)| Constraint::new(u, v, all.clone()))
            .collect();
        let inst = CspInstance::new(5, 3, edges);
        let r = solve_2csp(&inst, 0.3, 2, SolveOptions::default()).unwrap();
        assert_eq!(r.best.value, 3.0);
        assert_eq!(r.stripped, vec![4]);
        assert_eq!(r.best.assignment[4], 0);
    }

    #[test]
    fn k33_cut_is_exact() {
        let mut text = String::from("6 9\n");
        for u in 0..3 {
            for v in 3..6 {
                text.push_str(&format!("{u} {v}\n"));
            }
        }
        let g = parse_graph(&text).unwrap();
        let r = solve_maxcut(&g, 0.1, 3, oracle()).unwrap();
        assert_eq!(r.k, 1);
        assert_eq!(r.best.value, 9.0);
        assert_eq!(r.opt, Some(9.0));
        assert_eq!(g.cut_size(&r.best.assignment), 9);
    }

    #[test]
    fn cycles() {
        let c4 = parse_graph("4 4\n0 1\n1 2\n2 3\n0 3\n").unwrap();
        let r = solve_maxcut(&c4, 0.1, 0, oracle()).unwrap();
        assert_eq!(r.k, 1);
        assert_eq!(r.best.value, 4.0);
        let c3 = parse_graph("3 3\n0 1\n1 2\n0 2\n").unwrap();
        let r = solve_maxcut(&c3, 0.05, 0, oracle()).unwrap();
        assert_eq!(r.k, 2);
        assert_eq!(r.opt, Some(2.0));
        assert!(r.best.value >= 2.0 - 5.0 * 0.05 * 2.0 * 3.0);
    }

    #[test]
    fn quadratic_examples() {
        let zero = SymMatrix::zeros(3);
        let r = solve_boolean_quadratic(&zero, 0.2, 0, oracle()).unwrap();
        assert_eq!(r.best.value, 0.0);

        let n = 4;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 / 3.0 }).collect())
            .collect();
        let a = SymMatrix::from_rows(&rows).unwrap();
        let r = solve_boolean_quadratic(&a, 0.2, 0, oracle()).unwrap();
        assert!((r.opt.unwrap() - 4.0).abs() < 1e-12);
        assert!((r.best.value - 4.0).abs() < 1e-9);
        let x = &r.quadratic.as_ref().unwrap().signs;
        assert!(x.iter().all(|&s| s == x[0]));

        let mut c4 = SymMatrix::zeros(4);
        for (u, v) in [(0, 1), (1, 2), (2, 3), (0, 3)] {
            c4.set_sym(u, v, -0.5);
        }
        let r = solve_boolean_quadratic(&c4, 0.2, 0, oracle()).unwrap();
        assert!((r.best.value - r.opt.unwrap()).abs() < 1e-9);
        let x = &r.quadratic.as_ref().unwrap().signs;
        assert!(x[0] != x[1] && x[1] != x[2] && x[2] != x[3]);
    }

    #[test]
    fn quadratic_diagonal_and_scale() {
        let a = SymMatrix::from_rows(&[vec![2.0, 3.0], vec![3.0, -1.0]]).unwrap();
        let r = solve_boolean_quadratic(&a, 0.2, 5, oracle()).unwrap();
        let info = r.quadratic.as_ref().unwrap();
        assert_eq!(info.diagonal_trace, 1.0);
        assert!((info.scale - 3.0).abs() < 1e-12);
        assert!((r.best.value - 7.0).abs() < 1e-12);
        assert_eq!(r.opt, Some(7.0));
    }

    #[test]
    fn rejects_bad_eps() {
        let g = parse_graph("2 1\n0 1\n").unwrap();
        assert!(solve_maxcut(&g, 0.0, 0, SolveOptions::default()).is_err());
        assert!(solve_maxcut(&g, 1.0, 0, SolveOptions::default()).is_err());
    }

    #[test]
    fn summary_line() {
        let g = parse_graph("2 1\n0 1\n").unwrap();
        let r = solve_maxcut(&g, 0.2, 0, oracle()).unwrap();
        assert_eq!(r.summary(), format!("best=1 OPT=1 gap=0 |S|={} k={}", r.net_size, r.k));
    }
}
