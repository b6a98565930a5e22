//! The degree-2 pseudoexpectation SDP solved at each net point, and the
//! independent rounding of its marginals.
//!
//! The moment matrix `X` is indexed by the monomials `1, y_{0,0}, ...,
//! y_{n-1,q-1}` (row `1 + q i + alpha` for `y_{i,alpha}`). Internally the SDP
//! is solved over the reduced coordinates `z = (1, y_{i,1}, ..., y_{i,q-1})`
//! with `y_{i,0} = 1 - sum_alpha z_{i,alpha}`, so every block-sum constraint
//! holds by construction and only booleanity and the ball remain as explicit
//! linear constraints.

mod ipm;
mod rounding;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

pub use rounding::{expected_objective, round, round_stream, sanitized_marginals};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::spectral::Projector;
use ipm::{ConicProblem, IpmSettings, IpmStatus, LinearConstraint, SymTerm};

/// Tolerance on moment-matrix invariants.
pub const ETA: f64 = 1e-7;

/// A degree-2 pseudoexpectation over `n` blocks of `q` boolean variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Pseudoexpectation {
    n: usize,
    q: usize,
    moments: DMatrix<f64>,
}

/// Largest observed breach of each invariant.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InvariantReport {
    pub min_eigenvalue: f64,
    pub asymmetry: f64,
    pub normalization: f64,
    pub booleanity: f64,
    pub marginals: f64,
    pub consistency: f64,
}

impl InvariantReport {
    pub fn holds(&self, eta: f64, q: usize) -> bool {
        self.min_eigenvalue >= -eta
            && self.asymmetry <= eta
            && self.normalization <= eta
            && self.booleanity <= eta
            && self.marginals <= eta
            && self.consistency <= q as f64 * eta
    }
}

impl Pseudoexpectation {
    pub fn new(n: usize, q: usize, moments: DMatrix<f64>) -> Result<Self> {
        let dim = n * q + 1;
        if moments.nrows() != dim || moments.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: moments.nrows(),
            });
        }
        Ok(Self { n, q, moments })
    }

    /// The Dirac pseudoexpectation of an integral assignment.
    pub fn from_assignment(q: usize, assignment: &[usize]) -> Self {
        let n = assignment.len();
        let mut y = DVector::zeros(n * q + 1);
        y[0] = 1.0;
        for (i, &a) in assignment.iter().enumerate() {
            y[1 + q * i + a] = 1.0;
        }
        let moments = &y * y.transpose();
        Self { n, q, moments }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn moments(&self) -> &DMatrix<f64> {
        &self.moments
    }

    /// `pE y`.
    pub fn mean(&self) -> DVector<f64> {
        self.moments.view((1, 0), (self.n * self.q, 1)).column(0).into_owned()
    }

    /// `pE y yᵀ`.
    pub fn second_moments(&self) -> DMatrix<f64> {
        let d = self.n * self.q;
        self.moments.view((1, 1), (d, d)).into_owned()
    }

    /// `pE y yᵀ - (pE y)(pE y)ᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let m = self.mean();
        self.second_moments() - &m * m.transpose()
    }

    /// `⟨C, pE y yᵀ⟩`.
    pub fn objective(&self, c: &DMatrix<f64>) -> f64 {
        let d = self.n * self.q;
        self.moments.view((1, 1), (d, d)).dot(c)
    }

    /// `Tr(P X)` for a form `P` over the full monomial basis.
    pub fn moment_form(&self, p: &DMatrix<f64>) -> f64 {
        self.moments.dot(p)
    }

    pub fn invariants(&self) -> InvariantReport {
        let x = &self.moments;
        let (n, q) = (self.n, self.q);
        let idx = |i: usize, a: usize| 1 + q * i + a;
        let asymmetry = (x - x.transpose()).amax();
        let sym = (x + x.transpose()) * 0.5;
        let min_eigenvalue = SymmetricEigen::new(sym).eigenvalues.min();
        let mut booleanity = 0.0_f64;
        let mut marginals = 0.0_f64;
        let mut consistency = 0.0_f64;
        for i in 0..n {
            let mut block = 0.0;
            for a in 0..q {
                let r = idx(i, a);
                booleanity = booleanity.max((x[(r, r)] - x[(0, r)]).abs());
                block += x[(0, r)];
                for j in 0..n {
                    let s: f64 = (0..q).map(|b| x[(r, idx(j, b))]).sum();
                    consistency = consistency.max((s - x[(0, r)]).abs());
                }
            }
            marginals = marginals.max((block - 1.0).abs());
        }
        InvariantReport {
            min_eigenvalue,
            asymmetry,
            normalization: (x[(0, 0)] - 1.0).abs(),
            booleanity,
            marginals,
            consistency,
        }
    }
}

/// Solver tolerances.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SdpSettings {
    pub eta: f64,
    pub max_iter: usize,
    pub tol_feas: f64,
    pub tol_gap: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        let ipm = IpmSettings::default();
        Self {
            eta: ETA,
            max_iter: ipm.max_iter,
            tol_feas: ipm.tol_feas,
            tol_gap: ipm.tol_gap,
        }
    }
}

impl SdpSettings {
    fn ipm(&self) -> IpmSettings {
        IpmSettings {
            max_iter: self.max_iter,
            tol_feas: self.tol_feas,
            tol_gap: self.tol_gap,
        }
    }
}

/// The parts of the SDP shared by every net point: objective, `E^{1/2} U`
/// and the reduced equality constraints.
#[derive(Debug, Clone)]
pub struct SdpTemplate {
    n: usize,
    q: usize,
    objective: DMatrix<f64>,
    basis: DMatrix<f64>,
    /// `E^{1/2} U`.
    weighted_basis: DMatrix<f64>,
    trace_d: f64,
    /// Full-to-reduced change of basis `X = T Y Tᵀ`.
    reduction: DMatrix<f64>,
    reduced_cost: DMatrix<f64>,
    equalities: Vec<LinearConstraint>,
}

fn reduction_matrix(n: usize, q: usize) -> DMatrix<f64> {
    let r = n * (q - 1) + 1;
    let mut t = DMatrix::zeros(n * q + 1, r);
    t[(0, 0)] = 1.0;
    for i in 0..n {
        t[(1 + q * i, 0)] = 1.0;
        for a in 1..q {
            let c = 1 + i * (q - 1) + (a - 1);
            t[(1 + q * i + a, c)] = 1.0;
            t[(1 + q * i, c)] = -1.0;
        }
    }
    t
}

fn reduced_equalities(n: usize, q: usize) -> Vec<LinearConstraint> {
    let mut out = vec![LinearConstraint {
        mat: SymTerm::Sparse(vec![(0, 0, 1.0)]),
        slack: 0.0,
        rhs: 1.0,
    }];
    for i in 0..n {
        let cols: Vec<usize> = (1..q).map(|a| 1 + i * (q - 1) + (a - 1)).collect();
        // z_a^2 = z_a
        for &c in &cols {
            out.push(LinearConstraint {
                mat: SymTerm::Sparse(vec![(c, c, 1.0), (0, c, -0.5), (c, 0, -0.5)]),
                slack: 0.0,
                rhs: 0.0,
            });
        }
        // y_0^2 = y_0 reduces to sum_{a != b} z_a z_b = 0; implied when q = 2.
        if q >= 3 {
            let mut entries = Vec::new();
            for &a in &cols {
                for &b in &cols {
                    if a != b {
                        entries.push((a, b, 1.0));
                    }
                }
            }
            out.push(LinearConstraint {
                mat: SymTerm::Sparse(entries),
                slack: 0.0,
                rhs: 0.0,
            });
        }
    }
    out
}

impl SdpTemplate {
    /// `m` is the `nq x nq` matrix `M`, `e` the diagonal of `E = D ⊗ I_q`.
    pub fn new(m: &SymMatrix, e: &[f64], q: usize, projector: &Projector) -> Result<Self> {
        let dim = m.dim();
        if q < 2 || !dim.is_multiple_of(q) || dim == 0 {
            return Err(Error::InvalidParameter(format!(
                "dimension {dim} is not a positive multiple of q = {q}"
            )));
        }
        if e.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: e.len(),
            });
        }
        if projector.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: projector.dim(),
            });
        }
        let n = dim / q;
        for i in 0..n {
            let d = e[q * i];
            if !(d >= 0.0 && d.is_finite()) || e[q * i..q * (i + 1)].iter().any(|&x| x != d) {
                return Err(Error::InvalidInstance(format!(
                    "E must be D ⊗ I_q with D >= 0; block {i} is not"
                )));
            }
            for a in 0..q {
                for b in 0..q {
                    if m.get(q * i + a, q * i + b) != 0.0 {
                        return Err(Error::NonZeroDiagonalBlock(i));
                    }
                }
            }
        }
        let sqrt_e: Vec<f64> = e.iter().map(|x| x.sqrt()).collect();
        let objective = m.congruence_diag(&sqrt_e).into_matrix();
        let basis = projector.basis.clone();
        let mut weighted_basis = basis.clone();
        for (r, &s) in sqrt_e.iter().enumerate() {
            weighted_basis.row_mut(r).scale_mut(s);
        }
        let reduction = reduction_matrix(n, q);
        let mut full_cost = DMatrix::zeros(dim + 1, dim + 1);
        full_cost.view_mut((1, 1), (dim, dim)).copy_from(&objective);
        let reduced_cost = reduction.transpose() * full_cost * &reduction;
        Ok(Self {
            n,
            q,
            objective,
            basis,
            weighted_basis,
            trace_d: e.iter().sum::<f64>() / q as f64,
            reduction,
            reduced_cost,
            equalities: reduced_equalities(n, q),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn k(&self) -> usize {
        self.basis.ncols()
    }

    pub fn trace_d(&self) -> f64 {
        self.trace_d
    }

    /// `E^{1/2} M E^{1/2}`.
    pub fn objective(&self) -> &DMatrix<f64> {
        &self.objective
    }

    /// `‖E^{1/2} M E^{1/2}‖_F · n q`, the scale of objective tolerances.
    pub fn scale(&self) -> f64 {
        self.objective.norm() * (self.n * self.q) as f64
    }

    /// `F` with `F (1, y) = Uᵀ E^{1/2} y - c`.
    fn ball_factor(&self, coords: &[f64]) -> DMatrix<f64> {
        let k = self.k();
        let dim = self.n * self.q;
        let mut f = DMatrix::zeros(k, dim + 1);
        for (j, &c) in coords.iter().enumerate() {
            f[(j, 0)] = -c;
        }
        f.view_mut((0, 1), (k, dim))
            .copy_from(&self.weighted_basis.transpose());
        f
    }
}

/// The SDP at one net point.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    template: Arc<SdpTemplate>,
    coords: Vec<f64>,
    bound: f64,
    settings: SdpSettings,
}

impl SdpProblem {
    /// `coords` are the net point's coordinates in the projector basis.
    pub fn new(template: Arc<SdpTemplate>, coords: &[f64], eps: f64) -> Result<Self> {
        if coords.len() != template.k() {
            return Err(Error::DimensionMismatch {
                expected: template.k(),
                actual: coords.len(),
            });
        }
        let bound = eps * template.trace_d;
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ball bound eps * Tr D = {bound} must be positive"
            )));
        }
        Ok(Self {
            template,
            coords: coords.to_vec(),
            bound,
            settings: SdpSettings::default(),
        })
    }

    pub fn with_settings(mut self, settings: SdpSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn template(&self) -> &SdpTemplate {
        &self.template
    }

    pub fn objective(&self) -> &DMatrix<f64> {
        &self.template.objective
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.template.basis
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The target `v = U c`.
    pub fn target(&self) -> DVector<f64> {
        &self.template.basis * DVector::from_column_slice(&self.coords)
    }

    /// `ε Tr D`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn settings(&self) -> &SdpSettings {
        &self.settings
    }

    /// The PSD form `P` with `Tr(P X) = pE ‖Π E^{1/2} y - v‖²`.
    pub fn ball_matrix(&self) -> DMatrix<f64> {
        let f = self.template.ball_factor(&self.coords);
        f.transpose() * f
    }

    fn reduced_ball(&self) -> DMatrix<f64> {
        let f = self.template.ball_factor(&self.coords) * &self.template.reduction;
        f.transpose() * f
    }
}

/// Builds the SDP for a single net point.
pub fn build_sdp(
    m: &SymMatrix,
    e: &[f64],
    q: usize,
    projector: &Projector,
    coords: &[f64],
    eps: f64,
) -> Result<SdpProblem> {
    let template = Arc::new(SdpTemplate::new(m, e, q, projector)?);
    SdpProblem::new(template, coords, eps)
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub pe: Pseudoexpectation,
    /// `⟨E^{1/2} M E^{1/2}, pE y yᵀ⟩`.
    pub value: f64,
    /// Measured `pE ‖Π E^{1/2} y - v‖²`.
    pub ball: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub enum SdpOutcome {
    Solved(SdpSolution),
    /// Even the smallest achievable `pE ‖Π E^{1/2} y - v‖²` exceeds the bound.
    Infeasible { min_ball: f64 },
    Unresolved { reason: String },
}

impl SdpOutcome {
    pub fn status(&self) -> &'static str {
        match self {
            SdpOutcome::Solved(_) => "solved",
            SdpOutcome::Infeasible { .. } => "infeasible",
            SdpOutcome::Unresolved { .. } => "unresolved",
        }
    }
}

/// Solves the SDP: first minimizes the ball form to decide feasibility,
/// then maximizes the objective subject to the ball.
pub fn solve_sdp(problem: &SdpProblem) -> SdpOutcome {
    let t = &problem.template;
    let settings = problem.settings.ipm();
    let beta = problem.bound;
    let ball = problem.reduced_ball();

    if t.k() > 0 {
        let phase1 = ipm::solve(
            ConicProblem {
                cost: ball.clone(),
                slack_cost: None,
                constraints: t.equalities.clone(),
            },
            &settings,
        );
        if phase1.status == IpmStatus::Failed {
            return SdpOutcome::Unresolved {
                reason: format!("feasibility phase stalled after {} iterations", phase1.iterations),
            };
        }
        if phase1.dual_obj > beta * (1.0 + 1e-9) {
            return SdpOutcome::Infeasible {
                min_ball: phase1.primal_obj,
            };
        }
    }

    let mut constraints = t.equalities.clone();
    constraints.push(LinearConstraint {
        mat: SymTerm::Dense(ball),
        slack: 1.0,
        rhs: beta,
    });
    let main = ipm::solve(
        ConicProblem {
            cost: -&t.reduced_cost,
            slack_cost: Some(0.0),
            constraints,
        },
        &settings,
    );
    if main.status == IpmStatus::Failed {
        return SdpOutcome::Unresolved {
            reason: format!("objective phase stalled after {} iterations", main.iterations),
        };
    }
    let x = &t.reduction * &main.x * t.reduction.transpose();
    let x = (&x + x.transpose()) * 0.5;
    let pe = Pseudoexpectation {
        n: t.n,
        q: t.q,
        moments: x,
    };
    let report = pe.invariants();
    if !report.holds(problem.settings.eta, t.q) {
        return SdpOutcome::Unresolved {
            reason: format!("moment invariants violated: {report:?}"),
        };
    }
    let value = pe.objective(&t.objective);
    let ball = pe.moment_form(&problem.ball_matrix());
    SdpOutcome::Solved(SdpSolution {
        pe,
        value,
        ball,
        iterations: main.iterations,
    })
}
