//! Primal-dual interior point method for small dense SDPs.
//!
//! Solves
//!
//! ```text
//! min ⟨C, X⟩ + c_s s   s.t.  ⟨A_i, X⟩ + a_i s = b_i,   X ⪰ 0,  s >= 0
//! ```
//!
//! where the scalar `s` is optional. Search directions are HKM with a
//! Mehrotra predictor-corrector; the starting point is infeasible.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

/// A symmetric constraint or cost matrix.
#[derive(Debug, Clone)]
pub(crate) enum SymTerm {
    /// Full list of `(row, col, value)` entries; off-diagonal entries appear
    /// in both orders.
    Sparse(Vec<(usize, usize, f64)>),
    Dense(DMatrix<f64>),
}

impl SymTerm {
    fn dot(&self, g: &DMatrix<f64>) -> f64 {
        match self {
            SymTerm::Sparse(entries) => entries.iter().map(|&(r, c, v)| v * g[(r, c)]).sum(),
            SymTerm::Dense(a) => a.dot(g),
        }
    }

    fn add_scaled_to(&self, out: &mut DMatrix<f64>, w: f64) {
        match self {
            SymTerm::Sparse(entries) => {
                for &(r, c, v) in entries {
                    out[(r, c)] += w * v;
                }
            }
            SymTerm::Dense(a) => *out += a * w,
        }
    }

    /// `X A Zinv`.
    fn sandwich(&self, x: &DMatrix<f64>, zinv: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            SymTerm::Sparse(entries) => {
                let n = x.nrows();
                let mut out = DMatrix::zeros(n, n);
                for &(a, b, v) in entries {
                    // v * X[:, a] Zinv[b, :]
                    out.ger(v, &x.column(a), &zinv.row(b).transpose(), 1.0);
                }
                out
            }
            SymTerm::Dense(a) => x * a * zinv,
        }
    }

    fn norm(&self) -> f64 {
        match self {
            SymTerm::Sparse(entries) => entries.iter().map(|e| e.2 * e.2).sum::<f64>().sqrt(),
            SymTerm::Dense(a) => a.norm(),
        }
    }

    fn scale(&mut self, w: f64) {
        match self {
            SymTerm::Sparse(entries) => entries.iter_mut().for_each(|e| e.2 *= w),
            SymTerm::Dense(a) => *a *= w,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LinearConstraint {
    pub mat: SymTerm,
    /// Coefficient on the scalar variable `s`.
    pub slack: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct ConicProblem {
    pub cost: DMatrix<f64>,
    /// Cost on `s`; `None` drops the scalar variable.
    pub slack_cost: Option<f64>,
    pub constraints: Vec<LinearConstraint>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmSettings {
    pub max_iter: usize,
    pub tol_feas: f64,
    pub tol_gap: f64,
}

impl Default for IpmSettings {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol_feas: 1e-10,
            tol_gap: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    /// Stopped early but the iterate meets the looser fallback targets.
    Inexact,
    Failed,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmResult {
    pub status: IpmStatus,
    pub x: DMatrix<f64>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub iterations: usize,
}

/// Largest `alpha` with `X + alpha dX ⪰ 0`, given `chol(X)`.
fn psd_step(l: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let linv = match l.clone().try_inverse() {
        Some(m) => m,
        None => return 0.0,
    };
    let w = &linv * dx * linv.transpose();
    let w = (&w + w.transpose()) * 0.5;
    let lmin = SymmetricEigen::new(w).eigenvalues.min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn lp_step(s: f64, ds: f64) -> f64 {
    if ds >= 0.0 {
        f64::INFINITY
    } else {
        -s / ds
    }
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// Scales the cost and every constraint row to unit norm; returns the cost
/// scale factor.
fn normalize(mut p: ConicProblem) -> (ConicProblem, f64) {
    let cost_norm = (p.cost.norm_squared() + p.slack_cost.unwrap_or(0.0).powi(2)).sqrt();
    let cost_scale = 1.0 / cost_norm.max(1.0);
    p.cost *= cost_scale;
    if let Some(c) = p.slack_cost.as_mut() {
        *c *= cost_scale;
    }
    for c in p.constraints.iter_mut() {
        let norm = (c.mat.norm().powi(2) + c.slack * c.slack).sqrt();
        let w = 1.0 / norm.max(1e-300);
        c.mat.scale(w);
        c.slack *= w;
        c.rhs *= w;
    }
    (p, cost_scale)
}

struct Direction {
    dx: DMatrix<f64>,
    dz: DMatrix<f64>,
    dy: DVector<f64>,
    ds: f64,
    dzs: f64,
}

pub(crate) fn solve(problem: ConicProblem, settings: &IpmSettings) -> IpmResult {
    let (p, cost_scale) = normalize(problem);
    let n = p.cost.nrows();
    let m = p.constraints.len();
    let has_slack = p.slack_cost.is_some();
    let cs = p.slack_cost.unwrap_or(0.0);
    let nu = n as f64 + if has_slack { 1.0 } else { 0.0 };
    let b = DVector::from_iterator(m, p.constraints.iter().map(|c| c.rhs));
    let b_norm = b.norm();
    let c_norm = (p.cost.norm_squared() + cs * cs).sqrt();

    let xi = 10.0_f64.max((n as f64).sqrt()).max(
        p.constraints
            .iter()
            .map(|c| (1.0 + c.rhs.abs()) * n as f64)
            .fold(0.0, f64::max),
    );
    let zeta = 10.0_f64.max((n as f64).sqrt()).max(c_norm);
    let mut x = DMatrix::identity(n, n) * xi;
    let mut z = DMatrix::identity(n, n) * zeta;
    let mut s = if has_slack { xi } else { 0.0 };
    let mut zs = if has_slack { zeta } else { 0.0 };
    let mut y = DVector::zeros(m);

    let mut status = IpmStatus::Failed;
    let mut iterations = 0;
    let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);

    let objectives = |x: &DMatrix<f64>, s: f64, y: &DVector<f64>| {
        let pobj = p.cost.dot(x) + cs * s;
        let dobj = b.dot(y);
        (pobj, dobj)
    };

    for it in 0..settings.max_iter {
        iterations = it;
        let mut aty = DMatrix::zeros(n, n);
        let mut aty_s = 0.0;
        for (c, &yi) in p.constraints.iter().zip(y.iter()) {
            c.mat.add_scaled_to(&mut aty, yi);
            aty_s += c.slack * yi;
        }
        let rp = DVector::from_iterator(
            m,
            p.constraints
                .iter()
                .map(|c| c.rhs - c.mat.dot(&x) - c.slack * s),
        );
        let rd = &p.cost - &aty - &z;
        let rd_s = if has_slack { cs - aty_s - zs } else { 0.0 };
        let mu = (x.dot(&z) + s * zs) / nu;

        let (pobj, dobj) = objectives(&x, s, &y);
        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = (rd.norm_squared() + rd_s * rd_s).sqrt() / (1.0 + c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        last = (pinf, dinf, gap);
        if pinf < settings.tol_feas && dinf < settings.tol_feas && gap < settings.tol_gap {
            status = IpmStatus::Optimal;
            break;
        }

        let Some(zchol) = Cholesky::new(z.clone()) else {
            break;
        };
        let Some(xchol) = Cholesky::new(x.clone()) else {
            break;
        };
        let zinv = sym(zchol.inverse());

        // Schur complement M_ij = ⟨A_i, X A_j Z^{-1}⟩ + a_i a_j s / z_s.
        let sandwiches: Vec<DMatrix<f64>> = p
            .constraints
            .iter()
            .map(|c| c.mat.sandwich(&x, &zinv))
            .collect();
        let mut schur = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let mut v = p.constraints[i].mat.dot(&sandwiches[j]);
                if has_slack {
                    v += p.constraints[i].slack * p.constraints[j].slack * s / zs;
                }
                schur[(i, j)] = v;
            }
        }
        for i in 0..m {
            for j in i + 1..m {
                schur[(i, j)] = schur[(j, i)];
            }
        }
        let schur_chol = match Cholesky::new(schur.clone()) {
            Some(c) => c,
            None => {
                let reg = 1e-12 * schur.diagonal().max().max(1e-300);
                let mut r = schur.clone();
                for i in 0..m {
                    r[(i, i)] += reg;
                }
                match Cholesky::new(r) {
                    Some(c) => c,
                    None => break,
                }
            }
        };
        let x_rd_zinv = &x * &rd * &zinv;

        let direction = |rc_zinv: &DMatrix<f64>, rc_s: f64| -> Direction {
            // rc_zinv = Rc Z^{-1}, rc_s = complementarity residual of s.
            let mut rhs = rp.clone();
            for (i, c) in p.constraints.iter().enumerate() {
                rhs[i] += -c.mat.dot(rc_zinv) + c.mat.dot(&x_rd_zinv);
                if has_slack {
                    rhs[i] -= c.slack * (rc_s - s * rd_s) / zs;
                }
            }
            let dy = schur_chol.solve(&rhs);
            let mut at_dy = DMatrix::zeros(n, n);
            let mut at_dy_s = 0.0;
            for (c, &d) in p.constraints.iter().zip(dy.iter()) {
                c.mat.add_scaled_to(&mut at_dy, d);
                at_dy_s += c.slack * d;
            }
            let dz = &rd - &at_dy;
            let dx = sym(rc_zinv - &x * &dz * &zinv);
            let (ds, dzs) = if has_slack {
                let dzs = rd_s - at_dy_s;
                ((rc_s - s * dzs) / zs, dzs)
            } else {
                (0.0, 0.0)
            };
            Direction { dx, dz, dy, ds, dzs }
        };

        let lx = xchol.l();
        let lz = zchol.l();
        let step_lengths = |d: &Direction| -> Option<(f64, f64)> {
            let mut ap = psd_step(&lx, &d.dx);
            let mut ad = psd_step(&lz, &d.dz);
            if has_slack {
                ap = ap.min(lp_step(s, d.ds));
                ad = ad.min(lp_step(zs, d.dzs));
            }
            (!ap.is_nan() && !ad.is_nan()).then_some((ap, ad))
        };

        // Predictor.
        let xz = &x * &z;
        let rc_aff_zinv = -&x; // (-XZ) Z^{-1}
        let aff = direction(&rc_aff_zinv, -s * zs);
        let Some((ap, ad)) = step_lengths(&aff) else {
            break;
        };
        let ap_a = ap.min(1.0);
        let ad_a = ad.min(1.0);
        let mu_aff = ((&x + &aff.dx * ap_a).dot(&(&z + &aff.dz * ad_a))
            + (s + ap_a * aff.ds) * (zs + ad_a * aff.dzs))
            / nu;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector: Rc = sigma mu I - XZ - dXa dZa.
        let rc = DMatrix::identity(n, n) * (sigma * mu) - &xz - &aff.dx * &aff.dz;
        let rc_zinv = rc * &zinv;
        let rc_s = if has_slack {
            sigma * mu - s * zs - aff.ds * aff.dzs
        } else {
            0.0
        };
        let dir = direction(&rc_zinv, rc_s);
        let Some((ap, ad)) = step_lengths(&dir) else {
            break;
        };
        let gamma = 0.9 + 0.09 * ap.min(ad).min(1.0);
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            break;
        }
        x = sym(&x + &dir.dx * ap);
        z = sym(&z + &dir.dz * ad);
        y += &dir.dy * ad;
        if has_slack {
            s += ap * dir.ds;
            zs += ad * dir.dzs;
        }
        iterations = it + 1;
    }

    if status != IpmStatus::Optimal {
        let (pinf, dinf, gap) = last;
        if pinf < 1e-8 && dinf < 1e-7 && gap < 1e-6 {
            status = IpmStatus::Inexact;
        }
    }
    let (pobj, dobj) = objectives(&x, s, &y);
    IpmResult {
        status,
        x,
        primal_obj: pobj / cost_scale,
        dual_obj: dobj / cost_scale,
        iterations,
    }
}
