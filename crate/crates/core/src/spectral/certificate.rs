//! Threshold-rank comparison between a non-negative matrix and a matrix it
//! entrywise dominates, plus the explicit witness behind it.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{count_at_threshold, eig_sym, Side};
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

const DOMINANCE_TOL: f64 = 1e-12;

/// The witness `V` (columns `w_i ⊗ w_i / ‖w_i‖`) and its three measured
/// quantities.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub lambda: f64,
    pub t: usize,
    /// `⟨A, VᵀV⟩`, to be at least `λ²`.
    pub correlation: f64,
    /// `‖VᵀV‖_F²`, to be at most `1/t`.
    pub frobenius_sq: f64,
    /// `Tr(VᵀV)`, to be exactly 1.
    pub trace: f64,
    pub tolerance: f64,
    pub correlation_ok: bool,
    pub frobenius_ok: bool,
    pub trace_ok: bool,
    #[serde(skip)]
    pub witness: DMatrix<f64>,
}

impl CertificateReport {
    pub fn pass(&self) -> bool {
        self.correlation_ok && self.frobenius_ok && self.trace_ok
    }
}

fn check_nonneg_contraction(a: &SymMatrix) -> Result<()> {
    let n = a.dim();
    for i in 0..n {
        for j in 0..n {
            if a.get(i, j) < 0.0 {
                return Err(Error::Precondition(format!(
                    "A has a negative entry at ({i}, {j})"
                )));
            }
        }
    }
    let norm = eig_sym(a)
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, l| acc.max(l.abs()));
    if norm > 1.0 + 1e-9 {
        return Err(Error::Precondition(format!("‖A‖ = {norm} exceeds 1")));
    }
    Ok(())
}

/// Checks `|B[(i,a),(j,b)]| <= A[i,j]` with `q = dim(B) / dim(A)`.
fn check_dominance(a: &SymMatrix, b: &SymMatrix) -> Result<usize> {
    let n = a.dim();
    if n == 0 || !b.dim().is_multiple_of(n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.dim(),
        });
    }
    let q = b.dim() / n;
    for r in 0..b.dim() {
        for c in 0..b.dim() {
            let bound = a.get(r / q, c / q);
            if b.get(r, c).abs() > bound + DOMINANCE_TOL {
                return Err(Error::Precondition(format!(
                    "|B[{r},{c}]| = {} exceeds A[{},{}] = {bound}",
                    b.get(r, c).abs(),
                    r / q,
                    c / q
                )));
            }
        }
    }
    Ok(q)
}

/// Builds the witness from the top `t` eigenvectors of `b` and measures it.
///
/// Requires `A >= 0` entrywise, `‖A‖ <= 1`, `|B_ij| <= A_ij` and at least `t`
/// eigenvalues of `B` that are `>= lambda >= 0`.
pub fn rank_certificate(a: &SymMatrix, b: &SymMatrix, lambda: f64, t: usize) -> Result<CertificateReport> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    if t == 0 {
        return Err(Error::InvalidParameter("t must be positive".into()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be >= 0")));
    }
    check_nonneg_contraction(a)?;
    check_dominance(a, b)?;
    let spec = eig_sym(b);
    let available = spec
        .eigenvalues
        .iter()
        .filter(|&&l| l >= lambda - super::COUNT_TOL)
        .count();
    if available < t {
        return Err(Error::Precondition(format!(
            "B has {available} eigenvalues >= {lambda}, need {t}"
        )));
    }

    let n = a.dim();
    let scale = 1.0 / (t as f64).sqrt();
    let u = spec.eigenvectors.columns(0, t) * scale;
    let mut v = DMatrix::zeros(t * t, n);
    for i in 0..n {
        let w = u.row(i);
        let norm = w.norm();
        if norm == 0.0 {
            continue;
        }
        for s in 0..t {
            for r in 0..t {
                v[(s * t + r, i)] = w[s] * w[r] / norm;
            }
        }
    }
    let gram = v.transpose() * &v;
    let correlation = a.as_matrix().component_mul(&gram).sum();
    let frobenius_sq = gram.norm_squared();
    let trace = gram.trace();
    let tolerance = 1e-9 * n as f64;
    Ok(CertificateReport {
        lambda,
        t,
        correlation,
        frobenius_sq,
        trace,
        tolerance,
        correlation_ok: correlation >= lambda * lambda - tolerance,
        frobenius_ok: frobenius_sq <= 1.0 / t as f64 + tolerance,
        trace_ok: (trace - 1.0).abs() <= tolerance,
        witness: v,
    })
}

/// Thresholds for [`verify_rank_bound`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundParams {
    pub tau: f64,
    pub sigma: f64,
    /// Also check `rank_{>= 2 q eps}(B) <= rank_{>= eps²}(A) / eps⁴`.
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub q: usize,
    pub tau: f64,
    pub sigma: f64,
    /// `rank_{>= tau}(A)`.
    pub rank_a: usize,
    /// `q * sqrt(tau (1 - sigma) + sigma)`.
    pub threshold_b: f64,
    pub rank_b: usize,
    /// `rank_a / sigma²`.
    pub bound: f64,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_check: Option<EpsCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsCheck {
    pub eps: f64,
    pub rank_a: usize,
    pub threshold_b: f64,
    pub rank_b: usize,
    pub bound: f64,
    pub holds: bool,
}

impl BoundReport {
    pub fn all_hold(&self) -> bool {
        self.holds && self.eps_check.as_ref().is_none_or(|c| c.holds)
    }
}

/// Compares `rank_{>= q sqrt(tau(1-sigma)+sigma)}(B)` against
/// `rank_{>= tau}(A) / sigma²`, where `B` is `A`-dominated blockwise with
/// `q = dim(B) / dim(A)` (`q = 1` is the plain signed case).
pub fn verify_rank_bound(a: &SymMatrix, b: &SymMatrix, params: &BoundParams) -> Result<BoundReport> {
    let BoundParams { tau, sigma, eps } = *params;
    if !(tau > 0.0 && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tau = {tau} and sigma = {sigma} must be positive"
        )));
    }
    check_nonneg_contraction(a)?;
    let q = check_dominance(a, b)?;
    let spec_a = eig_sym(a).eigenvalues;
    let spec_b = eig_sym(b).eigenvalues;
    let qf = q as f64;

    let rank_a = count_at_threshold(&spec_a, tau, Side::Pos);
    let threshold_b = qf * (tau * (1.0 - sigma) + sigma).sqrt();
    let rank_b = count_at_threshold(&spec_b, threshold_b, Side::Pos);
    let bound = rank_a as f64 / (sigma * sigma);

    let eps_check = match eps {
        Some(e) => {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::InvalidParameter(format!("eps = {e} outside (0, 1)")));
            }
            let rank_a = count_at_threshold(&spec_a, e * e, Side::Pos);
            let threshold_b = 2.0 * qf * e;
            let rank_b = count_at_threshold(&spec_b, threshold_b, Side::Pos);
            let bound = rank_a as f64 / e.powi(4);
            Some(EpsCheck {
                eps: e,
                rank_a,
                threshold_b,
                rank_b,
                bound,
                holds: rank_b as f64 <= bound,
            })
        }
        None => None,
    };

    Ok(BoundReport {
        q,
        tau,
        sigma,
        rank_a,
        threshold_b,
        rank_b,
        bound,
        holds: rank_b as f64 <= bound,
        eps_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap() -> SymMatrix {
        SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn certificate_swap_matrix() {
        // U = (1,1)/sqrt2, w_i = 1/sqrt2, v_i = 1/sqrt2, VᵀV = J/2.
        let r = rank_certificate(&swap(), &swap(), 1.0, 1).unwrap();
        assert!((r.correlation - 1.0).abs() < 1e-12);
        assert!((r.frobenius_sq - 1.0).abs() < 1e-12);
        assert!((r.trace - 1.0).abs() < 1e-12);
        assert!(r.pass());
    }

    #[test]
    fn certificate_negated_swap() {
        // Top eigenvector of -A is (1,-1)/sqrt2; VᵀV is again J/2.
        let b = swap().scaled(-1.0);
        let r = rank_certificate(&swap(), &b, 1.0, 1).unwrap();
        assert!((r.correlation - 1.0).abs() < 1e-12);
        assert!((r.frobenius_sq - 1.0).abs() < 1e-12);
        assert!((r.trace - 1.0).abs() < 1e-12);
        assert!(r.pass());
    }

    #[test]
    fn certificate_requires_enough_eigenvalues() {
        let err = rank_certificate(&swap(), &swap(), 1.0, 2).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn certificate_rejects_non_dominated() {
        let b = swap().scaled(1.5);
        assert!(rank_certificate(&swap(), &b, 0.5, 1).is_err());
        let neg = SymMatrix::from_rows(&[vec![0.0, -0.5], vec![-0.5, 0.0]]).unwrap();
        assert!(rank_certificate(&neg, &neg, 0.1, 1).is_err());
    }

    #[test]
    fn bound_with_b_equal_a() {
        let a = swap();
        let r = verify_rank_bound(
            &a,
            &a,
            &BoundParams {
                tau: 0.25,
                sigma: 0.25,
                eps: None,
            },
        )
        .unwrap();
        assert_eq!(r.q, 1);
        assert_eq!(r.rank_a, 1);
        assert_eq!(r.rank_b, 1);
        assert!(r.all_hold());
    }

    #[test]
    fn bound_rejects_bad_blocks() {
        let a = swap();
        let b = SymMatrix::zeros(3);
        assert!(verify_rank_bound(
            &a,
            &b,
            &BoundParams {
                tau: 0.25,
                sigma: 0.25,
                eps: None
            }
        )
        .is_err());
    }
}
