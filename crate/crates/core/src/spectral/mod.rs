//! Symmetric eigendecomposition, threshold ranks and top-eigenspace
//! projectors.

mod certificate;
mod power;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub use certificate::{
    rank_certificate, verify_rank_bound, BoundParams, BoundReport, CertificateReport, EpsCheck,
};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Slack used when counting eigenvalues against a threshold.
pub const COUNT_TOL: f64 = 1e-9;

/// Full spectrum of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the unit eigenvector for `eigenvalues[i]`.
    pub eigenvectors: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Pos,
    Neg,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn threshold_rank(&self, tau: f64, side: Side) -> Result<usize> {
        check_tau(tau)?;
        Ok(count_at_threshold(&self.eigenvalues, tau, side))
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("threshold must be positive, got {tau}")))
    }
}

pub(crate) fn count_at_threshold(eigenvalues: &[f64], tau: f64, side: Side) -> usize {
    match side {
        Side::Pos => eigenvalues.iter().filter(|&&l| l >= tau - COUNT_TOL).count(),
        Side::Neg => eigenvalues.iter().filter(|&&l| l <= -tau + COUNT_TOL).count(),
    }
}

/// Flips each column so its first non-negligible coordinate is positive.
pub(crate) fn fix_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        if let Some(&first) = col.iter().find(|x| x.abs() > 1e-10) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Dense symmetric eigendecomposition, eigenvalues descending.
pub fn eig_sym(m: &SymMatrix) -> SpectralData {
    let n = m.dim();
    if n == 0 {
        return SpectralData {
            eigenvalues: Vec::new(),
            eigenvectors: DMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(m.as_matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    fix_signs(&mut eigenvectors);
    SpectralData {
        eigenvalues,
        eigenvectors,
    }
}

/// `rank_{>= tau}` (side `Pos`) or `rank_{<= -tau}` (side `Neg`).
pub fn threshold_rank(m: &SymMatrix, tau: f64, side: Side) -> Result<usize> {
    check_tau(tau)?;
    Ok(count_at_threshold(&eig_sym(m).eigenvalues, tau, side))
}

/// Orthonormal basis `U` of a retained eigenspace; the projector is `U Uᵀ`.
#[derive(Debug, Clone)]
pub struct Projector {
    pub basis: DMatrix<f64>,
    /// Eigenvalue (or Ritz value) attached to each basis column.
    pub values: Vec<f64>,
}

impl Projector {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Dense `U Uᵀ`.
    pub fn matrix(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }
}

/// How the top eigenspace is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigMode {
    Exact,
    /// Block power iteration seeded with the given value.
    Power { seed: u64 },
}

/// Projector onto the eigenvectors of `m` with eigenvalue at least `eps`.
///
/// `Power` mode returns a subspace of dimension at most `rank_{>= eps}(m)`
/// that contains every eigenvector with eigenvalue at least `2 eps` up to a
/// residual of `1e-3`, or [`Error::PowerNotConverged`].
pub fn top_eigenspace(m: &SymMatrix, eps: f64, mode: EigMode) -> Result<Projector> {
    check_tau(eps)?;
    match mode {
        EigMode::Exact => {
            let spec = eig_sym(m);
            if let Some(norm) = spec.eigenvalues.iter().map(|l| l.abs()).reduce(f64::max) {
                if norm > 1.0 + 1e-6 {
                    return Err(Error::Precondition(format!(
                        "operator norm {norm} exceeds 1"
                    )));
                }
            }
            Ok(exact_projector(&spec, eps))
        }
        EigMode::Power { seed } => power::top_eigenspace_power(m, eps, seed),
    }
}

pub(crate) fn exact_projector(spec: &SpectralData, eps: f64) -> Projector {
    let k = count_at_threshold(&spec.eigenvalues, eps, Side::Pos);
    Projector {
        basis: spec.eigenvectors.columns(0, k).into_owned(),
        values: spec.eigenvalues[..k].to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::CspInstance;
    use crate::oracle::jacobi_eigenvalues;

    fn cycle(n: usize) -> CspInstance {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        CspInstance::maxcut(n, &edges)
    }

    fn k33() -> CspInstance {
        let edges: Vec<_> = (0..3).flat_map(|u| (3..6).map(move |v| (u, v))).collect();
        CspInstance::maxcut(6, &edges)
    }

    #[test]
    fn identity_spectrum() {
        let s = eig_sym(&SymMatrix::identity(3));
        assert_eq!(s.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn swap_matrix() {
        let m = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = eig_sym(&m);
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((s.eigenvalues[1] + 1.0).abs() < 1e-12);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.eigenvectors[(0, 0)] - r).abs() < 1e-12);
        assert!((s.eigenvectors[(1, 0)] - r).abs() < 1e-12);
        assert!((s.eigenvectors[(0, 1)] - r).abs() < 1e-12);
        assert!((s.eigenvectors[(1, 1)] + r).abs() < 1e-12);
    }

    #[test]
    fn c4_matches_cosine_formula_and_jacobi() {
        let a = cycle(4).normalized_adjacency().unwrap();
        let s = eig_sym(&a);
        let oracle = jacobi_eigenvalues(&a);
        // cos(2 pi j / 4) for j = 0..4
        for (got, want) in s.eigenvalues.iter().zip([1.0, 0.0, 0.0, -1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        for (got, want) in s.eigenvalues.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn threshold_rank_examples() {
        let i3 = SymMatrix::identity(3);
        assert_eq!(threshold_rank(&i3, 0.5, Side::Pos).unwrap(), 3);
        let a = k33().normalized_adjacency().unwrap();
        assert_eq!(threshold_rank(&a, 0.5, Side::Neg).unwrap(), 1);
        let c3 = cycle(3).normalized_adjacency().unwrap();
        assert_eq!(threshold_rank(&c3, 0.4, Side::Neg).unwrap(), 2);
        assert_eq!(threshold_rank(&c3, 0.6, Side::Neg).unwrap(), 0);
        assert!(threshold_rank(&c3, 0.0, Side::Pos).is_err());
        assert!(threshold_rank(&c3, -1.0, Side::Neg).is_err());
    }

    #[test]
    fn threshold_counts_boundary_inclusively() {
        let m = SymMatrix::from_diagonal(&[0.5 - 1e-10, 0.5 - 1e-8]);
        assert_eq!(threshold_rank(&m, 0.5, Side::Pos).unwrap(), 1);
    }

    #[test]
    fn top_eigenspace_diagonal() {
        let m = SymMatrix::from_diagonal(&[0.9, 0.1]);
        let p = top_eigenspace(&m, 0.5, EigMode::Exact).unwrap();
        assert_eq!(p.rank(), 1);
        assert!((p.basis[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(p.basis[(1, 0)], 0.0);
    }

    #[test]
    fn top_eigenspace_empty() {
        let m = SymMatrix::from_diagonal(&[0.3, -0.9]);
        let p = top_eigenspace(&m, 0.5, EigMode::Exact).unwrap();
        assert_eq!(p.rank(), 0);
        assert_eq!(p.matrix().iter().fold(0.0_f64, |a, v| a.max(v.abs())), 0.0);
    }

    #[test]
    fn top_eigenspace_of_negated_k33_is_bipartition() {
        let inst = k33();
        let a = inst.normalized_adjacency().unwrap().scaled(-1.0);
        let p = top_eigenspace(&a, 0.5, EigMode::Exact).unwrap();
        assert_eq!(p.rank(), 1);
        // D^{1/2} times the +-1 bipartition indicator, normalized. All degrees
        // are 3, so this is (1,1,1,-1,-1,-1)/sqrt(6).
        let w = 1.0 / 6f64.sqrt();
        for i in 0..6 {
            let want = if i < 3 { w } else { -w };
            assert!((p.basis[(i, 0)] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn top_eigenspace_rejects_large_norm() {
        let m = SymMatrix::from_diagonal(&[1.5, 0.0]);
        assert!(matches!(
            top_eigenspace(&m, 0.5, EigMode::Exact),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn power_mode_matches_exact_on_regular_graph() {
        let spec = crate::generate::GenSpec::RandomRegular { n: 24, d: 3 };
        let inst = crate::generate::generate(&spec, 3).unwrap().instance;
        let a = inst.normalized_adjacency().unwrap();
        let eps = 0.3;
        let exact = eig_sym(&a);
        let p = top_eigenspace(&a, eps, EigMode::Power { seed: 11 }).unwrap();
        let rank = count_at_threshold(&exact.eigenvalues, eps, Side::Pos);
        assert!(p.rank() <= rank);
        let proj = p.matrix();
        for (i, &l) in exact.eigenvalues.iter().enumerate() {
            if l >= 2.0 * eps {
                let u = exact.eigenvectors.column(i);
                let resid = (&u - &proj * u).norm();
                assert!(resid <= 1e-3, "eigenvalue {l}: residual {resid}");
            }
        }
    }
}
