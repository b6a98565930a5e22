use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fix_signs, Projector, COUNT_TOL};
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

const RESIDUAL_TOL: f64 = 1e-3;

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Block power iteration on `(M + I) / 2`, which has the same eigenvectors
/// as `M` in the same order and a non-negative spectrum when `‖M‖ <= 1`.
pub(super) fn top_eigenspace_power(m: &SymMatrix, eps: f64, seed: u64) -> Result<Projector> {
    let n = m.dim();
    let cap = 64 * (n.max(2) as f64).log2().ceil() as usize;
    if n == 0 {
        return Ok(Projector {
            basis: DMatrix::zeros(0, 0),
            values: Vec::new(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = m.as_matrix();
    let shifted = (a + DMatrix::identity(n, n)) * 0.5;

    let mut block = n.min(4);
    let mut q = orthonormalize(DMatrix::from_fn(n, block, |_, _| rng.random_range(-1.0..1.0)));
    let mut iterations = 0;
    while iterations < cap {
        q = orthonormalize(&shifted * &q);
        iterations += 1;

        // Rayleigh-Ritz on the current block.
        let h = q.transpose() * a * &q;
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
        let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut ritz = DMatrix::zeros(n, block);
        for (dst, &src) in order.iter().enumerate() {
            ritz.set_column(dst, &(&q * eig.eigenvectors.column(src)));
        }

        let kept = theta.iter().filter(|&&t| t >= eps - COUNT_TOL).count();
        if kept == block && block < n {
            // Every Ritz value clears the threshold: widen the block.
            let extra = block.min(n - block);
            let fresh = DMatrix::from_fn(n, extra, |_, _| rng.random_range(-1.0..1.0));
            let mut widened = DMatrix::zeros(n, block + extra);
            widened.columns_mut(0, block).copy_from(&ritz);
            widened.columns_mut(block, extra).copy_from(&fresh);
            block += extra;
            q = orthonormalize(widened);
            continue;
        }
        // Eigenvectors at 2 eps sit at least eps above the discarded Ritz
        // values, so a residual of RESIDUAL_TOL * eps keeps them within
        // RESIDUAL_TOL of the retained span. The largest discarded Ritz pair
        // must settle too, or an empty block would pass on the first sweep.
        let converged = (0..(kept + 1).min(block)).all(|i| {
            let u = ritz.column(i);
            (a * u - u * theta[i]).norm() <= RESIDUAL_TOL * eps
        });
        if converged {
            let mut basis = ritz.columns(0, kept).into_owned();
            fix_signs(&mut basis);
            return Ok(Projector {
                basis,
                values: theta[..kept].to_vec(),
            });
        }
        q = ritz;
    }
    Err(Error::PowerNotConverged { iterations: cap })
}
