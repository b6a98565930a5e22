//! Exhaustive and textbook reference routines used to validate the solver.
//!
//! Nothing here shares code with the solver path it checks.

use crate::csp::{Assignment, CspInstance};
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Largest search space the exhaustive oracles accept.
pub const ORACLE_CAP: u64 = 10_000_000;

fn space_size(q: usize, n: usize) -> u128 {
    (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX)
}

/// Advances `a` to the next assignment in lexicographic order.
fn next_assignment(a: &mut [usize], q: usize) -> bool {
    for pos in (0..a.len()).rev() {
        a[pos] += 1;
        if a[pos] < q {
            return true;
        }
        a[pos] = 0;
    }
    false
}

/// Exact optimum by enumeration; ties go to the lexicographically smallest
/// optimal assignment.
pub fn brute_force(instance: &CspInstance) -> Result<(usize, Assignment)> {
    instance.check()?;
    let size = space_size(instance.q, instance.n);
    if size > ORACLE_CAP as u128 {
        return Err(Error::TooLargeForOracle {
            size,
            cap: ORACLE_CAP,
        });
    }
    let mut a = vec![0; instance.n];
    let mut best = (instance.count_satisfied(&a), a.clone());
    while next_assignment(&mut a, instance.q) {
        let v = instance.count_satisfied(&a);
        if v > best.0 {
            best = (v, a.clone());
        }
    }
    Ok(best)
}

/// `max_{x in {±1}^n} xᵀ A x` by enumeration; ties go to the first vector in
/// the order where coordinate 0 is most significant and `+1` precedes `-1`.
pub fn brute_force_quadratic(a: &SymMatrix) -> Result<(f64, Vec<i8>)> {
    let n = a.dim();
    let size = space_size(2, n);
    if size > ORACLE_CAP as u128 {
        return Err(Error::TooLargeForOracle {
            size,
            cap: ORACLE_CAP,
        });
    }
    let value = |bits: &[usize]| -> f64 {
        let x: Vec<f64> = bits.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += x[i] * a.get(i, j) * x[j];
            }
        }
        s
    };
    let mut bits = vec![0; n];
    let mut best = (value(&bits), bits.clone());
    while next_assignment(&mut bits, 2) {
        let v = value(&bits);
        if v > best.0 {
            best = (v, bits.clone());
        }
    }
    let signs = best.1.iter().map(|&b| if b == 0 { 1 } else { -1 }).collect();
    Ok((best.0, signs))
}

/// Eigenvalues (descending) by the cyclic Jacobi rotation method.
pub fn jacobi_eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let n = m.dim();
    let mut a = m.rows();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                if a[p][r].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[r][r] - a[p][p]) / (2.0 * a[p][r]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akr = a[k][r];
                    a[k][p] = c * akp - s * akr;
                    a[k][r] = s * akp + c * akr;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let ark = a[r][k];
                    a[p][k] = c * apk - s * ark;
                    a[r][k] = s * apk + c * ark;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_and_k33() {
        let tri = CspInstance::maxcut(3, &[(0, 1), (1, 2), (0, 2)]);
        let (opt, a) = brute_force(&tri).unwrap();
        assert_eq!(opt, 2);
        assert_eq!(a, vec![0, 0, 1]);
        let edges: Vec<_> = (0..3).flat_map(|u| (3..6).map(move |v| (u, v))).collect();
        let (opt, a) = brute_force(&CspInstance::maxcut(6, &edges)).unwrap();
        assert_eq!(opt, 9);
        assert_eq!(a, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn refuses_large_spaces() {
        let big = CspInstance::maxcut(30, &[(0, 1)]);
        assert!(matches!(brute_force(&big), Err(Error::TooLargeForOracle { .. })));
    }

    #[test]
    fn quadratic_all_ones() {
        let n = 4;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 / 3.0 }).collect())
            .collect();
        let (v, x) = brute_force_quadratic(&SymMatrix::from_rows(&rows).unwrap()).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        assert_eq!(x, vec![1, 1, 1, 1]);
    }

    #[test]
    fn jacobi_small() {
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let ev = jacobi_eigenvalues(&m);
        assert!((ev[0] - 3.0).abs() < 1e-12);
        assert!((ev[1] - 1.0).abs() < 1e-12);
    }
}
