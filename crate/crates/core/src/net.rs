//! Grid nets over a Euclidean ball in the retained eigenspace.
//!
//! The net is the lattice `(δ/√k) Z^k` restricted to the cube
//! `|z_j| <= ⌈R√k/δ⌉` and clipped to the ball of radius `R + δ`. Rounding any
//! point of the radius-`R` ball to the lattice moves it by at most `δ/2`, so
//! the grid is a `δ`-net of that ball.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_NET_CAP: u64 = 10_000_000;

/// Ordered list of net points in projector-basis coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct EpsilonNet {
    pub k: usize,
    pub radius: f64,
    pub mesh: f64,
    /// Lattice spacing `δ/√k` (0 when `k = 0`).
    pub spacing: f64,
    pub points: Vec<Vec<f64>>,
}

impl EpsilonNet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Half-width (in lattice steps) of the enumerated cube.
pub fn half_width(k: usize, radius: f64, mesh: f64) -> u64 {
    if k == 0 {
        0
    } else {
        (radius * (k as f64).sqrt() / mesh).ceil() as u64
    }
}

/// `(1 + 2⌈R√k/δ⌉)^k`, the number of cube points before clipping.
pub fn size_bound(k: usize, radius: f64, mesh: f64) -> u128 {
    let side = 1 + 2 * half_width(k, radius, mesh) as u128;
    side.checked_pow(k as u32).unwrap_or(u128::MAX)
}

/// Enumerates the grid net in lexicographic order of lattice indices.
///
/// Refuses with [`Error::NetTooLarge`] when the unclipped cube would exceed
/// `cap` points.
pub fn build_net(k: usize, radius: f64, mesh: f64, cap: u64) -> Result<EpsilonNet> {
    if !(radius > 0.0 && radius.is_finite()) || !(mesh > 0.0 && mesh.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "net radius {radius} and mesh {mesh} must be positive"
        )));
    }
    let bound = size_bound(k, radius, mesh);
    if bound > cap as u128 {
        return Err(Error::NetTooLarge { size: bound, cap });
    }
    if k == 0 {
        return Ok(EpsilonNet {
            k,
            radius,
            mesh,
            spacing: 0.0,
            points: vec![Vec::new()],
        });
    }
    let h = half_width(k, radius, mesh) as i64;
    let spacing = mesh / (k as f64).sqrt();
    let limit = (radius + mesh) * (1.0 + 1e-12);
    let mut points = Vec::new();
    let mut idx = vec![-h; k];
    loop {
        let coords: Vec<f64> = idx.iter().map(|&z| z as f64 * spacing).collect();
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm <= limit {
            points.push(coords);
        }
        // odometer, last coordinate fastest
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(EpsilonNet {
                    k,
                    radius,
                    mesh,
                    spacing,
                    points,
                });
            }
            pos -= 1;
            if idx[pos] < h {
                idx[pos] += 1;
                break;
            }
            idx[pos] = -h;
        }
    }
}

/// Maps net coordinates to the ambient vector `U c`.
pub fn lift(coords: &[f64], basis: &DMatrix<f64>) -> Result<DVector<f64>> {
    if coords.len() != basis.ncols() {
        return Err(Error::DimensionMismatch {
            expected: basis.ncols(),
            actual: coords.len(),
        });
    }
    Ok(basis * DVector::from_column_slice(coords))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k0_is_single_empty_point() {
        let net = build_net(0, 1.0, 0.5, DEFAULT_NET_CAP).unwrap();
        assert_eq!(net.points, vec![Vec::<f64>::new()]);
        assert_eq!(size_bound(0, 1.0, 0.5), 1);
    }

    #[test]
    fn k1_grid() {
        let net = build_net(1, 1.0, 0.5, DEFAULT_NET_CAP).unwrap();
        let xs: Vec<f64> = net.points.iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(size_bound(1, 1.0, 0.5), 5);
        // scan [-1, 1] at resolution 1e-3
        for s in 0..=2000 {
            let x = -1.0 + s as f64 * 1e-3;
            let d = xs.iter().map(|p| (p - x).abs()).fold(f64::INFINITY, f64::min);
            assert!(d <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn k2_covers_unit_disc() {
        use rand::{Rng, SeedableRng};
        let net = build_net(2, 1.0, 1.0, DEFAULT_NET_CAP).unwrap();
        assert!((net.spacing - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut accepted = 0;
        while accepted < 1000 {
            let x: f64 = rng.random_range(-1.0..1.0);
            let y: f64 = rng.random_range(-1.0..1.0);
            if x * x + y * y > 1.0 {
                continue;
            }
            accepted += 1;
            let d = net
                .points
                .iter()
                .map(|p| ((p[0] - x).powi(2) + (p[1] - y).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(d <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn refuses_over_cap() {
        let err = build_net(6, 10.0, 0.1, 1000).unwrap_err();
        assert!(matches!(err, Error::NetTooLarge { cap: 1000, .. }));
        assert!(build_net(1, 0.0, 1.0, 10).is_err());
    }

    #[test]
    fn lift_examples() {
        let basis = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let v = lift(&[2.5], &basis).unwrap();
        assert_eq!(v.as_slice(), &[2.5, 0.0, 0.0]);
        let z = lift(&[0.0], &basis).unwrap();
        assert!(z.iter().all(|&x| x == 0.0));
        assert!(lift(&[1.0, 2.0], &basis).is_err());
    }

    #[test]
    fn net_is_deterministic() {
        let a = build_net(3, 2.0, 0.7, DEFAULT_NET_CAP).unwrap();
        let b = build_net(3, 2.0, 0.7, DEFAULT_NET_CAP).unwrap();
        assert_eq!(a.points, b.points);
    }
}
