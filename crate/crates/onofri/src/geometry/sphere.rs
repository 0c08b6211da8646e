//! Quadrature on the unit sphere S^2, normalized to total measure 1.
//!
//! Product rule: Gauss-Legendre in the polar cosine times the uniform
//! trapezoid rule in longitude. Exact (to roundoff) for spherical
//! harmonics up to the grid order.

use serde::{Deserialize, Serialize};

use super::gauss::gauss_legendre;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereGrid {
    /// Unit vectors of the quadrature nodes.
    points: Vec<[f64; 3]>,
    /// Normalized weights: sum is exactly 1.0 in f64.
    weights: Vec<f64>,
    n_polar: usize,
    n_azimuth: usize,
}

impl SphereGrid {
    pub fn new(n_polar: usize, n_azimuth: usize) -> Result<Self> {
        if n_polar < 2 || n_azimuth < 4 {
            return Err(Error::GridTooSmall(format!(
                "sphere grid needs >= 2 polar and >= 4 azimuthal nodes, got {n_polar}x{n_azimuth}"
            )));
        }
        let (z, wz) = gauss_legendre(n_polar);
        let mut points = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        for (zi, wi) in z.iter().zip(&wz) {
            let s = (1.0 - zi * zi).sqrt();
            for j in 0..n_azimuth {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / n_azimuth as f64;
                points.push([s * phi.cos(), s * phi.sin(), *zi]);
                // d(omega)/4pi = dz dphi / 4pi; the normalization below
                // removes the residual roundoff in the 4pi bookkeeping.
                weights.push(wi / (2.0 * n_azimuth as f64));
            }
        }
        // Force the weight sum to be exactly 1 in f64 so that the
        // functional of the zero field is exactly zero.
        for _ in 0..4 {
            let sum: f64 = weights.iter().sum();
            if sum == 1.0 {
                break;
            }
            weights[0] += 1.0 - sum;
        }
        Ok(Self {
            points,
            weights,
            n_polar,
            n_azimuth,
        })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mean of `f` over the sphere (the measure is normalized).
    pub fn integrate(&self, mut f: impl FnMut(&[f64; 3]) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (i, (p, &w)) in self.points.iter().zip(&self.weights).enumerate() {
            let v = f(p);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample {
                    index: i,
                    radius: 1.0,
                    value: v,
                });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    pub fn integrate_values(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        Ok(values.iter().zip(&self.weights).map(|(v, w)| v * w).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_exactly_one() {
        let g = SphereGrid::new(48, 96).unwrap();
        let sum: f64 = g.weights().iter().sum();
        assert_eq!(sum, 1.0);
    }

    #[test]
    fn low_degree_harmonics_integrate_to_zero() {
        let g = SphereGrid::new(24, 48).unwrap();
        // real harmonics of degree 1..4 (unnormalized bases suffice)
        type Harmonic = Box<dyn Fn(&[f64; 3]) -> f64>;
        let harmonics: Vec<Harmonic> = vec![
            Box::new(|p| p[2]),
            Box::new(|p| p[0]),
            Box::new(|p| p[0] * p[1]),
            Box::new(|p| 3.0 * p[2] * p[2] - 1.0),
            Box::new(|p| p[2] * (5.0 * p[2] * p[2] - 3.0)),
            Box::new(|p| 35.0 * p[2].powi(4) - 30.0 * p[2] * p[2] + 3.0),
            Box::new(|p| p[0] * p[2] * (7.0 * p[2] * p[2] - 3.0)),
        ];
        for (k, h) in harmonics.iter().enumerate() {
            let v = g.integrate(|p| h(p)).unwrap();
            assert!(v.abs() < 1e-10, "harmonic #{k}: {v}");
        }
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(SphereGrid::new(1, 8).is_err());
        assert!(SphereGrid::new(8, 3).is_err());
    }

    #[test]
    fn smooth_zonal_integral_matches_closed_form() {
        // mean of e^{z} over the sphere = sinh(1)
        let g = SphereGrid::new(32, 8).unwrap();
        let v = g.integrate(|p| p[2].exp()).unwrap();
        assert!((v - 1f64.sinh()).abs() < 1e-13);
    }
}
