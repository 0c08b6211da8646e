//! Finite-difference and spectral derivatives on the disk grid.
//!
//! Radial derivatives use three-point stencils on the (non-uniform)
//! Gauss-Legendre radii; the innermost ring reaches across the origin to
//! the antipodal angle and the outermost ring uses the boundary ring as
//! its outer neighbor, so every interior node gets a centered stencil.
//! Angular derivatives are spectral (FFT), exact for trigonometric
//! polynomials resolved by the grid.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::DiskGrid;
use crate::error::{Error, Result};

/// Gradient samples at the interior nodes of a disk grid, stored as the
/// physical components (d_r u, r^{-1} d_theta u).
#[derive(Debug, Clone)]
pub struct DiskGradient {
    pub radial: Vec<f64>,
    pub angular: Vec<f64>,
}

impl DiskGradient {
    pub fn norm_squared(&self, idx: usize) -> f64 {
        self.radial[idx] * self.radial[idx] + self.angular[idx] * self.angular[idx]
    }
}

/// Non-uniform three-point first derivative, applied in difference form
/// `a (inner - center) + c (outer - center)` so constants differentiate
/// to exactly zero.
fn d1_apply(inner: f64, center: f64, outer: f64, hm: f64, hp: f64) -> f64 {
    let a = -hp / (hm * (hm + hp));
    let c = hm / (hp * (hm + hp));
    a * (inner - center) + c * (outer - center)
}

/// Non-uniform three-point second derivative, same difference form.
fn d2_apply(inner: f64, center: f64, outer: f64, hm: f64, hp: f64) -> f64 {
    let a = 2.0 / (hm * (hm + hp));
    let c = 2.0 / (hp * (hm + hp));
    a * (inner - center) + c * (outer - center)
}

/// Spectral derivative of one periodic ring; `order` is 1 or 2.
///
/// The first sample is subtracted before transforming so that constant
/// rings differentiate to exactly zero (their centered ring is the zero
/// vector, which the FFT maps to exact zeros).
fn spectral_ring_derivative(ring: &[f64], order: u32, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = ring.len();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let base = ring[0];
    let mut buf: Vec<Complex<f64>> = ring.iter().map(|&v| Complex::new(v - base, 0.0)).collect();
    fft.process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let ks = if k <= n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        };
        *c = match order {
            1 => {
                // drop the unmatched Nyquist mode for odd derivatives
                if 2 * k == n {
                    Complex::new(0.0, 0.0)
                } else {
                    *c * Complex::new(0.0, ks as f64)
                }
            }
            2 => *c * (-(ks as f64) * ks as f64),
            _ => unreachable!("only first and second angular derivatives are used"),
        };
    }
    ifft.process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

fn check_shapes(grid: &DiskGrid, values: &[f64], boundary: &[f64]) -> Result<()> {
    if grid.n_radial() < 4 || grid.n_theta() < 4 {
        return Err(Error::GridTooSmall(format!(
            "differentiation needs at least 4x4 nodes, grid is {}x{}",
            grid.n_radial(),
            grid.n_theta()
        )));
    }
    if values.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    if boundary.len() != grid.n_theta() {
        return Err(Error::ShapeMismatch {
            expected: grid.n_theta(),
            got: boundary.len(),
        });
    }
    Ok(())
}

/// Radial neighbor bookkeeping shared by gradient and Laplacian: returns
/// (inner value, h_minus, outer value, h_plus) for node (i, j).
fn radial_neighbors(
    grid: &DiskGrid,
    values: &[f64],
    boundary: &[f64],
    i: usize,
    j: usize,
) -> (f64, f64, f64, f64) {
    let r = grid.radial_nodes();
    let nt = grid.n_theta();
    let (inner, hm) = if i == 0 {
        // across the origin: same ray, antipodal angle
        (values[grid.index(0, (j + nt / 2) % nt)], 2.0 * r[0])
    } else {
        (values[grid.index(i - 1, j)], r[i] - r[i - 1])
    };
    let (outer, hp) = if i + 1 == grid.n_radial() {
        (boundary[j], grid.radius() - r[i])
    } else {
        (values[grid.index(i + 1, j)], r[i + 1] - r[i])
    };
    (inner, hm, outer, hp)
}

/// Physical gradient (d_r u, r^{-1} d_theta u) of a sampled field.
pub fn gradient_disk(grid: &DiskGrid, values: &[f64], boundary: &[f64]) -> Result<DiskGradient> {
    check_shapes(grid, values, boundary)?;
    let nr = grid.n_radial();
    let nt = grid.n_theta();
    let mut radial = vec![0.0; grid.len()];
    let mut angular = vec![0.0; grid.len()];
    let mut planner = FftPlanner::new();

    for i in 0..nr {
        for j in 0..nt {
            let (inner, hm, outer, hp) = radial_neighbors(grid, values, boundary, i, j);
            radial[grid.index(i, j)] = d1_apply(inner, values[grid.index(i, j)], outer, hm, hp);
        }
        let ring = &values[grid.index(i, 0)..grid.index(i, 0) + nt];
        let dth = spectral_ring_derivative(ring, 1, &mut planner);
        let r = grid.radial_nodes()[i];
        for j in 0..nt {
            angular[grid.index(i, j)] = dth[j] / r;
        }
    }
    Ok(DiskGradient { radial, angular })
}

/// Discrete Laplacian u_rr + u_r / r + u_theta_theta / r^2 at the interior
/// nodes.
pub fn laplacian_disk(grid: &DiskGrid, values: &[f64], boundary: &[f64]) -> Result<Vec<f64>> {
    check_shapes(grid, values, boundary)?;
    let nr = grid.n_radial();
    let nt = grid.n_theta();
    let mut out = vec![0.0; grid.len()];
    let mut planner = FftPlanner::new();

    for i in 0..nr {
        let r = grid.radial_nodes()[i];
        for j in 0..nt {
            let (inner, hm, outer, hp) = radial_neighbors(grid, values, boundary, i, j);
            let center = values[grid.index(i, j)];
            let ur = d1_apply(inner, center, outer, hm, hp);
            let urr = d2_apply(inner, center, outer, hm, hp);
            out[grid.index(i, j)] = urr + ur / r;
        }
        let ring = &values[grid.index(i, 0)..grid.index(i, 0) + nt];
        let dtt = spectral_ring_derivative(ring, 2, &mut planner);
        for j in 0..nt {
            out[grid.index(i, j)] += dtt[j] / (r * r);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DiskGrid;

    fn sample(grid: &DiskGrid, f: impl Fn(f64, f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let vals = grid
            .iter_nodes()
            .map(|(i, j)| f(grid.radial_nodes()[i], grid.theta(j)))
            .collect();
        let bnd = (0..grid.n_theta())
            .map(|j| f(grid.radius(), grid.theta(j)))
            .collect();
        (vals, bnd)
    }

    #[test]
    fn gradient_of_constant_is_exactly_zero() {
        let grid = DiskGrid::new(1.0, 16, 32).unwrap();
        let (vals, bnd) = sample(&grid, |_, _| 3.25);
        let g = gradient_disk(&grid, &vals, &bnd).unwrap();
        assert!(g.radial.iter().all(|&v| v == 0.0));
        assert!(g.angular.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_of_r_squared_is_linear() {
        let grid = DiskGrid::new(1.0, 64, 16).unwrap();
        let (vals, bnd) = sample(&grid, |r, _| r * r);
        let g = gradient_disk(&grid, &vals, &bnd).unwrap();
        let mut worst = 0.0f64;
        for (i, j) in grid.iter_nodes() {
            let idx = grid.index(i, j);
            worst = worst.max((g.radial[idx] - 2.0 * grid.radial_nodes()[i]).abs());
            worst = worst.max(g.angular[idx].abs());
        }
        // three-point stencils are exact on quadratics
        assert!(worst < 1e-8, "max node error {worst}");
    }

    #[test]
    fn gradient_matches_analytic_oracle_for_harmonic_bump() {
        // u = sin(3 theta) r^3 (1 - r^2), smooth on the whole disk:
        // d_r u = (3 r^2 - 5 r^4) sin(3 theta),
        // r^{-1} d_theta u = 3 r^2 (1 - r^2) cos(3 theta)
        let sup_error = |res: usize| -> f64 {
            let grid = DiskGrid::new(1.0, res, 32).unwrap();
            let (vals, bnd) = sample(&grid, |r, t| (3.0 * t).sin() * r.powi(3) * (1.0 - r * r));
            let g = gradient_disk(&grid, &vals, &bnd).unwrap();
            let mut worst = 0.0f64;
            for (i, j) in grid.iter_nodes() {
                let (r, t) = (grid.radial_nodes()[i], grid.theta(j));
                let idx = grid.index(i, j);
                worst = worst
                    .max((g.radial[idx] - (3.0 * r * r - 5.0 * r.powi(4)) * (3.0 * t).sin()).abs());
                worst = worst
                    .max((g.angular[idx] - 3.0 * r * r * (1.0 - r * r) * (3.0 * t).cos()).abs());
            }
            worst
        };
        let coarse = sup_error(64);
        let fine = sup_error(128);
        // second-order radial stencils dominate the error
        assert!(fine < 2e-3, "sup error at 128 nodes: {fine}");
        assert!(fine < 0.5 * coarse, "no decay: {coarse} -> {fine}");
    }

    #[test]
    fn too_small_grids_are_rejected() {
        let grid = DiskGrid::new(1.0, 3, 8).unwrap();
        let (vals, bnd) = sample(&grid, |r, _| r);
        assert!(matches!(
            gradient_disk(&grid, &vals, &bnd),
            Err(Error::GridTooSmall(_))
        ));
    }

    #[test]
    fn laplacian_of_quadratic_is_constant() {
        // u = r^2 = x^2 + y^2 has Laplacian 4 everywhere
        let grid = DiskGrid::new(2.0, 64, 16).unwrap();
        let (vals, bnd) = sample(&grid, |r, _| r * r);
        let lap = laplacian_disk(&grid, &vals, &bnd).unwrap();
        for &v in &lap {
            assert!((v - 4.0).abs() < 1e-7, "{v}");
        }
    }

    #[test]
    fn laplacian_of_harmonic_polynomial_vanishes() {
        // u = r^3 cos(3 theta) is harmonic; the residual is pure stencil
        // truncation and must shrink under refinement
        let sup = |res: usize| -> f64 {
            let grid = DiskGrid::new(1.0, res, 32).unwrap();
            let (vals, bnd) = sample(&grid, |r, t| r.powi(3) * (3.0 * t).cos());
            let lap = laplacian_disk(&grid, &vals, &bnd).unwrap();
            lap.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
        };
        let coarse = sup(64);
        let fine = sup(128);
        assert!(fine < 5e-3, "sup |lap| at 128 nodes: {fine}");
        assert!(fine < 0.6 * coarse, "no decay: {coarse} -> {fine}");
    }
}
