//! Grids and quadrature on balls B_R in R^n and on the unit sphere, plus
//! discrete differential operators on the disk.
//!
//! Radial quadrature is Gauss-Legendre on (0, R) with the surface-area
//! metric factor `omega_n r^{n-1}` folded into the weights, so that
//! `sum_i w_i f(r_i)` approximates the ball integral of the radial
//! function `f`. Disk quadrature tensors the same radial rule with the
//! uniform trapezoid rule in the angle, which is spectrally accurate for
//! periodic integrands. Grids exclude r = 0; r = R is carried as an
//! evaluation ring with zero quadrature weight so boundary traces can be
//! inspected.

pub mod diff;
pub mod gauss;
pub mod sphere;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use diff::{gradient_disk, laplacian_disk, DiskGradient};
pub use sphere::SphereGrid;

/// Surface area of the unit sphere S^{n-1} in R^n, via the even/odd
/// recursion omega_{n+2} = 2 pi omega_n / n.
pub fn unit_sphere_area(n: u32) -> f64 {
    use std::f64::consts::PI;
    assert!(n >= 1, "dimension must be at least 1");
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI * unit_sphere_area(n - 2) / (n as f64 - 2.0),
    }
}

/// Volume of the unit ball in R^n (= omega_n / n).
pub fn unit_ball_volume(n: u32) -> f64 {
    unit_sphere_area(n) / n as f64
}

/// Quadrature grid for radial integrands over a ball B_R in R^n.
///
/// Serializes to `{n, R, nodes, weights}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialGrid {
    n: u32,
    #[serde(rename = "R")]
    radius: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    /// Gauss-Legendre rule with `nodes` points on (0, radius).
    pub fn new(dim: u32, radius: f64, nodes: usize) -> Result<Self> {
        Self::with_breakpoints(dim, radius, &[], nodes)
    }

    /// Panelized rule: Gauss-Legendre with `nodes_per_panel` points on each
    /// subinterval of (0, radius) cut at the given interior breakpoints.
    /// Useful when the integrand has structure on a scale much smaller
    /// than the radius.
    pub fn with_breakpoints(
        dim: u32,
        radius: f64,
        breakpoints: &[f64],
        nodes_per_panel: usize,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain(format!("dimension must be >= 2, got {dim}")));
        }
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::Domain(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if nodes_per_panel < 2 {
            return Err(Error::GridTooSmall(
                "need at least 2 radial nodes per panel".into(),
            ));
        }
        let mut cuts = vec![0.0];
        for &b in breakpoints {
            if !(b > *cuts.last().unwrap() && b < radius) {
                return Err(Error::Domain(format!(
                    "breakpoints must increase strictly inside (0, {radius})"
                )));
            }
            cuts.push(b);
        }
        cuts.push(radius);

        let area = unit_sphere_area(dim);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for panel in cuts.windows(2) {
            let (x, w) = gauss::gauss_legendre_on(panel[0], panel[1], nodes_per_panel);
            for (xi, wi) in x.into_iter().zip(w) {
                nodes.push(xi);
                weights.push(wi * area * xi.powi(dim as i32 - 1));
            }
        }
        Ok(Self {
            n: dim,
            radius,
            nodes,
            weights,
        })
    }

    pub fn dim(&self) -> u32 {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// |B_R| = omega_n R^n / n.
    pub fn ball_volume(&self) -> f64 {
        unit_ball_volume(self.n) * self.radius.powi(self.n as i32)
    }

    /// Ball integral of the radial function `f`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (i, (&r, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let v = f(r);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample {
                    index: i,
                    radius: r,
                    value: v,
                });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Ball integral of a field sampled at the grid nodes.
    pub fn integrate_values(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.nodes.len() {
            return Err(Error::ShapeMismatch {
                expected: self.nodes.len(),
                got: values.len(),
            });
        }
        let mut acc = 0.0;
        for (i, (&v, &w)) in values.iter().zip(&self.weights).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteSample {
                    index: i,
                    radius: self.nodes[i],
                    value: v,
                });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("grid serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Domain(format!("bad grid JSON: {e}")))
    }
}

/// Tensor quadrature grid on a disk B_R in R^2: Gauss-Legendre radii times
/// uniformly spaced angles. The angular node count must be even so that
/// radial stencils can reach across the origin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiskGrid {
    #[serde(rename = "R")]
    radius: f64,
    radial_nodes: Vec<f64>,
    /// Gauss-Legendre weight times r (area metric, per unit angle).
    radial_weights: Vec<f64>,
    n_theta: usize,
}

impl DiskGrid {
    pub fn new(radius: f64, n_radial: usize, n_theta: usize) -> Result<Self> {
        Self::with_radial_breakpoints(radius, &[], n_radial, n_theta)
    }

    pub fn with_radial_breakpoints(
        radius: f64,
        breakpoints: &[f64],
        nodes_per_panel: usize,
        n_theta: usize,
    ) -> Result<Self> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::Domain(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if nodes_per_panel < 2 {
            return Err(Error::GridTooSmall("need at least 2 radial nodes".into()));
        }
        if n_theta < 4 || !n_theta.is_multiple_of(2) {
            return Err(Error::GridTooSmall(format!(
                "angular node count must be even and >= 4, got {n_theta}"
            )));
        }
        let mut cuts = vec![0.0];
        for &b in breakpoints {
            if !(b > *cuts.last().unwrap() && b < radius) {
                return Err(Error::Domain(format!(
                    "breakpoints must increase strictly inside (0, {radius})"
                )));
            }
            cuts.push(b);
        }
        cuts.push(radius);
        let mut radial_nodes = Vec::new();
        let mut radial_weights = Vec::new();
        for panel in cuts.windows(2) {
            let (x, w) = gauss::gauss_legendre_on(panel[0], panel[1], nodes_per_panel);
            for (xi, wi) in x.into_iter().zip(w) {
                radial_nodes.push(xi);
                radial_weights.push(wi * xi);
            }
        }
        Ok(Self {
            radius,
            radial_nodes,
            radial_weights,
            n_theta,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn radial_nodes(&self) -> &[f64] {
        &self.radial_nodes
    }

    pub fn n_radial(&self) -> usize {
        self.radial_nodes.len()
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    /// Total interior node count (the boundary ring is not included).
    pub fn len(&self) -> usize {
        self.radial_nodes.len() * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.radial_nodes.is_empty()
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.n_theta as f64
    }

    pub fn angular_step(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n_theta as f64
    }

    /// Quadrature weight of interior node (i, j).
    pub fn node_weight(&self, i: usize) -> f64 {
        self.radial_weights[i] * self.angular_step()
    }

    /// Cartesian coordinates of interior node (i, j).
    pub fn node_xy(&self, i: usize, j: usize) -> (f64, f64) {
        let t = self.theta(j);
        (
            self.radial_nodes[i] * t.cos(),
            self.radial_nodes[i] * t.sin(),
        )
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    /// Disk integral of a field sampled at the interior nodes
    /// (ring-major layout).
    pub fn integrate_values(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        let dtheta = self.angular_step();
        let mut acc = 0.0;
        for (i, &rw) in self.radial_weights.iter().enumerate() {
            let mut ring = 0.0;
            for j in 0..self.n_theta {
                let v = values[self.index(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFiniteSample {
                        index: self.index(i, j),
                        radius: self.radial_nodes[i],
                        value: v,
                    });
                }
                ring += v;
            }
            acc += rw * dtheta * ring;
        }
        Ok(acc)
    }

    /// Disk integral of `f(x, y)`.
    pub fn integrate_xy(&self, mut f: impl FnMut(f64, f64) -> f64) -> Result<f64> {
        let vals: Vec<f64> = self
            .iter_nodes()
            .map(|(i, j)| {
                let (x, y) = self.node_xy(i, j);
                f(x, y)
            })
            .collect();
        self.integrate_values(&vals)
    }

    /// Disk integral of `f(r, theta)`.
    pub fn integrate_polar(&self, mut f: impl FnMut(f64, f64) -> f64) -> Result<f64> {
        let vals: Vec<f64> = self
            .iter_nodes()
            .map(|(i, j)| f(self.radial_nodes[i], self.theta(j)))
            .collect();
        self.integrate_values(&vals)
    }

    pub fn iter_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nt = self.n_theta;
        (0..self.radial_nodes.len()).flat_map(move |i| (0..nt).map(move |j| (i, j)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("grid serialization cannot fail")
    }
}
