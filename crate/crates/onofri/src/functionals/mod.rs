//! The Onofri energy, the renormalized free energy, deficit functionals,
//! the Bregman-gap operator H_n, and constraint projection.
//!
//! Admissible arguments come in two shapes: full fields on a `DiskGrid`
//! (n = 2) and radial profiles on a `RadialGrid` (any n >= 2). Fields
//! carry optional analytic gradients; when absent, the disk operators fall
//! back to the grid stencils.

pub mod corollary;
pub mod fields;
pub mod sphere;

use serde::Serialize;

use crate::densities::ModelDensity;
use crate::error::{Error, Result};
use crate::geometry::{gradient_disk, DiskGradient, DiskGrid, RadialGrid};
use crate::tol;

pub use corollary::{
    boundary_shift_field_disk, boundary_shift_field_radial, corollary_check_disk,
    corollary_check_radial, CorollaryReport,
};
pub use sphere::{sphere_onofri, SphereField};

/// A scalar field sampled on a disk grid, with its boundary-ring trace and
/// an optional analytic gradient.
#[derive(Debug, Clone)]
pub struct GridFunction {
    values: Vec<f64>,
    boundary: Vec<f64>,
    gradient: Option<DiskGradient>,
    zero_trace: bool,
}

impl GridFunction {
    pub fn from_values(grid: &DiskGrid, values: Vec<f64>, boundary: Vec<f64>) -> Result<Self> {
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
        let trace = boundary.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self {
            values,
            boundary,
            gradient: None,
            zero_trace: trace < tol::ZERO_TRACE,
        })
    }

    pub fn from_xy_fn(grid: &DiskGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid
            .iter_nodes()
            .map(|(i, j)| {
                let (x, y) = grid.node_xy(i, j);
                f(x, y)
            })
            .collect();
        let boundary = (0..grid.n_theta())
            .map(|j| {
                let t = grid.theta(j);
                f(grid.radius() * t.cos(), grid.radius() * t.sin())
            })
            .collect::<Vec<_>>();
        let trace = boundary.iter().fold(0.0f64, |m: f64, v| m.max(v.abs()));
        Self {
            values,
            boundary,
            gradient: None,
            zero_trace: trace < tol::ZERO_TRACE,
        }
    }

    /// Sample a field together with its Cartesian gradient; the gradient is
    /// stored in physical polar components.
    pub fn from_xy_fn_with_grad(
        grid: &DiskGrid,
        f: impl Fn(f64, f64) -> f64,
        grad: impl Fn(f64, f64) -> (f64, f64),
    ) -> Self {
        let mut out = Self::from_xy_fn(grid, f);
        let mut radial = Vec::with_capacity(grid.len());
        let mut angular = Vec::with_capacity(grid.len());
        for (i, j) in grid.iter_nodes() {
            let t = grid.theta(j);
            let (x, y) = grid.node_xy(i, j);
            let (gx, gy) = grad(x, y);
            radial.push(gx * t.cos() + gy * t.sin());
            angular.push(-gx * t.sin() + gy * t.cos());
        }
        out.gradient = Some(DiskGradient { radial, angular });
        out
    }

    /// Sample a radial profile (and its slope) onto the disk grid.
    pub fn from_radial_fn_with_slope(
        grid: &DiskGrid,
        f: impl Fn(f64) -> f64,
        slope: impl Fn(f64) -> f64,
    ) -> Self {
        let values: Vec<f64> = grid
            .iter_nodes()
            .map(|(i, _)| f(grid.radial_nodes()[i]))
            .collect();
        let boundary = vec![f(grid.radius()); grid.n_theta()];
        let radial: Vec<f64> = grid
            .iter_nodes()
            .map(|(i, _)| slope(grid.radial_nodes()[i]))
            .collect();
        let angular = vec![0.0; grid.len()];
        let trace = boundary.iter().fold(0.0f64, |m: f64, v| m.max(v.abs()));
        Self {
            values,
            boundary,
            gradient: Some(DiskGradient { radial, angular }),
            zero_trace: trace < tol::ZERO_TRACE,
        }
    }

    pub fn zero(grid: &DiskGrid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            boundary: vec![0.0; grid.n_theta()],
            gradient: Some(DiskGradient {
                radial: vec![0.0; grid.len()],
                angular: vec![0.0; grid.len()],
            }),
            zero_trace: true,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn boundary(&self) -> &[f64] {
        &self.boundary
    }

    pub fn gradient(&self) -> Option<&DiskGradient> {
        self.gradient.as_ref()
    }

    pub fn is_zero_trace(&self) -> bool {
        self.zero_trace
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .chain(&self.boundary)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Multiply the field (and any stored gradient) by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| s * v).collect(),
            boundary: self.boundary.iter().map(|v| s * v).collect(),
            gradient: self.gradient.as_ref().map(|g| DiskGradient {
                radial: g.radial.iter().map(|v| s * v).collect(),
                angular: g.angular.iter().map(|v| s * v).collect(),
            }),
            zero_trace: self.zero_trace,
        }
    }

    /// Pointwise sum; the gradient survives only if both operands carry one.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.values.len() != other.values.len() {
            return Err(Error::ShapeMismatch {
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        let boundary: Vec<f64> = self
            .boundary
            .iter()
            .zip(&other.boundary)
            .map(|(a, b)| a + b)
            .collect();
        let gradient = match (&self.gradient, &other.gradient) {
            (Some(a), Some(b)) => Some(DiskGradient {
                radial: a.radial.iter().zip(&b.radial).map(|(x, y)| x + y).collect(),
                angular: a
                    .angular
                    .iter()
                    .zip(&b.angular)
                    .map(|(x, y)| x + y)
                    .collect(),
            }),
            _ => None,
        };
        let trace = boundary.iter().fold(0.0f64, |m: f64, v| m.max(v.abs()));
        Ok(Self {
            values,
            boundary,
            gradient,
            zero_trace: trace < tol::ZERO_TRACE,
        })
    }

    fn require_zero_trace(&self) -> Result<()> {
        if !self.zero_trace {
            let trace = self.boundary.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            return Err(Error::ConstraintViolated {
                what: "zero boundary trace".into(),
                residual: trace,
            });
        }
        Ok(())
    }

    /// Stored analytic gradient, or the grid-stencil gradient.
    pub fn gradient_on(&self, grid: &DiskGrid) -> Result<DiskGradient> {
        match &self.gradient {
            Some(g) => Ok(g.clone()),
            None => gradient_disk(grid, &self.values, &self.boundary),
        }
    }
}

/// A nonnegative field on a disk grid with its quadrature mass cached.
#[derive(Debug, Clone)]
pub struct DensityFunction {
    values: Vec<f64>,
    mass: f64,
}

impl DensityFunction {
    pub fn from_values(grid: &DiskGrid, values: Vec<f64>) -> Result<Self> {
        for (k, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!(
                    "density must be nonnegative and finite; value {v} at node {k}"
                )));
            }
        }
        let mass = grid.integrate_values(&values)?;
        Ok(Self { values, mass })
    }

    pub fn from_xy_fn(grid: &DiskGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = grid
            .iter_nodes()
            .map(|(i, j)| {
                let (x, y) = grid.node_xy(i, j);
                f(x, y)
            })
            .collect();
        Self::from_values(grid, values)
    }

    /// The model density sampled on the grid.
    pub fn model(grid: &DiskGrid, d: &ModelDensity) -> Result<Self> {
        Self::from_xy_fn(grid, |x, y| d.density(&[x, y]))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Multiplicative rescale to the target mass.
    pub fn rescaled_to_mass(&self, target: f64) -> Result<Self> {
        if self.mass <= 0.0 {
            return Err(Error::Degenerate(
                "cannot rescale a density with zero mass".into(),
            ));
        }
        let c = target / self.mass;
        Ok(Self {
            values: self.values.iter().map(|v| c * v).collect(),
            mass: target,
        })
    }

    /// Recompute the mass and confirm the cache.
    pub fn verify_mass(&self, grid: &DiskGrid) -> Result<f64> {
        let m = grid.integrate_values(&self.values)?;
        if (m - self.mass).abs() > tol::MASS_CACHE * (1.0 + self.mass.abs()) {
            return Err(Error::ConstraintViolated {
                what: "cached mass".into(),
                residual: (m - self.mass).abs(),
            });
        }
        Ok(m)
    }
}

/// A radial scalar field on a radial grid (value at each node plus the
/// boundary trace), with an optional analytic derivative.
#[derive(Debug, Clone)]
pub struct RadialField {
    values: Vec<f64>,
    boundary_value: f64,
    derivative: Option<Vec<f64>>,
    zero_trace: bool,
}

impl RadialField {
    pub fn from_fn_with_derivative(
        grid: &RadialGrid,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
    ) -> Self {
        let values: Vec<f64> = grid.nodes().iter().map(|&r| f(r)).collect();
        let derivative = Some(grid.nodes().iter().map(|&r| df(r)).collect());
        let boundary_value = f(grid.radius());
        Self {
            values,
            boundary_value,
            derivative,
            zero_trace: boundary_value.abs() < tol::ZERO_TRACE,
        }
    }

    pub fn zero(grid: &RadialGrid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            boundary_value: 0.0,
            derivative: Some(vec![0.0; grid.len()]),
            zero_trace: true,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn boundary_value(&self) -> f64 {
        self.boundary_value
    }

    pub fn derivative(&self) -> Option<&[f64]> {
        self.derivative.as_deref()
    }

    pub fn is_zero_trace(&self) -> bool {
        self.zero_trace
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .fold(self.boundary_value.abs(), |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| s * v).collect(),
            boundary_value: s * self.boundary_value,
            derivative: self
                .derivative
                .as_ref()
                .map(|d| d.iter().map(|v| s * v).collect()),
            zero_trace: self.zero_trace,
        }
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.values.len() != other.values.len() {
            return Err(Error::ShapeMismatch {
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        let boundary_value = self.boundary_value + other.boundary_value;
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            boundary_value,
            derivative: match (&self.derivative, &other.derivative) {
                (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x + y).collect()),
                _ => None,
            },
            zero_trace: boundary_value.abs() < tol::ZERO_TRACE,
        })
    }

    fn require_zero_trace(&self) -> Result<()> {
        if !self.zero_trace {
            return Err(Error::ConstraintViolated {
                what: "zero boundary trace".into(),
                residual: self.boundary_value.abs(),
            });
        }
        Ok(())
    }

    fn require_derivative(&self) -> Result<&[f64]> {
        self.derivative.as_deref().ok_or_else(|| {
            Error::Domain("radial field needs an analytic derivative for this operation".into())
        })
    }
}

/// A nonnegative radial field with cached mass.
#[derive(Debug, Clone)]
pub struct RadialDensityField {
    values: Vec<f64>,
    mass: f64,
}

impl RadialDensityField {
    pub fn from_fn(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.nodes().iter().map(|&r| f(r)).collect();
        for (k, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!(
                    "density must be nonnegative and finite; value {v} at node {k}"
                )));
            }
        }
        let mass = grid.integrate_values(&values)?;
        Ok(Self { values, mass })
    }

    pub fn model(grid: &RadialGrid, d: &ModelDensity) -> Result<Self> {
        Self::from_fn(grid, |r| d.density_radial(r))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn rescaled_to_mass(&self, target: f64) -> Result<Self> {
        if self.mass <= 0.0 {
            return Err(Error::Degenerate(
                "cannot rescale a density with zero mass".into(),
            ));
        }
        let c = target / self.mass;
        Ok(Self {
            values: self.values.iter().map(|v| c * v).collect(),
            mass: target,
        })
    }
}

/// The Bregman gap of z -> |z|^n between `grad_log_mu` and
/// `grad_u + grad_log_mu`:
///
/// ```text
/// H_n = |g_u + g_m|^n - |g_m|^n - n |g_m|^{n-2} g_m . g_u
/// ```
///
/// Nonnegative by strict convexity; identically |g_u|^2 when n = 2.
pub fn h_n_pointwise(grad_u: &[f64], grad_log_mu: &[f64], n: u32) -> f64 {
    debug_assert_eq!(grad_u.len(), grad_log_mu.len());
    let nf = n as f64;
    let dot: f64 = grad_u.iter().zip(grad_log_mu).map(|(a, b)| a * b).sum();
    let qu: f64 = grad_u.iter().map(|a| a * a).sum();
    let qm: f64 = grad_log_mu.iter().map(|b| b * b).sum();
    let qs: f64 = qu + 2.0 * dot + qm;
    if n == 2 {
        // expand the square so the cancellation is explicit
        return qs - qm - 2.0 * dot;
    }
    let h = n / 2;
    let (sum_pow, mu_pow, mu_pow_m2) = if n.is_multiple_of(2) {
        (qs.powi(h as i32), qm.powi(h as i32), qm.powi(h as i32 - 1))
    } else {
        (
            qs.powf(nf / 2.0),
            qm.powf(nf / 2.0),
            qm.powf(nf / 2.0 - 1.0),
        )
    };
    sum_pow - mu_pow - nf * mu_pow_m2 * dot
}

/// Scalar form of `h_n_pointwise` for radial fields (both gradients along
/// the radial direction, signed).
pub fn h_n_radial(du: f64, dlog_mu: f64, n: u32) -> f64 {
    h_n_pointwise(&[du], &[dlog_mu], n)
}

/// I_R(u) = 1/(16 pi) int |grad u|^2 + int u dmu_2 on a disk.
pub fn onofri_energy_2d(u: &GridFunction, grid: &DiskGrid) -> Result<f64> {
    use std::f64::consts::PI;
    u.require_zero_trace()?;
    let d = ModelDensity::new(2)?;
    let g = u.gradient_on(grid)?;
    let dirichlet: Vec<f64> = (0..grid.len()).map(|k| g.norm_squared(k)).collect();
    let dir = grid.integrate_values(&dirichlet)?;
    let mut weighted = vec![0.0; grid.len()];
    for (i, j) in grid.iter_nodes() {
        let idx = grid.index(i, j);
        weighted[idx] = u.values[idx] * d.density_radial(grid.radial_nodes()[i]);
    }
    let linear = grid.integrate_values(&weighted)?;
    Ok(dir / (16.0 * PI) + linear)
}

/// I_R(u) = 1/beta(n) int H_n(u, mu_n) + int u dmu_n on the disk (n = 2).
pub fn onofri_energy_nd_disk(u: &GridFunction, grid: &DiskGrid, d: &ModelDensity) -> Result<f64> {
    if d.dim() != 2 {
        return Err(Error::Domain(
            "disk fields live in dimension 2; use the radial form for n > 2".into(),
        ));
    }
    u.require_zero_trace()?;
    let g = u.gradient_on(grid)?;
    let mut hvals = vec![0.0; grid.len()];
    let mut weighted = vec![0.0; grid.len()];
    for (i, j) in grid.iter_nodes() {
        let idx = grid.index(i, j);
        let r = grid.radial_nodes()[i];
        let gm = [d.log_density_slope(r), 0.0];
        hvals[idx] = h_n_pointwise(&[g.radial[idx], g.angular[idx]], &gm, d.dim());
        weighted[idx] = u.values[idx] * d.density_radial(r);
    }
    Ok(grid.integrate_values(&hvals)? / d.beta() + grid.integrate_values(&weighted)?)
}

/// I_R(u) for a radial zero-trace profile in dimension n.
pub fn onofri_energy_nd_radial(
    u: &RadialField,
    grid: &RadialGrid,
    d: &ModelDensity,
) -> Result<f64> {
    if grid.dim() != d.dim() {
        return Err(Error::Domain(format!(
            "grid dimension {} vs density dimension {}",
            grid.dim(),
            d.dim()
        )));
    }
    u.require_zero_trace()?;
    let du = u.require_derivative()?;
    let mut h_term = 0.0;
    let mut linear = 0.0;
    for (k, (&r, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
        h_term += w * h_n_radial(du[k], d.log_density_slope(r), d.dim());
        linear += w * u.values[k] * d.density_radial(r);
    }
    Ok(h_term / d.beta() + linear)
}

/// J_R(rho) = 2/sqrt(pi) int sqrt(rho) - int |y|^2 rho on a disk.
pub fn free_energy_2d(rho: &DensityFunction, grid: &DiskGrid) -> Result<f64> {
    use std::f64::consts::PI;
    if rho.values.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            got: rho.values.len(),
        });
    }
    let mut concave = vec![0.0; grid.len()];
    let mut moment = vec![0.0; grid.len()];
    for (i, j) in grid.iter_nodes() {
        let idx = grid.index(i, j);
        let r = grid.radial_nodes()[i];
        concave[idx] = rho.values[idx].sqrt();
        moment[idx] = r * r * rho.values[idx];
    }
    Ok(2.0 / PI.sqrt() * grid.integrate_values(&concave)? - grid.integrate_values(&moment)?)
}

/// J_R(rho) = alpha(n) int rho^{(n-1)/n} - int |y|^{n/(n-1)} rho (disk, n = 2).
pub fn free_energy_nd_disk(
    rho: &DensityFunction,
    grid: &DiskGrid,
    d: &ModelDensity,
) -> Result<f64> {
    if d.dim() != 2 {
        return Err(Error::Domain(
            "disk densities live in dimension 2; use the radial form for n > 2".into(),
        ));
    }
    let inv_m = 1.0 / d.exponent();
    let mut concave = vec![0.0; grid.len()];
    let mut moment = vec![0.0; grid.len()];
    for (i, j) in grid.iter_nodes() {
        let idx = grid.index(i, j);
        let r = grid.radial_nodes()[i];
        concave[idx] = rho.values[idx].powf(inv_m);
        moment[idx] = r.powf(d.exponent()) * rho.values[idx];
    }
    Ok(d.alpha() * grid.integrate_values(&concave)? - grid.integrate_values(&moment)?)
}

/// J_R(rho) for a radial density in dimension n.
pub fn free_energy_nd_radial(
    rho: &RadialDensityField,
    grid: &RadialGrid,
    d: &ModelDensity,
) -> Result<f64> {
    if grid.dim() != d.dim() {
        return Err(Error::Domain(format!(
            "grid dimension {} vs density dimension {}",
            grid.dim(),
            d.dim()
        )));
    }
    if rho.values.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            got: rho.values.len(),
        });
    }
    let inv_m = 1.0 / d.exponent();
    let mut acc = 0.0;
    for (k, (&r, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
        acc += w * (d.alpha() * rho.values[k].powf(inv_m) - r.powf(d.exponent()) * rho.values[k]);
    }
    Ok(acc)
}

/// The three terms of a whole-space deficit evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct DeficitReport {
    pub dirichlet_term: f64,
    pub linear_term: f64,
    pub log_term: f64,
    pub deficit: f64,
}

fn guard_exponent(max_value: f64) -> Result<()> {
    if max_value > 700.0 {
        return Err(Error::Range(format!(
            "exp would overflow (max field value {max_value:.1}); rescale the amplitude"
        )));
    }
    Ok(())
}

/// Whole-plane Onofri deficit of a compactly supported field, evaluated on
/// the grid ball with the exact tail of the reference measure:
///
/// ```text
/// deficit = Dirichlet/(16 pi) + int u dmu_2 - log( int_B e^u dmu_2 + 1 - theta_B )
/// ```
///
/// The tail `1 - theta_B` accounts for e^u = 1 outside the support, so the
/// zero field scores exactly zero.
pub fn onofri_deficit_2d(u: &GridFunction, grid: &DiskGrid) -> Result<DeficitReport> {
    use std::f64::consts::PI;
    u.require_zero_trace()?;
    guard_exponent(u.max_abs())?;
    let d = ModelDensity::new(2)?;
    let g = u.gradient_on(grid)?;
    let mut dir = vec![0.0; grid.len()];
    let mut lin = vec![0.0; grid.len()];
    let mut expw = vec![0.0; grid.len()];
    let mut muv = vec![0.0; grid.len()];
    for (i, j) in grid.iter_nodes() {
        let idx = grid.index(i, j);
        let mu = d.density_radial(grid.radial_nodes()[i]);
        dir[idx] = g.norm_squared(idx);
        lin[idx] = u.values[idx] * mu;
        expw[idx] = u.values[idx].exp() * mu;
        muv[idx] = mu;
    }
    let dirichlet_term = grid.integrate_values(&dir)? / (16.0 * PI);
    let linear_term = grid.integrate_values(&lin)?;
    // quadrature-consistent tail, so the zero field scores exactly zero
    let tail = 1.0 - grid.integrate_values(&muv)?;
    let log_term = (grid.integrate_values(&expw)? + tail).ln();
    Ok(DeficitReport {
        dirichlet_term,
        linear_term,
        log_term,
        deficit: dirichlet_term + linear_term - log_term,
    })
}

/// n-dimensional deficit on the disk (n = 2), with the H_n term in place
/// of the Dirichlet term.
pub fn onofri_deficit_nd_disk(
    u: &GridFunction,
    grid: &DiskGrid,
    d: &ModelDensity,
) -> Result<DeficitReport> {
    if d.dim() != 2 {
        return Err(Error::Domain(
            "disk fields live in dimension 2; use the radial form for n > 2".into(),
        ));
    }
    u.require_zero_trace()?;
    guard_exponent(u.max_abs())?;
    let g = u.gradient_on(grid)?;
    let mut hvals = vec![0.0; grid.len()];
    let mut lin = vec![0.0; grid.len()];
    let mut expw = vec![0.0; grid.len()];
    let mut muv = vec![0.0; grid.len()];
    for (i, j) in grid.iter_nodes() {
        let idx = grid.index(i, j);
        let r = grid.radial_nodes()[i];
        let mu = d.density_radial(r);
        hvals[idx] = h_n_pointwise(
            &[g.radial[idx], g.angular[idx]],
            &[d.log_density_slope(r), 0.0],
            d.dim(),
        );
        lin[idx] = u.values[idx] * mu;
        expw[idx] = u.values[idx].exp() * mu;
        muv[idx] = mu;
    }
    let dirichlet_term = grid.integrate_values(&hvals)? / d.beta();
    let linear_term = grid.integrate_values(&lin)?;
    let tail = 1.0 - grid.integrate_values(&muv)?;
    let log_term = (grid.integrate_values(&expw)? + tail).ln();
    Ok(DeficitReport {
        dirichlet_term,
        linear_term,
        log_term,
        deficit: dirichlet_term + linear_term - log_term,
    })
}

/// n-dimensional deficit of a compactly supported radial profile.
pub fn onofri_deficit_nd_radial(
    u: &RadialField,
    grid: &RadialGrid,
    d: &ModelDensity,
) -> Result<DeficitReport> {
    if grid.dim() != d.dim() {
        return Err(Error::Domain(format!(
            "grid dimension {} vs density dimension {}",
            grid.dim(),
            d.dim()
        )));
    }
    u.require_zero_trace()?;
    guard_exponent(u.max_abs())?;
    let du = u.require_derivative()?;
    let mut h_term = 0.0;
    let mut linear_term = 0.0;
    let mut exp_term = 0.0;
    let mut mu_mass = 0.0;
    for (k, (&r, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
        let mu = d.density_radial(r);
        h_term += w * h_n_radial(du[k], d.log_density_slope(r), d.dim());
        linear_term += w * u.values[k] * mu;
        exp_term += w * u.values[k].exp() * mu;
        mu_mass += w * mu;
    }
    let dirichlet_term = h_term / d.beta();
    let tail = 1.0 - mu_mass;
    let log_term = (exp_term + tail).ln();
    Ok(DeficitReport {
        dirichlet_term,
        linear_term,
        log_term,
        deficit: dirichlet_term + linear_term - log_term,
    })
}

/// Safeguarded search for the nonzero root of `s -> eval(s) = target`.
///
/// `eval` must be strictly convex with `eval(0) = target`; `slope0` is its
/// derivative at 0. The second root lies on the side where the map first
/// dips below the target, and the search brackets it by geometric
/// expansion before bisecting.
fn amplitude_root(eval: &dyn Fn(f64) -> f64, slope0: f64, target: f64) -> Result<f64> {
    if slope0.abs() < 1e-10 {
        return Err(Error::Degenerate(format!(
            "int w dmu = {slope0:.3e} is numerically zero; only the trivial scaling solves the constraint"
        )));
    }
    let dir = -slope0.signum();
    // find a point strictly below the target on the dip side
    let mut lo = dir * 0.25;
    let mut k = 0;
    while eval(lo) >= target {
        lo *= 0.5;
        k += 1;
        if k > 60 {
            return Err(Error::Degenerate(
                "could not locate the dip of the constraint map".into(),
            ));
        }
    }
    // expand outward until the map rises back above the target
    let mut hi = lo;
    loop {
        hi *= 2.0;
        if hi.abs() > tol::SCALE_RANGE {
            return Err(Error::Range(format!(
                "amplitude scaling root lies outside [-{0}, {0}]",
                tol::SCALE_RANGE
            )));
        }
        if eval(hi) >= target {
            break;
        }
        lo = hi;
    }
    // bisection: eval(lo) < target <= eval(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() < 1e-14 * (1.0 + hi.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of amplitude projection onto the exponential constraint set.
#[derive(Debug, Clone)]
pub struct ScaledField<F> {
    pub field: F,
    pub scale: f64,
    pub constraint_residual: f64,
}

/// Scale a zero-trace disk profile `w` to `u = s w` so that
/// `int e^u dmu = theta_R`, with s the nonzero root.
pub fn constraint_scale_disk(
    w: &GridFunction,
    grid: &DiskGrid,
    d: &ModelDensity,
) -> Result<ScaledField<GridFunction>> {
    w.require_zero_trace()?;
    if w.max_abs() == 0.0 {
        return Err(Error::Degenerate(
            "profile is identically zero; amplitude scaling is undefined".into(),
        ));
    }
    let theta = d.theta(grid.radius())?;
    let mut mu_w = Vec::with_capacity(grid.len());
    for (i, j) in grid.iter_nodes() {
        let idx = grid.index(i, j);
        mu_w.push((
            d.density_radial(grid.radial_nodes()[i]) * grid.node_weight(i),
            w.values()[idx],
        ));
    }
    let eval = |s: f64| -> f64 { mu_w.iter().map(|(mw, wv)| mw * (s * wv).exp()).sum() };
    let slope0: f64 = mu_w.iter().map(|(mw, wv)| mw * wv).sum();
    let s = amplitude_root(&eval, slope0, theta)?;
    let field = w.scaled(s);
    let residual = (eval(s) - theta).abs();
    Ok(ScaledField {
        field,
        scale: s,
        constraint_residual: residual,
    })
}

/// Radial version of [`constraint_scale_disk`].
pub fn constraint_scale_radial(
    w: &RadialField,
    grid: &RadialGrid,
    d: &ModelDensity,
) -> Result<ScaledField<RadialField>> {
    w.require_zero_trace()?;
    if w.max_abs() == 0.0 {
        return Err(Error::Degenerate(
            "profile is identically zero; amplitude scaling is undefined".into(),
        ));
    }
    let theta = d.theta(grid.radius())?;
    let mu_w: Vec<(f64, f64)> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(w.values())
        .map(|((&r, &wt), &wv)| (d.density_radial(r) * wt, wv))
        .collect();
    let eval = |s: f64| -> f64 { mu_w.iter().map(|(mw, wv)| mw * (s * wv).exp()).sum() };
    let slope0: f64 = mu_w.iter().map(|(mw, wv)| mw * wv).sum();
    let s = amplitude_root(&eval, slope0, theta)?;
    let field = w.scaled(s);
    let residual = (eval(s) - theta).abs();
    Ok(ScaledField {
        field,
        scale: s,
        constraint_residual: residual,
    })
}

/// `int e^u dmu` over the grid ball for a disk field.
pub fn exp_moment_disk(u: &GridFunction, grid: &DiskGrid, d: &ModelDensity) -> Result<f64> {
    guard_exponent(u.max_abs())?;
    let mut vals = vec![0.0; grid.len()];
    for (i, j) in grid.iter_nodes() {
        let idx = grid.index(i, j);
        vals[idx] = u.values()[idx].exp() * d.density_radial(grid.radial_nodes()[i]);
    }
    grid.integrate_values(&vals)
}

/// `int e^u dmu` over the grid ball for a radial field.
pub fn exp_moment_radial(u: &RadialField, grid: &RadialGrid, d: &ModelDensity) -> Result<f64> {
    guard_exponent(u.max_abs())?;
    let mut acc = 0.0;
    for (k, (&r, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
        acc += w * u.values()[k].exp() * d.density_radial(r);
    }
    Ok(acc)
}

/// `int u dmu` over the grid ball for a disk field.
pub fn linear_moment_disk(u: &GridFunction, grid: &DiskGrid, d: &ModelDensity) -> Result<f64> {
    let mut vals = vec![0.0; grid.len()];
    for (i, j) in grid.iter_nodes() {
        let idx = grid.index(i, j);
        vals[idx] = u.values()[idx] * d.density_radial(grid.radial_nodes()[i]);
    }
    grid.integrate_values(&vals)
}
