//! The model density mu_n, its derivatives, and the closed-form identities
//! it satisfies.
//!
//! For dimension n >= 2 and conjugate exponent m = n/(n-1),
//!
//! ```text
//! mu_n(x) = n / (omega_n (1 + |x|^m)^n)
//! ```
//!
//! is a probability density on R^n whose mass on the ball B_R is
//! `theta(R) = R^n / (1 + R^m)^{n-1}`.
//!
//! Derivative formulas used throughout the crate (derived here, since the
//! operators only appear implicitly in the identities they satisfy):
//!
//! * `log mu_n = log(n/omega_n) - n log(1 + r^m)`, so the radial slope is
//!   `d/dr log mu_n = -n m r^{m-1} / (1 + r^m)` and the gradient is
//!   `-n m |x|^{m-2} x / (1 + |x|^m)`, extended by its continuous limit 0
//!   at the origin.
//! * For the radial n-Laplacian `D_n v = r^{1-n} (r^{n-1} |v'|^{n-2} v')'`,
//!   with v = log mu_n the flux is
//!   `r^{n-1} |v'|^{n-2} v' = -(nm)^{n-1} r^n / (1+r^m)^{n-1}` because
//!   `(m-1)(n-1) = 1`, and differentiating once more gives
//!   `D_n(log mu_n) = -(nm)^{n-1} omega_n mu_n`.
//!
//! The identity suites below check these statements by quadrature rather
//! than trusting the algebra.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{laplacian_disk, unit_sphere_area, DiskGrid, RadialGrid};

/// The reference density mu_n together with its dimension constants.
#[derive(Debug, Clone)]
pub struct ModelDensity {
    n: u32,
    m: f64,
    omega_n: f64,
    alpha: f64,
    beta: f64,
}

impl ModelDensity {
    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("dimension must be >= 2, got {n}")));
        }
        let nf = n as f64;
        let m = nf / (nf - 1.0);
        let omega_n = unit_sphere_area(n);
        let alpha = m * (nf / omega_n).powf(1.0 / nf);
        let beta = m.powi(n as i32 - 1) * nf.powi(n as i32) * omega_n;
        // cross-check both constants through logarithms; the two routes
        // must agree to machine accuracy
        let alpha_log = (m.ln() + (nf.ln() - omega_n.ln()) / nf).exp();
        let beta_log = ((nf - 1.0) * m.ln() + nf * nf.ln() + omega_n.ln()).exp();
        if ((alpha - alpha_log) / alpha).abs() > 1e-12 || ((beta - beta_log) / beta).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "constant cross-check failed for n = {n}"
            )));
        }
        Ok(Self {
            n,
            m,
            omega_n,
            alpha,
            beta,
        })
    }

    pub fn dim(&self) -> u32 {
        self.n
    }

    /// Conjugate exponent m = n/(n-1).
    pub fn exponent(&self) -> f64 {
        self.m
    }

    pub fn sphere_area(&self) -> f64 {
        self.omega_n
    }

    /// Coefficient of the concave term of the free energy.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Normalization of the Dirichlet-type term of the Onofri energy.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// mu_n at radius r.
    pub fn density_radial(&self, r: f64) -> f64 {
        let nf = self.n as f64;
        nf / (self.omega_n * (1.0 + r.abs().powf(self.m)).powi(self.n as i32))
    }

    /// mu_n at a point.
    pub fn density(&self, x: &[f64]) -> f64 {
        self.density_radial(norm(x))
    }

    /// Mass of mu_n on B_R: R^n / (1 + R^m)^{n-1}.
    pub fn theta(&self, radius: f64) -> Result<f64> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::Domain(format!(
                "theta needs a positive radius, got {radius}"
            )));
        }
        Ok(radius.powi(self.n as i32) / (1.0 + radius.powf(self.m)).powi(self.n as i32 - 1))
    }

    /// Radial slope of log mu_n: -n m r^{m-1} / (1 + r^m). Zero at r = 0
    /// by continuity.
    pub fn log_density_slope(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let nf = self.n as f64;
        -nf * self.m * r.powf(self.m - 1.0) / (1.0 + r.powf(self.m))
    }

    /// Gradient of log mu_n at a point: -n m |x|^{m-2} x / (1 + |x|^m).
    pub fn grad_log_density(&self, x: &[f64]) -> Vec<f64> {
        let r = norm(x);
        if r == 0.0 {
            return vec![0.0; x.len()];
        }
        let scale = self.log_density_slope(r) / r;
        x.iter().map(|&xi| scale * xi).collect()
    }

    /// Fully analytic radial n-Laplacian of log mu_n,
    /// equal to -(nm)^{n-1} omega_n mu_n.
    pub fn n_laplacian_log_density(&self, r: f64) -> f64 {
        let nf = self.n as f64;
        -(nf * self.m).powi(self.n as i32 - 1) * self.omega_n * self.density_radial(r)
    }

    /// Closed-form maximizer of the epsilon objective when rho = mu_n:
    /// (n^{1/m} m omega_n^{1/n})^{n-1}.
    pub fn epsilon_max_reference(&self) -> f64 {
        let nf = self.n as f64;
        (nf.powf(1.0 / self.m) * self.m * self.omega_n.powf(1.0 / nf)).powi(self.n as i32 - 1)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Whether a residual check differentiates analytically or with the grid
/// stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    Analytic,
    Stencil,
}

/// Sup-norm residual of a pointwise identity over a grid.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub n: u32,
    pub radius: f64,
    pub sup_residual: f64,
    pub nodes: usize,
    pub analytic: bool,
}

/// Residual of `Lap(log mu_2) + 8 pi mu_2` over the interior disk nodes.
///
/// In stencil mode the Laplacian is the grid operator; in analytic mode
/// the exact second derivatives are used and the residual is pure
/// roundoff.
pub fn laplacian_identity_2d(grid: &DiskGrid, mode: DerivativeMode) -> Result<ResidualReport> {
    use std::f64::consts::PI;
    if grid.n_radial() < 32 || grid.n_theta() < 32 {
        return Err(Error::GridTooSmall(format!(
            "identity check needs at least 32x32 nodes, grid is {}x{}",
            grid.n_radial(),
            grid.n_theta()
        )));
    }
    let d = ModelDensity::new(2)?;
    let lap: Vec<f64> = match mode {
        DerivativeMode::Analytic => grid
            .iter_nodes()
            .map(|(i, _)| {
                let r = grid.radial_nodes()[i];
                // Lap log mu_2 = -8 / (1 + r^2)^2 from
                // (log(1+r^2))'' + (log(1+r^2))'/r = 4/(1+r^2)^2
                -8.0 / (1.0 + r * r).powi(2)
            })
            .collect(),
        DerivativeMode::Stencil => {
            let vals: Vec<f64> = grid
                .iter_nodes()
                .map(|(i, _)| d.density_radial(grid.radial_nodes()[i]).ln())
                .collect();
            let bnd: Vec<f64> = vec![d.density_radial(grid.radius()).ln(); grid.n_theta()];
            laplacian_disk(grid, &vals, &bnd)?
        }
    };
    let mut sup = 0.0f64;
    for ((i, _), lv) in grid.iter_nodes().zip(&lap) {
        let r = grid.radial_nodes()[i];
        sup = sup.max((lv + 8.0 * PI * d.density_radial(r)).abs());
    }
    Ok(ResidualReport {
        n: 2,
        radius: grid.radius(),
        sup_residual: sup,
        nodes: grid.n_radial() * grid.n_theta(),
        analytic: mode == DerivativeMode::Analytic,
    })
}

/// Residual of the radial n-Laplacian identity
/// `D_n(log mu_n) = -(nm)^{n-1} omega_n mu_n` over a radial grid.
///
/// The first derivative of log mu_n is always the analytic slope; the
/// outer divergence is either differentiated symbolically (Analytic) or
/// with Richardson-extrapolated central differences (Stencil), which
/// keeps the check independent of the symbolic simplification.
pub fn n_laplacian_identity(
    d: &ModelDensity,
    grid: &RadialGrid,
    mode: DerivativeMode,
) -> Result<ResidualReport> {
    n_laplacian_identity_with_step(d, grid, mode, 1.0)
}

/// As [`n_laplacian_identity`], with the finite-difference probe step
/// scaled by `step_scale` (ignored in analytic mode). Halving the step
/// quarters-or-better the residual, which is the stencil-mode
/// convergence check.
pub fn n_laplacian_identity_with_step(
    d: &ModelDensity,
    grid: &RadialGrid,
    mode: DerivativeMode,
    step_scale: f64,
) -> Result<ResidualReport> {
    if grid.dim() != d.dim() {
        return Err(Error::Domain(format!(
            "grid dimension {} does not match density dimension {}",
            grid.dim(),
            d.dim()
        )));
    }
    let nf = d.dim() as f64;
    // radial flux  w(r) = r^{n-1} |v'|^{n-2} v'  with  v' = log density slope
    let flux = |r: f64| -> f64 {
        let s = d.log_density_slope(r);
        r.powi(d.dim() as i32 - 1) * s.abs().powf(nf - 2.0) * s
    };
    let mut sup = 0.0f64;
    for &r in grid.nodes() {
        let dw = match mode {
            DerivativeMode::Analytic => {
                // w(r) = -(nm)^{n-1} r^n / (1+r^m)^{n-1}; differentiate
                // symbolically
                let c = -(nf * d.exponent()).powi(d.dim() as i32 - 1);
                let q = 1.0 + r.powf(d.exponent());
                c * (nf * r.powf(nf - 1.0) * q.powi(-(d.dim() as i32 - 1))
                    + r.powf(nf)
                        * (1.0 - nf)
                        * q.powi(-(d.dim() as i32))
                        * d.exponent()
                        * r.powf(d.exponent() - 1.0))
            }
            DerivativeMode::Stencil => {
                // Richardson-extrapolated central differences; the step is
                // capped below r so the probe never crosses the origin,
                // where fractional powers of r lose smoothness
                let h = (1e-3 * (1.0 + r)).min(0.45 * r) * step_scale;
                let d1 = (flux(r + h) - flux(r - h)) / (2.0 * h);
                let d2 = (flux(r + h / 2.0) - flux(r - h / 2.0)) / h;
                (4.0 * d2 - d1) / 3.0
            }
        };
        let lhs = dw / r.powi(d.dim() as i32 - 1);
        let rhs = d.n_laplacian_log_density(r);
        sup = sup.max((lhs - rhs).abs());
    }
    Ok(ResidualReport {
        n: d.dim(),
        radius: grid.radius(),
        sup_residual: sup,
        nodes: grid.len(),
        analytic: mode == DerivativeMode::Analytic,
    })
}

/// One verified identity: name, parameters, both sides, absolute error.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityRow {
    pub identity: String,
    pub n: u32,
    pub radius: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_error: f64,
}

impl IdentityRow {
    pub fn new(identity: impl Into<String>, n: u32, radius: f64, lhs: f64, rhs: f64) -> Self {
        Self {
            identity: identity.into(),
            n,
            radius,
            lhs,
            rhs,
            abs_error: (lhs - rhs).abs(),
        }
    }

    pub fn csv_header() -> &'static str {
        "identity_name,n,R,lhs,rhs,abs_error"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{:.17e},{:.17e},{:.3e}",
            self.identity, self.n, self.radius, self.lhs, self.rhs, self.abs_error
        )
    }
}

/// Quadrature audit of every closed form asserted for mu_n on B_R.
///
/// Rows (lhs is always the quadrature value):
/// * `theta_closed_form`: mass of mu_n vs R^n/(1+R^m)^{n-1};
/// * `moment_relation`: int |y|^m mu_n vs (n/omega)^{1/n} int mu_n^{1/m} - theta_R;
/// * `grad_log_norm`: int |grad log mu_n|^n vs n^{n-1} m^n omega_n int |y|^m mu_n;
///
/// and for n = 2 additionally
/// * `sqrt_mass`: int sqrt(mu_2) vs sqrt(pi) log(1+R^2);
/// * `grad_log_norm_2d`: int |grad log mu_2|^2 vs 16 int sqrt(pi mu_2) - 16 pi theta_R;
/// * `free_energy_at_model`: J_R(mu_2) vs log(1+R^2) + R^2/(1+R^2).
pub fn closed_form_suite(d: &ModelDensity, radius: f64, nodes: usize) -> Result<Vec<IdentityRow>> {
    use std::f64::consts::PI;
    let grid = RadialGrid::new(d.dim(), radius, nodes)?;
    let nf = d.dim() as f64;
    let m = d.exponent();
    let theta = d.theta(radius)?;
    let mut rows = Vec::new();

    let mass = grid.integrate(|r| d.density_radial(r))?;
    rows.push(IdentityRow::new(
        "theta_closed_form",
        d.dim(),
        radius,
        mass,
        theta,
    ));

    let moment = grid.integrate(|r| r.powf(m) * d.density_radial(r))?;
    let root_mass = grid.integrate(|r| d.density_radial(r).powf(1.0 / m))?;
    rows.push(IdentityRow::new(
        "moment_relation",
        d.dim(),
        radius,
        moment,
        (nf / d.sphere_area()).powf(1.0 / nf) * root_mass - theta,
    ));

    let grad_log = grid.integrate(|r| d.log_density_slope(r).abs().powf(nf))?;
    rows.push(IdentityRow::new(
        "grad_log_norm",
        d.dim(),
        radius,
        grad_log,
        nf.powi(d.dim() as i32 - 1) * m.powi(d.dim() as i32) * d.sphere_area() * moment,
    ));

    if d.dim() == 2 {
        rows.push(IdentityRow::new(
            "sqrt_mass",
            2,
            radius,
            root_mass,
            PI.sqrt() * (1.0 + radius * radius).ln(),
        ));
        rows.push(IdentityRow::new(
            "grad_log_norm_2d",
            2,
            radius,
            grad_log,
            16.0 * PI.sqrt() * root_mass - 16.0 * PI * theta,
        ));
        let free_energy = 2.0 / PI.sqrt() * root_mass - moment;
        rows.push(IdentityRow::new(
            "free_energy_at_model",
            2,
            radius,
            free_energy,
            (1.0 + radius * radius).ln() + theta,
        ));
    }
    Ok(rows)
}

/// Convergence probe used by the quadrature tests: |theta quadrature
/// error| for a doubling sequence of node counts.
pub fn theta_quadrature_errors(
    d: &ModelDensity,
    radius: f64,
    counts: &[usize],
) -> Result<Vec<f64>> {
    let theta = d.theta(radius)?;
    counts
        .iter()
        .map(|&c| {
            let g = RadialGrid::new(d.dim(), radius, c)?;
            Ok((g.integrate(|r| d.density_radial(r))? - theta).abs())
        })
        .collect()
}

/// Finite-difference cross-check of the gradient of log mu_n, for tests
/// and the derivative audit.
pub fn grad_log_density_fd(d: &ModelDensity, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            (d.density(&xp).ln() - d.density(&xm).ln()) / (2.0 * h)
        })
        .collect()
}

/// Grid-stencil variant of the 2D identity for convergence studies.
pub fn laplacian_identity_convergence(radius: f64, resolutions: &[usize]) -> Result<Vec<f64>> {
    resolutions
        .iter()
        .map(|&res| {
            let grid = DiskGrid::new(radius, res, res.max(32))?;
            Ok(laplacian_identity_2d(&grid, DerivativeMode::Stencil)?.sup_residual)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol;
    use std::f64::consts::PI;

    #[test]
    fn constants_match_hand_values() {
        let d2 = ModelDensity::new(2).unwrap();
        assert!((d2.exponent() - 2.0).abs() < 1e-15);
        assert!((d2.alpha() - 2.0 / PI.sqrt()).abs() < 1e-14);
        assert!((d2.beta() - 16.0 * PI).abs() < 1e-12 * 16.0 * PI);
        let d3 = ModelDensity::new(3).unwrap();
        assert!((d3.exponent() - 1.5).abs() < 1e-15);
        assert!((d3.sphere_area() - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn density_at_origin() {
        let d2 = ModelDensity::new(2).unwrap();
        assert!((d2.density(&[0.0, 0.0]) - 1.0 / PI).abs() < 1e-15);
        let d3 = ModelDensity::new(3).unwrap();
        assert!((d3.density(&[0.0, 0.0, 0.0]) - 3.0 / (4.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn density_decays_monotonically() {
        let d = ModelDensity::new(2).unwrap();
        let mut prev = d.density_radial(0.0);
        for k in 1..200 {
            let v = d.density_radial(k as f64 * 0.25);
            assert!(v < prev && v > 0.0);
            prev = v;
        }
    }

    #[test]
    fn theta_values_and_limits() {
        let d2 = ModelDensity::new(2).unwrap();
        assert!((d2.theta(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((d2.theta(2.0).unwrap() - 0.8).abs() < 1e-15);
        let d3 = ModelDensity::new(3).unwrap();
        assert!((d3.theta(1.0).unwrap() - 0.25).abs() < 1e-15);
        // probability normalization in the large-R limit
        assert!((d2.theta(1e3).unwrap() - 1.0).abs() < 1e-6);
        assert!((d3.theta(2e4).unwrap() - 1.0).abs() < 1e-6);
        assert!(d2.theta(0.0).is_err());
        assert!(d2.theta(-1.0).is_err());
    }

    #[test]
    fn theta_is_strictly_increasing() {
        for n in [2u32, 3, 4] {
            let d = ModelDensity::new(n).unwrap();
            let mut prev = 0.0;
            for k in 1..=100 {
                let t = d.theta(0.08 * k as f64).unwrap();
                assert!(t > prev, "n={n} k={k}");
                assert!(t < 1.0);
                prev = t;
            }
        }
    }

    #[test]
    fn grad_log_density_hand_value() {
        let d = ModelDensity::new(2).unwrap();
        let g = d.grad_log_density(&[1.0, 0.0]);
        assert!((g[0] + 2.0).abs() < 1e-14);
        assert!(g[1].abs() < 1e-14);
        assert_eq!(d.grad_log_density(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn grad_log_density_matches_finite_differences() {
        for n in [2u32, 3, 4] {
            let d = ModelDensity::new(n).unwrap();
            let pts: Vec<Vec<f64>> = vec![
                vec![0.3; n as usize],
                vec![1.1; n as usize],
                (0..n).map(|k| 0.2 * (k as f64 + 1.0)).collect(),
            ];
            for x in pts {
                let g = d.grad_log_density(&x);
                let fd = grad_log_density_fd(&d, &x, 1e-6);
                for (a, b) in g.iter().zip(&fd) {
                    assert!((a - b).abs() < 1e-6, "n={n} x={x:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn grad_log_density_points_inward() {
        let d = ModelDensity::new(3).unwrap();
        for x in [[0.5, 0.2, -0.1], [2.0, -1.0, 0.3], [0.01, 0.0, 0.0]] {
            let g = d.grad_log_density(&x);
            let dot: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!(dot < 0.0);
        }
    }

    #[test]
    fn grad_log_norm_squared_formula_2d() {
        let d = ModelDensity::new(2).unwrap();
        for k in 0..50 {
            let r = 0.1 * (k as f64 + 0.3);
            let s = d.log_density_slope(r);
            let expect = 16.0 * r * r / (1.0 + r * r).powi(2);
            assert!((s * s - expect).abs() < 1e-12 * (1.0 + expect));
        }
    }

    #[test]
    fn laplacian_identity_analytic_is_roundoff() {
        let grid = DiskGrid::new(1.0, 48, 32).unwrap();
        let report = laplacian_identity_2d(&grid, DerivativeMode::Analytic).unwrap();
        assert!(report.sup_residual < 1e-12, "{}", report.sup_residual);
    }

    #[test]
    fn laplacian_identity_stencil_converges() {
        // measured second-order decay on the Gauss-graded mesh:
        // 1.1e-2 / 2.9e-3 / 7.2e-4 / 1.8e-4 over 32..256 nodes
        let residuals = laplacian_identity_convergence(1.0, &[64, 128]).unwrap();
        assert!(residuals[0] < 5e-3, "64^2 residual {}", residuals[0]);
        assert!(residuals[1] < 1e-3, "128^2 residual {}", residuals[1]);
        // roughly second order: doubling should at least halve it
        assert!(residuals[1] < 0.5 * residuals[0], "no decay: {residuals:?}");
    }

    #[test]
    fn laplacian_identity_rejects_coarse_grids() {
        let grid = DiskGrid::new(1.0, 16, 16).unwrap();
        assert!(matches!(
            laplacian_identity_2d(&grid, DerivativeMode::Stencil),
            Err(Error::GridTooSmall(_))
        ));
    }

    #[test]
    fn n_laplacian_reduces_to_the_laplacian_in_dimension_two() {
        // (nm)^{n-1} omega_n = 4 * 2 pi = 8 pi when n = 2
        let d = ModelDensity::new(2).unwrap();
        for k in 1..20 {
            let r = 0.11 * k as f64;
            let lhs = d.n_laplacian_log_density(r);
            let rhs = -8.0 * PI * d.density_radial(r);
            assert!((lhs - rhs).abs() < 1e-14 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn n_laplacian_identity_analytic() {
        for (n, radius) in [(2u32, 1.0), (3, 2.0), (4, 1.0), (5, 1.0)] {
            let d = ModelDensity::new(n).unwrap();
            let grid = RadialGrid::new(n, radius, 64).unwrap();
            let rep = n_laplacian_identity(&d, &grid, DerivativeMode::Analytic).unwrap();
            assert!(rep.sup_residual < 1e-10, "n={n}: {}", rep.sup_residual);
        }
    }

    #[test]
    fn n_laplacian_identity_fd_outer_derivative_converges() {
        // the probe is fourth-order in the step near the origin, where
        // the fractional radial powers limit smoothness; halving the step
        // must cut the residual by at least 4x (16x on smooth parts)
        for (n, radius) in [(2u32, 1.0), (3, 2.0), (4, 1.0)] {
            let d = ModelDensity::new(n).unwrap();
            let grid = RadialGrid::new(n, radius, 64).unwrap();
            let full =
                n_laplacian_identity_with_step(&d, &grid, DerivativeMode::Stencil, 1.0).unwrap();
            let half =
                n_laplacian_identity_with_step(&d, &grid, DerivativeMode::Stencil, 0.5).unwrap();
            assert!(full.sup_residual < 1e-2, "n={n}: {}", full.sup_residual);
            assert!(
                half.sup_residual < 0.25 * full.sup_residual + 1e-12,
                "n={n}: no step convergence: {} -> {}",
                full.sup_residual,
                half.sup_residual
            );
        }
    }

    #[test]
    fn closed_forms_hold_at_default_resolution() {
        for n in [2u32, 3, 4, 5] {
            let d = ModelDensity::new(n).unwrap();
            for radius in [0.5, 1.0, 2.0, 5.0] {
                for row in closed_form_suite(&d, radius, 128).unwrap() {
                    assert!(
                        row.abs_error < tol::IDENTITY,
                        "{} n={n} R={radius}: {}",
                        row.identity,
                        row.abs_error
                    );
                }
            }
        }
    }

    #[test]
    fn closed_form_2d_hand_values() {
        let d = ModelDensity::new(2).unwrap();
        let rows = closed_form_suite(&d, 1.0, 128).unwrap();
        let j = rows
            .iter()
            .find(|r| r.identity == "free_energy_at_model")
            .unwrap();
        assert!((j.lhs - (2f64.ln() + 0.5)).abs() < 1e-10, "{}", j.lhs);
        let g = rows
            .iter()
            .find(|r| r.identity == "grad_log_norm_2d")
            .unwrap();
        let expect = 16.0 * PI * 2f64.ln() - 8.0 * PI;
        assert!((g.lhs - expect).abs() < 1e-9, "{} vs {expect}", g.lhs);
        let s = rows.iter().find(|r| r.identity == "sqrt_mass").unwrap();
        assert!((s.lhs - PI.sqrt() * 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn quadrature_error_decreases_with_refinement() {
        // n = 3 has a weak algebraic singularity at the origin, so the
        // decay is visible before hitting the floating floor
        let d = ModelDensity::new(3).unwrap();
        let errs = theta_quadrature_errors(&d, 5.0, &[32, 64, 128, 256]).unwrap();
        for pair in errs.windows(2) {
            assert!(
                pair[1] <= pair[0] * 1.05 + 1e-13,
                "no monotone decay: {errs:?}"
            );
        }
        // and n = 2 is already at the floor everywhere
        let d2 = ModelDensity::new(2).unwrap();
        let errs2 = theta_quadrature_errors(&d2, 1.0, &[32, 64, 128, 256]).unwrap();
        assert!(errs2.iter().all(|&e| e < 1e-12), "{errs2:?}");
    }

    #[test]
    fn csv_rows_are_stable() {
        let d = ModelDensity::new(2).unwrap();
        let rows = closed_form_suite(&d, 1.0, 64).unwrap();
        let line = rows[0].to_csv_row();
        assert!(line.starts_with("theta_closed_form,2,1,"));
        assert_eq!(
            IdentityRow::csv_header(),
            "identity_name,n,R,lhs,rhs,abs_error"
        );
    }
}
