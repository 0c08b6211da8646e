//! Duality-gap experiments and the epsilon-optimization machinery.
//!
//! For admissible pairs (u zero-trace with `int e^u dmu_n = theta_R`,
//! rho nonnegative with mass theta_R on B_R) the renormalized free energy
//! never exceeds the Onofri energy:
//!
//! ```text
//! J_R(rho) - J_R(mu_n)  <=  I_R(u),
//! ```
//!
//! with both sides zero at (u, rho) = (0, mu_n). `duality_gap_*` makes the
//! admissibility projection explicit (amplitude scaling for u, mass
//! rescaling for rho) and records the constraint residuals so a violated
//! gap can be told apart from a violated constraint.
//!
//! The epsilon machinery underlying the n-dimensional proof is exposed as
//! `G_rho(eps) = eps A_rho - eps^m B_rho` with
//!
//! ```text
//! A_rho = n^2 m int rho^{1/m} - n^{1+1/m} m omega_n^{1/n} theta_R,
//! B_rho = (n/m) int |y|^m rho,
//! ```
//!
//! maximized at `eps_max(rho) = (A_rho / (m B_rho))^{1/(m-1)}`, which for
//! rho = mu_n collapses to the R-independent closed form
//! `(n^{1/m} m omega_n^{1/n})^{n-1}` (= 4 sqrt(pi) when n = 2).

use serde::Serialize;

use crate::densities::{IdentityRow, ModelDensity};
use crate::error::{Error, Result};
use crate::functionals::{
    constraint_scale_disk, constraint_scale_radial, exp_moment_disk, exp_moment_radial,
    free_energy_nd_disk, free_energy_nd_radial, onofri_energy_nd_disk, onofri_energy_nd_radial,
    DensityFunction, GridFunction, RadialDensityField, RadialField,
};
use crate::geometry::{DiskGrid, RadialGrid};

/// Everything measured in one duality experiment.
#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    pub n: u32,
    pub radius: f64,
    pub i_value: f64,
    pub j_value: f64,
    /// The renormalizer J_R(mu_n), evaluated with the same quadrature.
    pub j_reference: f64,
    /// I_R(u) - (J_R(rho) - J_R(mu_n)); nonnegative for admissible pairs.
    pub gap: f64,
    pub exp_constraint_residual: f64,
    pub mass_constraint_residual: f64,
    /// Amplitude applied to the raw u profile (0 when u was already zero).
    pub amplitude_scale: f64,
}

impl DualityReport {
    pub fn csv_header() -> &'static str {
        "n,R,I,J,J_mu,gap,exp_residual,mass_residual,scale"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.3e},{:.3e},{:.6e}",
            self.n,
            self.radius,
            self.i_value,
            self.j_value,
            self.j_reference,
            self.gap,
            self.exp_constraint_residual,
            self.mass_constraint_residual,
            self.amplitude_scale
        )
    }
}

/// Project a raw pair and evaluate both functionals on the disk (n = 2).
pub fn duality_gap_disk(
    u_raw: &GridFunction,
    rho_raw: &DensityFunction,
    grid: &DiskGrid,
    d: &ModelDensity,
) -> Result<DualityReport> {
    let theta = d.theta(grid.radius())?;
    let (u, scale) = if u_raw.max_abs() == 0.0 {
        (GridFunction::zero(grid), 0.0)
    } else {
        let s = constraint_scale_disk(u_raw, grid, d)?;
        (s.field, s.scale)
    };
    if rho_raw.mass() <= 0.0 {
        return Err(Error::Degenerate("rho must not be identically zero".into()));
    }
    let rho = rho_raw.rescaled_to_mass(theta)?;
    let model = DensityFunction::model(grid, d)?.rescaled_to_mass(theta)?;

    let i_value = onofri_energy_nd_disk(&u, grid, d)?;
    let j_value = free_energy_nd_disk(&rho, grid, d)?;
    let j_reference = free_energy_nd_disk(&model, grid, d)?;
    let exp_res = (exp_moment_disk(&u, grid, d)? - theta).abs();
    let mass_res = (grid.integrate_values(rho.values())? - theta).abs();
    Ok(DualityReport {
        n: d.dim(),
        radius: grid.radius(),
        i_value,
        j_value,
        j_reference,
        gap: i_value - (j_value - j_reference),
        exp_constraint_residual: exp_res,
        mass_constraint_residual: mass_res,
        amplitude_scale: scale,
    })
}

/// Radial version for any n >= 2.
pub fn duality_gap_radial(
    u_raw: &RadialField,
    rho_raw: &RadialDensityField,
    grid: &RadialGrid,
    d: &ModelDensity,
) -> Result<DualityReport> {
    let theta = d.theta(grid.radius())?;
    let (u, scale) = if u_raw.max_abs() == 0.0 {
        (RadialField::zero(grid), 0.0)
    } else {
        let s = constraint_scale_radial(u_raw, grid, d)?;
        (s.field, s.scale)
    };
    if rho_raw.mass() <= 0.0 {
        return Err(Error::Degenerate("rho must not be identically zero".into()));
    }
    let rho = rho_raw.rescaled_to_mass(theta)?;
    let model = RadialDensityField::model(grid, d)?.rescaled_to_mass(theta)?;

    let i_value = onofri_energy_nd_radial(&u, grid, d)?;
    let j_value = free_energy_nd_radial(&rho, grid, d)?;
    let j_reference = free_energy_nd_radial(&model, grid, d)?;
    let exp_res = (exp_moment_radial(&u, grid, d)? - theta).abs();
    let mass_res = (grid.integrate_values(rho.values())? - theta).abs();
    Ok(DualityReport {
        n: d.dim(),
        radius: grid.radius(),
        i_value,
        j_value,
        j_reference,
        gap: i_value - (j_value - j_reference),
        exp_constraint_residual: exp_res,
        mass_constraint_residual: mass_res,
        amplitude_scale: scale,
    })
}

/// The two coefficients of the concave-in-epsilon objective.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpsilonCoefficients {
    pub a: f64,
    pub b: f64,
    /// conjugate exponent m = n/(n-1)
    pub m: f64,
}

impl EpsilonCoefficients {
    /// G_rho(eps) = eps A - eps^m B; defined for eps > 0.
    pub fn objective(&self, eps: f64) -> Result<f64> {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(Error::Domain(format!(
                "epsilon must be positive, got {eps}"
            )));
        }
        Ok(eps * self.a - eps.powf(self.m) * self.b)
    }
}

fn density_mass_guard(mass: f64, theta: f64) -> Result<()> {
    if (mass - theta).abs() > 1e-8 * (1.0 + theta) {
        return Err(Error::ConstraintViolated {
            what: format!("epsilon machinery needs mass theta_R = {theta}"),
            residual: (mass - theta).abs(),
        });
    }
    Ok(())
}

/// A_rho and B_rho for a radial density of mass theta_R.
pub fn epsilon_coefficients_radial(
    rho: &RadialDensityField,
    grid: &RadialGrid,
    d: &ModelDensity,
) -> Result<EpsilonCoefficients> {
    let theta = d.theta(grid.radius())?;
    density_mass_guard(rho.mass(), theta)?;
    let nf = d.dim() as f64;
    let m = d.exponent();
    let mut root_mass = 0.0;
    let mut moment = 0.0;
    for (k, (&r, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
        root_mass += w * rho.values()[k].powf(1.0 / m);
        moment += w * r.powf(m) * rho.values()[k];
    }
    Ok(EpsilonCoefficients {
        a: nf * nf * m * root_mass
            - nf.powf(1.0 + 1.0 / m) * m * d.sphere_area().powf(1.0 / nf) * theta,
        b: nf / m * moment,
        m,
    })
}

/// A_rho and B_rho for a disk density of mass theta_R (n = 2).
pub fn epsilon_coefficients_disk(
    rho: &DensityFunction,
    grid: &DiskGrid,
    d: &ModelDensity,
) -> Result<EpsilonCoefficients> {
    if d.dim() != 2 {
        return Err(Error::Domain("disk densities live in dimension 2".into()));
    }
    let theta = d.theta(grid.radius())?;
    density_mass_guard(rho.mass(), theta)?;
    let nf = 2.0;
    let m = d.exponent();
    let mut root_mass_v = vec![0.0; grid.len()];
    let mut moment_v = vec![0.0; grid.len()];
    for (i, j) in grid.iter_nodes() {
        let idx = grid.index(i, j);
        let r = grid.radial_nodes()[i];
        root_mass_v[idx] = rho.values()[idx].powf(1.0 / m);
        moment_v[idx] = r.powf(m) * rho.values()[idx];
    }
    let root_mass = grid.integrate_values(&root_mass_v)?;
    let moment = grid.integrate_values(&moment_v)?;
    Ok(EpsilonCoefficients {
        a: nf * nf * m * root_mass
            - nf.powf(1.0 + 1.0 / m) * m * d.sphere_area().powf(1.0 / nf) * theta,
        b: nf / m * moment,
        m,
    })
}

/// Location of the maximum of G_rho over eps > 0.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum EpsilonMax {
    /// Closed-form stationary point (A/(mB))^{1/(m-1)}.
    Interior(f64),
    /// A_rho <= 0: the objective is nonpositive and has no interior
    /// maximum. Reported rather than errored, since the chain inequality
    /// holds for every eps regardless.
    NoInteriorMax { a: f64 },
}

pub fn epsilon_max(c: &EpsilonCoefficients) -> Result<EpsilonMax> {
    if c.b.abs() < 1e-300 {
        return Err(Error::Degenerate(
            "B_rho = 0: density is concentrated at the origin".into(),
        ));
    }
    if c.a <= 0.0 {
        return Ok(EpsilonMax::NoInteriorMax { a: c.a });
    }
    Ok(EpsilonMax::Interior(
        (c.a / (c.m * c.b)).powf(1.0 / (c.m - 1.0)),
    ))
}

/// Golden-section argmax of G_rho on [lo, hi]; oracle for the closed form.
pub fn epsilon_argmax_numeric(c: &EpsilonCoefficients, lo: f64, hi: f64) -> Result<f64> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain("need 0 < lo < hi".into()));
    }
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = c.objective(x1)?;
    let mut f2 = c.objective(x2)?;
    for _ in 0..200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = c.objective(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = c.objective(x1)?;
        }
        if (b - a) < 1e-12 * (1.0 + b) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// A sampled sweep of the epsilon objective for one density.
#[derive(Debug, Clone, Serialize)]
pub struct EpsilonSweep {
    pub label: String,
    pub a: f64,
    pub b: f64,
    pub samples: Vec<(f64, f64)>,
    pub eps_max_closed_form: f64,
    pub eps_argmax_numeric: f64,
}

/// Sample G_rho on a log-spaced grid around the stationary point and
/// locate the maximum both ways.
pub fn epsilon_sweep(
    c: &EpsilonCoefficients,
    label: impl Into<String>,
    n_samples: usize,
) -> Result<EpsilonSweep> {
    let closed = match epsilon_max(c)? {
        EpsilonMax::Interior(e) => e,
        EpsilonMax::NoInteriorMax { a } => {
            return Err(Error::Degenerate(format!("sweep needs A_rho > 0, got {a}")))
        }
    };
    let lo = closed / 50.0;
    let hi = closed * 50.0;
    let mut samples = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let t = k as f64 / (n_samples - 1) as f64;
        let eps = lo * (hi / lo).powf(t);
        samples.push((eps, c.objective(eps)?));
    }
    let numeric = epsilon_argmax_numeric(c, lo, hi)?;
    Ok(EpsilonSweep {
        label: label.into(),
        a: c.a,
        b: c.b,
        samples,
        eps_max_closed_form: closed,
        eps_argmax_numeric: numeric,
    })
}

/// The five dimension-constant and integral identities used to close the
/// duality chain, each evaluated as (lhs, rhs).
pub fn basic_identity_suite(
    d: &ModelDensity,
    radius: f64,
    nodes: usize,
) -> Result<Vec<IdentityRow>> {
    let grid = RadialGrid::new(d.dim(), radius, nodes)?;
    let nf = d.dim() as f64;
    let m = d.exponent();
    let omega = d.sphere_area();
    let eps = d.epsilon_max_reference();
    let theta = d.theta(radius)?;

    let root_mass = grid.integrate(|r| d.density_radial(r).powf(1.0 / m))?;
    let moment = grid.integrate(|r| r.powf(m) * d.density_radial(r))?;
    let grad_log = grid.integrate(|r| d.log_density_slope(r).abs().powf(nf))?;

    Ok(vec![
        IdentityRow::new(
            "alpha_from_eps_max",
            d.dim(),
            radius,
            nf * nf * m * eps / d.beta(),
            d.alpha(),
        ),
        IdentityRow::new(
            "eps_max_power",
            d.dim(),
            radius,
            nf * eps.powf(m) / (m * d.beta()),
            1.0,
        ),
        IdentityRow::new(
            "boundary_coefficient",
            d.dim(),
            radius,
            nf.powf(1.0 + 1.0 / m) * m * omega.powf(1.0 / nf) * eps,
            m.powi(d.dim() as i32) * nf.powi(d.dim() as i32) * omega,
        ),
        IdentityRow::new(
            "grad_log_norm",
            d.dim(),
            radius,
            grad_log,
            nf.powi(d.dim() as i32 - 1) * m.powi(d.dim() as i32) * omega * moment,
        ),
        IdentityRow::new(
            "theta_relation",
            d.dim(),
            radius,
            theta,
            (nf / omega).powf(1.0 / nf) * root_mass - moment,
        ),
    ])
}
