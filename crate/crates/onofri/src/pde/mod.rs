//! The two dynamic counterparts of the duality: the rescaled fast
//! diffusion flow on a disk with no-flux boundary, and constrained
//! minimization of the Onofri energy.
//!
//! The flow is
//!
//! ```text
//! d_t rho = 1/(2 sqrt(pi)) Lap(sqrt(rho)) + div(x rho)     in B_R,
//! ```
//!
//! which in flux form reads `d_t rho + div F = 0` with
//! `F = -rho grad(phi)` and potential
//! `phi(rho, x) = -1/(2 sqrt(pi)) rho^{-1/2} + |x|^2 / 2`; the model
//! density makes phi constant (= -1/2 when R-independent mass matching is
//! left aside), so it is the stationary no-flux state. The finite-volume
//! scheme discretizes exactly this flux with upwind edge densities, so
//! the cell-center samples of the model density are a discrete steady
//! state to roundoff and the discrete free energy is nondecreasing.

pub mod minimize;

use serde::Serialize;

use crate::densities::ModelDensity;
use crate::error::{Error, Result};
use crate::tol;

pub use minimize::{
    euler_lagrange_residual, minimize_onofri, MinimizeOptions, MinimizerState, PolarGrid,
};

/// Uniform annular finite-volume cells on a disk: edges at j h for
/// j = 0..=cells, centers at (j + 1/2) h.
#[derive(Debug, Clone, Serialize)]
pub struct FvGrid {
    radius: f64,
    cells: usize,
}

impl FvGrid {
    pub fn new(radius: f64, cells: usize) -> Result<Self> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::Domain(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if cells < 8 {
            return Err(Error::GridTooSmall(
                "finite-volume grid needs at least 8 cells".into(),
            ));
        }
        Ok(Self { radius, cells })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn step(&self) -> f64 {
        self.radius / self.cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.step()
    }

    pub fn edge(&self, i: usize) -> f64 {
        i as f64 * self.step()
    }

    /// Exact annulus area of cell i.
    pub fn volume(&self, i: usize) -> f64 {
        let (a, b) = (self.edge(i), self.edge(i + 1));
        std::f64::consts::PI * (b * b - a * a)
    }
}

/// One snapshot of the evolving radial density.
#[derive(Debug, Clone, Serialize)]
pub struct EvolutionState {
    pub grid: FvGrid,
    /// Cell-center density values.
    pub values: Vec<f64>,
    pub time: f64,
    pub initial_mass: f64,
}

impl EvolutionState {
    pub fn new(grid: FvGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::ShapeMismatch {
                expected: grid.cells(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain(
                "density must be nonnegative and finite".into(),
            ));
        }
        let mut state = Self {
            grid,
            values,
            time: 0.0,
            initial_mass: 0.0,
        };
        state.initial_mass = state.mass();
        Ok(state)
    }

    /// Uniform density carrying the given mass.
    pub fn uniform(radius: f64, cells: usize, mass: f64) -> Result<Self> {
        let grid = FvGrid::new(radius, cells)?;
        let level = mass / (std::f64::consts::PI * radius * radius);
        let values = vec![level; cells];
        Self::new(grid, values)
    }

    /// The model density mu_2 sampled at cell centers.
    pub fn model(radius: f64, cells: usize) -> Result<Self> {
        let grid = FvGrid::new(radius, cells)?;
        let d = ModelDensity::new(2)?;
        let values = (0..cells)
            .map(|i| d.density_radial(grid.center(i)))
            .collect();
        Self::new(grid, values)
    }

    pub fn from_fn(radius: f64, cells: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let grid = FvGrid::new(radius, cells)?;
        let values = (0..cells).map(|i| f(grid.center(i)).max(0.0)).collect();
        Self::new(grid, values)
    }

    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.grid.volume(i))
            .sum()
    }

    /// L1 distance to the cell-center samples of mu_2.
    pub fn l1_distance_to_model(&self) -> f64 {
        let d = ModelDensity::new(2).expect("dimension 2 is valid");
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (v - d.density_radial(self.grid.center(i))).abs() * self.grid.volume(i))
            .sum()
    }

    /// Midpoint-rule free energy J(rho) = 2/sqrt(pi) int sqrt(rho)
    /// - int |x|^2 rho.
    pub fn free_energy(&self) -> f64 {
        use std::f64::consts::PI;
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let r = self.grid.center(i);
                (2.0 / PI.sqrt() * v.sqrt() - r * r * v) * self.grid.volume(i)
            })
            .sum()
    }
}

/// Which parts of the flux a step applies (the drift-only mode backs the
/// method-of-characteristics oracle in the tests).
#[derive(Debug, Clone, Copy)]
pub struct FluxParts {
    pub diffusion: bool,
    pub drift: bool,
}

impl Default for FluxParts {
    fn default() -> Self {
        Self {
            diffusion: true,
            drift: true,
        }
    }
}

fn potential(v: f64, r: f64, parts: FluxParts) -> f64 {
    use std::f64::consts::PI;
    let mut phi = 0.0;
    if parts.diffusion {
        phi += -1.0 / (2.0 * PI.sqrt() * v.max(tol::DENSITY_FLOOR).sqrt());
    }
    if parts.drift {
        phi += 0.5 * r * r;
    }
    phi
}

/// Interior edge fluxes -rho_e (phi_{i+1} - phi_i)/h with upwind donor
/// densities; entries are indexed by the edge number 1..cells-1 shifted
/// down by one (the center and outer boundary carry no flux).
fn edge_fluxes(state: &EvolutionState, parts: FluxParts) -> Vec<f64> {
    let grid = &state.grid;
    let h = grid.step();
    let mut fluxes = Vec::with_capacity(grid.cells().saturating_sub(1));
    for i in 0..grid.cells() - 1 {
        let phi_in = potential(state.values[i], grid.center(i), parts);
        let phi_out = potential(state.values[i + 1], grid.center(i + 1), parts);
        let dphi = phi_out - phi_in;
        // donor cell: flux flows against the potential gradient
        let donor = if dphi < 0.0 {
            state.values[i]
        } else {
            state.values[i + 1]
        };
        fluxes.push(-donor * dphi / h);
    }
    fluxes
}

/// A CFL-style bound for the explicit step from the current state.
pub fn fd_stable_dt(state: &EvolutionState) -> f64 {
    use std::f64::consts::PI;
    let h = state.grid.step();
    let min_rho = state
        .values
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v))
        .max(tol::DENSITY_FLOOR);
    // linearized diffusivity (1/(4 sqrt(pi))) rho^{-1/2} plus drift speed R
    let diffusivity = 1.0 / (4.0 * PI.sqrt() * min_rho.sqrt());
    0.4 / (2.0 * diffusivity / (h * h) + state.grid.radius() / h)
}

/// One explicit conservative step. Fails with a suggested dt when the
/// update would produce a negative cell density.
pub fn fd_step(state: &EvolutionState, dt: f64) -> Result<EvolutionState> {
    fd_step_with(state, dt, FluxParts::default())
}

/// Explicit step with selectable flux parts.
pub fn fd_step_with(state: &EvolutionState, dt: f64, parts: FluxParts) -> Result<EvolutionState> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let grid = &state.grid;
    let fluxes = edge_fluxes(state, parts);
    let mut next = state.values.clone();
    for i in 0..grid.cells() {
        let inflow = if i == 0 {
            0.0
        } else {
            2.0 * std::f64::consts::PI * grid.edge(i) * fluxes[i - 1]
        };
        let outflow = if i + 1 == grid.cells() {
            0.0 // no flux through r = R
        } else {
            2.0 * std::f64::consts::PI * grid.edge(i + 1) * fluxes[i]
        };
        next[i] += dt * (inflow - outflow) / grid.volume(i);
        if next[i] < 0.0 {
            let drop = state.values[i] - next[i];
            let suggested = 0.5 * dt * state.values[i] / drop.max(tol::DENSITY_FLOOR);
            return Err(Error::StepRejected {
                cell: i,
                suggested_dt: suggested,
            });
        }
    }
    Ok(EvolutionState {
        grid: grid.clone(),
        values: next,
        time: state.time + dt,
        initial_mass: state.initial_mass,
    })
}

/// One semi-implicit step: the potential is linearized about the current
/// state and the resulting tridiagonal system is solved exactly. Shares
/// the discrete steady state with the explicit scheme and tolerates much
/// larger dt; used when the explicit bound is prohibitive.
pub fn fd_step_semi_implicit(state: &EvolutionState, dt: f64) -> Result<EvolutionState> {
    use std::f64::consts::PI;
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let grid = &state.grid;
    let n = grid.cells();
    let h = grid.step();
    let parts = FluxParts::default();
    let fluxes = edge_fluxes(state, parts);
    // d phi / d rho at the current state
    let dphi: Vec<f64> = state
        .values
        .iter()
        .map(|&v| {
            let v = v.max(tol::DENSITY_FLOOR);
            1.0 / (4.0 * PI.sqrt() * v * v.sqrt())
        })
        .collect();
    // assemble tridiagonal system A * delta = b for the update delta
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        diag[i] = grid.volume(i);
        let explicit_in = if i == 0 {
            0.0
        } else {
            2.0 * PI * grid.edge(i) * fluxes[i - 1]
        };
        let explicit_out = if i + 1 == n {
            0.0
        } else {
            2.0 * PI * grid.edge(i + 1) * fluxes[i]
        };
        rhs[i] = dt * (explicit_in - explicit_out);
        // implicit corrections: edge (i, i+1)
        if i + 1 < n {
            let donor = if fluxes[i] >= 0.0 {
                state.values[i]
            } else {
                state.values[i + 1]
            };
            let k = dt * 2.0 * PI * grid.edge(i + 1) * donor / h;
            diag[i] += k * dphi[i];
            sup[i] -= k * dphi[i + 1];
        }
        if i > 0 {
            let donor = if fluxes[i - 1] >= 0.0 {
                state.values[i - 1]
            } else {
                state.values[i]
            };
            let k = dt * 2.0 * PI * grid.edge(i) * donor / h;
            diag[i] += k * dphi[i];
            sub[i] -= k * dphi[i - 1];
        }
    }
    let delta = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
    let mut next = state.values.clone();
    for i in 0..n {
        next[i] += delta[i];
        if next[i] < 0.0 {
            return Err(Error::StepRejected {
                cell: i,
                suggested_dt: 0.5 * dt,
            });
        }
    }
    Ok(EvolutionState {
        grid: grid.clone(),
        values: next,
        time: state.time + dt,
        initial_mass: state.initial_mass,
    })
}

fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom.abs() < 1e-300 {
        return Err(Error::Degenerate("singular tridiagonal system".into()));
    }
    c[0] = sup[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c[i - 1];
        if denom.abs() < 1e-300 {
            return Err(Error::Degenerate("singular tridiagonal system".into()));
        }
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    Explicit,
    SemiImplicit,
    /// Explicit unless the stability bound would exceed the step budget.
    Auto,
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    /// Fixed step; None picks the stability bound each step.
    pub dt: Option<f64>,
    /// Trajectory rows are recorded roughly this far apart in time.
    pub sample_interval: f64,
    pub max_steps: usize,
    pub scheme: Scheme,
    /// Evolution stops early once the L1 distance to the model density
    /// falls below this (0 disables the early exit).
    pub stop_distance: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            dt: None,
            sample_interval: 0.25,
            max_steps: 40_000_000,
            scheme: Scheme::Auto,
            stop_distance: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub l1_distance: f64,
    pub free_energy: f64,
    pub mass: f64,
}

impl TrajectorySample {
    pub fn csv_header() -> &'static str {
        "t,L1_distance,J_value,mass"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{:.6},{:.12e},{:.17e},{:.17e}",
            self.t, self.l1_distance, self.free_energy, self.mass
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub final_state: EvolutionState,
    /// |mass(t_final) - mass(0)|.
    pub mass_drift: f64,
    pub final_distance: f64,
    pub steps: usize,
    /// True when the step budget ran out before t_final.
    pub timed_out: bool,
    /// Set when the initial data had to be renormalized to mass theta_R;
    /// holds the original mass.
    pub initial_mass_rescaled_from: Option<f64>,
}

/// Integrate the flow to `t_final`, sampling the distance to the model
/// density, the free energy, and the mass along the way.
///
/// The flow targets the model density, so the initial mass must be
/// theta_R; data that misses it by more than 0.1% is rescaled and the
/// original mass is reported on the trajectory. (Quadrature-level
/// mismatches are left alone; renormalizing those would perturb exactly
/// stationary data.)
pub fn fd_evolve(
    initial: EvolutionState,
    t_final: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let mut state = initial;
    let theta = ModelDensity::new(2)?.theta(state.grid.radius())?;
    let mut rescaled_from = None;
    {
        let mass = state.mass();
        if ((mass - theta) / theta).abs() > 1e-3 {
            if mass <= 0.0 {
                return Err(Error::Degenerate("initial data has no mass".into()));
            }
            let c = theta / mass;
            for v in state.values.iter_mut() {
                *v *= c;
            }
            state.initial_mass = state.mass();
            rescaled_from = Some(mass);
        }
    }
    let m0 = state.mass();
    let mut samples = vec![TrajectorySample {
        t: state.time,
        l1_distance: state.l1_distance_to_model(),
        free_energy: state.free_energy(),
        mass: m0,
    }];
    let mut next_sample = state.time + opts.sample_interval;
    let mut steps = 0usize;
    let mut timed_out = false;

    let semi_implicit = match opts.scheme {
        Scheme::Explicit => false,
        Scheme::SemiImplicit => true,
        Scheme::Auto => {
            let dt = opts.dt.unwrap_or_else(|| fd_stable_dt(&state));
            let need = ((t_final - state.time) / dt).ceil();
            need > opts.max_steps as f64 / 2.0
        }
    };

    while state.time < t_final {
        if steps >= opts.max_steps {
            timed_out = true;
            break;
        }
        let mut dt = opts.dt.unwrap_or_else(|| {
            if semi_implicit {
                (t_final / 2000.0).min(5e-3)
            } else {
                fd_stable_dt(&state)
            }
        });
        dt = dt.min(t_final - state.time).max(1e-14);
        let stepped = if semi_implicit {
            fd_step_semi_implicit(&state, dt)
        } else {
            fd_step(&state, dt)
        };
        state = match stepped {
            Ok(s) => s,
            Err(Error::StepRejected { suggested_dt, .. }) => {
                // retry once at the suggested step; a second rejection is fatal
                if semi_implicit {
                    fd_step_semi_implicit(&state, suggested_dt)?
                } else {
                    fd_step(&state, suggested_dt)?
                }
            }
            Err(e) => return Err(e),
        };
        steps += 1;
        if state.time >= next_sample || state.time >= t_final {
            let dist = state.l1_distance_to_model();
            samples.push(TrajectorySample {
                t: state.time,
                l1_distance: dist,
                free_energy: state.free_energy(),
                mass: state.mass(),
            });
            next_sample += opts.sample_interval;
            if opts.stop_distance > 0.0 && dist < opts.stop_distance {
                break;
            }
        }
    }
    let mass_drift = (state.mass() - m0).abs();
    let final_distance = state.l1_distance_to_model();
    Ok(Trajectory {
        samples,
        final_state: state,
        mass_drift,
        final_distance,
        steps,
        timed_out,
        initial_mass_rescaled_from: rescaled_from,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_density_is_a_discrete_steady_state() {
        let state = EvolutionState::model(1.0, 128).unwrap();
        let dt = fd_stable_dt(&state);
        let next = fd_step(&state, dt).unwrap();
        let l1: f64 = state
            .values
            .iter()
            .zip(&next.values)
            .enumerate()
            .map(|(i, (a, b))| (a - b).abs() * state.grid.volume(i))
            .sum();
        assert!(l1 < 1e-8 * dt, "L1 change per step: {l1} (dt = {dt})");
    }

    #[test]
    fn mass_is_conserved_per_step() {
        let state = EvolutionState::uniform(1.0, 96, 0.5).unwrap();
        let mut s = state.clone();
        for _ in 0..200 {
            let dt = fd_stable_dt(&s);
            s = fd_step(&s, dt).unwrap();
        }
        assert!((s.mass() - state.mass()).abs() < 1e-12);
    }

    #[test]
    fn too_large_steps_are_rejected_with_a_suggestion() {
        let state = EvolutionState::from_fn(1.0, 64, |r| 0.02 + (8.0 * r).cos().powi(2)).unwrap();
        let dt = fd_stable_dt(&state);
        match fd_step(&state, 2000.0 * dt) {
            Err(Error::StepRejected { suggested_dt, .. }) => {
                assert!(suggested_dt > 0.0 && suggested_dt < 2000.0 * dt);
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn drift_only_contracts_the_second_moment() {
        // method of characteristics for d_t rho = div(x rho): the second
        // moment decays exactly like e^{-2t} while the support stays away
        // from the boundary
        let state = EvolutionState::from_fn(1.0, 256, |r| {
            if r < 0.4 {
                (1.0 - (r / 0.4) * (r / 0.4)).powi(2)
            } else {
                0.0
            }
        })
        .unwrap();
        let moment = |s: &EvolutionState| -> f64 {
            s.values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let r = s.grid.center(i);
                    r * r * v * s.grid.volume(i)
                })
                .sum()
        };
        let m0 = moment(&state);
        let mass0 = state.mass();
        let parts = FluxParts {
            diffusion: false,
            drift: true,
        };
        let mut s = state;
        let t_final = 0.5;
        let dt = 0.2 * s.grid.step(); // drift CFL
        while s.time < t_final {
            let step = dt.min(t_final - s.time);
            s = fd_step_with(&s, step, parts).unwrap();
        }
        assert!((s.mass() - mass0).abs() < 1e-12, "mass drift");
        let expected = m0 * (-2.0 * t_final).exp();
        assert!(
            ((moment(&s) - expected) / expected).abs() < 0.05,
            "moment {} vs characteristics {expected}",
            moment(&s)
        );
    }

    #[test]
    fn uniform_data_converges_to_the_model_density() {
        let d = ModelDensity::new(2).unwrap();
        let theta = d.theta(1.0).unwrap();
        let initial = EvolutionState::uniform(1.0, 128, theta).unwrap();
        let traj = fd_evolve(initial, 20.0, &EvolveOptions::default()).unwrap();
        assert!(!traj.timed_out);
        assert!(
            traj.mass_drift < tol::MASS_DRIFT,
            "drift {}",
            traj.mass_drift
        );
        assert!(
            traj.final_distance < 1e-3,
            "distance {}",
            traj.final_distance
        );
    }

    #[test]
    fn model_data_stays_put_along_the_flow() {
        let initial = EvolutionState::model(1.0, 128).unwrap();
        let traj = fd_evolve(initial, 5.0, &EvolveOptions::default()).unwrap();
        for s in &traj.samples {
            assert!(s.l1_distance < 1e-6, "t={}: {}", s.t, s.l1_distance);
        }
    }

    #[test]
    fn free_energy_is_nondecreasing() {
        let d = ModelDensity::new(2).unwrap();
        let theta = d.theta(1.0).unwrap();
        let initial = EvolutionState::uniform(1.0, 96, theta).unwrap();
        let traj = fd_evolve(initial, 8.0, &EvolveOptions::default()).unwrap();
        for pair in traj.samples.windows(2) {
            assert!(
                pair[1].free_energy >= pair[0].free_energy - 1e-8,
                "J dropped: {} -> {}",
                pair[0].free_energy,
                pair[1].free_energy
            );
        }
    }

    #[test]
    fn two_initial_data_converge_to_the_same_profile() {
        let d = ModelDensity::new(2).unwrap();
        let theta = d.theta(1.0).unwrap();
        let a = EvolutionState::uniform(1.0, 96, theta).unwrap();
        let raw = EvolutionState::from_fn(1.0, 96, |r| 0.1 + (1.0 - r * r).powi(2)).unwrap();
        let scale = theta / raw.mass();
        let b = EvolutionState::new(
            raw.grid.clone(),
            raw.values.iter().map(|v| v * scale).collect(),
        )
        .unwrap();
        let ta = fd_evolve(a, 20.0, &EvolveOptions::default()).unwrap();
        let tb = fd_evolve(b, 20.0, &EvolveOptions::default()).unwrap();
        let l1: f64 = ta
            .final_state
            .values
            .iter()
            .zip(&tb.final_state.values)
            .enumerate()
            .map(|(i, (x, y))| (x - y).abs() * ta.final_state.grid.volume(i))
            .sum();
        assert!(l1 < 2e-3, "profiles differ by {l1}");
    }

    #[test]
    fn exhausted_step_budget_reports_a_timeout() {
        let d = ModelDensity::new(2).unwrap();
        let initial = EvolutionState::uniform(1.0, 64, d.theta(1.0).unwrap()).unwrap();
        let opts = EvolveOptions {
            max_steps: 50,
            scheme: Scheme::Explicit,
            ..EvolveOptions::default()
        };
        let traj = fd_evolve(initial, 20.0, &opts).unwrap();
        assert!(traj.timed_out);
        assert!(traj.final_state.time < 20.0);
        assert!(traj.final_distance.is_finite());
    }

    #[test]
    fn wrong_mass_initial_data_is_renormalized_and_reported() {
        let initial = EvolutionState::uniform(1.0, 96, 0.15).unwrap(); // theta_1 = 0.5
        let traj = fd_evolve(initial, 8.0, &EvolveOptions::default()).unwrap();
        let original = traj
            .initial_mass_rescaled_from
            .expect("rescale not reported");
        assert!((original - 0.15).abs() < 1e-12);
        assert!((traj.final_state.mass() - 0.5).abs() < 1e-10);
        assert!(traj.final_distance < 1e-3);
        // matched data is left untouched
        let d = ModelDensity::new(2).unwrap();
        let exact = EvolutionState::uniform(1.0, 96, d.theta(1.0).unwrap()).unwrap();
        let traj = fd_evolve(exact, 1.0, &EvolveOptions::default()).unwrap();
        assert!(traj.initial_mass_rescaled_from.is_none());
    }

    #[test]
    fn semi_implicit_scheme_shares_the_steady_state() {
        let state = EvolutionState::model(1.0, 96).unwrap();
        let next = fd_step_semi_implicit(&state, 1e-3).unwrap();
        let l1: f64 = state
            .values
            .iter()
            .zip(&next.values)
            .enumerate()
            .map(|(i, (a, b))| (a - b).abs() * state.grid.volume(i))
            .sum();
        assert!(l1 < 1e-10, "L1 change {l1}");
        // and it conserves mass
        assert!((next.mass() - state.mass()).abs() < 1e-12);
    }

    #[test]
    fn semi_implicit_converges_from_uniform_data() {
        let d = ModelDensity::new(2).unwrap();
        let theta = d.theta(1.0).unwrap();
        let initial = EvolutionState::uniform(1.0, 96, theta).unwrap();
        let opts = EvolveOptions {
            scheme: Scheme::SemiImplicit,
            dt: Some(2e-3),
            ..EvolveOptions::default()
        };
        let traj = fd_evolve(initial, 20.0, &opts).unwrap();
        assert!(traj.mass_drift < tol::MASS_DRIFT);
        assert!(
            traj.final_distance < 2e-3,
            "distance {}",
            traj.final_distance
        );
    }
}
