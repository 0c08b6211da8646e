//! Subcommand implementations. Every command writes machine-diffable
//! artifacts (JSON lines and CSV, headed by the resolved configuration)
//! and returns whether all of its checks passed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use serde_json::json;

use onofri::densities::ModelDensity;
use onofri::duality::{
    basic_identity_suite, duality_gap_disk, duality_gap_radial, epsilon_coefficients_radial,
    epsilon_sweep,
};
use onofri::functionals::fields::{
    random_disk_density, random_radial_density, random_sphere_field, rng_for, DiskBumpField,
    RadialBumpField,
};
use onofri::functionals::{
    boundary_shift_field_disk, boundary_shift_field_radial, corollary_check_disk,
    corollary_check_radial, onofri_deficit_2d, onofri_deficit_nd_radial, sphere_onofri,
    CorollaryReport, RadialDensityField, SphereField,
};
use onofri::geometry::{DiskGrid, RadialGrid, SphereGrid};
use onofri::pde::{
    euler_lagrange_residual, fd_evolve, minimize_onofri, EvolutionState, EvolveOptions,
    MinimizeOptions, PolarGrid,
};
use onofri::transport::{lemma1_check, random_density_pair};
use onofri::IdentityRow;

use crate::config::Config;
use crate::svg;

pub struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    pub fn create(cfg: &Config) -> Result<Self, String> {
        std::fs::create_dir_all(&cfg.out_dir)
            .map_err(|e| format!("cannot create output dir {}: {e}", cfg.out_dir.display()))?;
        Ok(Self {
            dir: cfg.out_dir.clone(),
        })
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>, String> {
        let path = self.dir.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))
    }

    /// CSV writer with the resolved config echoed as comment lines.
    fn csv(
        &self,
        name: &str,
        cfg: &Config,
        defaults: &[f64],
        header: &str,
    ) -> Result<BufWriter<File>, String> {
        let mut w = self.file(name)?;
        for (k, v) in cfg.echo_pairs(defaults) {
            writeln!(w, "# {k}={v}").map_err(|e| e.to_string())?;
        }
        writeln!(w, "{header}").map_err(|e| e.to_string())?;
        Ok(w)
    }

    /// JSON-lines writer with the resolved config as the first record.
    fn jsonl(&self, name: &str, cfg: &Config, defaults: &[f64]) -> Result<BufWriter<File>, String> {
        let mut w = self.file(name)?;
        let echo: serde_json::Map<String, serde_json::Value> = cfg
            .echo_pairs(defaults)
            .into_iter()
            .map(|(k, v)| (k, serde_json::Value::String(v)))
            .collect();
        writeln!(w, "{}", json!({ "config": echo })).map_err(|e| e.to_string())?;
        Ok(w)
    }

    fn text(&self, name: &str, body: &str) -> Result<(), String> {
        let mut w = self.file(name)?;
        w.write_all(body.as_bytes()).map_err(|e| e.to_string())
    }
}

fn model(n: u32) -> Result<ModelDensity, String> {
    ModelDensity::new(n).map_err(|e| e.to_string())
}

type CmdResult = Result<bool, String>;

/// `identities`: closed-form audit plus the duality-chain identities.
pub fn identities(cfg: &Config) -> CmdResult {
    let defaults = [1.0];
    let radii = cfg.radii_or(&defaults);
    let tol = cfg.tolerance_or(1e-8);
    let out = Outputs::create(cfg)?;
    let mut csv = out.csv("identities.csv", cfg, &defaults, IdentityRow::csv_header())?;
    let mut jsonl = out.jsonl("identities.jsonl", cfg, &defaults)?;
    let d = model(cfg.n)?;
    let mut ok = true;
    for &radius in &radii {
        let mut rows = onofri::densities::closed_form_suite(&d, radius, cfg.resolution)
            .map_err(|e| e.to_string())?;
        rows.extend(basic_identity_suite(&d, radius, cfg.resolution).map_err(|e| e.to_string())?);
        if cfg.inject_fault {
            // testing hook: corrupt one constant so the audit must fail
            if let Some(row) = rows.first_mut() {
                *row = IdentityRow::new(
                    row.identity.clone(),
                    row.n,
                    row.radius,
                    row.lhs * 1.001,
                    row.rhs,
                );
            }
        }
        for row in rows {
            if row.abs_error > tol {
                ok = false;
            }
            writeln!(csv, "{}", row.to_csv_row()).map_err(|e| e.to_string())?;
            writeln!(jsonl, "{}", serde_json::to_string(&row).unwrap())
                .map_err(|e| e.to_string())?;
        }
    }
    Ok(ok)
}

/// `duality`: seeded random admissible pairs, gap must stay nonnegative.
pub fn duality(cfg: &Config) -> CmdResult {
    let defaults = [1.0];
    let radii = cfg.radii_or(&defaults);
    let tol = cfg.tolerance_or(1e-8);
    let out = Outputs::create(cfg)?;
    let mut csv = out.csv(
        "duality.csv",
        cfg,
        &defaults,
        onofri::duality::DualityReport::csv_header(),
    )?;
    let mut jsonl = out.jsonl("duality.jsonl", cfg, &defaults)?;
    let d = model(cfg.n)?;
    let mut ok = true;
    let mut gaps = Vec::new();
    for (ridx, &radius) in radii.iter().enumerate() {
        let mut rng = rng_for(cfg.seed.wrapping_add(1000 * ridx as u64));
        let mut done = 0usize;
        let mut attempts = 0usize;
        while done < cfg.trials {
            attempts += 1;
            if attempts > 2 * cfg.trials + 40 {
                return Err(format!(
                    "R={radius}: too many infeasible draws ({attempts}) for {} trials",
                    cfg.trials
                ));
            }
            let report = if cfg.n == 2 {
                let grid = DiskGrid::new(radius, cfg.resolution, cfg.resolution)
                    .map_err(|e| e.to_string())?;
                let u = DiskBumpField::random(&mut rng, radius).sample(&grid);
                let rho = random_disk_density(&mut rng, &grid).map_err(|e| e.to_string())?;
                match duality_gap_disk(&u, &rho, &grid, &d) {
                    Ok(r) => r,
                    Err(_) => continue,
                }
            } else {
                let grid =
                    RadialGrid::new(cfg.n, radius, cfg.resolution).map_err(|e| e.to_string())?;
                let u = RadialBumpField::random(&mut rng, radius).sample(&grid);
                let rho = random_radial_density(&mut rng, &grid).map_err(|e| e.to_string())?;
                match duality_gap_radial(&u, &rho, &grid, &d) {
                    Ok(r) => r,
                    Err(_) => continue,
                }
            };
            if report.gap < -tol || report.exp_constraint_residual > 1e-8 {
                ok = false;
            }
            gaps.push(report.gap);
            writeln!(csv, "{}", report.to_csv_row()).map_err(|e| e.to_string())?;
            let mut value = serde_json::to_value(&report).unwrap();
            value["trial"] = json!(done);
            value["seed"] = json!(cfg.seed);
            writeln!(jsonl, "{value}").map_err(|e| e.to_string())?;
            done += 1;
        }
    }
    if cfg.plot && gaps.len() >= 2 {
        let log_gaps: Vec<f64> = gaps.iter().map(|g| g.max(1e-16).log10()).collect();
        out.text(
            "duality_gaps.svg",
            &svg::histogram("log10 duality gaps", "log10(gap)", &log_gaps, 24),
        )?;
    }
    Ok(ok)
}

/// `deficit`: whole-space inequality on compactly supported fields.
pub fn deficit(cfg: &Config) -> CmdResult {
    let defaults = [50.0];
    let radii = cfg.radii_or(&defaults);
    let radius = radii[0];
    let support = (radius / 8.0).min(6.0);
    let tol = cfg.tolerance_or(1e-8);
    let out = Outputs::create(cfg)?;
    let mut csv = out.csv("deficit.csv", cfg, &defaults, "seed,n,R,deficit")?;
    let mut jsonl = out.jsonl("deficit.jsonl", cfg, &defaults)?;
    let d = model(cfg.n)?;
    let mut ok = true;
    let mut deficits = Vec::new();
    let mut rng = rng_for(cfg.seed);
    for trial in 0..cfg.trials {
        let report = if cfg.n == 2 {
            let grid = DiskGrid::with_radial_breakpoints(radius, &[support], cfg.resolution, 64)
                .map_err(|e| e.to_string())?;
            let u = DiskBumpField::random(&mut rng, support).sample(&grid);
            onofri_deficit_2d(&u, &grid).map_err(|e| e.to_string())?
        } else {
            let grid = RadialGrid::with_breakpoints(cfg.n, radius, &[support], cfg.resolution)
                .map_err(|e| e.to_string())?;
            let u = RadialBumpField::random(&mut rng, support).sample(&grid);
            onofri_deficit_nd_radial(&u, &grid, &d).map_err(|e| e.to_string())?
        };
        if report.deficit < -tol {
            ok = false;
        }
        deficits.push(report.deficit);
        writeln!(
            csv,
            "{},{},{},{:.17e}",
            cfg.seed.wrapping_add(trial as u64),
            cfg.n,
            radius,
            report.deficit
        )
        .map_err(|e| e.to_string())?;
        let mut value = serde_json::to_value(&report).unwrap();
        value["trial"] = json!(trial);
        value["n"] = json!(cfg.n);
        writeln!(jsonl, "{value}").map_err(|e| e.to_string())?;
    }
    if cfg.plot && deficits.len() >= 2 {
        out.text(
            "deficit_histogram.svg",
            &svg::histogram("Onofri deficits", "deficit", &deficits, 24),
        )?;
    }
    Ok(ok)
}

/// `lemma1`: displacement-convexity inequality on random radial pairs.
pub fn lemma1(cfg: &Config) -> CmdResult {
    let defaults = [1.0];
    let radii = cfg.radii_or(&defaults);
    let tol = cfg.tolerance_or(1e-6);
    let out = Outputs::create(cfg)?;
    let mut csv = out.csv(
        "lemma1.csv",
        cfg,
        &defaults,
        onofri::transport::Lemma1Report::csv_header(),
    )?;
    let mut jsonl = out.jsonl("lemma1.jsonl", cfg, &defaults)?;
    let mut ok = true;
    for (ridx, &radius) in radii.iter().enumerate() {
        let grid = RadialGrid::new(cfg.n, radius, cfg.resolution).map_err(|e| e.to_string())?;
        let mut rng = rng_for(cfg.seed.wrapping_add(1000 * ridx as u64));
        for trial in 0..cfg.trials {
            let (a, b) = random_density_pair(&mut rng, cfg.n, radius);
            let report = lemma1_check(&a, &b, &grid).map_err(|e| e.to_string())?;
            if report.slack < -tol {
                ok = false;
            }
            writeln!(csv, "{}", report.to_csv_row()).map_err(|e| e.to_string())?;
            let mut value = serde_json::to_value(&report).unwrap();
            value["trial"] = json!(trial);
            writeln!(jsonl, "{value}").map_err(|e| e.to_string())?;
        }
    }
    Ok(ok)
}

/// `epsilon`: sweep of the concave objective for the model density, with
/// the closed-form maximizer marked.
pub fn epsilon(cfg: &Config) -> CmdResult {
    let defaults = [1.0];
    let radii = cfg.radii_or(&defaults);
    let out = Outputs::create(cfg)?;
    let mut csv = out.csv("epsilon.csv", cfg, &defaults, "R,eps,G")?;
    let mut jsonl = out.jsonl("epsilon.jsonl", cfg, &defaults)?;
    let d = model(cfg.n)?;
    let mut ok = true;
    for &radius in &radii {
        let grid = RadialGrid::new(cfg.n, radius, cfg.resolution).map_err(|e| e.to_string())?;
        let theta = d.theta(radius).map_err(|e| e.to_string())?;
        let rho = RadialDensityField::model(&grid, &d)
            .and_then(|r| r.rescaled_to_mass(theta))
            .map_err(|e| e.to_string())?;
        let coeff = epsilon_coefficients_radial(&rho, &grid, &d).map_err(|e| e.to_string())?;
        let sweep = epsilon_sweep(&coeff, format!("mu_{} R={radius}", cfg.n), 1000)
            .map_err(|e| e.to_string())?;
        let reference = d.epsilon_max_reference();
        if ((sweep.eps_max_closed_form - reference) / reference).abs() > 1e-7
            || ((sweep.eps_max_closed_form - sweep.eps_argmax_numeric) / reference).abs() > 1e-6
        {
            ok = false;
        }
        for &(eps, g) in &sweep.samples {
            writeln!(csv, "{radius},{eps:.12e},{g:.12e}").map_err(|e| e.to_string())?;
        }
        writeln!(jsonl, "{}", serde_json::to_string(&sweep).unwrap()).map_err(|e| e.to_string())?;
        let g_at_max = coeff
            .objective(sweep.eps_max_closed_form)
            .map_err(|e| e.to_string())?;
        let label = format!("eps_max = {:.6}", sweep.eps_max_closed_form);
        out.text(
            &format!("epsilon_R{radius}.svg"),
            &svg::line_plot(
                &format!("G(eps) for the model density, n={}, R={radius}", cfg.n),
                "eps (log scale)",
                "G",
                &sweep.samples,
                Some((sweep.eps_max_closed_form, g_at_max, &label)),
                true,
            ),
        )?;
    }
    Ok(ok)
}

/// `fd-evolve`: fast diffusion flow from uniform data toward the model
/// density.
pub fn fd_evolve_cmd(cfg: &Config, t_final: f64, dt: Option<f64>) -> CmdResult {
    let defaults = [1.0];
    let radius = cfg.radii_or(&defaults)[0];
    let tol = cfg.tolerance_or(1e-3);
    let out = Outputs::create(cfg)?;
    let mut csv = out.csv(
        "trajectory.csv",
        cfg,
        &defaults,
        onofri::pde::TrajectorySample::csv_header(),
    )?;
    let mut jsonl = out.jsonl("trajectory.jsonl", cfg, &defaults)?;
    let d = model(2)?;
    let theta = d.theta(radius).map_err(|e| e.to_string())?;
    let initial =
        EvolutionState::uniform(radius, cfg.resolution, theta).map_err(|e| e.to_string())?;
    let opts = EvolveOptions {
        dt,
        ..EvolveOptions::default()
    };
    let traj = fd_evolve(initial, t_final, &opts).map_err(|e| e.to_string())?;
    let mut ok = !traj.timed_out && traj.mass_drift < 1e-10 && traj.final_distance < tol;
    for pair in traj.samples.windows(2) {
        if pair[1].free_energy < pair[0].free_energy - 1e-8 {
            ok = false; // the flow must ascend the free energy
        }
    }
    for s in &traj.samples {
        writeln!(csv, "{}", s.to_csv_row()).map_err(|e| e.to_string())?;
    }
    writeln!(
        jsonl,
        "{}",
        json!({
            "final_distance": traj.final_distance,
            "mass_drift": traj.mass_drift,
            "steps": traj.steps,
            "timed_out": traj.timed_out,
        })
    )
    .map_err(|e| e.to_string())?;
    if cfg.plot {
        let pts: Vec<(f64, f64)> = traj
            .samples
            .iter()
            .map(|s| (s.t, s.l1_distance.max(1e-16).log10()))
            .collect();
        out.text(
            "trajectory.svg",
            &svg::line_plot(
                "distance to the model density",
                "t",
                "log10 L1 distance",
                &pts,
                None,
                false,
            ),
        )?;
    }
    Ok(ok)
}

/// `minimize`: constrained minimization from random initializations.
pub fn minimize(cfg: &Config) -> CmdResult {
    let defaults = [1.0];
    let radius = cfg.radii_or(&defaults)[0];
    let out = Outputs::create(cfg)?;
    let mut jsonl = out.jsonl("minimize.jsonl", cfg, &defaults)?;
    let grid = PolarGrid::new(radius, cfg.resolution, cfg.resolution).map_err(|e| e.to_string())?;
    let d = model(2)?;
    let mut ok = true;
    let mut rng = rng_for(cfg.seed);
    for trial in 0..cfg.trials {
        let bump = DiskBumpField::random(&mut rng, radius);
        let init = grid.sample_xy(|x, y| bump.value(x, y));
        let state = match minimize_onofri(&grid, &d, &init, &MinimizeOptions::default()) {
            Ok(s) => s,
            Err(e) => {
                writeln!(
                    jsonl,
                    "{}",
                    json!({ "trial": trial, "error": e.to_string() })
                )
                .map_err(|e| e.to_string())?;
                ok = false;
                continue;
            }
        };
        let residual = euler_lagrange_residual(&grid, &state.values, state.lambda, &d)
            .map_err(|e| e.to_string())?;
        let pass = state.sup_norm < 1e-3
            && state.objective >= -1e-8
            && state.objective < 1e-6
            && (state.lambda - 1.0).abs() < 1e-2
            && residual < 1e-3;
        if !pass {
            ok = false;
        }
        writeln!(
            jsonl,
            "{}",
            json!({
                "trial": trial,
                "iterations": state.iterations,
                "final_norm": state.sup_norm,
                "lambda": state.lambda,
                "residual": residual,
                "objective": state.objective,
                "converged": state.converged,
            })
        )
        .map_err(|e| e.to_string())?;
    }
    Ok(ok)
}

fn corollary_row(
    csv: &mut BufWriter<File>,
    jsonl: &mut BufWriter<File>,
    tag: &str,
    report: &CorollaryReport,
) -> Result<(), String> {
    writeln!(
        csv,
        "{tag},{},{},{:.17e},{:.17e},{:.6e},{:.6e}",
        report.n, report.radius, report.lhs, report.rhs, report.slack, report.loose_slack
    )
    .map_err(|e| e.to_string())?;
    let mut value = serde_json::to_value(report).unwrap();
    value["field"] = json!(tag);
    writeln!(jsonl, "{value}").map_err(|e| e.to_string())
}

/// `corollary`: exponential-vs-gradient inequality, sharp and printed
/// variants, with the equality candidate first.
pub fn corollary(cfg: &Config) -> CmdResult {
    let defaults = [1.0];
    let radii = cfg.radii_or(&defaults);
    let tol = cfg.tolerance_or(1e-8);
    let out = Outputs::create(cfg)?;
    let mut csv = out.csv(
        "corollary.csv",
        cfg,
        &defaults,
        "field,n,R,lhs,rhs,slack,loose_slack",
    )?;
    let mut jsonl = out.jsonl("corollary.jsonl", cfg, &defaults)?;
    let d = model(cfg.n)?;
    let mut ok = true;
    for (ridx, &radius) in radii.iter().enumerate() {
        let mut rng = rng_for(cfg.seed.wrapping_add(1000 * ridx as u64));
        if cfg.n == 2 {
            let grid =
                DiskGrid::new(radius, cfg.resolution, cfg.resolution).map_err(|e| e.to_string())?;
            let v_star = boundary_shift_field_disk(&grid, &d).map_err(|e| e.to_string())?;
            let candidate = corollary_check_disk(&v_star, &grid, &d).map_err(|e| e.to_string())?;
            if candidate.slack.abs() > 1e-6 {
                ok = false;
            }
            corollary_row(&mut csv, &mut jsonl, "equality_candidate", &candidate)?;
            let mut done = 0usize;
            let mut attempts = 0usize;
            while done < cfg.trials {
                attempts += 1;
                if attempts > 2 * cfg.trials + 40 {
                    return Err(format!("R={radius}: too many infeasible draws"));
                }
                let w = DiskBumpField::random(&mut rng, radius).sample(&grid);
                let seed_field = w.plus(&v_star).map_err(|e| e.to_string())?;
                let report = match corollary_check_disk(&seed_field, &grid, &d) {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                if report.slack < -tol || report.loose_slack < -tol {
                    ok = false;
                }
                corollary_row(&mut csv, &mut jsonl, &format!("random_{done}"), &report)?;
                done += 1;
            }
        } else {
            let grid = RadialGrid::new(cfg.n, radius, cfg.resolution).map_err(|e| e.to_string())?;
            let v_star = boundary_shift_field_radial(&grid, &d).map_err(|e| e.to_string())?;
            let candidate =
                corollary_check_radial(&v_star, &grid, &d).map_err(|e| e.to_string())?;
            if candidate.slack.abs() > 1e-6 {
                ok = false;
            }
            corollary_row(&mut csv, &mut jsonl, "equality_candidate", &candidate)?;
            let mut done = 0usize;
            let mut attempts = 0usize;
            while done < cfg.trials {
                attempts += 1;
                if attempts > 2 * cfg.trials + 40 {
                    return Err(format!("R={radius}: too many infeasible draws"));
                }
                let w = RadialBumpField::random(&mut rng, radius).sample(&grid);
                let seed_field = w.plus(&v_star).map_err(|e| e.to_string())?;
                let report = match corollary_check_radial(&seed_field, &grid, &d) {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                if report.slack < -tol || report.loose_slack < -tol {
                    ok = false;
                }
                corollary_row(&mut csv, &mut jsonl, &format!("random_{done}"), &report)?;
                done += 1;
            }
        }
    }
    Ok(ok)
}

/// `sphere`: the functional on the unit sphere stays nonnegative and is
/// invariant under constant shifts.
pub fn sphere(cfg: &Config) -> CmdResult {
    let defaults = [1.0];
    let tol = cfg.tolerance_or(1e-6);
    let out = Outputs::create(cfg)?;
    let mut csv = out.csv("sphere.csv", cfg, &defaults, "trial,J,shift_deviation")?;
    let mut jsonl = out.jsonl("sphere.jsonl", cfg, &defaults)?;
    let grid = SphereGrid::new(cfg.resolution / 2, cfg.resolution).map_err(|e| e.to_string())?;
    let zero = sphere_onofri(&SphereField::zero(&grid), &grid).map_err(|e| e.to_string())?;
    let mut ok = zero == 0.0;
    let mut rng = rng_for(cfg.seed);
    for trial in 0..cfg.trials {
        let u = random_sphere_field(&mut rng, &grid);
        let j = sphere_onofri(&u, &grid).map_err(|e| e.to_string())?;
        let jc = sphere_onofri(&u.shifted(0.7), &grid).map_err(|e| e.to_string())?;
        let deviation = (jc - j).abs();
        if j < -tol || deviation > 1e-10 {
            ok = false;
        }
        writeln!(csv, "{trial},{j:.17e},{deviation:.3e}").map_err(|e| e.to_string())?;
        writeln!(
            jsonl,
            "{}",
            json!({ "trial": trial, "J": j, "shift_deviation": deviation })
        )
        .map_err(|e| e.to_string())?;
    }
    Ok(ok)
}
