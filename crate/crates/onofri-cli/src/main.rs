//! Batch experiment runner for the Onofri duality library.
//!
//! Exit codes: 0 when every check passes, 1 when any inequality or
//! identity is violated beyond tolerance, 2 on usage or I/O errors.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{Config, Overrides};

#[derive(Parser)]
#[command(
    name = "onofri",
    version,
    about = "Numerical verification of the mass-transport duality for Onofri-type inequalities",
    after_help = "Outputs land in --out (or $ONOFRI_OUT, default ./onofri-out) as CSV and \
                  JSON lines headed by the resolved configuration; some commands also emit \
                  self-contained SVG plots."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Key=value configuration file (flags take precedence).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Ball dimension (>= 2).
    #[arg(long, global = true)]
    n: Option<u32>,

    /// Ball radius, or a comma-separated list of radii.
    #[arg(long, global = true, value_delimiter = ',', value_name = "R[,R...]")]
    radius: Option<Vec<f64>>,

    /// Grid resolution (radial nodes; also angular nodes where applicable).
    #[arg(long, global = true)]
    resolution: Option<usize>,

    /// Seed for the random field generators.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of random trials per parameter set.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Override the command's pass/fail tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// Emit SVG plots alongside the data files.
    #[arg(long, global = true)]
    plot: bool,

    /// Testing hook: corrupt a constant so the audit must report a
    /// violation.
    #[arg(long, global = true, hide = true)]
    inject_fault: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Audit every closed-form identity of the model density.
    Identities,
    /// Random admissible pairs: the duality gap must stay nonnegative.
    Duality,
    /// Whole-space deficit on random compactly supported fields.
    Deficit,
    /// Displacement-convexity inequality on random radial pairs.
    Lemma1,
    /// Sweep the concave objective for the model density and mark its
    /// closed-form maximizer.
    Epsilon,
    /// Fast diffusion flow from uniform data toward the model density.
    FdEvolve {
        /// Final time of the integration.
        #[arg(long, default_value_t = 20.0)]
        t_final: f64,
        /// Fixed time step (default: stability bound per step).
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Constrained minimization of the Onofri energy from random
    /// initializations.
    Minimize,
    /// Exponential-vs-gradient inequality with its equality candidate.
    Corollary,
    /// The functional on the unit sphere.
    Sphere,
}

fn main() {
    let cli = Cli::parse();
    let name = match &cli.command {
        Command::Identities => "identities",
        Command::Duality => "duality",
        Command::Deficit => "deficit",
        Command::Lemma1 => "lemma1",
        Command::Epsilon => "epsilon",
        Command::FdEvolve { .. } => "fd-evolve",
        Command::Minimize => "minimize",
        Command::Corollary => "corollary",
        Command::Sphere => "sphere",
    };
    let overrides = Overrides {
        n: cli.n,
        radii: cli.radius.clone(),
        resolution: cli.resolution,
        seed: cli.seed,
        trials: cli.trials,
        tolerance: cli.tolerance,
        out_dir: cli.out.clone(),
        plot: cli.plot,
        inject_fault: cli.inject_fault,
    };
    let cfg = match Config::resolve(name, cli.config.as_deref(), overrides) {
        Ok(c) => c,
        Err(message) => {
            eprintln!("error: {message}");
            std::process::exit(2);
        }
    };
    let outcome = match cli.command {
        Command::Identities => commands::identities(&cfg),
        Command::Duality => commands::duality(&cfg),
        Command::Deficit => commands::deficit(&cfg),
        Command::Lemma1 => commands::lemma1(&cfg),
        Command::Epsilon => commands::epsilon(&cfg),
        Command::FdEvolve { t_final, dt } => commands::fd_evolve_cmd(&cfg, t_final, dt),
        Command::Minimize => commands::minimize(&cfg),
        Command::Corollary => commands::corollary(&cfg),
        Command::Sphere => commands::sphere(&cfg),
    };
    match outcome {
        Ok(true) => {
            println!("{name}: all checks passed");
            std::process::exit(0);
        }
        Ok(false) => {
            eprintln!(
                "{name}: violations detected (see {})",
                cfg.out_dir.display()
            );
            std::process::exit(1);
        }
        Err(message) => {
            eprintln!("error: {message}");
            std::process::exit(2);
        }
    }
}
