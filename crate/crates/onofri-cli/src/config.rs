//! Resolved experiment configuration: flags take precedence over the
//! key=value config file, which takes precedence over defaults. The
//! resolved configuration is echoed into the header of every output file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct Config {
    pub subcommand: String,
    pub n: u32,
    /// None means the subcommand default applies.
    pub radii: Option<Vec<f64>>,
    pub resolution: usize,
    pub seed: u64,
    pub trials: usize,
    /// Overrides the subcommand's pass/fail threshold when set.
    pub tolerance: Option<f64>,
    pub out_dir: PathBuf,
    pub plot: bool,
    pub inject_fault: bool,
}

pub struct Overrides {
    pub n: Option<u32>,
    pub radii: Option<Vec<f64>>,
    pub resolution: Option<usize>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub tolerance: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub plot: bool,
    pub inject_fault: bool,
}

#[derive(Debug, Default)]
struct FileValues {
    n: Option<u32>,
    radii: Option<Vec<f64>>,
    resolution: Option<usize>,
    seed: Option<u64>,
    trials: Option<usize>,
    tolerance: Option<f64>,
    out: Option<PathBuf>,
    plot: Option<bool>,
}

fn parse_radii(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad radius {s:?}: {e}"))
        })
        .collect()
}

fn parse_file(path: &Path) -> Result<FileValues, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut out = FileValues::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value, got {raw:?}", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |e: &dyn std::fmt::Display| format!("line {}: bad {key}: {e}", lineno + 1);
        match key {
            "n" => out.n = Some(value.parse().map_err(|e| bad(&e))?),
            "radius" => out.radii = Some(parse_radii(value)?),
            "resolution" => out.resolution = Some(value.parse().map_err(|e| bad(&e))?),
            "seed" => out.seed = Some(value.parse().map_err(|e| bad(&e))?),
            "trials" => out.trials = Some(value.parse().map_err(|e| bad(&e))?),
            "tolerance" => out.tolerance = Some(value.parse().map_err(|e| bad(&e))?),
            "out" => out.out = Some(PathBuf::from(value)),
            "plot" => out.plot = Some(value.parse().map_err(|e| bad(&e))?),
            other => return Err(format!("line {}: unknown key {other:?}", lineno + 1)),
        }
    }
    Ok(out)
}

impl Config {
    pub fn resolve(
        subcommand: &str,
        file: Option<&Path>,
        flags: Overrides,
    ) -> Result<Self, String> {
        let from_file = match file {
            Some(p) => parse_file(p)?,
            None => FileValues::default(),
        };
        let out_dir = flags
            .out_dir
            .or(from_file.out)
            .or_else(|| std::env::var_os("ONOFRI_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("onofri-out"));
        let config = Self {
            subcommand: subcommand.to_string(),
            n: flags.n.or(from_file.n).unwrap_or(2),
            radii: flags.radii.or(from_file.radii),
            resolution: flags.resolution.or(from_file.resolution).unwrap_or(128),
            seed: flags.seed.or(from_file.seed).unwrap_or(7),
            trials: flags.trials.or(from_file.trials).unwrap_or(50),
            tolerance: flags.tolerance.or(from_file.tolerance),
            out_dir,
            plot: flags.plot || from_file.plot.unwrap_or(false),
            inject_fault: flags.inject_fault,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), String> {
        if self.n < 2 {
            return Err(format!("dimension must be >= 2, got {}", self.n));
        }
        if let Some(radii) = &self.radii {
            if radii.is_empty() || radii.iter().any(|r| !r.is_finite() || *r <= 0.0) {
                return Err("radii must be positive".into());
            }
        }
        if self.resolution < 32 {
            return Err(format!("resolution must be >= 32, got {}", self.resolution));
        }
        if self.trials == 0 {
            return Err("trials must be >= 1".into());
        }
        Ok(())
    }

    pub fn radii_or(&self, default: &[f64]) -> Vec<f64> {
        self.radii.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn tolerance_or(&self, default: f64) -> f64 {
        self.tolerance.unwrap_or(default)
    }

    /// Sorted key=value pairs for file headers.
    pub fn echo_pairs(&self, default_radii: &[f64]) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        map.insert("command".into(), self.subcommand.clone());
        map.insert("n".into(), self.n.to_string());
        map.insert(
            "radius".into(),
            self.radii_or(default_radii)
                .iter()
                .map(|r| format!("{r}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        map.insert("resolution".into(), self.resolution.to_string());
        map.insert("seed".into(), self.seed.to_string());
        map.insert("trials".into(), self.trials.to_string());
        if let Some(t) = self.tolerance {
            map.insert("tolerance".into(), format!("{t}"));
        }
        if self.inject_fault {
            map.insert("inject_fault".into(), "true".into());
        }
        map
    }
}
