//! Experiment configs and their CSV artifacts.
//!
//! A config is flat `key = value` text, one pair per line, with `#`
//! comments. Every CSV float is written as `{:.16e}` so that identical
//! configs and seeds give identical bytes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use crate::cascade::{integrate_cascade_with, CascadeOptions, MAX_LEVEL};
use crate::error::{Error, Result};
use crate::grid::{integrate_grid_with, GridOptions};
use crate::kernels::Kernel;
use crate::mlsim::{gel_time_estimate, simulate_replicates, GelRule, SimOptions};
use crate::spectrum::MassSpectrum;

use super::output::{
    cascade_rows, fmt_f64, fmt_opt, grid_rows, mlsim_rows, write_csv_atomic, CASCADE_HEADER, GRID_HEADER, MLSIM_HEADER,
};

/// Environment variable whose value replaces the config seed.
pub const SEED_ENV: &str = "GELSCOPE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Cascade,
    Grid,
    Mlsim,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Cascade => "cascade",
            Solver::Grid => "grid",
            Solver::Mlsim => "mlsim",
        })
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cascade" => Ok(Solver::Cascade),
            "grid" => Ok(Solver::Grid),
            "mlsim" => Ok(Solver::Mlsim),
            other => Err(Error::parse("solver", format!("expected cascade, grid or mlsim, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kernel: Kernel,
    pub solver: Solver,
    pub f0: MassSpectrum,
    /// Truncation: grid size for `grid`, top dyadic level for `cascade`.
    pub n_max: usize,
    pub t_end: f64,
    pub tol: f64,
    pub seed: u64,
    /// Independent `mlsim` runs, seeded `seed, seed + 1, …`.
    pub replicates: usize,
    /// Initial particle count for `mlsim`.
    pub n: usize,
    pub rule: GelRule,
    /// Lost-mass fraction that defines the loss time.
    pub loss_threshold: f64,
    /// Directory receiving the CSV files.
    pub output: PathBuf,
}

impl RunConfig {
    pub fn new(kernel: Kernel, solver: Solver) -> Self {
        RunConfig {
            kernel,
            solver,
            f0: MassSpectrum::delta(1.0).expect("unit mass"),
            n_max: match solver {
                Solver::Cascade => 40,
                _ => 1024,
            },
            t_end: 1.0,
            tol: 1e-6,
            seed: 0,
            replicates: 10,
            n: 10_000,
            rule: GelRule::TwoThirds,
            loss_threshold: 1e-3,
            output: PathBuf::from("out"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        if !(self.loss_threshold > 0.0 && self.loss_threshold < 1.0) {
            return bad(format!("loss_threshold must lie in (0, 1), got {}", self.loss_threshold));
        }
        if self.output.as_os_str().is_empty() {
            return bad("output directory is empty".into());
        }
        match self.solver {
            Solver::Cascade => {
                if !matches!(self.kernel, Kernel::K0Log { .. }) {
                    return bad(format!("the cascade needs a k0log kernel, got {}", self.kernel));
                }
                if self.f0 != MassSpectrum::delta(1.0)? {
                    return bad("the cascade starts from delta(1)".into());
                }
                if !(8..=MAX_LEVEL).contains(&self.n_max) {
                    return bad(format!("n_max must lie in 8..={MAX_LEVEL} for the cascade"));
                }
            }
            Solver::Grid => {
                if !(2..=1 << 22).contains(&self.n_max) {
                    return bad(format!("n_max must lie in 2..=4194304 for the grid, got {}", self.n_max));
                }
            }
            Solver::Mlsim => {
                if !(1..=1 << 26).contains(&self.n) {
                    return bad(format!("n must lie in 1..=67108864, got {}", self.n));
                }
                if !(1..=10_000).contains(&self.replicates) {
                    return bad(format!("replicates must lie in 1..=10000, got {}", self.replicates));
                }
            }
        }
        Ok(())
    }

    /// Replaces the seed with `GELSCOPE_SEED` when that is set.
    pub fn with_env_seed(self) -> Result<Self> {
        let value = std::env::var(SEED_ENV).ok();
        self.with_seed_override(value.as_deref())
    }

    pub fn with_seed_override(mut self, value: Option<&str>) -> Result<Self> {
        if let Some(v) = value {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got {v:?}")))?;
        }
        Ok(self)
    }

    /// SHA-256 of the rendered inputs, hex encoded. The output directory
    /// is left out.
    pub fn hash(&self) -> String {
        let text = self.to_string();
        let inputs: String = text.lines().filter(|l| !l.starts_with("output =")).collect::<Vec<_>>().join("\n");
        hex::encode(Sha256::digest(inputs.as_bytes()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kernel = {}", self.kernel)?;
        writeln!(f, "solver = {}", self.solver)?;
        writeln!(f, "f0 = {}", self.f0)?;
        writeln!(f, "n_max = {}", self.n_max)?;
        writeln!(f, "t_end = {:e}", self.t_end)?;
        writeln!(f, "tol = {:e}", self.tol)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "replicates = {}", self.replicates)?;
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "rule = {}", self.rule)?;
        writeln!(f, "loss_threshold = {:e}", self.loss_threshold)?;
        writeln!(f, "output = {}", self.output.display())
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("bad value for {key}: {v:?}")))
}

impl FromStr for RunConfig {
    type Err = Error;

    /// `kernel` and `solver` are required; other keys take the defaults
    /// of [`RunConfig::new`]. Unknown or repeated keys are errors.
    fn from_str(text: &str) -> Result<Self> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let k = k.trim().to_string();
            if pairs.iter().any(|(p, _)| *p == k) {
                return Err(Error::Config(format!("line {}: repeated key {k}", i + 1)));
            }
            pairs.push((k, v.trim().to_string()));
        }
        let get = |key: &str| pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let kernel: Kernel = get("kernel").ok_or_else(|| Error::Config("missing key kernel".into()))?.parse()?;
        let solver: Solver = get("solver").ok_or_else(|| Error::Config("missing key solver".into()))?.parse()?;
        let mut cfg = RunConfig::new(kernel, solver);
        for (k, v) in &pairs {
            match k.as_str() {
                "kernel" | "solver" => {}
                "f0" => cfg.f0 = v.parse()?,
                "n_max" => cfg.n_max = num(k, v)?,
                "t_end" => cfg.t_end = num(k, v)?,
                "tol" => cfg.tol = num(k, v)?,
                "seed" => cfg.seed = num(k, v)?,
                "replicates" => cfg.replicates = num(k, v)?,
                "n" => cfg.n = num(k, v)?,
                "rule" => cfg.rule = v.parse()?,
                "loss_threshold" => cfg.loss_threshold = num(k, v)?,
                "output" => cfg.output = PathBuf::from(v),
                other => return Err(Error::Config(format!("unknown key {other}"))),
            }
        }
        Ok(cfg)
    }
}

/// The summary row written next to the solver CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub config_hash: String,
    pub solver: Solver,
    pub kernel: String,
    pub t_reached: f64,
    pub m1_final: f64,
    pub lost_mass: f64,
    /// Loss time for the deterministic solvers, median first passage for `mlsim`.
    pub gel_time: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub files: Vec<PathBuf>,
    pub summary: RunSummary,
    /// Not written to disk; the CSVs stay byte-identical across runs.
    pub wall_time: Duration,
}

fn with_echo(cfg: &RunConfig) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Config(format!("{e}\nwhile running config:\n{cfg}"))
}

/// Validates `config`, runs its solver and writes `<solver>.csv` and
/// `summary.csv` into the output directory.
pub fn run_experiment(config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let start = Instant::now();
    let dir = &config.output;
    let hash = config.hash();
    let echo = with_echo(config);
    let data_path = dir.join(format!("{}.csv", config.solver));
    let summary = match config.solver {
        Solver::Cascade => {
            let Kernel::K0Log { alpha } = config.kernel else {
                unreachable!("validated")
            };
            let mut o = CascadeOptions::new(config.tol);
            o.snapshot_on_front = false;
            let run = integrate_cascade_with(alpha, config.t_end, config.n_max, &o).map_err(&echo)?;
            write_csv_atomic(&data_path, &CASCADE_HEADER, &cascade_rows(&run))?;
            let last = run.trajectory.moments.last().expect("initial row");
            RunSummary {
                config_hash: hash,
                solver: config.solver,
                kernel: config.kernel.to_string(),
                t_reached: run.final_state.t,
                m1_final: last.m1,
                lost_mass: last.lost_mass,
                gel_time: run.trajectory.mass_loss_time(config.loss_threshold),
            }
        }
        Solver::Grid => {
            let mut o = GridOptions::new(config.tol);
            o.record_spectra = false;
            let run = integrate_grid_with(&config.kernel, &config.f0, config.n_max, config.t_end, &o).map_err(&echo)?;
            write_csv_atomic(&data_path, &GRID_HEADER, &grid_rows(&run))?;
            let last = run.trajectory.moments.last().expect("initial row");
            RunSummary {
                config_hash: hash,
                solver: config.solver,
                kernel: config.kernel.to_string(),
                t_reached: run.t_reached,
                m1_final: last.m1,
                lost_mass: run.lost_mass,
                gel_time: run.trajectory.mass_loss_time(config.loss_threshold),
            }
        }
        Solver::Mlsim => {
            let opts = SimOptions::new(config.t_end);
            let runs = simulate_replicates(&config.kernel, config.n, &config.f0, config.seed, config.replicates, &opts)
                .map_err(&echo)?;
            let est = gel_time_estimate(&runs, config.rule).map_err(&echo)?;
            write_csv_atomic(&data_path, &MLSIM_HEADER, &mlsim_rows(&runs, &est))?;
            let t_reached = runs.iter().map(|r| r.t_reached).fold(f64::INFINITY, f64::min);
            RunSummary {
                config_hash: hash,
                solver: config.solver,
                kernel: config.kernel.to_string(),
                t_reached,
                m1_final: runs[0].total_mass / runs[0].volume,
                lost_mass: 0.0,
                gel_time: est.median,
            }
        }
    };
    let summary_path = dir.join("summary.csv");
    write_csv_atomic(
        &summary_path,
        &["config_hash", "solver", "kernel", "t_reached", "m1_final", "lost_mass", "gel_time"],
        &[vec![
            summary.config_hash.clone(),
            summary.solver.to_string(),
            summary.kernel.clone(),
            fmt_f64(summary.t_reached),
            fmt_f64(summary.m1_final),
            fmt_f64(summary.lost_mass),
            fmt_opt(summary.gel_time),
        ]],
    )?;
    Ok(RunResult {
        files: vec![data_path, summary_path],
        summary,
        wall_time: start.elapsed(),
    })
}
