use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use gelscope::bounds::{additive_gel_bound, gel_time_bound, BoundSpec};
use gelscope::cascade::{integrate_cascade_with, CascadeOptions};
use gelscope::grid::{integrate_grid_with, GridOptions};
use gelscope::harness::config::SEED_ENV;
use gelscope::harness::output::{self, write_csv_atomic};
use gelscope::harness::scan::{criticality_scan, Family, ScanBudget, DEFAULT_ALPHAS};
use gelscope::harness::{invariant_suite, run_experiment, RunConfig};
use gelscope::mlsim::{gel_time_estimate, simulate_replicates, GelRule, SimOptions};
use gelscope::{Kernel, MassSpectrum};

#[derive(Parser)]
#[command(name = "gelscope", version, about = "Gelation experiments for the Smoluchowski coagulation equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    /// Box-infimum functional, needs `--x0` and `--r`.
    Box,
    /// Test-function bound for `(x + y) ln^α(e + x ∧ y)` kernels, `α > 1`.
    AdditiveLog,
}

#[derive(Subcommand)]
enum Command {
    /// Upper bound on the gel time.
    Bounds {
        #[arg(long)]
        kernel: Kernel,
        #[arg(long, value_enum, default_value = "box")]
        route: Route,
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, default_value = "delta(1)")]
        f0: MassSpectrum,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dyadic cascade for the K0-log kernel from delta(1).
    Cascade {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 40)]
        nmax: usize,
        #[arg(long)]
        tend: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncated integer-mass equation.
    Grid {
        #[arg(long)]
        kernel: Kernel,
        #[arg(long)]
        nmax: usize,
        #[arg(long)]
        tend: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value = "delta(1)")]
        f0: MassSpectrum,
        /// Lost-mass fraction reported as the loss time.
        #[arg(long, default_value_t = 1e-3)]
        loss_threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Writes the final spectrum as mass,concentration rows.
        #[arg(long)]
        spectrum_out: Option<PathBuf>,
    },
    /// Stochastic particle system, one row per seed.
    Mlsim {
        #[arg(long)]
        kernel: Kernel,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        /// First seed; overridden by GELSCOPE_SEED.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        tend: f64,
        #[arg(long, default_value = "n23")]
        rule: GelRule,
        #[arg(long, default_value = "delta(1)")]
        f0: MassSpectrum,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classifies gel versus conservation over a list of exponents.
    Scan {
        #[arg(long)]
        family: Family,
        /// Comma-separated exponents.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the invariant suite; exits nonzero on any failure.
    Check,
    /// Runs an experiment described by a key=value config file.
    Run { config: PathBuf },
}

fn emit(out: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    match out {
        Some(p) => write_csv_atomic(p, header, rows).with_context(|| format!("writing {}", p.display())),
        None => {
            let bytes = output::csv_bytes(header, rows)?;
            match std::io::stdout().lock().write_all(&bytes) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn env_seed(seed: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().with_context(|| format!("{SEED_ENV} must be an unsigned integer")),
        Err(_) => Ok(seed),
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Bounds { kernel, route, x0, r, f0, out } => {
            let report = match route {
                Route::Box => {
                    let (Some(x0), Some(r)) = (x0, r) else {
                        bail!("the box route needs --x0 and --r");
                    };
                    gel_time_bound(&kernel, &f0, &BoundSpec::new(x0, r)?)?
                }
                Route::AdditiveLog => {
                    let Kernel::K1Log { alpha } = kernel else {
                        bail!("the additive-log route needs a k1log kernel");
                    };
                    additive_gel_bound(alpha, &f0)?
                }
            };
            emit(out.as_deref(), &output::BOUND_HEADER, &[output::bound_row(&kernel.to_string(), &report)])?;
        }
        Command::Cascade { alpha, nmax, tend, tol, out } => {
            let mut o = CascadeOptions::new(tol);
            o.snapshot_on_front = false;
            let run = integrate_cascade_with(alpha, tend, nmax, &o)?;
            emit(out.as_deref(), &output::CASCADE_HEADER, &output::cascade_rows(&run))?;
        }
        Command::Grid { kernel, nmax, tend, tol, f0, loss_threshold, out, spectrum_out } => {
            let mut o = GridOptions::new(tol);
            o.record_spectra = false;
            let run = integrate_grid_with(&kernel, &f0, nmax, tend, &o)?;
            emit(out.as_deref(), &output::GRID_HEADER, &output::grid_rows(&run))?;
            if let Some(p) = spectrum_out {
                let s = MassSpectrum::from_dense(&run.final_c).with_lost_mass(run.lost_mass);
                emit(Some(&p), &output::SPECTRUM_HEADER, &output::spectrum_rows(&s))?;
            }
            match run.trajectory.mass_loss_time(loss_threshold) {
                Some(t) => eprintln!("loss time ({loss_threshold:e} of the mass): {t}"),
                None => eprintln!("no mass loss above {loss_threshold:e} by t = {}", run.t_reached),
            }
        }
        Command::Mlsim { kernel, n, seeds, seed, tend, rule, f0, out } => {
            if seeds == 0 {
                bail!("--seeds must be at least 1");
            }
            let seed = env_seed(seed)?;
            let runs = simulate_replicates(&kernel, n, &f0, seed, seeds, &SimOptions::new(tend))?;
            let est = gel_time_estimate(&runs, rule)?;
            emit(out.as_deref(), &output::MLSIM_HEADER, &output::mlsim_rows(&runs, &est))?;
            match (est.median, est.quartiles) {
                (Some(m), Some((q1, q3))) => eprintln!("median gel time {m}, quartiles [{q1}, {q3}], {} censored", est.censored),
                _ => eprintln!("gel time censored in {} of {} runs", est.censored, runs.len()),
            }
        }
        Command::Scan { family, alphas, out } => {
            let alphas = alphas.unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
            let rows = criticality_scan(family, &alphas, &ScanBudget::default())?;
            for r in &rows {
                eprintln!(
                    "{family} alpha={} verdict={} predicted={} exponent={} bound={}",
                    r.alpha,
                    r.verdict.as_str(),
                    r.predicted.as_str(),
                    r.exponent.map_or("-".into(), |p| format!("{p:.3}")),
                    r.bound.map_or("-".into(), |b| format!("{b:.4}")),
                );
            }
            emit(out.as_deref(), &output::SCAN_HEADER, &output::scan_rows(&rows))?;
        }
        Command::Check => {
            let mut ok = true;
            for r in invariant_suite() {
                println!("{r}");
                ok &= r.pass;
            }
            return Ok(ok);
        }
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?.with_env_seed()?;
            let res = run_experiment(&cfg)?;
            for f in &res.files {
                println!("{}", f.display());
            }
            eprintln!("done in {:.3} s", res.wall_time.as_secs_f64());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
