//! Cross-solver checks, criticality scans and reproducible experiment runs.

pub mod check;
pub mod config;
pub mod output;
pub mod psi;
pub mod scan;

pub use check::{invariant_suite, CheckResult};
pub use config::{run_experiment, RunConfig, RunResult, RunSummary, Solver};
pub use psi::{monotone_mass_check, weak_form_residual, MassCheck, TestFunction, WeakFormResidual};
pub use scan::{criticality_scan, Family, ScanBudget, ScanRow};
