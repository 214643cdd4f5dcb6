//! Gel versus conservation across the logarithmic exponent `α`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bounds::{additive_gel_bound, optimize_gel_time_bound};
use crate::cascade::{integrate_cascade_with, CascadeOptions};
use crate::error::{Error, Result};
use crate::grid::{integrate_grid_with, GridOptions};
use crate::kernels::Kernel;
use crate::refinement::{analyze, RefinementRule, Verdict};
use crate::spectrum::MassSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// `K₀`-log, run on the dyadic cascade from `δ₁`.
    K0Log,
    /// `K₁`-log, run on the integer grid from `δ₁`.
    K1Log,
}

impl Family {
    pub fn kernel(self, alpha: f64) -> Kernel {
        match self {
            Family::K0Log => Kernel::K0Log { alpha },
            Family::K1Log => Kernel::K1Log { alpha },
        }
    }

    /// Largest `α` for which the family conserves mass from `δ₁`.
    pub fn critical_alpha(self) -> f64 {
        match self {
            Family::K0Log => 2.0,
            Family::K1Log => 1.0,
        }
    }

    pub fn predicted(self, alpha: f64) -> Verdict {
        if alpha > self.critical_alpha() {
            Verdict::Gel
        } else {
            Verdict::Conserve
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::K0Log => "k0log",
            Family::K1Log => "k1log",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "k0log" | "k0-log" | "k0" => Ok(Family::K0Log),
            "k1log" | "k1-log" | "k1" => Ok(Family::K1Log),
            other => Err(Error::parse("family", format!("expected k0log or k1log, got {other:?}"))),
        }
    }
}

/// Per-run limits and refinement levels of a scan.
#[derive(Debug, Clone)]
pub struct ScanBudget {
    /// Cascade truncation levels for `K₀`-log, increasing.
    pub cascade_levels: Vec<usize>,
    /// Grid sizes for `K₁`-log, increasing.
    pub grid_sizes: Vec<usize>,
    pub cascade_t_end: f64,
    pub grid_t_end: f64,
    pub cascade_tol: f64,
    pub grid_tol: f64,
    /// Lost-mass fraction that defines the loss time.
    pub loss_threshold: f64,
    pub max_steps: usize,
    pub rule: RefinementRule,
}

impl Default for ScanBudget {
    fn default() -> Self {
        ScanBudget {
            cascade_levels: vec![62, 125, 250, 500, 1000],
            grid_sizes: (9..=14).map(|p| 1usize << p).collect(),
            cascade_t_end: 200.0,
            grid_t_end: 20.0,
            cascade_tol: 1e-7,
            grid_tol: 1e-6,
            loss_threshold: 1e-3,
            max_steps: 200_000,
            rule: RefinementRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub family: Family,
    pub alpha: f64,
    pub verdict: Verdict,
    pub predicted: Verdict,
    /// `(N or n_max, loss time)` per refinement level.
    pub loss_times: Vec<(usize, Option<f64>)>,
    pub exponent: Option<f64>,
    pub gel_time: Option<f64>,
    pub interval: Option<(f64, f64)>,
    /// Theoretical gel-time upper bound when the family gels.
    pub bound: Option<f64>,
    pub bound_route: Option<&'static str>,
    pub note: String,
}

impl ScanRow {
    pub fn matches(&self) -> bool {
        self.verdict == self.predicted
    }
}

fn level_loss_time(family: Family, alpha: f64, level: usize, budget: &ScanBudget) -> Result<Option<f64>> {
    // run a little past the loss time, then stop
    let halt = Some((2.0 * budget.loss_threshold).min(1.0));
    match family {
        Family::K0Log => {
            let mut o = CascadeOptions::new(budget.cascade_tol);
            o.record_spectra = false;
            o.halt_at_loss = halt;
            let run = integrate_cascade_with(alpha, budget.cascade_t_end, level, &o)?;
            Ok(run.trajectory.mass_loss_time(budget.loss_threshold))
        }
        Family::K1Log => {
            let mut o = GridOptions::new(budget.grid_tol);
            o.record_spectra = false;
            o.halt_at_loss = halt;
            o.max_steps = budget.max_steps;
            let delta = MassSpectrum::delta(1.0)?;
            let run = integrate_grid_with(&Kernel::K1Log { alpha }, &delta, level, budget.grid_t_end, &o)?;
            Ok(run.trajectory.mass_loss_time(budget.loss_threshold))
        }
    }
}

fn theoretical_bound(family: Family, alpha: f64) -> Option<(f64, &'static str)> {
    if alpha <= family.critical_alpha() {
        return None;
    }
    let delta = MassSpectrum::delta(1.0).ok()?;
    let report = match family {
        Family::K0Log => {
            // the box infimum of K₀ vanishes unless r < 2
            let x0s = [0.25, 0.5, 0.75];
            let rs = [1.25, 1.5, 1.75];
            optimize_gel_time_bound(&family.kernel(alpha), &delta, &x0s, &rs).ok()?
        }
        Family::K1Log => additive_gel_bound(alpha, &delta).ok()?,
    };
    Some((report.tgel_upper, report.route.as_str()))
}

/// Classifies each `α` by refinement of the family's solver.
///
/// Runs execute in parallel; the table is ordered as `alphas`. Solver
/// failures leave the level without a loss time, which yields an
/// inconclusive verdict rather than an error.
pub fn criticality_scan(family: Family, alphas: &[f64], budget: &ScanBudget) -> Result<Vec<ScanRow>> {
    for &a in alphas {
        if !(a > 0.0 && a <= 4.0) {
            return Err(Error::Range(format!("alpha must lie in (0, 4], got {a}")));
        }
    }
    let levels = match family {
        Family::K0Log => &budget.cascade_levels,
        Family::K1Log => &budget.grid_sizes,
    };
    if levels.len() < 3 || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("need at least three increasing refinement levels".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..alphas.len()).flat_map(|i| (0..levels.len()).map(move |j| (i, j))).collect();
    let results: Vec<(usize, usize, std::result::Result<Option<f64>, String>)> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let r = level_loss_time(family, alphas[i], levels[j], budget).map_err(|e| e.to_string());
            (i, j, r)
        })
        .collect();

    let mut rows = Vec::with_capacity(alphas.len());
    for (i, &alpha) in alphas.iter().enumerate() {
        let mut times = vec![None; levels.len()];
        let mut failures = Vec::new();
        for (ri, j, r) in &results {
            if *ri != i {
                continue;
            }
            match r {
                Ok(t) => times[*j] = *t,
                Err(e) => failures.push(format!("level {}: {e}", levels[*j])),
            }
        }
        // u = ln N; the cascade tracks masses up to 2^{n_max}
        let log_sizes: Vec<f64> = levels
            .iter()
            .map(|&l| match family {
                Family::K0Log => l as f64 * std::f64::consts::LN_2,
                Family::K1Log => (l as f64).ln(),
            })
            .collect();
        let analysis = analyze(&log_sizes, &times, &budget.rule)?;
        let mut verdict = analysis.verdict;
        let mut note = analysis.note.clone();
        if !failures.is_empty() {
            verdict = Verdict::Inconclusive;
            note = format!("budget exhausted ({})", failures.join("; "));
        }
        let bound = theoretical_bound(family, alpha);
        rows.push(ScanRow {
            family,
            alpha,
            verdict,
            predicted: family.predicted(alpha),
            loss_times: levels.iter().copied().zip(times).collect(),
            exponent: analysis.exponent,
            gel_time: analysis.estimate,
            interval: analysis.interval,
            bound: bound.map(|b| b.0),
            bound_route: bound.map(|b| b.1),
            note,
        });
    }
    Ok(rows)
}

/// The default `α` grid.
pub const DEFAULT_ALPHAS: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_parsing_and_predictions() {
        assert_eq!("K0-log".parse::<Family>().unwrap(), Family::K0Log);
        assert!("k2".parse::<Family>().is_err());
        assert_eq!(Family::K0Log.predicted(2.0), Verdict::Conserve);
        assert_eq!(Family::K1Log.predicted(1.5), Verdict::Gel);
    }

    #[test]
    fn small_cascade_scan() {
        let budget = ScanBudget {
            cascade_levels: vec![31, 62, 125, 250],
            ..ScanBudget::default()
        };
        let rows = criticality_scan(Family::K0Log, &[1.0, 3.0], &budget).unwrap();
        assert_eq!(rows[0].verdict, Verdict::Conserve);
        assert_eq!(rows[1].verdict, Verdict::Gel);
        let (t, b) = (rows[1].gel_time.unwrap(), rows[1].bound.unwrap());
        assert!(t <= b, "{t} > {b}");
        assert!(criticality_scan(Family::K0Log, &[5.0], &budget).is_err());
    }

    #[test]
    fn exhausted_budget_is_inconclusive() {
        let budget = ScanBudget {
            grid_sizes: vec![64, 128, 256],
            max_steps: 3,
            ..ScanBudget::default()
        };
        let rows = criticality_scan(Family::K1Log, &[2.0], &budget).unwrap();
        assert_eq!(rows[0].verdict, Verdict::Inconclusive);
    }
}
