//! Blow-up and gel-time estimates from grid trajectories.

use super::GridRun;
use crate::error::{Error, Result};
use crate::refinement::{self, fit_line, RefinementAnalysis, RefinementRule};
use crate::spectrum::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub enum BlowupEstimate {
    Estimate { t: f64, lo: f64, hi: f64, samples: usize },
    NoBlowUp { reason: String },
}

impl BlowupEstimate {
    pub fn time(&self) -> Option<f64> {
        match self {
            BlowupEstimate::Estimate { t, .. } => Some(*t),
            BlowupEstimate::NoBlowUp { .. } => None,
        }
    }
}

fn no(reason: &str) -> BlowupEstimate {
    BlowupEstimate::NoBlowUp {
        reason: reason.to_string(),
    }
}

/// Fits `1/M₂` against `t` on the final 30% of the series (at least ten
/// samples) and returns the root with a two-sigma interval.
///
/// Bounded, decreasing or visibly non-linear `1/M₂` yields `NoBlowUp`.
pub fn estimate_blowup_time(series: &[(f64, f64)]) -> BlowupEstimate {
    const MIN_SAMPLES: usize = 10;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, m)| t.is_finite() && m.is_finite() && *m > 0.0)
        .collect();
    if pts.len() < MIN_SAMPLES {
        return no("fewer than ten samples");
    }
    if pts.windows(2).any(|w| w[1].1 < w[0].1 * (1.0 - 1e-9)) {
        return no("second moment is not monotone");
    }
    let (t0, m_first) = pts[0];
    let (t_last, m_last) = pts[pts.len() - 1];
    if m_last < 2.0 * m_first {
        return no("second moment stays bounded");
    }
    let cut = t_last - 0.3 * (t_last - t0);
    let mut start = pts.iter().position(|(t, _)| *t >= cut).unwrap_or(0);
    start = start.min(pts.len() - MIN_SAMPLES);
    let window = &pts[start..];
    let x: Vec<f64> = window.iter().map(|p| p.0).collect();
    let y: Vec<f64> = window.iter().map(|p| 1.0 / p.1).collect();
    let (a, b) = fit_line(&x, &y);
    if !(b < 0.0) {
        return no("inverse second moment does not decrease");
    }
    let root = -a / b;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let ssr: f64 = x.iter().zip(&y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
    let s2 = ssr / (n - 2.0);
    let y_range = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - y.iter().cloned().fold(f64::INFINITY, f64::min);
    if s2.sqrt() > 0.02 * y_range {
        return no("inverse second moment is not approaching zero linearly");
    }
    let var_a = s2 * (1.0 / n + mx * mx / sxx);
    let var_b = s2 / sxx;
    let cov = -mx * s2 / sxx;
    let (ga, gb) = (-1.0 / b, a / (b * b));
    let sd = (ga * ga * var_a + gb * gb * var_b + 2.0 * ga * gb * cov).max(0.0).sqrt();
    BlowupEstimate::Estimate {
        t: root,
        lo: root - 2.0 * sd,
        hi: root + 2.0 * sd,
        samples: window.len(),
    }
}

/// `(t, M₂)` rows recorded while the lost mass stays below
/// `threshold · M₁(f₀)`.
pub fn m2_before_loss(traj: &Trajectory, threshold: f64) -> Vec<(f64, f64)> {
    let Some(m1) = traj.initial_mass() else {
        return Vec::new();
    };
    traj.moments
        .iter()
        .take_while(|r| r.lost_mass <= threshold * m1)
        .map(|r| (r.t, r.m2))
        .collect()
}

/// Gel time from a family of runs with increasing `N_max`.
pub type GelTimeEstimate = RefinementAnalysis;

pub fn estimate_gel_time(runs: &[GridRun], threshold: f64, rule: &RefinementRule) -> Result<GelTimeEstimate> {
    let first = runs.first().ok_or_else(|| Error::Input("no runs".into()))?;
    for r in runs {
        if r.kernel != first.kernel || r.f0 != first.f0 {
            return Err(Error::Input("runs use different kernels or initial data".into()));
        }
    }
    let log_sizes: Vec<f64> = runs.iter().map(|r| (r.n_max as f64).ln()).collect();
    let loss: Vec<Option<f64>> = runs.iter().map(|r| r.trajectory.mass_loss_time(threshold)).collect();
    refinement::analyze(&log_sizes, &loss, rule)
}
