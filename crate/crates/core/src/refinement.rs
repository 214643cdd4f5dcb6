//! Gel versus truncation artifact, decided from loss times under refinement.
//!
//! A truncated solver loses mass once the distribution reaches its largest
//! mass `N`. Write `u = ln N` and `T(u)` for the first time the tracked mass
//! falls below `(1 − threshold) M₁(f₀)`. If the untruncated solution gels,
//! `T(u)` converges as `u → ∞`; otherwise it drifts to infinity. The rule
//! estimates the decay exponent `p` of `dT/du ~ u^{−p}` from successive
//! refinements: `T` converges exactly when `p > 1`. At `p = 1` the loss time
//! still diverges, like `ln u`, so convergence has to be shown by a clear
//! margin; anything short of it is read as drift.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementRule {
    /// A gel verdict needs `p > 1 + exponent_margin`.
    pub exponent_margin: f64,
    /// Number of finest increments used in the exponent fit.
    pub fit_window: usize,
}

impl Default for RefinementRule {
    fn default() -> Self {
        RefinementRule {
            exponent_margin: 0.15,
            fit_window: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Gel,
    Conserve,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Gel => "gel",
            Verdict::Conserve => "conserve",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementAnalysis {
    pub verdict: Verdict,
    /// `ln N` per refinement level.
    pub log_sizes: Vec<f64>,
    pub loss_times: Vec<Option<f64>>,
    /// Fitted decay exponent of `dT/du`.
    pub exponent: Option<f64>,
    /// Extrapolated limit of the loss times (gel verdict only).
    pub estimate: Option<f64>,
    pub interval: Option<(f64, f64)>,
    /// Intercept of a straight-line fit of `T` against `1/u` over the finest
    /// three levels.
    pub inverse_log_intercept: Option<f64>,
    pub note: String,
}

/// Least-squares line `y = a + b x`.
pub(crate) fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

pub fn analyze(log_sizes: &[f64], loss_times: &[Option<f64>], rule: &RefinementRule) -> Result<RefinementAnalysis> {
    if log_sizes.len() != loss_times.len() {
        return Err(Error::Input("one loss time per refinement level is required".into()));
    }
    if log_sizes.len() < 3 {
        return Err(Error::Input("at least three refinement levels are required".into()));
    }
    if log_sizes.windows(2).any(|w| !(w[1] > w[0])) || log_sizes[0] <= 0.0 {
        return Err(Error::Input("refinement levels must be increasing and exceed 1".into()));
    }
    let mut out = RefinementAnalysis {
        verdict: Verdict::Inconclusive,
        log_sizes: log_sizes.to_vec(),
        loss_times: loss_times.to_vec(),
        exponent: None,
        estimate: None,
        interval: None,
        inverse_log_intercept: None,
        note: String::new(),
    };
    let first_some = loss_times.iter().position(Option::is_some);
    let Some(first) = first_some else {
        out.verdict = Verdict::Conserve;
        out.note = "no mass loss at any refinement level".into();
        return Ok(out);
    };
    if loss_times[first..].iter().any(Option::is_none) {
        if loss_times.last().is_some_and(Option::is_none) {
            out.verdict = Verdict::Conserve;
            out.note = "loss time escapes the horizon under refinement".into();
        } else {
            out.note = "loss times missing in the middle of the sequence".into();
        }
        return Ok(out);
    }
    let times: Vec<f64> = loss_times[first..].iter().map(|t| t.expect("checked")).collect();
    let us = &log_sizes[first..];
    if times.len() < 3 {
        out.note = "fewer than three levels lose mass before the horizon".into();
        return Ok(out);
    }
    let k = times.len();
    let tail = us.len() - 3;
    out.inverse_log_intercept = Some(
        fit_line(
            &us[tail..].iter().map(|u| 1.0 / u).collect::<Vec<_>>(),
            &times[tail..],
        )
        .0,
    );

    let start = (k - 1).saturating_sub(rule.fit_window);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in start..k - 1 {
        let d = times[j + 1] - times[j];
        let du = us[j + 1] - us[j];
        if d <= 0.0 {
            out.note = "loss times do not increase under refinement".into();
            // already converged to within the integration noise
            out.verdict = Verdict::Gel;
            out.estimate = Some(times[k - 1]);
            out.interval = Some((times[start..].iter().cloned().fold(f64::INFINITY, f64::min), times[k - 1]));
            return Ok(out);
        }
        xs.push((0.5 * (us[j] + us[j + 1])).ln());
        ys.push((d / du).ln());
    }
    let p = -fit_line(&xs, &ys).1;
    out.exponent = Some(p);
    if p > 1.0 + rule.exponent_margin {
        out.verdict = Verdict::Gel;
        let j = k - 2;
        let slope = (times[j + 1] - times[j]) / (us[j + 1] - us[j]);
        let mid = 0.5 * (us[j] + us[j + 1]);
        let u_last = us[k - 1];
        let rest = slope * mid.powf(p) * u_last.powf(1.0 - p) / (p - 1.0);
        out.estimate = Some(times[k - 1] + rest);
        out.interval = Some((times[k - 1], times[k - 1] + 2.0 * rest));
    } else {
        out.verdict = Verdict::Conserve;
        out.note = "loss times drift without bound under refinement".into();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels() -> Vec<f64> {
        (0..5).map(|j| (10 * (1 << j)) as f64).collect()
    }

    #[test]
    fn convergent_power_law_is_gel() {
        // T(u) = 5 − 20 u^{-1/2}: dT/du ∝ u^{-3/2}
        let u = levels();
        let t: Vec<Option<f64>> = u.iter().map(|u| Some(5.0 - 20.0 / u.sqrt())).collect();
        let a = analyze(&u, &t, &RefinementRule::default()).unwrap();
        assert_eq!(a.verdict, Verdict::Gel);
        assert!((a.exponent.unwrap() - 1.5).abs() < 0.05);
        let (lo, hi) = a.interval.unwrap();
        assert!(lo <= 5.0 && 5.0 <= hi, "{lo} {hi}");
        assert!((a.estimate.unwrap() - 5.0).abs() < 0.3);
    }

    #[test]
    fn logarithmic_drift_is_conserve() {
        let u = levels();
        let t: Vec<Option<f64>> = u.iter().map(|u| Some(u.sqrt())).collect();
        assert_eq!(analyze(&u, &t, &RefinementRule::default()).unwrap().verdict, Verdict::Conserve);
        let t = vec![Some(3.0), Some(6.0), None, None, None];
        assert_eq!(analyze(&u, &t, &RefinementRule::default()).unwrap().verdict, Verdict::Conserve);
        let t = vec![None; 5];
        assert_eq!(analyze(&u, &t, &RefinementRule::default()).unwrap().verdict, Verdict::Conserve);
    }

    #[test]
    fn logarithmic_growth_is_conserve() {
        let u = levels();
        let t: Vec<Option<f64>> = u.iter().map(|u| Some(u.ln())).collect();
        let a = analyze(&u, &t, &RefinementRule::default()).unwrap();
        assert_eq!(a.verdict, Verdict::Conserve);
        assert!((a.exponent.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sparse_or_gappy_data_is_inconclusive_or_rejected() {
        let u = levels();
        let rule = RefinementRule::default();
        assert!(analyze(&u[..2], &[Some(1.0), Some(2.0)], &rule).is_err());
        let t = vec![None, None, None, Some(1.0), Some(1.5)];
        assert_eq!(analyze(&u, &t, &rule).unwrap().verdict, Verdict::Inconclusive);
        let t = vec![Some(1.0), None, Some(2.0), Some(2.5), Some(2.7)];
        assert_eq!(analyze(&u, &t, &rule).unwrap().verdict, Verdict::Inconclusive);
    }
}
