//! Test functions and the weak-form residual.

use std::collections::HashMap;
use std::fmt;

use crate::bounds::PsiIntegral;
use crate::error::{Error, Result};
use crate::kernels::{log_e_plus, Kernel};
use crate::spectrum::{MassSpectrum, Trajectory};

/// Bounded nonnegative test functions on `(0, ∞)`.
#[derive(Debug, Clone)]
pub enum TestFunction {
    /// `x ∧ a`.
    TruncatedIdentity { a: f64 },
    /// Indicator of the interval from `lo` to `hi`; each end open or closed.
    /// `lo = hi` with both ends closed is a single point.
    Indicator { lo: f64, hi: f64, lo_closed: bool, hi_closed: bool },
    /// `x² 1{x ≤ a}`.
    SquareTruncated { a: f64 },
    /// `x ln(e + x) 1{x ≤ a}`.
    XLogTruncated { a: f64 },
    /// `2 x I(x/2) 1{x ≤ a}` with `I(z) = ∫_z^∞ dw / (w ln^α(e + w))`.
    LogWeighted { a: f64, table: PsiIntegral },
}

impl TestFunction {
    pub fn truncated_identity(a: f64) -> Result<Self> {
        check_a(a)?;
        Ok(TestFunction::TruncatedIdentity { a })
    }

    /// Indicator of the open interval `(lo, hi)`.
    pub fn open_interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::domain(format!("bad interval ({lo}, {hi})")));
        }
        Ok(TestFunction::Indicator {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        })
    }

    /// Indicator of `{x = p}`.
    pub fn point(p: f64) -> Result<Self> {
        check_a(p)?;
        Ok(TestFunction::Indicator {
            lo: p,
            hi: p,
            lo_closed: true,
            hi_closed: true,
        })
    }

    pub fn square_truncated(a: f64) -> Result<Self> {
        check_a(a)?;
        Ok(TestFunction::SquareTruncated { a })
    }

    pub fn xlog_truncated(a: f64) -> Result<Self> {
        check_a(a)?;
        Ok(TestFunction::XLogTruncated { a })
    }

    /// Requires `α > 1`.
    pub fn log_weighted(a: f64, alpha: f64) -> Result<Self> {
        check_a(a)?;
        Ok(TestFunction::LogWeighted {
            a,
            table: PsiIntegral::new(alpha)?,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        match self {
            TestFunction::TruncatedIdentity { a } => x.min(*a),
            TestFunction::Indicator {
                lo,
                hi,
                lo_closed,
                hi_closed,
            } => {
                let above = if *lo_closed { x >= *lo } else { x > *lo };
                let below = if *hi_closed { x <= *hi } else { x < *hi };
                if above && below {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::SquareTruncated { a } => {
                if x <= *a {
                    x * x
                } else {
                    0.0
                }
            }
            TestFunction::XLogTruncated { a } => {
                if x <= *a {
                    x * log_e_plus(x)
                } else {
                    0.0
                }
            }
            TestFunction::LogWeighted { a, table } => {
                if x <= *a {
                    table.psi(x)
                } else {
                    0.0
                }
            }
        }
    }

    /// `Δ_ψ(x, y) = ψ(x + y) − ψ(x) − ψ(y)`.
    pub fn delta(&self, x: f64, y: f64) -> f64 {
        self.eval(x + y) - self.eval(x) - self.eval(y)
    }
}

fn check_a(a: f64) -> Result<()> {
    if a.is_finite() && a > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("truncation parameter must be positive, got {a}")))
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::TruncatedIdentity { a } => write!(f, "min(x,{a})"),
            TestFunction::Indicator {
                lo,
                hi,
                lo_closed,
                hi_closed,
            } => {
                if lo == hi {
                    write!(f, "1{{x={lo}}}")
                } else {
                    let l = if *lo_closed { '[' } else { '(' };
                    let r = if *hi_closed { ']' } else { ')' };
                    write!(f, "1{l}{lo},{hi}{r}")
                }
            }
            TestFunction::SquareTruncated { a } => write!(f, "x^2 1{{x<={a}}}"),
            TestFunction::XLogTruncated { a } => write!(f, "x ln(e+x) 1{{x<={a}}}"),
            TestFunction::LogWeighted { a, table } => write!(f, "logweighted(alpha={}) 1{{x<={a}}}", table.alpha()),
        }
    }
}

/// Both sides of the weak formulation at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakFormResidual {
    pub t: f64,
    /// `∫ψ f_t`.
    pub lhs: f64,
    /// `∫ψ f_0 + ½ ∫_0^t ∫∫ Δ_ψ K f_s f_s ds`.
    pub rhs: f64,
    /// `lhs − rhs`.
    pub residual: f64,
    /// `½ ∫_0^t ∫∫ |Δ_ψ| K f_s f_s ds`; finite whenever the weak form makes
    /// sense.
    pub magnitude: f64,
}

struct Memo<'a> {
    psi: &'a TestFunction,
    cache: HashMap<u64, f64>,
}

impl Memo<'_> {
    fn get(&mut self, x: f64) -> f64 {
        let psi = self.psi;
        *self.cache.entry(x.to_bits()).or_insert_with(|| psi.eval(x))
    }
}

/// `(∫ψ f, ½∫∫Δ_ψ K f f, ½∫∫|Δ_ψ| K f f)` with exact sums over the atoms.
/// Merged masses above `truncation` leave the system and contribute
/// `−ψ(x) − ψ(y)`.
fn snapshot_terms(s: &MassSpectrum, kernel: &Kernel, memo: &mut Memo, truncation: Option<f64>) -> (f64, f64, f64) {
    let atoms: Vec<(f64, f64)> = s.iter().filter(|a| a.1 != 0.0).collect();
    let psi: Vec<f64> = atoms.iter().map(|a| memo.get(a.0)).collect();
    let lhs: f64 = atoms.iter().zip(&psi).map(|(a, p)| a.1 * p).sum();
    let (mut d, mut m) = (0.0, 0.0);
    for (i, &(x, cx)) in atoms.iter().enumerate() {
        for (j, &(y, cy)) in atoms.iter().enumerate().skip(i) {
            let z = x + y;
            let merged = match truncation {
                Some(n) if z > n => 0.0,
                _ => memo.get(z),
            };
            let delta = merged - psi[i] - psi[j];
            if delta == 0.0 {
                continue;
            }
            let w = kernel.rate(x, y) * cx * cy * if i == j { 0.5 } else { 1.0 };
            d += delta * w;
            m += delta.abs() * w;
        }
    }
    (lhs, d, m)
}

/// Residual of the weak formulation at time `t` along `traj`, by the
/// trapezoidal rule over the snapshots in `[0, t]`.
///
/// `t` need not be a snapshot time; the integrands are interpolated linearly
/// between the bracketing snapshots. Pass `truncation = Some(N)` for runs of
/// a system truncated at mass `N`.
pub fn weak_form_residual_truncated(
    traj: &Trajectory,
    kernel: &Kernel,
    psi: &TestFunction,
    t: f64,
    truncation: Option<f64>,
) -> Result<WeakFormResidual> {
    let snaps = &traj.snapshots;
    let Some(first) = snaps.first() else {
        return Err(Error::Input("trajectory has no snapshots".into()));
    };
    if first.0 != 0.0 {
        return Err(Error::Input("trajectory has no snapshot at t = 0".into()));
    }
    let last = snaps.last().expect("nonempty").0;
    if !(t >= 0.0) || t > last {
        return Err(Error::Range(format!("t = {t} lies outside the snapshot range [0, {last}]")));
    }
    let mut memo = Memo {
        psi,
        cache: HashMap::new(),
    };
    let (lhs0, d0, m0) = snapshot_terms(&first.1, kernel, &mut memo, truncation);
    let (mut lhs, mut prev_d, mut prev_m, mut prev_t) = (lhs0, d0, m0, 0.0);
    let (mut int_d, mut int_m) = (0.0, 0.0);
    for (ts, s) in snaps.iter().skip(1) {
        if prev_t >= t {
            break;
        }
        let (l, d, m) = snapshot_terms(s, kernel, &mut memo, truncation);
        if *ts <= t {
            int_d += 0.5 * (ts - prev_t) * (prev_d + d);
            int_m += 0.5 * (ts - prev_t) * (prev_m + m);
            lhs = l;
            prev_d = d;
            prev_m = m;
            prev_t = *ts;
        } else {
            let w = (t - prev_t) / (ts - prev_t);
            let dt_ = t - prev_t;
            let d_t = prev_d + w * (d - prev_d);
            let m_t = prev_m + w * (m - prev_m);
            int_d += 0.5 * dt_ * (prev_d + d_t);
            int_m += 0.5 * dt_ * (prev_m + m_t);
            lhs += w * (l - lhs);
            prev_t = t;
        }
    }
    let rhs = lhs0 + int_d;
    Ok(WeakFormResidual {
        t,
        lhs,
        rhs,
        residual: lhs - rhs,
        magnitude: int_m,
    })
}

/// [`weak_form_residual_truncated`] for an untruncated system.
pub fn weak_form_residual(traj: &Trajectory, kernel: &Kernel, psi: &TestFunction, t: f64) -> Result<WeakFormResidual> {
    weak_form_residual_truncated(traj, kernel, psi, t, None)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassCheck {
    pub pass: bool,
    /// `max_t M₁(f_t)/M₁(f₀) − 1`, at least 0.
    pub max_violation: f64,
}

/// `M₁(f_t) ≤ M₁(f₀)(1 + tol)` at every snapshot and moment row.
pub fn monotone_mass_check_with(traj: &Trajectory, tol: f64) -> MassCheck {
    let m0 = traj
        .snapshots
        .first()
        .map(|s| s.1.moment(1.0))
        .or_else(|| traj.moments.first().map(|r| r.m1));
    let Some(m0) = m0 else {
        return MassCheck {
            pass: true,
            max_violation: 0.0,
        };
    };
    let rows = traj.moments.iter().map(|r| r.m1);
    let snaps = traj.snapshots.iter().map(|s| s.1.moment(1.0));
    let worst = rows.chain(snaps).fold(0.0f64, |w, m| w.max(m / m0 - 1.0));
    MassCheck {
        pass: worst <= tol,
        max_violation: worst,
    }
}

/// [`monotone_mass_check_with`] at relative tolerance `1e-9`.
pub fn monotone_mass_check(traj: &Trajectory) -> MassCheck {
    monotone_mass_check_with(traj, 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_identities() {
        let psi = TestFunction::truncated_identity(3.0).unwrap();
        assert_eq!(psi.delta(4.0, 5.0), -3.0);
        assert_eq!(psi.delta(1.0, 1.5), 0.0);
        assert!(psi.delta(2.0, 2.0) < 0.0);
        let ind = TestFunction::open_interval(0.0, 1.0).unwrap();
        assert_eq!(ind.eval(1.0), 0.0);
        assert_eq!(ind.eval(0.5), 1.0);
        let pt = TestFunction::point(4.0).unwrap();
        assert_eq!(pt.delta(2.0, 2.0), 1.0);
        assert!(TestFunction::log_weighted(5.0, 1.0).is_err());
        assert!(TestFunction::truncated_identity(0.0).is_err());
    }

    #[test]
    fn constant_kernel_closed_form_residual() {
        // c_n(t) = t^{n−1}/(1+t)^{n+1} for K = 2 from δ₁
        let kernel = Kernel::Constant { c: 2.0 };
        let psi = TestFunction::truncated_identity(4.0).unwrap();
        let tol: f64 = 1e-8;
        let dt = tol.sqrt();
        let steps = (1.0 / dt).round() as usize;
        let mut traj = Trajectory::default();
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            let mut s = MassSpectrum::new();
            for n in 1..=60 {
                let c = t.powi(n - 1) / (1.0 + t).powi(n + 1);
                if c > 0.0 {
                    s.add(n as f64, c).unwrap();
                }
            }
            traj.snapshots.push((t, s));
        }
        let r = weak_form_residual(&traj, &kernel, &psi, 1.0).unwrap();
        assert!(r.residual.abs() < 10.0 * tol, "{r:?}");
        assert!(r.magnitude > 0.0);
        // between snapshots
        let r = weak_form_residual(&traj, &kernel, &psi, 0.50005).unwrap();
        assert!(r.residual.abs() < 10.0 * tol, "{r:?}");
        assert!(weak_form_residual(&traj, &kernel, &psi, 1.5).is_err());
    }

    #[test]
    fn injected_mass_fails_the_monotonicity_check() {
        let mut traj = Trajectory::default();
        traj.snapshots.push((0.0, MassSpectrum::delta(1.0).unwrap()));
        traj.snapshots.push((1.0, MassSpectrum::from_pairs([(1.0, 0.5), (2.0, 0.25)]).unwrap()));
        assert!(monotone_mass_check(&traj).pass);
        traj.snapshots.push((2.0, MassSpectrum::from_pairs([(1.0, 0.5), (2.0, 0.5)]).unwrap()));
        let c = monotone_mass_check(&traj);
        assert!(!c.pass && (c.max_violation - 0.5).abs() < 1e-15);
    }
}
