//! Dormand–Prince 5(4) integrator with PI step control, and a fourth-order
//! exponential integrator for systems with stiff diagonal decay.
//!
//! Systems may veto a proposed state ([`OdeSystem::admissible`]), in which
//! case the step is rejected and halved, and may project accepted states
//! ([`OdeSystem::project`]) to clean up round-off.

use crate::error::{Error, Result};

pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]);

    fn admissible(&self, _y: &[f64]) -> bool {
        true
    }

    /// Returns true if `y` was modified.
    fn project(&mut self, _y: &mut [f64]) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
pub struct Tolerance {
    pub rtol: f64,
    /// Absolute tolerance per component; a single entry applies to all.
    pub atol: Vec<f64>,
}

impl Tolerance {
    pub fn uniform(rtol: f64, atol: f64) -> Self {
        Tolerance {
            rtol,
            atol: vec![atol],
        }
    }

    #[inline]
    fn atol(&self, i: usize) -> f64 {
        if self.atol.len() == 1 {
            self.atol[0]
        } else {
            self.atol[i]
        }
    }
}

#[derive(Debug, Clone)]
pub struct Options {
    pub tol: Tolerance,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
    /// Times the integrator must land on exactly (sorted ascending).
    pub stop_times: Vec<f64>,
}

impl Options {
    pub fn new(tol: Tolerance) -> Self {
        Options {
            tol,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
            stop_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub t: f64,
    pub h: f64,
    /// Set when `t` is one of [`Options::stop_times`] or the final time.
    pub at_stop: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Halt,
}

/// Which integrator a solver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// [`integrate_exponential`] on the split form.
    Exponential,
    /// [`integrate`] on the full right-hand side.
    Explicit,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub t_reached: f64,
    pub halted: bool,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `sys` from `(t0, y)` to `t_end`, calling `observe` after every
/// accepted step. `y` holds the final state on return.
pub fn integrate<S: OdeSystem>(
    sys: &mut S,
    t0: f64,
    y: &mut [f64],
    t_end: f64,
    opts: &Options,
    mut observe: impl FnMut(&StepInfo, &[f64]) -> Flow,
) -> Result<Stats> {
    let n = sys.dim();
    assert_eq!(y.len(), n, "state length does not match system dimension");
    let mut stats = Stats {
        t_reached: t0,
        ..Stats::default()
    };
    if t_end <= t0 {
        return Ok(stats);
    }
    let tol = &opts.tol;
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];

    let mut t = t0;
    sys.rhs(t, y, &mut k1);
    stats.rhs_evals += 1;

    let mut h = match opts.h_init {
        Some(h) => h,
        None => initial_step(y, &k1, tol, t_end - t0),
    }
    .min(opts.h_max)
    .min(t_end - t0);
    let mut err_old: f64 = 1e-4;
    let mut stop_iter = opts.stop_times.iter().copied().filter(|&s| s > t0 && s < t_end).peekable();

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepBudget { t });
        }
        let next_stop = stop_iter.peek().copied().unwrap_or(t_end);
        let mut landing = false;
        if t + h >= next_stop - 1e-12 * next_stop.abs().max(1.0) {
            h = next_stop - t;
            landing = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }

        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        sys.rhs(t + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.rhs(t + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.rhs(t + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.rhs(t + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.rhs(t + h, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        sys.rhs(t + h, &ynew, &mut k7);
        stats.rhs_evals += 6;

        let mut acc = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol(i) + tol.rtol * y[i].abs().max(ynew[i].abs());
            acc += (e / sc) * (e / sc);
        }
        let err = (acc / n as f64).sqrt();

        if !err.is_finite() || !sys.admissible(&ynew) {
            stats.rejected += 1;
            h *= 0.5;
            continue;
        }

        // PI controller (Hairer & Wanner, DOPRI5 defaults)
        const BETA: f64 = 0.04;
        let expo = 0.2 - 0.75 * BETA;
        let fac11 = err.powf(expo);
        if err <= 1.0 {
            let fac = (fac11 / err_old.powf(BETA) / 0.9).clamp(0.2, 10.0);
            let h_next = (h / fac).min(opts.h_max);
            err_old = err.max(1e-4);
            t = if landing { next_stop } else { t + h };
            y.copy_from_slice(&ynew);
            if sys.project(y) {
                sys.rhs(t, y, &mut k1);
                stats.rhs_evals += 1;
            } else {
                std::mem::swap(&mut k1, &mut k7);
            }
            stats.accepted += 1;
            stats.t_reached = t;
            if landing && next_stop < t_end {
                stop_iter.next();
            }
            let info = StepInfo {
                t,
                h,
                at_stop: landing,
            };
            if observe(&info, y) == Flow::Halt {
                stats.halted = true;
                return Ok(stats);
            }
            if t >= t_end {
                return Ok(stats);
            }
            h = h_next;
        } else {
            stats.rejected += 1;
            h /= (fac11 / 0.9).min(5.0);
        }
    }
}

/// A system written as `dy/dt = g(y) − r(y) ∘ y` with `r ≥ 0`, where the
/// diagonal rate `r` may be stiff.
pub trait SplitSystem {
    fn dim(&self) -> usize;

    fn split_rhs(&mut self, t: f64, y: &[f64], g: &mut [f64], r: &mut [f64]);

    fn admissible(&self, _y: &[f64]) -> bool {
        true
    }

    /// Returns true if `y` was modified.
    fn project(&mut self, _y: &mut [f64]) -> bool {
        false
    }
}

/// `φ₁, φ₂, φ₃` at `z ≤ 0` given `e^z − 1`, with
/// `φ_{k+1}(z) = (φ_k(z) − 1/k!)/z`.
fn phi123(z: f64, em1: f64) -> (f64, f64, f64) {
    if z.abs() < 0.5 {
        // φ_k(z) = Σ_j z^j / (j + k)!
        let mut p = [0.0; 3];
        for (k, pk) in p.iter_mut().enumerate() {
            let mut term: f64 = 1.0 / (1..=k + 1).map(|v| v as f64).product::<f64>();
            let mut sum = term;
            for j in 1..14 {
                term *= z / (j + k + 1) as f64;
                sum += term;
            }
            *pk = sum;
        }
        (p[0], p[1], p[2])
    } else {
        let p1 = em1 / z;
        let p2 = (p1 - 1.0) / z;
        let p3 = (p2 - 0.5) / z;
        (p1, p2, p3)
    }
}

struct EtdWork {
    e: Vec<f64>,
    e2: Vec<f64>,
    p1h: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    f3: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    na: Vec<f64>,
    nb: Vec<f64>,
    nc: Vec<f64>,
    g: Vec<f64>,
    r: Vec<f64>,
}

impl EtdWork {
    fn new(n: usize) -> Self {
        let v = || vec![0.0; n];
        EtdWork {
            e: v(),
            e2: v(),
            p1h: v(),
            f1: v(),
            f2: v(),
            f3: v(),
            a: v(),
            b: v(),
            c: v(),
            na: v(),
            nb: v(),
            nc: v(),
            g: v(),
            r: v(),
        }
    }

    fn nonlinear<S: SplitSystem>(&mut self, sys: &mut S, t: f64, rbar: &[f64], which: usize) {
        let (y, out) = match which {
            0 => (&self.a, &mut self.na),
            1 => (&self.b, &mut self.nb),
            _ => (&self.c, &mut self.nc),
        };
        sys.split_rhs(t, y, &mut self.g, &mut self.r);
        for i in 0..y.len() {
            out[i] = self.g[i] - (self.r[i] - rbar[i]) * y[i];
        }
    }

    /// One fourth-order exponential Runge–Kutta step (Cox–Matthews) from `y`
    /// with `r̄ = rbar` and `g(y) = g0`.
    fn step<S: SplitSystem>(
        &mut self,
        sys: &mut S,
        t: f64,
        y: &[f64],
        g0: &[f64],
        rbar: &[f64],
        h: f64,
        out: &mut [f64],
    ) {
        let n = y.len();
        for i in 0..n {
            let z = -h * rbar[i];
            let em_half = (0.5 * z).exp_m1();
            let em = em_half * (2.0 + em_half);
            let (p1, p2, p3) = phi123(z, em);
            self.e[i] = 1.0 + em;
            self.e2[i] = 1.0 + em_half;
            self.p1h[i] = if z == 0.0 { 1.0 } else { em_half / (0.5 * z) };
            self.f1[i] = p1 - 3.0 * p2 + 4.0 * p3;
            self.f2[i] = p2 - 2.0 * p3;
            self.f3[i] = 4.0 * p3 - p2;
        }
        let hh = 0.5 * h;
        for i in 0..n {
            self.a[i] = self.e2[i] * y[i] + hh * self.p1h[i] * g0[i];
        }
        self.nonlinear(sys, t + hh, rbar, 0);
        for i in 0..n {
            self.b[i] = self.e2[i] * y[i] + hh * self.p1h[i] * self.na[i];
        }
        self.nonlinear(sys, t + hh, rbar, 1);
        for i in 0..n {
            self.c[i] = self.e2[i] * self.a[i] + hh * self.p1h[i] * (2.0 * self.nb[i] - g0[i]);
        }
        self.nonlinear(sys, t + h, rbar, 2);
        for i in 0..n {
            out[i] = self.e[i] * y[i]
                + h * (self.f1[i] * g0[i]
                    + 2.0 * self.f2[i] * (self.na[i] + self.nb[i])
                    + self.f3[i] * self.nc[i]);
        }
    }
}

/// Exponential Runge–Kutta integrator of order four for [`SplitSystem`]s.
///
/// Each step freezes `r̄ = r(y_n)`, integrates the diagonal decay exactly and
/// treats `g − (r − r̄) y` by the Cox–Matthews scheme, so the step size is set
/// by accuracy rather than by `max r`. The local error is estimated by step
/// doubling and the two half steps are kept.
pub fn integrate_exponential<S: SplitSystem>(
    sys: &mut S,
    t0: f64,
    y: &mut [f64],
    t_end: f64,
    opts: &Options,
    mut observe: impl FnMut(&StepInfo, &[f64]) -> Flow,
) -> Result<Stats> {
    let n = sys.dim();
    assert_eq!(y.len(), n, "state length does not match system dimension");
    let mut stats = Stats {
        t_reached: t0,
        ..Stats::default()
    };
    if t_end <= t0 {
        return Ok(stats);
    }
    let tol = &opts.tol;
    let mut work = EtdWork::new(n);
    let mut g0 = vec![0.0; n];
    let mut r0 = vec![0.0; n];
    let mut g1 = vec![0.0; n];
    let mut r1 = vec![0.0; n];
    let mut full = vec![0.0; n];
    let mut half = vec![0.0; n];
    let mut two = vec![0.0; n];

    let mut t = t0;
    sys.split_rhs(t, y, &mut g0, &mut r0);
    stats.rhs_evals += 1;

    let mut h = match opts.h_init {
        Some(h) => h,
        None => {
            let f: Vec<f64> = (0..n).map(|i| g0[i] - r0[i] * y[i]).collect();
            initial_step(y, &f, tol, t_end - t0)
        }
    }
    .min(opts.h_max)
    .min(t_end - t0);
    let mut stop_iter = opts.stop_times.iter().copied().filter(|&s| s > t0 && s < t_end).peekable();

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepBudget { t });
        }
        let next_stop = stop_iter.peek().copied().unwrap_or(t_end);
        let mut landing = false;
        if t + h >= next_stop - 1e-12 * next_stop.abs().max(1.0) {
            h = next_stop - t;
            landing = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }

        work.step(sys, t, y, &g0, &r0, h, &mut full);
        work.step(sys, t, y, &g0, &r0, 0.5 * h, &mut half);
        sys.split_rhs(t + 0.5 * h, &half, &mut g1, &mut r1);
        work.step(sys, t + 0.5 * h, &half, &g1, &r1, 0.5 * h, &mut two);
        stats.rhs_evals += 10;

        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = (two[i] - full[i]) / 15.0;
            let sc = tol.atol(i) + tol.rtol * y[i].abs().max(two[i].abs());
            err = err.max((e / sc).abs());
        }

        if !err.is_finite() || !sys.admissible(&half) || !sys.admissible(&two) {
            stats.rejected += 1;
            h *= 0.5;
            continue;
        }
        let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        if err <= 1.0 {
            let h_next = (h * fac).min(opts.h_max);
            t = if landing { next_stop } else { t + h };
            y.copy_from_slice(&two);
            sys.project(y);
            sys.split_rhs(t, y, &mut g0, &mut r0);
            stats.rhs_evals += 1;
            stats.accepted += 1;
            stats.t_reached = t;
            if landing && next_stop < t_end {
                stop_iter.next();
            }
            let info = StepInfo {
                t,
                h,
                at_stop: landing,
            };
            if observe(&info, y) == Flow::Halt {
                stats.halted = true;
                return Ok(stats);
            }
            if t >= t_end {
                return Ok(stats);
            }
            // a landing step may have been shortened; do not let it shrink h
            h = if landing { h_next.max(h) } else { h_next };
        } else {
            stats.rejected += 1;
            h *= fac;
        }
    }
}

fn initial_step(y: &[f64], f: &[f64], tol: &Tolerance, span: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..y.len() {
        let sc = tol.atol(i) + tol.rtol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (f[i] / sc).powi(2);
    }
    let n = y.len() as f64;
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.min(span).max(1e-12 * span)
}
