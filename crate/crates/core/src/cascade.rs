//! Dyadic cascade for the gap kernel `K₀` started from `δ₁`.
//!
//! Only equal masses merge under `K₀` on dyadic masses, so the solution lives
//! on `{2^n}` and `c_n = f_t({2^n})` solves
//!
//! `dc_n/dt = −K(2^n, 2^n) c_n² + ½ K(2^{n−1}, 2^{n−1}) c_{n−1}² 1{n≥1}`,
//!
//! with `K(2^n, 2^n) = 2^{n−1} ln^α(e + 2^n)`. Internally the system is
//! integrated in the mass variables `m_n = 2^n c_n`, where it reads
//! `dm_n/dt = −k_n m_n² + k_{n−1} m_{n−1}²` with `k_n = ½ ln^α(e + 2^n)`.
//! Whatever level `n_max` would push to `n_max + 1` is removed and booked as
//! overflow.

use crate::error::{Error, Result};
use crate::kernels::log_e_plus;
use crate::ode::{self, Flow, OdeSystem, Options, Scheme, SplitSystem, StepInfo, Tolerance};
use crate::spectrum::{MassSpectrum, MomentRow, Trajectory};

/// Largest supported truncation level (`2^n` must stay finite).
pub const MAX_LEVEL: usize = 1000;

/// State of the truncated cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeState {
    pub t: f64,
    /// `c_n` for `n = 0..=n_max`.
    pub c: Vec<f64>,
    /// Cumulative mass removed past level `n_max`.
    pub overflow: f64,
}

impl CascadeState {
    /// `δ₁` at `t = 0`.
    pub fn initial(n_max: usize) -> Self {
        let mut c = vec![0.0; n_max + 1];
        c[0] = 1.0;
        CascadeState {
            t: 0.0,
            c,
            overflow: 0.0,
        }
    }

    pub fn n_max(&self) -> usize {
        self.c.len() - 1
    }

    /// `Σ 2^n c_n`.
    pub fn tracked_mass(&self) -> f64 {
        self.c
            .iter()
            .enumerate()
            .map(|(n, &c)| level_mass(n) * c)
            .sum()
    }

    pub fn to_spectrum(&self) -> MassSpectrum {
        spectrum_from_levels(&self.c, self.overflow)
    }
}

fn level_mass(n: usize) -> f64 {
    2f64.powi(n as i32)
}

/// `K(2^n, 2^n) = 2^{n−1} ln^α(e + 2^n)`.
pub fn diagonal_rate(alpha: f64, n: usize) -> f64 {
    let m = level_mass(n);
    0.5 * m * log_e_plus(m).powf(alpha)
}

/// `dc_n/dt` of the cascade, and the rate at which mass leaves past `n_max`.
pub fn cascade_rhs(state: &CascadeState, alpha: f64) -> Result<(Vec<f64>, f64)> {
    if state.c.is_empty() {
        return Err(Error::Input("cascade state has no levels".into()));
    }
    if state.c.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::Input("cascade concentrations must be finite and >= 0".into()));
    }
    let n_max = state.n_max();
    let mut dc = vec![0.0; n_max + 1];
    let mut prev_loss = 0.0;
    for n in 0..=n_max {
        let loss = diagonal_rate(alpha, n) * state.c[n] * state.c[n];
        dc[n] = -loss + 0.5 * prev_loss;
        prev_loss = loss;
    }
    // number rate ½ K c² into level n_max + 1, each of mass 2^{n_max+1}
    let overflow_rate = level_mass(n_max) * prev_loss;
    Ok((dc, overflow_rate))
}

fn spectrum_from_levels(c: &[f64], overflow: f64) -> MassSpectrum {
    let mut s = MassSpectrum::new();
    for (n, &v) in c.iter().enumerate() {
        if v > 0.0 {
            s.add(level_mass(n), v).expect("finite positive level");
        }
    }
    s.with_lost_mass(overflow)
}

/// Recording policy for [`integrate_cascade_with`].
#[derive(Debug, Clone)]
pub struct CascadeOptions {
    pub tol: f64,
    /// Spacing of the uniform snapshot grid; `None` gives `t_end / 256`.
    pub snapshot_dt: Option<f64>,
    /// Also snapshot whenever the highest occupied level advances.
    pub snapshot_on_front: bool,
    /// Keep full spectra (moments are always kept).
    pub record_spectra: bool,
    /// Stop early once this fraction of the mass has overflowed.
    pub halt_at_loss: Option<f64>,
    pub scheme: Scheme,
}

impl CascadeOptions {
    pub fn new(tol: f64) -> Self {
        CascadeOptions {
            tol,
            snapshot_dt: None,
            snapshot_on_front: true,
            record_spectra: true,
            halt_at_loss: None,
            scheme: Scheme::Exponential,
        }
    }
}

/// Output of a cascade integration.
#[derive(Debug, Clone)]
pub struct CascadeRun {
    pub alpha: f64,
    pub n_max: usize,
    pub tol: f64,
    pub trajectory: Trajectory,
    /// `sup` over accepted steps of `c_n`.
    pub sup: Vec<f64>,
    pub final_state: CascadeState,
    pub steps: usize,
}

impl CascadeRun {
    pub fn overflow(&self) -> f64 {
        self.final_state.overflow
    }
}

struct MassCascade {
    k: Vec<f64>,
}

impl OdeSystem for MassCascade {
    fn dim(&self) -> usize {
        self.k.len() + 1
    }

    fn rhs(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let n_levels = self.k.len();
        let mut prev = 0.0;
        for n in 0..n_levels {
            let out = self.k[n] * y[n] * y[n];
            dy[n] = prev - out;
            prev = out;
        }
        dy[n_levels] = prev;
    }

    fn admissible(&self, y: &[f64]) -> bool {
        y.iter().all(|v| v.is_finite())
    }
}

// dm_n/dt = k_{n−1} m_{n−1}² − (k_n m_n) m_n
impl SplitSystem for MassCascade {
    fn dim(&self) -> usize {
        self.k.len() + 1
    }

    fn split_rhs(&mut self, _t: f64, y: &[f64], g: &mut [f64], r: &mut [f64]) {
        let n_levels = self.k.len();
        let mut prev = 0.0;
        for n in 0..n_levels {
            g[n] = prev;
            r[n] = (self.k[n] * y[n]).max(0.0);
            prev = self.k[n] * y[n] * y[n];
        }
        g[n_levels] = prev;
        r[n_levels] = 0.0;
    }

    fn admissible(&self, y: &[f64]) -> bool {
        y.iter().all(|v| v.is_finite())
    }

    // Same mass rescaling as the grid: levels plus overflow stay exactly 1.
    fn project(&mut self, y: &mut [f64]) -> bool {
        let n = self.k.len();
        y[n] = y[n].max(0.0);
        let m1: f64 = y[..n].iter().sum();
        let target = 1.0 - y[n];
        if !(m1 > 0.0) || target < 0.0 {
            return false;
        }
        let s = target / m1;
        for v in &mut y[..n] {
            *v *= s;
        }
        true
    }
}

/// Integrates the truncated cascade from `δ₁` with default recording.
pub fn integrate_cascade(alpha: f64, t_end: f64, n_max: usize, tol: f64) -> Result<CascadeRun> {
    integrate_cascade_with(alpha, t_end, n_max, &CascadeOptions::new(tol))
}

pub fn integrate_cascade_with(
    alpha: f64,
    t_end: f64,
    n_max: usize,
    opts: &CascadeOptions,
) -> Result<CascadeRun> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::domain(format!("t_end must be positive, got {t_end}")));
    }
    if !(8..=MAX_LEVEL).contains(&n_max) {
        return Err(Error::Range(format!("n_max must lie in 8..={MAX_LEVEL}, got {n_max}")));
    }
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::domain(format!("tolerance must lie in (0, 1), got {}", opts.tol)));
    }
    let k: Vec<f64> = (0..=n_max).map(|n| 0.5 * log_e_plus(level_mass(n)).powf(alpha)).collect();
    let mut sys = MassCascade { k };
    let mut y = vec![0.0; n_max + 2];
    y[0] = 1.0;

    // Uniform atol on masses: levels not yet reached stay below it.
    let mut ode_opts = Options::new(Tolerance::uniform(opts.tol, 1e-3 * opts.tol));
    let dt = opts.snapshot_dt.unwrap_or(t_end / 256.0);
    if !(dt > 0.0) {
        return Err(Error::domain("snapshot spacing must be positive"));
    }
    let n_stops = (t_end / dt).ceil() as usize;
    ode_opts.stop_times = (1..n_stops).map(|i| i as f64 * dt).collect();

    let mut traj = Trajectory::default();
    let mut sup = vec![0.0; n_max + 1];
    sup[0] = 1.0;
    let record = |traj: &mut Trajectory, t: f64, y: &[f64], spectra: bool| {
        let c: Vec<f64> = (0..=n_max).map(|n| y[n].max(0.0) / level_mass(n)).collect();
        traj.push_moments(moments_from_masses(t, y, n_max));
        if spectra {
            traj.push_snapshot(t, spectrum_from_levels(&c, y[n_max + 1]));
        }
    };
    record(&mut traj, 0.0, &y, opts.record_spectra);
    let mut front = 0;
    let front_floor = 1e-3 * opts.tol;

    let observe = |info: &StepInfo, y: &[f64]| {
        for n in 0..=n_max {
            let c = y[n] / level_mass(n);
            if c > sup[n] {
                sup[n] = c;
            }
        }
        let mut advanced = false;
        while front < n_max && y[front + 1] > front_floor {
            front += 1;
            advanced = true;
        }
        let snap = opts.record_spectra && (info.at_stop || (advanced && opts.snapshot_on_front));
        record(&mut traj, info.t, y, snap);
        match opts.halt_at_loss {
            Some(frac) if y[n_max + 1] > frac => Flow::Halt,
            _ => Flow::Continue,
        }
    };
    let stats = match opts.scheme {
        Scheme::Exponential => ode::integrate_exponential(&mut sys, 0.0, &mut y, t_end, &ode_opts, observe)?,
        Scheme::Explicit => ode::integrate(&mut sys, 0.0, &mut y, t_end, &ode_opts, observe)?,
    };

    let c: Vec<f64> = (0..=n_max).map(|n| y[n].max(0.0) / level_mass(n)).collect();
    Ok(CascadeRun {
        alpha,
        n_max,
        tol: opts.tol,
        trajectory: traj,
        sup,
        final_state: CascadeState {
            t: stats.t_reached,
            c,
            overflow: y[n_max + 1],
        },
        steps: stats.accepted,
    })
}

fn moments_from_masses(t: f64, y: &[f64], n_max: usize) -> MomentRow {
    let mut row = MomentRow {
        t,
        m0: 0.0,
        m1: 0.0,
        m2: 0.0,
        xlogx: 0.0,
        lost_mass: y[n_max + 1],
    };
    for (n, &m) in y.iter().take(n_max + 1).enumerate() {
        let x = level_mass(n);
        let m = m.max(0.0);
        row.m0 += m / x;
        row.m1 += m;
        row.m2 += m * x;
        row.xlogx += m * log_e_plus(x);
    }
    row
}
