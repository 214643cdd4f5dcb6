//! Discrete Smoluchowski equation on the integer masses `1..=N`.
//!
//! `dc_n/dt = ½ Σ_{k<n} K(k, n−k) c_k c_{n−k} − c_n Σ_{k≤N} K(n, k) c_k`.
//! Pairs whose merged mass exceeds `N` leave the system; their mass is
//! accumulated in a lost-mass component so that tracked mass plus lost mass is
//! conserved by construction.

mod conv;
mod estimate;

use crate::error::{Error, Result};
use crate::kernels::{log_e_plus, Kernel};
use crate::ode::{self, Flow, OdeSystem, Options, Scheme, SplitSystem, StepInfo, Tolerance};
use crate::spectrum::{MassSpectrum, MomentRow, Trajectory};

use conv::Convolver;
pub use estimate::{
    estimate_blowup_time, estimate_gel_time, m2_before_loss, BlowupEstimate, GelTimeEstimate,
};

/// Largest table-driven grid; above it kernel values are computed on the fly.
const TABLE_LIMIT: usize = 2048;

/// Direct half-convolution below this block size.
const LEAF: usize = 64;

enum Operator {
    /// `K(x, y) = Σ_i u_i(x) v_i(y)`; `gain` lists the distinct products with
    /// their weights.
    Separable {
        loss: Vec<(Vec<f64>, Vec<f64>)>,
        gain: Vec<(Vec<f64>, Vec<f64>, f64)>,
    },
    /// `K(x, y) = (x + y) L(x ∧ y)` with `L` tabulated.
    SumTimesMinWeight { l: Vec<f64> },
    Table { k: Vec<f64> },
    OnTheFly { kernel: Kernel },
}

/// Right-hand-side evaluator for one kernel and truncation level.
pub(crate) struct GridOperator {
    n_max: usize,
    op: Operator,
    conv: Convolver,
    c: Vec<f64>,
    gain: Vec<f64>,
    lambda: Vec<f64>,
    work_a: Vec<f64>,
    work_b: Vec<f64>,
    work_c: Vec<f64>,
}

impl GridOperator {
    pub(crate) fn new(kernel: &Kernel, n_max: usize) -> Self {
        let masses = || (0..=n_max).map(|n| n as f64);
        let ones = || {
            let mut v = vec![1.0; n_max + 1];
            v[0] = 0.0;
            v
        };
        let op = match kernel {
            Kernel::Constant { c } => Operator::Separable {
                loss: vec![(ones().iter().map(|v| v * c).collect(), ones())],
                gain: vec![(ones(), ones(), 0.5 * c)],
            },
            Kernel::Additive => Operator::Separable {
                loss: vec![(masses().collect(), ones()), (ones(), masses().collect())],
                gain: vec![(masses().collect(), ones(), 1.0)],
            },
            Kernel::Multiplicative => Operator::Separable {
                loss: vec![(masses().collect(), masses().collect())],
                gain: vec![(masses().collect(), masses().collect(), 0.5)],
            },
            Kernel::ProductPower { gamma } => {
                let w: Vec<f64> = masses().map(|x| x.powf(0.5 * gamma)).collect();
                Operator::Separable {
                    loss: vec![(w.clone(), w.clone())],
                    gain: vec![(w.clone(), w, 0.5)],
                }
            }
            Kernel::K1Log { alpha } => Operator::SumTimesMinWeight {
                l: masses().map(|x| log_e_plus(x).powf(*alpha)).collect(),
            },
            k if n_max <= TABLE_LIMIT => {
                let mut t = vec![0.0; (n_max + 1) * (n_max + 1)];
                for i in 1..=n_max {
                    for j in i..=n_max {
                        let v = k.rate(i as f64, j as f64);
                        t[i * (n_max + 1) + j] = v;
                        t[j * (n_max + 1) + i] = v;
                    }
                }
                Operator::Table { k: t }
            }
            k => Operator::OnTheFly { kernel: k.clone() },
        };
        GridOperator {
            n_max,
            op,
            conv: Convolver::new(),
            c: vec![0.0; n_max + 1],
            gain: vec![0.0; n_max + 1],
            lambda: vec![0.0; n_max + 1],
            work_a: vec![0.0; n_max + 1],
            work_b: vec![0.0; n_max + 1],
            work_c: vec![0.0; n_max + 1],
        }
    }

    /// Fills `dc` (index `n − 1` for mass `n`) and returns the rate at which
    /// mass leaves past `n_max`.
    pub(crate) fn apply(&mut self, c_in: &[f64], dc: &mut [f64]) -> f64 {
        self.fill(c_in);
        let mut out_rate = 0.0;
        for i in 1..=self.n_max {
            let loss = self.lambda[i] * self.c[i];
            dc[i - 1] = self.gain[i] - loss;
            out_rate += i as f64 * (loss - self.gain[i]);
        }
        out_rate
    }

    /// Gain and per-particle loss rate separately, in the same layout as
    /// [`GridOperator::apply`].
    pub(crate) fn split(&mut self, c_in: &[f64], gain: &mut [f64], rate: &mut [f64]) -> f64 {
        self.fill(c_in);
        let mut out_rate = 0.0;
        for i in 1..=self.n_max {
            gain[i - 1] = self.gain[i];
            rate[i - 1] = self.lambda[i];
            out_rate += i as f64 * (self.lambda[i] * self.c[i] - self.gain[i]);
        }
        out_rate
    }

    fn fill(&mut self, c_in: &[f64]) {
        let n = self.n_max;
        self.c[0] = 0.0;
        self.c[1..].copy_from_slice(&c_in[..n]);
        self.gain.fill(0.0);
        self.lambda.fill(0.0);
        let c = &self.c;
        match &self.op {
            Operator::Separable { loss, gain } => {
                for (u, v) in loss {
                    let s: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                    for (l, &ui) in self.lambda.iter_mut().zip(u) {
                        *l += ui * s;
                    }
                }
                for (u, v, w) in gain {
                    for i in 0..=n {
                        self.work_a[i] = u[i] * c[i];
                        self.work_b[i] = v[i] * c[i];
                    }
                    self.work_c.fill(0.0);
                    self.conv.convolve_add(&self.work_a, &self.work_b, &mut self.work_c);
                    for (g, v) in self.gain.iter_mut().zip(&self.work_c) {
                        *g += w * v;
                    }
                }
            }
            Operator::SumTimesMinWeight { l } => {
                // loss: Σ_{k<n} (n+k) L_k c_k + L_n Σ_{k≥n} (n+k) c_k
                let (mut p0, mut p1) = (0.0, 0.0);
                let mut s0: f64 = c.iter().sum();
                let mut s1: f64 = c.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
                for i in 1..=n {
                    let x = i as f64;
                    self.lambda[i] = x * p0 + p1 + l[i] * (x * s0 + s1);
                    p0 += l[i] * c[i];
                    p1 += x * l[i] * c[i];
                    s0 -= c[i];
                    s1 -= x * c[i];
                }
                // gain: n Σ_{k<n−k} L_k c_k c_{n−k} + ½ n L_{n/2} c_{n/2}²
                for i in 0..=n {
                    self.work_a[i] = l[i] * c[i];
                }
                let mut out = std::mem::take(&mut self.gain);
                half_convolve(&mut self.conv, &self.work_a, c, 1, n + 1, &mut out);
                for i in 1..=n {
                    let mut g = out[i];
                    if i % 2 == 0 {
                        let h = i / 2;
                        g += 0.5 * l[h] * c[h] * c[h];
                    }
                    out[i] = i as f64 * g;
                }
                self.gain = out;
            }
            Operator::Table { k } => {
                let stride = n + 1;
                for i in 1..=n {
                    let row = &k[i * stride..(i + 1) * stride];
                    self.lambda[i] = row.iter().zip(c).map(|(a, b)| a * b).sum();
                    let mut g = 0.0;
                    for j in 1..=(i - 1) / 2 {
                        g += row_at(k, stride, j, i - j) * c[j] * c[i - j];
                    }
                    if i % 2 == 0 {
                        let h = i / 2;
                        g += 0.5 * row_at(k, stride, h, h) * c[h] * c[h];
                    }
                    self.gain[i] = g;
                }
            }
            Operator::OnTheFly { kernel } => {
                for i in 1..=n {
                    let x = i as f64;
                    let mut s = 0.0;
                    for (j, &cj) in c.iter().enumerate().skip(1) {
                        if cj != 0.0 {
                            s += kernel.rate(x, j as f64) * cj;
                        }
                    }
                    self.lambda[i] = s;
                    let mut g = 0.0;
                    for j in 1..=(i - 1) / 2 {
                        let p = c[j] * c[i - j];
                        if p != 0.0 {
                            g += kernel.rate(j as f64, (i - j) as f64) * p;
                        }
                    }
                    if i % 2 == 0 {
                        let h = i / 2;
                        g += 0.5 * kernel.rate(h as f64, h as f64) * c[h] * c[h];
                    }
                    self.gain[i] = g;
                }
            }
        }
    }
}

#[inline]
fn row_at(k: &[f64], stride: usize, i: usize, j: usize) -> f64 {
    k[i * stride + j]
}

/// `out[m] += Σ a_k b_j` over `lo ≤ k < j < hi`, `k + j = m ≤ out.len() − 1`.
fn half_convolve(conv: &mut Convolver, a: &[f64], b: &[f64], lo: usize, hi: usize, out: &mut [f64]) {
    let top = out.len();
    if hi - lo <= 1 || 2 * lo + 1 >= top {
        return;
    }
    if hi - lo <= LEAF {
        for k in lo..hi {
            if a[k] == 0.0 {
                continue;
            }
            for j in k + 1..hi {
                let m = k + j;
                if m >= top {
                    break;
                }
                out[m] += a[k] * b[j];
            }
        }
        return;
    }
    let mid = lo + (hi - lo) / 2;
    let base = lo + mid;
    if base < top {
        conv.convolve_add(&a[lo..mid], &b[mid..hi], &mut out[base..]);
    }
    half_convolve(conv, a, b, lo, mid, out);
    half_convolve(conv, a, b, mid, hi, out);
}

/// Rates of change on `1..=n_max` and the mass flux past `n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRate {
    /// `dc_n/dt` at index `n − 1`.
    pub rates: Vec<f64>,
    pub boundary_flux: f64,
}

/// Evaluates the truncated right-hand side at `spectrum`.
pub fn smoluchowski_rhs(spectrum: &MassSpectrum, kernel: &Kernel, n_max: usize) -> Result<GridRate> {
    if n_max == 0 {
        return Err(Error::Range("n_max must be at least 1".into()));
    }
    let c = spectrum.to_dense(n_max)?;
    let mut op = GridOperator::new(kernel, n_max);
    let mut rates = vec![0.0; n_max];
    let boundary_flux = op.apply(&c, &mut rates);
    Ok(GridRate {
        rates,
        boundary_flux,
    })
}

#[derive(Debug, Clone)]
pub struct GridOptions {
    pub tol: f64,
    /// Absolute tolerance on mass per level: component `n` gets `atol / n`.
    pub atol: f64,
    /// Spacing of snapshot times; `None` gives `t_end / 100`.
    pub snapshot_dt: Option<f64>,
    pub record_spectra: bool,
    /// Stop early once this fraction of the initial mass is lost.
    pub halt_at_loss: Option<f64>,
    pub max_steps: usize,
    /// [`Scheme::Exponential`] integrates the split `gain − λ∘c` and rescales
    /// the tracked mass after each step to match the lost-mass ledger.
    /// [`Scheme::Explicit`] needs steps shrinking like `1/N` for kernels of
    /// degree one and above.
    pub scheme: Scheme,
}

impl GridOptions {
    pub fn new(tol: f64) -> Self {
        GridOptions {
            tol,
            atol: 1e-3 * tol,
            snapshot_dt: None,
            record_spectra: true,
            halt_at_loss: None,
            max_steps: 5_000_000,
            scheme: Scheme::Exponential,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridRun {
    pub kernel: Kernel,
    pub f0: MassSpectrum,
    pub n_max: usize,
    pub tol: f64,
    pub trajectory: Trajectory,
    /// Final concentrations, index `n − 1` for mass `n`.
    pub final_c: Vec<f64>,
    pub lost_mass: f64,
    pub t_reached: f64,
    pub steps: usize,
    pub rejected: usize,
}

struct GridSystem {
    op: GridOperator,
    floor: Vec<f64>,
    m_total: f64,
}

impl GridSystem {
    /// Negative values within the absolute tolerance, or within the FFT
    /// round-off carried up the tail, are accepted; anything larger means
    /// the step overshot and must be retried.
    fn admissible_state(&self, y: &[f64]) -> bool {
        let c = &y[..self.op.n_max];
        let peak = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let noise = 64.0 * f64::EPSILON * peak;
        c.iter()
            .zip(&self.floor)
            .all(|(v, f)| v.is_finite() && *v >= -f - noise)
    }
}

impl SplitSystem for GridSystem {
    fn dim(&self) -> usize {
        self.op.n_max + 1
    }

    fn split_rhs(&mut self, _t: f64, y: &[f64], g: &mut [f64], r: &mut [f64]) {
        let n = self.op.n_max;
        let (gc, gl) = g.split_at_mut(n);
        // mass only leaves; a negative flux is round-off in the weighted sum
        gl[0] = self.op.split(&y[..n], gc, &mut r[..n]).max(0.0);
        r[n] = 0.0;
    }

    fn admissible(&self, y: &[f64]) -> bool {
        self.admissible_state(y)
    }

    // The exponential scheme conserves mass only to the step tolerance;
    // rescale so tracked plus lost mass stays exact.
    fn project(&mut self, y: &mut [f64]) -> bool {
        let n = self.op.n_max;
        let m1: f64 = y[..n].iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
        y[n] = y[n].max(0.0);
        let target = self.m_total - y[n];
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

impl OdeSystem for GridSystem {
    fn dim(&self) -> usize {
        self.op.n_max + 1
    }

    fn rhs(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.op.n_max;
        let (dc, dl) = dy.split_at_mut(n);
        dl[0] = self.op.apply(&y[..n], dc);
    }

    fn admissible(&self, y: &[f64]) -> bool {
        self.admissible_state(y)
    }
}

fn moment_row(t: f64, c: &[f64], lost: f64, xlog: &[f64]) -> MomentRow {
    let mut row = MomentRow {
        t,
        m0: 0.0,
        m1: 0.0,
        m2: 0.0,
        xlogx: 0.0,
        lost_mass: lost,
    };
    for (i, &v) in c.iter().enumerate() {
        let x = (i + 1) as f64;
        row.m0 += v;
        row.m1 += x * v;
        row.m2 += x * x * v;
        row.xlogx += xlog[i] * v;
    }
    row
}

fn snapshot(c: &[f64], lost: f64) -> MassSpectrum {
    let clipped: Vec<f64> = c.iter().map(|v| v.max(0.0)).collect();
    MassSpectrum::from_dense(&clipped).with_lost_mass(lost)
}

/// Integrates the truncated system from `f0` with default options.
pub fn integrate_grid(kernel: &Kernel, f0: &MassSpectrum, n_max: usize, t_end: f64, tol: f64) -> Result<GridRun> {
    integrate_grid_with(kernel, f0, n_max, t_end, &GridOptions::new(tol))
}

pub fn integrate_grid_with(
    kernel: &Kernel,
    f0: &MassSpectrum,
    n_max: usize,
    t_end: f64,
    opts: &GridOptions,
) -> Result<GridRun> {
    if n_max < 2 {
        return Err(Error::Range(format!("n_max must be at least 2, got {n_max}")));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::domain(format!("t_end must be positive, got {t_end}")));
    }
    if !(opts.tol > 0.0 && opts.tol < 1.0) || !(opts.atol > 0.0) {
        return Err(Error::domain("tolerances must be positive and tol < 1"));
    }
    let c0 = f0.to_dense(n_max)?;
    let mut y = c0.clone();
    y.push(0.0);
    let floor: Vec<f64> = (1..=n_max).map(|n| opts.atol / n as f64).collect();
    let mut ode_opts = Options::new(Tolerance {
        rtol: opts.tol,
        atol: floor.iter().copied().chain([opts.atol]).collect(),
    });
    ode_opts.max_steps = opts.max_steps;
    let dt = opts.snapshot_dt.unwrap_or(t_end / 100.0);
    if !(dt > 0.0) {
        return Err(Error::domain("snapshot spacing must be positive"));
    }
    let n_stops = (t_end / dt).ceil() as usize;
    ode_opts.stop_times = (1..n_stops).map(|i| i as f64 * dt).collect();

    let m_total: f64 = c0.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
    let mut sys = GridSystem {
        op: GridOperator::new(kernel, n_max),
        floor,
        m_total,
    };
    let xlog: Vec<f64> = (1..=n_max).map(|n| n as f64 * log_e_plus(n as f64)).collect();
    let mut traj = Trajectory::default();
    traj.push_moments(moment_row(0.0, &c0, 0.0, &xlog));
    if opts.record_spectra {
        traj.push_snapshot(0.0, snapshot(&c0, 0.0));
    }
    let m1_0 = traj.moments[0].m1;
    let observe = |info: &StepInfo, y: &[f64]| {
        let lost = y[n_max];
        traj.push_moments(moment_row(info.t, &y[..n_max], lost, &xlog));
        if opts.record_spectra && info.at_stop {
            traj.push_snapshot(info.t, snapshot(&y[..n_max], lost));
        }
        match opts.halt_at_loss {
            Some(frac) if lost > frac * m1_0 => Flow::Halt,
            _ => Flow::Continue,
        }
    };
    let stats = match opts.scheme {
        Scheme::Exponential => ode::integrate_exponential(&mut sys, 0.0, &mut y, t_end, &ode_opts, observe)?,
        Scheme::Explicit => ode::integrate(&mut sys, 0.0, &mut y, t_end, &ode_opts, observe)?,
    };
    let lost_mass = y[n_max];
    y.truncate(n_max);
    Ok(GridRun {
        kernel: kernel.clone(),
        f0: f0.clone(),
        n_max,
        tol: opts.tol,
        trajectory: traj,
        final_c: y,
        lost_mass,
        t_reached: stats.t_reached,
        steps: stats.accepted,
        rejected: stats.rejected,
    })
}
