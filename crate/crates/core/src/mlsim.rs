//! Marcus–Lushnikov particle system.
//!
//! `N` particles in a volume `V = N / M₀(f₀)`; each unordered pair of
//! particles with masses `x, y` merges at rate `K(x, y) / V`. Concentrations
//! are counts divided by `V`, so the empirical spectrum approximates the
//! Smoluchowski solution started from `f₀`.
//!
//! Particles are grouped by mass. Every mass class `s` with `n_s` particles
//! carries the row rate `ρ_s = Σ_{s'} K(s, s') n_s (n_{s'} − 1{s=s'}) / V`,
//! stored in a Fenwick tree; the total event rate is `½ Σ ρ_s`. An event
//! draws `s` with weight `ρ_s`, then the partner class `s'` with weight
//! `K(s, s')(n_{s'} − 1{s=s'})`, which is exact without rejection.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::spectrum::MassSpectrum;

/// Full recomputation of the row rates after this many events bounds the
/// drift of the incremental updates.
const REFRESH_EVERY: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RecordPolicy {
    pub log_events: bool,
    /// Times at which the spectrum is stored.
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub t_end: f64,
    /// Stop after this many events even before `t_end`.
    pub max_events: Option<u64>,
    pub record: RecordPolicy,
}

impl SimOptions {
    pub fn new(t_end: f64) -> Self {
        SimOptions {
            t_end,
            max_events: None,
            record: RecordPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Horizon,
    EventBudget,
    /// One particle left.
    Exhausted,
    /// The total rate stopped being finite.
    RateOverflow,
}

#[derive(Debug, Clone)]
pub struct SimRun {
    pub kernel: Kernel,
    pub n0: usize,
    pub seed: u64,
    pub volume: f64,
    pub total_mass: f64,
    /// Initial particles as `(mass, count)`, ascending in mass.
    pub initial: Vec<(f64, usize)>,
    pub t_end: f64,
    pub t_reached: f64,
    pub stop: StopReason,
    pub n_events: u64,
    /// Events that merged two particles of the same mass.
    pub equal_mass_events: u64,
    /// `(t, largest mass)` at time 0 and whenever the largest mass grows.
    pub largest: Vec<(f64, f64)>,
    pub snapshots: Vec<(f64, MassSpectrum)>,
    pub events: Option<Vec<Event>>,
    /// Particle count at time 0 and after every event is implied by
    /// `n0 − events`; kept here at the snapshot times.
    pub counts: Vec<(f64, usize)>,
}

impl SimRun {
    /// Whether the run stopped on a rate overflow (taken as gelation).
    pub fn gel_flag(&self) -> bool {
        self.stop == StopReason::RateOverflow
    }

    pub fn largest_final(&self) -> f64 {
        self.largest.last().map_or(0.0, |p| p.1)
    }

    /// Largest mass at time `t`.
    pub fn largest_at(&self, t: f64) -> f64 {
        let k = self.largest.partition_point(|p| p.0 <= t);
        self.largest[k.max(1) - 1].1
    }
}

/// Prefix sums over a growable array.
struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick {
            tree: vec![0.0; n + 1],
        }
    }

    fn add(&mut self, i: usize, delta: f64) {
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    /// Smallest index whose prefix sum exceeds `target`.
    fn find(&self, mut target: f64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }

    fn rebuild(&mut self, values: &[f64]) {
        self.tree.iter_mut().for_each(|v| *v = 0.0);
        for (i, &v) in values.iter().enumerate() {
            self.add(i, v);
        }
    }
}

struct Classes {
    mass: Vec<f64>,
    count: Vec<usize>,
    rho: Vec<f64>,
    slot_of: HashMap<u64, usize>,
    free: Vec<usize>,
    active: Vec<usize>,
    fenwick: Fenwick,
}

impl Classes {
    fn slot(&mut self, x: f64) -> usize {
        if let Some(&s) = self.slot_of.get(&x.to_bits()) {
            return s;
        }
        let s = match self.free.pop() {
            Some(s) => {
                self.mass[s] = x;
                s
            }
            None => {
                self.mass.push(x);
                self.count.push(0);
                self.rho.push(0.0);
                self.mass.len() - 1
            }
        };
        if self.mass.len() >= self.fenwick.tree.len() {
            let mut f = Fenwick::new(2 * self.mass.len());
            f.rebuild(&self.rho);
            self.fenwick = f;
        }
        self.slot_of.insert(x.to_bits(), s);
        self.active.push(s);
        s
    }

    fn row(&self, kernel: &Kernel, s: usize, volume: f64) -> f64 {
        let x = self.mass[s];
        let ns = self.count[s] as f64;
        let mut acc = 0.0;
        for &k in &self.active {
            let nk = self.count[k] as f64 - if k == s { 1.0 } else { 0.0 };
            if nk > 0.0 {
                acc += kernel.rate(x, self.mass[k]) * nk;
            }
        }
        acc * ns / volume
    }

    fn refresh(&mut self, kernel: &Kernel, volume: f64) {
        for i in 0..self.active.len() {
            let s = self.active[i];
            self.rho[s] = self.row(kernel, s, volume);
        }
        self.fenwick.rebuild(&self.rho);
    }

    fn set_rho(&mut self, s: usize, v: f64) {
        self.fenwick.add(s, v - self.rho[s]);
        self.rho[s] = v;
    }

    /// Changes the count of class `s` by `delta` and updates every row rate.
    fn shift(&mut self, kernel: &Kernel, s: usize, delta: i64, volume: f64) {
        let x = self.mass[s];
        self.count[s] = (self.count[s] as i64 + delta) as usize;
        for i in 0..self.active.len() {
            let k = self.active[i];
            if k == s {
                continue;
            }
            let v = self.rho[k] + kernel.rate(self.mass[k], x) * self.count[k] as f64 * delta as f64 / volume;
            self.set_rho(k, v.max(0.0));
        }
        let v = self.row(kernel, s, volume);
        self.set_rho(s, v);
        if self.count[s] == 0 {
            self.slot_of.remove(&x.to_bits());
            self.free.push(s);
            if let Some(p) = self.active.iter().position(|&k| k == s) {
                self.active.swap_remove(p);
            }
        }
    }

    fn spectrum(&self, volume: f64) -> MassSpectrum {
        let mut s = MassSpectrum::new();
        for &k in &self.active {
            if self.count[k] > 0 {
                s.add(self.mass[k], self.count[k] as f64 / volume).expect("positive class");
            }
        }
        s
    }
}

/// Deterministic initial particles: class `x` receives `⌊N c_x / M₀⌋`
/// particles and the remainder goes to the largest fractional parts.
pub fn initial_particles(f0: &MassSpectrum, n: usize) -> Result<Vec<(f64, usize)>> {
    let m0 = f0.moment(0.0);
    if f0.is_empty() || !(m0 > 0.0) {
        return Err(Error::Input("initial spectrum is empty".into()));
    }
    let atoms: Vec<(f64, f64)> = f0.iter().collect();
    let mut out: Vec<(f64, usize)> = Vec::with_capacity(atoms.len());
    let mut frac: Vec<(f64, usize)> = Vec::new();
    let mut used = 0;
    for (i, &(x, c)) in atoms.iter().enumerate() {
        let q = n as f64 * c / m0;
        let k = q.floor() as usize;
        used += k;
        out.push((x, k));
        frac.push((q - k as f64, i));
    }
    frac.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in frac.iter().take(n.saturating_sub(used)) {
        out[i].1 += 1;
    }
    out.retain(|p| p.1 > 0);
    Ok(out)
}

/// One exact stochastic trajectory.
pub fn simulate(kernel: &Kernel, n: usize, f0: &MassSpectrum, seed: u64, opts: &SimOptions) -> Result<SimRun> {
    if n < 2 {
        return Err(Error::Range(format!("need at least two particles, got {n}")));
    }
    if !(opts.t_end.is_finite() && opts.t_end > 0.0) {
        return Err(Error::domain(format!("t_end must be positive, got {}", opts.t_end)));
    }
    if opts.record.snapshot_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::domain("snapshot times must be finite and nonnegative"));
    }
    let initial = initial_particles(f0, n)?;
    let volume = n as f64 / f0.moment(0.0);
    let total_mass: f64 = initial.iter().map(|(x, k)| x * *k as f64).sum();

    let mut cl = Classes {
        mass: Vec::new(),
        count: Vec::new(),
        rho: Vec::new(),
        slot_of: HashMap::new(),
        free: Vec::new(),
        active: Vec::new(),
        fenwick: Fenwick::new(16),
    };
    for &(x, k) in &initial {
        let s = cl.slot(x);
        cl.count[s] = k;
    }
    cl.refresh(kernel, volume);

    let mut snap_times = opts.record.snapshot_times.clone();
    snap_times.sort_by(f64::total_cmp);
    let mut snap_iter = snap_times.into_iter().filter(|&t| t <= opts.t_end).peekable();
    let mut snapshots = Vec::new();
    let mut counts = Vec::new();
    let mut events = opts.record.log_events.then(Vec::new);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    let mut alive = n;
    let mut n_events = 0u64;
    let mut equal = 0u64;
    let mut big = initial.iter().map(|p| p.0).fold(0.0, f64::max);
    let mut largest = vec![(0.0, big)];

    let stop = loop {
        let total: f64 = 0.5 * cl.rho.iter().sum::<f64>();
        let wait = if total > 0.0 {
            let e: f64 = rng.sample(Exp1);
            e / total
        } else {
            f64::INFINITY
        };
        let t_next = t + wait;
        while let Some(&ts) = snap_iter.peek() {
            if ts < t_next {
                snapshots.push((ts, cl.spectrum(volume)));
                counts.push((ts, alive));
                snap_iter.next();
            } else {
                break;
            }
        }
        if !total.is_finite() {
            break StopReason::RateOverflow;
        }
        if alive < 2 || total == 0.0 {
            break StopReason::Exhausted;
        }
        if t_next > opts.t_end {
            t = opts.t_end;
            break StopReason::Horizon;
        }
        if opts.max_events.is_some_and(|m| n_events >= m) {
            break StopReason::EventBudget;
        }
        let u: f64 = rng.random::<f64>() * 2.0 * total;
        let s = cl.fenwick.find(u);
        if cl.count[s] == 0 || !(cl.rho[s] > 0.0) {
            // the tree drifted from the row rates; resynchronise and redraw
            cl.refresh(kernel, volume);
            continue;
        }
        let x = cl.mass[s];
        let mut weights = Vec::with_capacity(cl.active.len());
        let mut wsum = 0.0;
        for &k in &cl.active {
            let nk = cl.count[k] as f64 - if k == s { 1.0 } else { 0.0 };
            let w = if nk > 0.0 { kernel.rate(x, cl.mass[k]) * nk } else { 0.0 };
            wsum += w;
            weights.push((k, wsum));
        }
        if !(wsum > 0.0) {
            cl.refresh(kernel, volume);
            continue;
        }
        t = t_next;
        let v: f64 = rng.random::<f64>() * wsum;
        let idx = weights.partition_point(|p| p.1 <= v).min(weights.len() - 1);
        let s2 = weights[idx].0;
        let y = cl.mass[s2];

        cl.shift(kernel, s, -1, volume);
        let s2 = cl.slot_of[&y.to_bits()];
        cl.shift(kernel, s2, -1, volume);
        let z = x + y;
        let s3 = cl.slot(z);
        cl.shift(kernel, s3, 1, volume);
        alive -= 1;
        n_events += 1;
        if x == y {
            equal += 1;
        }
        if z > big {
            big = z;
            largest.push((t, z));
        }
        if let Some(log) = events.as_mut() {
            log.push(Event { t, x, y });
        }
        if n_events % REFRESH_EVERY == 0 {
            cl.refresh(kernel, volume);
        }
    };

    Ok(SimRun {
        kernel: kernel.clone(),
        n0: n,
        seed,
        volume,
        total_mass,
        initial,
        t_end: opts.t_end,
        t_reached: t,
        stop,
        n_events,
        equal_mass_events: equal,
        largest,
        snapshots,
        events,
        counts,
    })
}

/// Runs `replicates` independent trajectories with seeds `seed + i`, in
/// parallel; results are ordered by replicate index.
pub fn simulate_replicates(
    kernel: &Kernel,
    n: usize,
    f0: &MassSpectrum,
    seed: u64,
    replicates: usize,
    opts: &SimOptions,
) -> Result<Vec<SimRun>> {
    (0..replicates)
        .into_par_iter()
        .map(|i| simulate(kernel, n, f0, seed.wrapping_add(i as u64), opts))
        .collect()
}

/// Size threshold for the first-passage gel proxy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GelRule {
    /// Largest mass at least `N^{2/3}` mean initial masses.
    TwoThirds,
    /// Largest mass at least `ε` times the total mass.
    Fraction(f64),
}

impl GelRule {
    pub fn threshold(&self, run: &SimRun) -> f64 {
        let mean = run.total_mass / run.n0 as f64;
        match *self {
            GelRule::TwoThirds => mean * (run.n0 as f64).powf(2.0 / 3.0),
            GelRule::Fraction(eps) => eps * run.total_mass,
        }
    }
}

impl std::str::FromStr for GelRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "n23" {
            return Ok(GelRule::TwoThirds);
        }
        if let Some(v) = s.strip_prefix("frac:") {
            let eps: f64 = v.parse().map_err(|_| Error::parse("gel rule", format!("bad fraction {v:?}")))?;
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::domain(format!("fraction must lie in (0, 1], got {eps}")));
            }
            return Ok(GelRule::Fraction(eps));
        }
        Err(Error::parse("gel rule", format!("expected n23 or frac:<eps>, got {s:?}")))
    }
}

impl std::fmt::Display for GelRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GelRule::TwoThirds => write!(f, "n23"),
            GelRule::Fraction(e) => write!(f, "frac:{e}"),
        }
    }
}

/// First time the largest mass reaches the rule threshold; `None` if it
/// never does before the run ends (censored).
pub fn first_passage(run: &SimRun, rule: GelRule) -> Option<f64> {
    let th = rule.threshold(run);
    run.largest.iter().find(|p| p.1 >= th).map(|p| p.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GelTimeSummary {
    pub per_run: Vec<Option<f64>>,
    pub censored: usize,
    /// Censored runs count as later than every observed time, so the median
    /// and quartiles exist only while they fall among observed values.
    pub median: Option<f64>,
    pub quartiles: Option<(f64, f64)>,
}

impl GelTimeSummary {
    pub fn iqr(&self) -> Option<f64> {
        self.quartiles.map(|(a, b)| b - a)
    }
}

fn quantile(sorted: &[f64], total: usize, q: f64) -> Option<f64> {
    // linear interpolation on positions 0..total−1; censored runs sit past the end
    let pos = q * (total - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if hi >= sorted.len() {
        return None;
    }
    let w = pos - lo as f64;
    Some(sorted[lo] * (1.0 - w) + sorted[hi] * w)
}

pub fn gel_time_estimate(runs: &[SimRun], rule: GelRule) -> Result<GelTimeSummary> {
    if runs.is_empty() {
        return Err(Error::Input("no runs".into()));
    }
    let per_run: Vec<Option<f64>> = runs.iter().map(|r| first_passage(r, rule)).collect();
    let mut seen: Vec<f64> = per_run.iter().flatten().copied().collect();
    seen.sort_by(f64::total_cmp);
    let total = per_run.len();
    let median = quantile(&seen, total, 0.5);
    let quartiles = quantile(&seen, total, 0.25).zip(quantile(&seen, total, 0.75));
    Ok(GelTimeSummary {
        censored: total - seen.len(),
        per_run,
        median,
        quartiles,
    })
}

/// Spectrum at time `t`: counts divided by the volume.
///
/// Replays the event log when the run kept one; otherwise `t` must be one of
/// the snapshot times.
pub fn empirical_spectrum(run: &SimRun, t: f64) -> Result<MassSpectrum> {
    if !(t >= 0.0 && t <= run.t_reached) {
        return Err(Error::Range(format!("t = {t} lies beyond the run horizon {}", run.t_reached)));
    }
    if let Some(log) = &run.events {
        let mut counts: HashMap<u64, (f64, i64)> = HashMap::new();
        for &(x, k) in &run.initial {
            counts.insert(x.to_bits(), (x, k as i64));
        }
        for e in log.iter().take_while(|e| e.t <= t) {
            counts.get_mut(&e.x.to_bits()).expect("logged mass").1 -= 1;
            counts.get_mut(&e.y.to_bits()).expect("logged mass").1 -= 1;
            let z = e.x + e.y;
            counts.entry(z.to_bits()).or_insert((z, 0)).1 += 1;
        }
        let mut s = MassSpectrum::new();
        for (x, k) in counts.into_values() {
            if k > 0 {
                s.add(x, k as f64 / run.volume)?;
            }
        }
        return Ok(s);
    }
    if t == 0.0 {
        let mut s = MassSpectrum::new();
        for &(x, k) in &run.initial {
            s.add(x, k as f64 / run.volume)?;
        }
        return Ok(s);
    }
    run.snapshots
        .iter()
        .find(|(ts, _)| *ts == t)
        .map(|(_, s)| s.clone())
        .ok_or_else(|| Error::Range(format!("no event log and no snapshot at t = {t}")))
}
