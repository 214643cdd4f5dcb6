//! Discrete mass spectra and solver trajectories.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernels::log_e_plus;

/// Positive particle mass, totally ordered so it can key a map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mass(f64);

impl Mass {
    pub fn new(x: f64) -> Result<Self> {
        if x.is_finite() && x > 0.0 {
            Ok(Mass(x))
        } else {
            Err(Error::domain(format!("mass must be finite and positive, got {x}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Eq for Mass {}
impl PartialOrd for Mass {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Mass {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Finite nonnegative discrete measure `Σ c_x δ_x` plus the mass removed
/// from the system so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MassSpectrum {
    entries: BTreeMap<Mass, f64>,
    lost_mass: f64,
}

impl MassSpectrum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn delta(x: f64) -> Result<Self> {
        let mut s = Self::new();
        s.add(x, 1.0)?;
        Ok(s)
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut s = Self::new();
        for (x, c) in pairs {
            s.add(x, c)?;
        }
        Ok(s)
    }

    /// Builds a spectrum on masses `1..=c.len()` from a dense vector.
    pub fn from_dense(c: &[f64]) -> Self {
        let entries = c
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, &v)| (Mass((i + 1) as f64), v))
            .collect();
        MassSpectrum {
            entries,
            lost_mass: 0.0,
        }
    }

    /// Adds concentration `c` at mass `x`.
    pub fn add(&mut self, x: f64, c: f64) -> Result<()> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::domain(format!("concentration must be finite and >= 0, got {c}")));
        }
        let key = Mass::new(x)?;
        if c > 0.0 {
            *self.entries.entry(key).or_insert(0.0) += c;
        }
        Ok(())
    }

    pub fn with_lost_mass(mut self, lost: f64) -> Self {
        self.lost_mass = lost;
        self
    }

    pub fn lost_mass(&self) -> f64 {
        self.lost_mass
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, x: f64) -> f64 {
        Mass::new(x)
            .ok()
            .and_then(|m| self.entries.get(&m).copied())
            .unwrap_or(0.0)
    }

    /// `(mass, concentration)` pairs in increasing mass order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.entries.iter().map(|(m, &c)| (m.0, c))
    }

    pub fn max_mass(&self) -> Option<f64> {
        self.entries.keys().next_back().map(|m| m.0)
    }

    /// `∫ φ(x) f(dx)`.
    pub fn integrate(&self, phi: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(x, c)| phi(x) * c).sum()
    }

    /// `M_k = ∫ x^k f(dx)`.
    pub fn moment(&self, k: f64) -> f64 {
        match k {
            k if k == 0.0 => self.iter().map(|(_, c)| c).sum(),
            k if k == 1.0 => self.integrate(|x| x),
            k if k == 2.0 => self.integrate(|x| x * x),
            _ => self.integrate(|x| x.powf(k)),
        }
    }

    /// `∫ x ln(e + x) f(dx)`.
    pub fn xlogx_moment(&self) -> f64 {
        self.integrate(|x| x * log_e_plus(x))
    }

    pub fn moments(&self, t: f64) -> MomentRow {
        MomentRow {
            t,
            m0: self.moment(0.0),
            m1: self.moment(1.0),
            m2: self.moment(2.0),
            xlogx: self.xlogx_moment(),
            lost_mass: self.lost_mass,
        }
    }

    /// Dense vector of concentrations on `1..=n_max`. Errors if the support is
    /// not made of integers in that range.
    pub fn to_dense(&self, n_max: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; n_max];
        for (x, c) in self.iter() {
            if x.fract() != 0.0 || x < 1.0 || x > n_max as f64 {
                return Err(Error::Input(format!(
                    "mass {x} is not an integer in 1..={n_max}"
                )));
            }
            out[x as usize - 1] += c;
        }
        Ok(out)
    }
}

/// Accepts `delta(x)` or a comma-separated list of `mass:concentration`.
impl FromStr for MassSpectrum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(body) = s.strip_prefix("delta(").and_then(|b| b.strip_suffix(')')) {
            let x: f64 = body
                .trim()
                .parse()
                .map_err(|_| Error::parse(s, "bad mass in delta(...)"))?;
            return MassSpectrum::delta(x);
        }
        let mut spec = MassSpectrum::new();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (x, c) = item
                .split_once(':')
                .ok_or_else(|| Error::parse(s, format!("expected mass:concentration, got '{item}'")))?;
            let x: f64 = x.trim().parse().map_err(|_| Error::parse(s, "bad mass"))?;
            let c: f64 = c.trim().parse().map_err(|_| Error::parse(s, "bad concentration"))?;
            spec.add(x, c)?;
        }
        if spec.is_empty() {
            return Err(Error::parse(s, "empty initial spectrum"));
        }
        Ok(spec)
    }
}

impl fmt::Display for MassSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.len() == 1 {
            let (x, c) = self.iter().next().expect("one entry");
            if c == 1.0 {
                return write!(f, "delta({x})");
            }
        }
        let mut first = true;
        for (x, c) in self.iter() {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            write!(f, "{x}:{c}")?;
        }
        Ok(())
    }
}

/// One row of the moment series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    pub t: f64,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub xlogx: f64,
    pub lost_mass: f64,
}

/// Time-ordered record of a run: full spectra at the snapshot times and the
/// moment series at every recorded step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<(f64, MassSpectrum)>,
    pub moments: Vec<MomentRow>,
}

impl Trajectory {
    pub fn initial_mass(&self) -> Option<f64> {
        self.moments.first().map(|r| r.m1 + r.lost_mass)
    }

    pub fn horizon(&self) -> f64 {
        let a = self.snapshots.last().map_or(0.0, |s| s.0);
        let b = self.moments.last().map_or(0.0, |r| r.t);
        a.max(b)
    }

    /// First recorded time at which tracked mass falls below
    /// `M₁(0) · (1 − threshold)`, linearly interpolated between rows.
    pub fn mass_loss_time(&self, threshold: f64) -> Option<f64> {
        let m0 = self.moments.first()?.m1;
        let target = m0 * (1.0 - threshold);
        let mut prev: Option<&MomentRow> = None;
        for row in &self.moments {
            if row.m1 < target {
                return Some(match prev {
                    Some(p) if p.m1 > row.m1 => {
                        p.t + (p.m1 - target) / (p.m1 - row.m1) * (row.t - p.t)
                    }
                    _ => row.t,
                });
            }
            prev = Some(row);
        }
        None
    }

    pub(crate) fn push_moments(&mut self, row: MomentRow) {
        if let Some(last) = self.moments.last() {
            if row.t <= last.t {
                return;
            }
        }
        self.moments.push(row);
    }

    pub(crate) fn push_snapshot(&mut self, t: f64, s: MassSpectrum) {
        if let Some(last) = self.snapshots.last() {
            if t <= last.0 {
                return;
            }
        }
        self.snapshots.push((t, s));
    }
}
