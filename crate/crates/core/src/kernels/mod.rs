//! Catalog of coagulation kernels.
//!
//! Every kernel is symmetric and nonnegative. Evaluation canonicalizes the
//! argument pair to `(x ∧ y, x ∨ y)` before touching the formula, so
//! `K(x, y) == K(y, x)` holds bit for bit, including for custom expressions.
//!
//! All logarithmic factors are `ln(e + x ∧ y)`.

mod expr;

use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use expr::Expr;

/// `ln(e + m)`, the logarithmic weight shared by the log-modified families.
#[inline]
pub fn log_e_plus(m: f64) -> f64 {
    (E + m).ln()
}

/// `ln(e + exp(s))` computed without overflowing for large `s`.
#[inline]
pub(crate) fn log_e_plus_exp(s: f64) -> f64 {
    if s > 30.0 {
        s + (E * (-s).exp()).ln_1p()
    } else {
        (E + s.exp()).ln()
    }
}

/// A symmetric coagulation rate `K(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `K = c`.
    Constant { c: f64 },
    /// `K = x + y`.
    Additive,
    /// `K = x y`.
    Multiplicative,
    /// `K = (x y)^(γ/2)`.
    ProductPower { gamma: f64 },
    /// `K = m^γ (m/M)^θ` with `m = x ∧ y`, `M = x ∨ y`.
    MinPower { gamma: f64, theta: f64 },
    /// `K = m^γ (m/M − 1/2)₊^θ`.
    MinPowerGap { gamma: f64, theta: f64 },
    /// `K = m (m/M − 1/2)₊ ln^α(e + m)`.
    K0Log { alpha: f64 },
    /// `K = (x + y) ln^α(e + m)`.
    K1Log { alpha: f64 },
    /// `K = r(x) 1{x = y}` with `r(x) = c x^p ln^β(e + x)`, nonzero only on
    /// exact powers of two.
    Diagonal { c: f64, p: f64, beta: f64 },
    /// User expression in `x` and `y`, evaluated at `(x ∧ y, x ∨ y)`.
    Custom(Expr),
}

/// Closed form `H(a) = coef · a^power · ln^log_power(e + a)` of the gel
/// functional `H(a) = a · inf{K(x, y) : x, y ∈ [a, r a]}` for one ratio `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HProfile {
    pub coef: f64,
    pub power: f64,
    pub log_power: f64,
}

impl HProfile {
    pub fn eval(&self, a: f64) -> f64 {
        if self.coef == 0.0 {
            return 0.0;
        }
        let mut v = self.coef * a.powf(self.power);
        if self.log_power != 0.0 {
            v *= log_e_plus(a).powf(self.log_power);
        }
        v
    }

    /// Whether `∫^∞ H(a)^{-1/2} da` converges. Decided from the exponents alone.
    pub fn kappa_converges(&self) -> bool {
        self.coef > 0.0 && (self.power > 2.0 || (self.power == 2.0 && self.log_power > 2.0))
    }
}

/// Lower estimate of `inf{K(x, y) : x, y ∈ [a, r a]}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxInfimum {
    pub lower: f64,
    /// Zero when the infimum was placed analytically.
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneityReport {
    pub pass: bool,
    pub max_relative_deviation: f64,
    pub samples: usize,
}

/// Relative tolerance used by [`Kernel::check_homogeneity`].
pub const HOMOGENEITY_TOL: f64 = 1e-10;

fn is_power_of_two(x: f64) -> bool {
    if !(x.is_finite() && x > 0.0) || !x.is_normal() {
        return false;
    }
    x.to_bits() & ((1u64 << 52) - 1) == 0
}

fn check_mass(x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("mass must be finite and positive, got {x}")))
    }
}

impl Kernel {
    /// `K(x, y)`. Errors on non-finite or non-positive masses.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        check_mass(x)?;
        check_mass(y)?;
        let v = self.rate(x, y);
        if v.is_nan() || v < 0.0 {
            return Err(Error::domain(format!("kernel {self} returned {v} at ({x}, {y})")));
        }
        Ok(v)
    }

    /// Unchecked evaluation for inner loops. Inputs must be positive.
    #[inline]
    pub fn rate(&self, x: f64, y: f64) -> f64 {
        let (m, big) = if x <= y { (x, y) } else { (y, x) };
        self.rate_ordered(m, big)
    }

    #[inline]
    fn rate_ordered(&self, m: f64, big: f64) -> f64 {
        match self {
            Kernel::Constant { c } => *c,
            Kernel::Additive => m + big,
            Kernel::Multiplicative => m * big,
            Kernel::ProductPower { gamma } => (m * big).powf(0.5 * gamma),
            Kernel::MinPower { gamma, theta } => {
                let ratio = if *theta == 0.0 { 1.0 } else { (m / big).powf(*theta) };
                m.powf(*gamma) * ratio
            }
            Kernel::MinPowerGap { gamma, theta } => {
                let u = m / big - 0.5;
                if u <= 0.0 {
                    0.0
                } else {
                    m.powf(*gamma) * u.powf(*theta)
                }
            }
            Kernel::K0Log { alpha } => {
                let u = m / big - 0.5;
                if u <= 0.0 {
                    0.0
                } else {
                    m * u * log_e_plus(m).powf(*alpha)
                }
            }
            Kernel::K1Log { alpha } => (m + big) * log_e_plus(m).powf(*alpha),
            Kernel::Diagonal { c, p, beta } => {
                if m == big && is_power_of_two(m) {
                    c * m.powf(*p) * log_e_plus(m).powf(*beta)
                } else {
                    0.0
                }
            }
            Kernel::Custom(e) => e.eval(m, big),
        }
    }

    /// Homogeneity degree, present only when the family is exactly homogeneous.
    pub fn gamma(&self) -> Option<f64> {
        match self {
            Kernel::Constant { .. } => Some(0.0),
            Kernel::Additive => Some(1.0),
            Kernel::Multiplicative => Some(2.0),
            Kernel::ProductPower { gamma }
            | Kernel::MinPower { gamma, .. }
            | Kernel::MinPowerGap { gamma, .. } => Some(*gamma),
            Kernel::K0Log { alpha } | Kernel::K1Log { alpha } if *alpha == 0.0 => Some(1.0),
            _ => None,
        }
    }

    /// Exponent of the logarithmic factor, if the family has one.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            Kernel::K0Log { alpha } | Kernel::K1Log { alpha } => Some(*alpha),
            Kernel::Diagonal { beta, .. } => Some(*beta),
            _ => None,
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self, Kernel::Custom(_))
    }

    /// Point of `[a, r a]²` where a catalog kernel attains its infimum.
    ///
    /// Every catalog family is nondecreasing in `x ∧ y` and nonincreasing in
    /// `x ∨ y` or in the ratio `x ∨ y / x ∧ y`, so the infimum sits at
    /// `(a, a)` or `(a, r a)`.
    fn box_argmin(&self, a: f64, r: f64) -> Option<(f64, f64)> {
        match self {
            Kernel::Constant { .. }
            | Kernel::Additive
            | Kernel::Multiplicative
            | Kernel::ProductPower { .. }
            | Kernel::K1Log { .. } => Some((a, a)),
            Kernel::MinPower { .. }
            | Kernel::MinPowerGap { .. }
            | Kernel::K0Log { .. }
            | Kernel::Diagonal { .. } => Some((a, r * a)),
            Kernel::Custom(_) => None,
        }
    }

    /// Closed form of `H(a)` for the ratio `r`, available for every catalog family.
    pub fn closed_form_h(&self, r: f64) -> Option<HProfile> {
        let gap = (1.0 / r - 0.5).max(0.0);
        let p = |coef, power, log_power| {
            Some(HProfile {
                coef,
                power,
                log_power,
            })
        };
        match self {
            Kernel::Constant { c } => p(*c, 1.0, 0.0),
            Kernel::Additive => p(2.0, 2.0, 0.0),
            Kernel::Multiplicative => p(1.0, 3.0, 0.0),
            Kernel::ProductPower { gamma } => p(1.0, 1.0 + gamma, 0.0),
            Kernel::MinPower { gamma, theta } => p(r.powf(-theta), 1.0 + gamma, 0.0),
            Kernel::MinPowerGap { gamma, theta } => {
                let coef = if gap > 0.0 { gap.powf(*theta) } else { 0.0 };
                p(coef, 1.0 + gamma, 0.0)
            }
            // r = 3/2 gives the textbook H(a) = a² ln^α(e + a) / 6.
            Kernel::K0Log { alpha } => p(gap, 2.0, *alpha),
            Kernel::K1Log { alpha } => p(2.0, 2.0, *alpha),
            Kernel::Diagonal { .. } => p(0.0, 1.0, 0.0),
            Kernel::Custom(_) => None,
        }
    }

    /// Lower estimate of `inf{K(x, y) : x, y ∈ [a, r a]}`.
    ///
    /// Catalog kernels are evaluated at their analytic argmin. Custom kernels
    /// use a `depth × depth` grid followed by golden-section refinement along
    /// each axis; the returned lower value subtracts the refinement gap.
    pub fn infimum_on_box(&self, a: f64, r: f64, depth: usize) -> Result<BoxInfimum> {
        check_mass(a)?;
        if !(r > 1.0 && r.is_finite()) {
            return Err(Error::domain(format!("box ratio must exceed 1, got {r}")));
        }
        if let Some((x, y)) = self.box_argmin(a, r) {
            return Ok(BoxInfimum {
                lower: self.rate(x, y),
                error: 0.0,
            });
        }
        custom_infimum(|x, y| self.rate(x, y), a, r * a, depth.max(4))
    }

    /// Checks `K(λx, λy) = λ^γ K(x, y)` against the family's own degree.
    pub fn check_homogeneity(&self, samples: usize) -> Result<HomogeneityReport> {
        let gamma = self
            .gamma()
            .ok_or_else(|| Error::NotApplicable(format!("kernel {self} is not homogeneous")))?;
        Ok(self.check_homogeneity_claimed(gamma, samples))
    }

    /// Checks homogeneity of degree `gamma` on `samples` log-uniform triples
    /// `(λ, x, y) ∈ [1e-3, 1e3]³`.
    pub fn check_homogeneity_claimed(&self, gamma: f64, samples: usize) -> HomogeneityReport {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_4b31);
        let mut draw = || 10f64.powf(rng.random_range(-3.0..=3.0));
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let (lambda, x, y) = (draw(), draw(), draw());
            let lhs = self.rate(lambda * x, lambda * y);
            let rhs = lambda.powf(gamma) * self.rate(x, y);
            let scale = lhs.abs().max(rhs.abs());
            let dev = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
            worst = worst.max(if dev.is_nan() { f64::INFINITY } else { dev });
        }
        HomogeneityReport {
            pass: worst <= HOMOGENEITY_TOL,
            max_relative_deviation: worst,
            samples,
        }
    }

    fn family_name(&self) -> &'static str {
        match self {
            Kernel::Constant { .. } => "constant",
            Kernel::Additive => "additive",
            Kernel::Multiplicative => "multiplicative",
            Kernel::ProductPower { .. } => "prodpow",
            Kernel::MinPower { .. } => "minpow",
            Kernel::MinPowerGap { .. } => "mingap",
            Kernel::K0Log { .. } => "k0log",
            Kernel::K1Log { .. } => "k1log",
            Kernel::Diagonal { .. } => "diagonal",
            Kernel::Custom(_) => "custom",
        }
    }
}

fn custom_infimum(k: impl Fn(f64, f64) -> f64, lo: f64, hi: f64, depth: usize) -> Result<BoxInfimum> {
    let grid_min = |n: usize| {
        let step = (hi - lo) / (n - 1) as f64;
        let mut best = (f64::INFINITY, lo, lo);
        for i in 0..n {
            let x = lo + step * i as f64;
            for j in 0..n {
                let y = lo + step * j as f64;
                let v = k(x, y);
                if v < best.0 {
                    best = (v, x, y);
                }
            }
        }
        (best, step)
    };
    // coordinate-wise golden-section descent inside the cell around a grid point
    let refine = |(v0, mut x, mut y): (f64, f64, f64), step: f64| -> (f64, bool) {
        let mut best = v0;
        for _ in 0..50 {
            let before = best;
            let (nx, vx) = golden_min(|s| k(s, y), (x - step).max(lo), (x + step).min(hi));
            if vx < best {
                best = vx;
                x = nx;
            }
            let (ny, vy) = golden_min(|s| k(x, s), (y - step).max(lo), (y + step).min(hi));
            if vy < best {
                best = vy;
                y = ny;
            }
            if (before - best).abs() <= 1e-9 * best.abs().max(f64::MIN_POSITIVE) {
                return (best, true);
            }
        }
        (best, false)
    };

    let (coarse_pt, coarse_step) = grid_min(depth / 2);
    let (fine_pt, fine_step) = grid_min(depth);
    if !fine_pt.0.is_finite() {
        return Err(Error::ToleranceNotMet {
            lo: f64::NEG_INFINITY,
            hi: fine_pt.0,
        });
    }
    let (from_coarse, ok_coarse) = refine(coarse_pt, coarse_step);
    let (from_fine, ok_fine) = refine(fine_pt, fine_step);
    let best = from_coarse.min(from_fine);
    let gap = (from_coarse - from_fine).abs();
    if !(ok_coarse && ok_fine) || !best.is_finite() {
        return Err(Error::ToleranceNotMet {
            lo: best - gap,
            hi: best,
        });
    }
    let error = gap + 1e-9 * best.abs();
    Ok(BoxInfimum {
        lower: (best - error).max(0.0),
        error,
    })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-12 * (a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let candidates = [(a, f(a)), (b, f(b)), (c, fc), (d, fd)];
    candidates
        .into_iter()
        .fold((a, f64::INFINITY), |acc, (x, v)| if v < acc.1 { (x, v) } else { acc })
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.family_name();
        match self {
            Kernel::Additive | Kernel::Multiplicative => write!(f, "{name}"),
            Kernel::Constant { c } => write!(f, "{name}(c={c})"),
            Kernel::ProductPower { gamma } => write!(f, "{name}(gamma={gamma})"),
            Kernel::MinPower { gamma, theta } | Kernel::MinPowerGap { gamma, theta } => {
                write!(f, "{name}(gamma={gamma},theta={theta})")
            }
            Kernel::K0Log { alpha } | Kernel::K1Log { alpha } => write!(f, "{name}(alpha={alpha})"),
            Kernel::Diagonal { c, p, beta } => write!(f, "{name}(c={c},p={p},beta={beta})"),
            Kernel::Custom(e) => write!(f, "{name}({})", e.source()),
        }
    }
}

struct Params<'a> {
    spec: &'a str,
    pairs: Vec<(&'a str, f64)>,
}

impl<'a> Params<'a> {
    fn parse(spec: &'a str, body: &'a str) -> Result<Self> {
        let mut pairs = Vec::new();
        for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::parse(spec, format!("expected key=value, got '{item}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::parse(spec, format!("bad number in '{item}'")))?;
            if !v.is_finite() {
                return Err(Error::parse(spec, format!("non-finite parameter in '{item}'")));
            }
            pairs.push((k.trim(), v));
        }
        Ok(Params { spec, pairs })
    }

    fn take(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.pairs.iter().position(|(k, _)| *k == key) {
            Some(i) => Ok(self.pairs.remove(i).1),
            None => default.ok_or_else(|| Error::parse(self.spec, format!("missing parameter '{key}'"))),
        }
    }

    fn nonneg(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        let v = self.take(key, default)?;
        if v < 0.0 {
            return Err(Error::parse(self.spec, format!("parameter '{key}' must be >= 0")));
        }
        Ok(v)
    }

    fn finish(self) -> Result<()> {
        match self.pairs.first() {
            Some((k, _)) => Err(Error::parse(self.spec, format!("unknown parameter '{k}'"))),
            None => Ok(()),
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, body) = match spec.find('(') {
            Some(open) => {
                if !spec.ends_with(')') {
                    return Err(Error::parse(spec, "missing closing ')'"));
                }
                (spec[..open].trim(), &spec[open + 1..spec.len() - 1])
            }
            None => (spec, ""),
        };
        let name = name.to_ascii_lowercase();
        if name == "custom" {
            return Ok(Kernel::Custom(Expr::parse(body)?));
        }
        let mut p = Params::parse(spec, body)?;
        let kernel = match name.as_str() {
            "constant" => Kernel::Constant {
                c: p.nonneg("c", Some(1.0))?,
            },
            "additive" => Kernel::Additive,
            "multiplicative" => Kernel::Multiplicative,
            "prodpow" => Kernel::ProductPower {
                gamma: p.nonneg("gamma", None)?,
            },
            "minpow" => Kernel::MinPower {
                gamma: p.nonneg("gamma", None)?,
                theta: p.nonneg("theta", Some(0.0))?,
            },
            "mingap" => Kernel::MinPowerGap {
                gamma: p.nonneg("gamma", None)?,
                theta: p.nonneg("theta", Some(1.0))?,
            },
            "k0log" => Kernel::K0Log {
                alpha: p.nonneg("alpha", None)?,
            },
            "k1log" => Kernel::K1Log {
                alpha: p.nonneg("alpha", None)?,
            },
            "diagonal" => {
                let c = p.take("c", Some(1.0))?;
                if c <= 0.0 {
                    return Err(Error::parse(spec, "diagonal rate coefficient must be > 0"));
                }
                Kernel::Diagonal {
                    c,
                    p: p.take("p", Some(1.0))?,
                    beta: p.nonneg("beta", Some(0.0))?,
                }
            }
            other => return Err(Error::parse(spec, format!("unknown kernel family '{other}'"))),
        };
        p.finish()?;
        Ok(kernel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(s: &str) -> Kernel {
        s.parse().unwrap()
    }

    #[test]
    fn eval_examples() {
        let l1 = (E + 1.0).ln();
        let v = k("k0log(alpha=2)").eval(1.0, 1.0).unwrap();
        assert!((v - 0.5 * l1 * l1).abs() < 1e-15);
        assert!((v - 0.86233).abs() < 1e-5);
        for alpha in [0.0, 1.0, 2.5, 7.0] {
            assert_eq!(Kernel::K0Log { alpha }.eval(1.0, 3.0).unwrap(), 0.0);
        }
        assert_eq!(Kernel::Multiplicative.eval(2.0, 3.0).unwrap(), 6.0);
        assert_eq!(
            Kernel::Additive.eval(0.3, 7.1).unwrap(),
            Kernel::Additive.eval(7.1, 0.3).unwrap()
        );
    }

    #[test]
    fn eval_rejects_bad_masses() {
        let kern = Kernel::Additive;
        assert!(kern.eval(0.0, 1.0).is_err());
        assert!(kern.eval(-1.0, 1.0).is_err());
        assert!(kern.eval(1.0, f64::NAN).is_err());
        assert!(kern.eval(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn custom_kernel_negative_value_is_domain_error() {
        let kern = k("custom(x - y - 10)");
        assert!(kern.eval(1.0, 2.0).is_err());
    }

    #[test]
    fn diagonal_only_on_dyadic_diagonal() {
        let kern = k("diagonal(c=1,p=1,beta=2)");
        assert!(kern.eval(4.0, 4.0).unwrap() > 0.0);
        assert_eq!(kern.eval(3.0, 3.0).unwrap(), 0.0);
        assert_eq!(kern.eval(4.0, 8.0).unwrap(), 0.0);
    }

    #[test]
    fn infimum_examples() {
        let inf = Kernel::Multiplicative.infimum_on_box(1.0, 2.0, 64).unwrap();
        assert_eq!(inf.lower, 1.0);
        for alpha in [0.5, 2.0, 3.0] {
            for a in [0.1, 1.0, 17.0, 1e5] {
                let got = Kernel::K0Log { alpha }.infimum_on_box(a, 1.5, 64).unwrap().lower;
                let want = a / 6.0 * log_e_plus(a).powf(alpha);
                assert!((got - want).abs() <= 1e-12 * want, "{alpha} {a}");
                let got = Kernel::K1Log { alpha }.infimum_on_box(a, 3.7, 64).unwrap().lower;
                let want = 2.0 * a * log_e_plus(a).powf(alpha);
                assert!((got - want).abs() <= 1e-12 * want);
            }
        }
        assert!(Kernel::Additive.infimum_on_box(1.0, 1.0, 8).is_err());
        assert!(Kernel::Additive.infimum_on_box(0.0, 2.0, 8).is_err());
    }

    #[test]
    fn custom_infimum_matches_catalog() {
        let custom = k("custom(min(x,y)*pos(min(x,y)/max(x,y)-0.5)*log(e+min(x,y))^3)");
        let catalog = Kernel::K0Log { alpha: 3.0 };
        for a in [0.5, 2.0, 40.0] {
            let c = custom.infimum_on_box(a, 1.5, 64).unwrap();
            let exact = catalog.infimum_on_box(a, 1.5, 64).unwrap().lower;
            assert!(c.lower <= exact);
            assert!((c.lower - exact).abs() <= 1e-6 * exact, "{} vs {}", c.lower, exact);
        }
        let interior = k("custom((x-1.3)^2 + (y-1.6)^2 + 0.25)");
        let inf = interior.infimum_on_box(1.0, 2.0, 64).unwrap();
        assert!(inf.lower <= 0.25 && inf.lower > 0.25 - 1e-6, "{inf:?}");
    }

    #[test]
    fn closed_form_h_matches_box_infimum() {
        let kernels = [
            "constant(c=2)",
            "additive",
            "multiplicative",
            "prodpow(gamma=1.5)",
            "minpow(gamma=1.2,theta=1)",
            "mingap(gamma=1.3,theta=2)",
            "k0log(alpha=3)",
            "k1log(alpha=1.5)",
        ];
        for s in kernels {
            let kern = k(s);
            for r in [1.1, 1.5, 1.9, 3.0] {
                let profile = kern.closed_form_h(r).unwrap();
                for a in [1e-3, 0.7, 5.0, 1e4] {
                    let via_box = a * kern.infimum_on_box(a, r, 64).unwrap().lower;
                    let closed = profile.eval(a);
                    assert!(
                        (via_box - closed).abs() <= 1e-12 * closed.abs().max(1e-300),
                        "{s} r={r} a={a}: {via_box} vs {closed}"
                    );
                }
            }
        }
    }

    #[test]
    fn homogeneity_examples() {
        assert!(Kernel::Multiplicative.check_homogeneity(2000).unwrap().pass);
        assert!(k("minpow(gamma=1.5,theta=1)").check_homogeneity(2000).unwrap().pass);
        let report = k("k1log(alpha=1)").check_homogeneity_claimed(1.0, 2000);
        assert!(!report.pass);
        assert!(report.max_relative_deviation > 1e-3);
        assert!(matches!(
            k("k1log(alpha=1)").check_homogeneity(10),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn render_examples() {
        assert_eq!(k("k0log(alpha=2)").to_string(), "k0log(alpha=2)");
        assert_eq!(k("multiplicative").to_string(), "multiplicative");
        assert_eq!(k("minpow(theta=1, gamma=1.2)").to_string(), "minpow(gamma=1.2,theta=1)");
        assert_eq!(k("custom( min(x, y) )").to_string(), "custom(min(x, y))");
    }

    #[test]
    fn parse_errors() {
        for bad in [
            "k0log",
            "k0log(alpha=-1)",
            "k0log(alpha=2",
            "k0log(beta=2)",
            "k0log(alpha=2,alpha=3)",
            "nope",
            "constant(c=inf)",
            "custom(x+)",
        ] {
            assert!(bad.parse::<Kernel>().is_err(), "{bad}");
        }
    }
}
