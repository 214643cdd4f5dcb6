//! Explicit gel-time and moment bounds.
//!
//! * `H(a) = a · inf{K(x, y) : x, y ∈ [a, r a]}` and
//!   `κ = ∫_{x₀}^∞ H(a)^{-1/2} da`;
//! * the gel-time bound `2 κ² (r/(r−1))² M₁(f₀) / [∫_{x₀}^∞ (x − x₀) f₀(dx)]²`;
//! * the dyadic cascade bounds `b_n` and the envelope `A e^{Bt}`;
//! * the additive-log bound `C / M₁(f₀)²` with
//!   `C = 2 κ_ψ ∫ x (1 + |ln x| 1{x<1}) f₀(dx)`.
//!
//! Finiteness of `κ` is decided from the exponents of the closed-form `H`
//! profile, never from a truncated numerical integral.

use std::f64::consts::{E, LN_2};

use crate::error::{Error, Result};
use crate::kernels::{log_e_plus, log_e_plus_exp, HProfile, Kernel};
use crate::quadrature::{integrate, Quad};
use crate::spectrum::MassSpectrum;

/// Split point between the numerically integrated body and the mapped tail.
const TAIL_SPLIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSpec {
    pub x0: f64,
    pub r: f64,
    pub quad_tol: f64,
}

impl BoundSpec {
    pub fn new(x0: f64, r: f64) -> Result<Self> {
        Self::with_tolerance(x0, r, 1e-10)
    }

    pub fn with_tolerance(x0: f64, r: f64, quad_tol: f64) -> Result<Self> {
        if !(x0.is_finite() && x0 > 0.0) {
            return Err(Error::domain(format!("x0 must be positive, got {x0}")));
        }
        if !(r.is_finite() && r > 1.0) {
            return Err(Error::domain(format!("r must exceed 1, got {r}")));
        }
        if !(quad_tol > 0.0 && quad_tol < 1.0) {
            return Err(Error::domain(format!("quadrature tolerance out of range: {quad_tol}")));
        }
        Ok(BoundSpec { x0, r, quad_tol })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundRoute {
    /// Box-infimum functional `H` and `κ` (any kernel with finite `κ`).
    BoxFunctional,
    /// Test-function argument for kernels above `(x + y) ln^α(e + x ∧ y)`, `α > 1`.
    AdditiveLog,
}

impl BoundRoute {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundRoute::BoxFunctional => "box-functional",
            BoundRoute::AdditiveLog => "additive-log",
        }
    }
}

/// Summary integrals of the initial datum used by the bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialDataSummary {
    pub m1: f64,
    /// `∫_{x₀}^∞ (x − x₀) f₀(dx)`, zero when not applicable.
    pub excess_above_x0: f64,
    /// `∫ x (1 + |ln x| 1{x<1}) f₀(dx)`.
    pub log_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GelBoundReport {
    /// `κ` for the box-functional route, `κ_ψ` for the additive-log route.
    pub kappa: f64,
    pub kappa_error: f64,
    pub h_profile: Vec<(f64, f64)>,
    pub tgel_upper: f64,
    pub route: BoundRoute,
    pub x0: Option<f64>,
    pub r: Option<f64>,
    /// The constant `C` of the additive-log route.
    pub constant_c: Option<f64>,
    pub initial: InitialDataSummary,
}

/// `∫_z^∞ t^{-q} / (1 − e^{1−t}) dt` for `q > 1`, `z > 1`.
///
/// This is `∫ dw / (w ln^q(e + w))` over `w ≥ e^z − e` after `t = ln(e + w)`.
/// The map `t = z v^{-m}`, `m = 1/(q − 1)` turns it into a bounded smooth
/// integrand on `(0, 1]`.
fn log_power_tail(z: f64, q: f64, rel_tol: f64) -> Result<Quad> {
    debug_assert!(q > 1.0 && z > 1.0);
    let m = 1.0 / (q - 1.0);
    let scale = m * z.powf(1.0 - q);
    let q = integrate(
        |v: f64| {
            let t = z * v.powf(-m);
            // 1 − e^{1−t}, in (0, 1] since t > 1
            1.0 / -(1.0 - t).exp_m1()
        },
        0.0,
        1.0,
        rel_tol,
        0.0,
    )?;
    Ok(Quad {
        value: scale * q.value,
        error: scale * q.error,
        evaluations: q.evaluations,
    })
}

/// `H(a)` for the box ratio `spec.r`.
pub fn compute_h(kernel: &Kernel, a: f64, spec: &BoundSpec) -> Result<f64> {
    if let Some(profile) = kernel.closed_form_h(spec.r) {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::domain(format!("a must be positive, got {a}")));
        }
        return Ok(profile.eval(a));
    }
    Ok(a * kernel.infimum_on_box(a, spec.r, 64)?.lower)
}

/// `κ = ∫_{x₀}^∞ H(a)^{-1/2} da` with its absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kappa {
    pub value: f64,
    pub error: f64,
}

impl Kappa {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

fn profile_tail(profile: &HProfile, split: f64, rel_tol: f64) -> Result<Quad> {
    let (c, p, beta) = (profile.coef, profile.power, profile.log_power);
    let inv_sqrt_c = c.powf(-0.5);
    if beta == 0.0 {
        let v = inv_sqrt_c * split.powf(1.0 - 0.5 * p) / (0.5 * p - 1.0);
        return Ok(Quad {
            value: v,
            error: 0.0,
            evaluations: 0,
        });
    }
    if p > 2.0 {
        // a = split · v^{-m} flattens the power part exactly
        let m = 1.0 / (0.5 * p - 1.0);
        let scale = inv_sqrt_c * split.powf(1.0 - 0.5 * p) * m;
        let ln_split = split.ln();
        let q = integrate(
            |v: f64| log_e_plus_exp(ln_split - m * v.ln()).powf(-0.5 * beta),
            0.0,
            1.0,
            rel_tol,
            0.0,
        )?;
        return Ok(Quad {
            value: scale * q.value,
            error: scale * q.error,
            evaluations: q.evaluations,
        });
    }
    let q = log_power_tail(log_e_plus(split), 0.5 * beta, rel_tol)?;
    Ok(Quad {
        value: inv_sqrt_c * q.value,
        error: inv_sqrt_c * q.error,
        evaluations: q.evaluations,
    })
}

/// Evaluates `κ`. Returns `+∞` when the catalog profile shows divergence or
/// `H` vanishes; custom kernels are refused.
pub fn compute_kappa(kernel: &Kernel, spec: &BoundSpec) -> Result<Kappa> {
    let profile = kernel
        .closed_form_h(spec.r)
        .ok_or_else(|| Error::UndecidableConvergence(kernel.to_string()))?;
    if !profile.kappa_converges() {
        return Ok(Kappa {
            value: f64::INFINITY,
            error: 0.0,
        });
    }
    let split = spec.x0.max(TAIL_SPLIT);
    let rel = 0.25 * spec.quad_tol;
    let body = if split > spec.x0 {
        integrate(
            |s: f64| {
                let a = s.exp();
                a / profile.eval(a).sqrt()
            },
            spec.x0.ln(),
            split.ln(),
            rel,
            0.0,
        )?
    } else {
        Quad {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        }
    };
    let tail = profile_tail(&profile, split, rel)?;
    let value = body.value + tail.value;
    let error = body.error + tail.error;
    if error > spec.quad_tol * value {
        return Err(Error::ToleranceNotMet {
            lo: value - error,
            hi: value + error,
        });
    }
    Ok(Kappa { value, error })
}

fn summarize(f0: &MassSpectrum, x0: Option<f64>) -> InitialDataSummary {
    let excess = x0.map_or(0.0, |x0| f0.integrate(|x| (x - x0).max(0.0)));
    InitialDataSummary {
        m1: f0.moment(1.0),
        excess_above_x0: excess,
        log_weight: f0.integrate(|x| x * (1.0 + if x < 1.0 { -x.ln() } else { 0.0 })),
    }
}

/// Gel-time upper bound from the box functional.
pub fn gel_time_bound(kernel: &Kernel, f0: &MassSpectrum, spec: &BoundSpec) -> Result<GelBoundReport> {
    let initial = summarize(f0, Some(spec.x0));
    if !initial.m1.is_finite() {
        return Err(Error::HypothesisViolated("M1(f0) is not finite".into()));
    }
    if initial.excess_above_x0 <= 0.0 {
        return Err(Error::HypothesisViolated(format!(
            "f0 puts no mass above x0 = {}",
            spec.x0
        )));
    }
    let kappa = compute_kappa(kernel, spec)?;
    let h_profile = (0..9)
        .map(|k| {
            let a = spec.x0 * 10f64.powf(0.5 * k as f64);
            compute_h(kernel, a, spec).map(|h| (a, h))
        })
        .collect::<Result<Vec<_>>>()?;
    let ratio = spec.r / (spec.r - 1.0);
    let tgel_upper = if kappa.is_finite() {
        2.0 * kappa.value * kappa.value * ratio * ratio * initial.m1
            / (initial.excess_above_x0 * initial.excess_above_x0)
    } else {
        f64::INFINITY
    };
    Ok(GelBoundReport {
        kappa: kappa.value,
        kappa_error: kappa.error,
        h_profile,
        tgel_upper,
        route: BoundRoute::BoxFunctional,
        x0: Some(spec.x0),
        r: Some(spec.r),
        constant_c: None,
        initial,
    })
}

/// Coarse grid search over `(x₀, r)` for the smallest box-functional bound.
///
/// The bound holds for every admissible pair, so the minimum is itself a
/// valid bound; the grid is a convenience, not an optimizer.
pub fn optimize_gel_time_bound(
    kernel: &Kernel,
    f0: &MassSpectrum,
    x0s: &[f64],
    rs: &[f64],
) -> Result<GelBoundReport> {
    let mut best: Option<GelBoundReport> = None;
    let mut last_err = None;
    for &x0 in x0s {
        for &r in rs {
            let spec = BoundSpec::new(x0, r)?;
            match gel_time_bound(kernel, f0, &spec) {
                Ok(rep) => {
                    if best.as_ref().is_none_or(|b| rep.tgel_upper < b.tgel_upper) {
                        best = Some(rep);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Input("empty (x0, r) grid".into())))
}

/// Cascade bounds `b_n` and envelope constants `A`, `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeBounds {
    pub alpha: f64,
    pub bn: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl CascadeBounds {
    /// `A e^{Bt}`.
    pub fn envelope(&self, t: f64) -> f64 {
        self.a * (self.b * t).exp()
    }
}

/// `b_n = ln^{α/2}(e+1) / (2^n ln^{α/2}(e + 2^n))`, `A = ln(e+1)`,
/// `B = ln 2 · ln^{α−1}(e+1)`, valid for `0 < α ≤ 2`.
pub fn cascade_bound_sequence(alpha: f64, n_max: usize) -> Result<CascadeBounds> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain(format!("cascade bounds need alpha in (0, 2], got {alpha}")));
    }
    let l1 = (E + 1.0).ln();
    let top = l1.powf(0.5 * alpha);
    let bn = (0..=n_max)
        .map(|n| {
            let mass = 2f64.powi(n as i32);
            top / (mass * log_e_plus(mass).powf(0.5 * alpha))
        })
        .collect();
    Ok(CascadeBounds {
        alpha,
        bn,
        a: l1,
        b: LN_2 * l1.powf(alpha - 1.0),
    })
}

/// Tabulated `I(z) = ∫_z^∞ dw / (w ln^α(e + w))`, `α > 1`.
///
/// `ψ_∞(x) = x ∫_x^∞ du / ((u/2) ln^α(e + u/2)) = 2 x I(x/2)`.
#[derive(Debug, Clone)]
pub struct PsiIntegral {
    alpha: f64,
    ln_z: Vec<f64>,
    values: Vec<f64>,
}

impl PsiIntegral {
    const LN_LO: f64 = -20.0 * std::f64::consts::LN_10;
    const LN_HI: f64 = 9.0 * std::f64::consts::LN_10;
    const PER_DECADE: usize = 40;

    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::domain(format!(
                "the psi integral diverges unless alpha > 1, got {alpha}"
            )));
        }
        let decades = (Self::LN_HI - Self::LN_LO) / std::f64::consts::LN_10;
        let n = (decades * Self::PER_DECADE as f64).round() as usize;
        let ln_z: Vec<f64> = (0..=n)
            .map(|i| Self::LN_LO + (Self::LN_HI - Self::LN_LO) * i as f64 / n as f64)
            .collect();
        let mut values = vec![0.0; n + 1];
        values[n] = log_power_tail(log_e_plus_exp(ln_z[n]), alpha, 1e-13)?.value;
        for i in (0..n).rev() {
            values[i] = values[i + 1] + Self::segment(alpha, ln_z[i], ln_z[i + 1])?;
        }
        Ok(PsiIntegral { alpha, ln_z, values })
    }

    /// `∫_{e^s0}^{e^s1} dw / (w ln^α(e + w))` in the variable `s = ln w`.
    fn segment(alpha: f64, s0: f64, s1: f64) -> Result<f64> {
        Ok(integrate(|s| log_e_plus_exp(s).powf(-alpha), s0, s1, 1e-13, 0.0)?.value)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `I(z)`.
    pub fn tail(&self, z: f64) -> f64 {
        let s = z.ln();
        let n = self.ln_z.len() - 1;
        if s >= self.ln_z[n] {
            return log_power_tail(log_e_plus(z), self.alpha, 1e-13)
                .map(|q| q.value)
                .unwrap_or(f64::NAN);
        }
        if s <= self.ln_z[0] {
            // ln(e + w) = 1 + O(w) below the table
            let below = Self::segment(self.alpha, s, self.ln_z[0]).unwrap_or(f64::NAN);
            return self.values[0] + below;
        }
        let pos = (s - self.ln_z[0]) / (self.ln_z[1] - self.ln_z[0]);
        let j = (pos.ceil() as usize).min(n);
        let gap = Self::segment(self.alpha, s, self.ln_z[j]).unwrap_or(f64::NAN);
        self.values[j] + gap
    }

    /// `ψ_∞(x) = 2 x I(x/2)`.
    pub fn psi(&self, x: f64) -> f64 {
        2.0 * x * self.tail(0.5 * x)
    }
}

/// `x (1 + |ln x| 1{x<1})`.
pub fn psi_weight(x: f64) -> f64 {
    x * (1.0 + if x < 1.0 { -x.ln() } else { 0.0 })
}

/// `κ_ψ = sup_x ψ_∞(x) / (x (1 + |ln x| 1{x<1}))`.
///
/// Scanned over `x ∈ [1e-8, 1e8]` at 400 log-spaced points per decade, then
/// refined by golden section around the best grid point. The ratio tends to
/// 2 as `x → 0` (where `I(z) = ln(1/z) + O(1)`) and to 0 as `x → ∞`, so the
/// limit 2 is included: for larger `α` the supremum is that limit and is not
/// attained on any finite grid.
pub fn kappa_psi(psi: &PsiIntegral) -> f64 {
    let ratio = |ln_x: f64| {
        let x = ln_x.exp();
        psi.psi(x) / psi_weight(x)
    };
    let lo = -8.0 * std::f64::consts::LN_10;
    let hi = 8.0 * std::f64::consts::LN_10;
    let n = 16 * 400;
    let step = (hi - lo) / n as f64;
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for i in 0..=n {
        let v = ratio(lo + step * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let center = lo + step * best_i as f64;
    let (mut a, mut b) = ((center - step).max(lo), (center + step).min(hi));
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    for _ in 0..60 {
        let c = b - INV_PHI * (b - a);
        let d = a + INV_PHI * (b - a);
        if ratio(c) > ratio(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(ratio(0.5 * (a + b))).max(2.0)
}

/// Gel-time bound `C / M₁(f₀)²` for kernels `K ≥ (x + y) ln^α(e + x ∧ y)`, `α > 1`.
pub fn additive_gel_bound(alpha: f64, f0: &MassSpectrum) -> Result<GelBoundReport> {
    let psi = PsiIntegral::new(alpha)?;
    let initial = summarize(f0, None);
    if !(initial.m1.is_finite() && initial.m1 > 0.0) {
        return Err(Error::HypothesisViolated(format!(
            "M1(f0) must lie in (0, inf), got {}",
            initial.m1
        )));
    }
    if !initial.log_weight.is_finite() {
        return Err(Error::HypothesisViolated("x|ln x| moment of f0 is infinite".into()));
    }
    let k_psi = kappa_psi(&psi);
    let c = 2.0 * k_psi * initial.log_weight;
    Ok(GelBoundReport {
        kappa: k_psi,
        kappa_error: 0.0,
        h_profile: Vec::new(),
        tgel_upper: c / (initial.m1 * initial.m1),
        route: BoundRoute::AdditiveLog,
        x0: None,
        r: None,
        constant_c: Some(c),
        initial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta1() -> MassSpectrum {
        MassSpectrum::delta(1.0).unwrap()
    }

    #[test]
    fn h_examples() {
        let spec = BoundSpec::new(1.0, 1.5).unwrap();
        for alpha in [0.5, 2.0, 3.0] {
            let k = Kernel::K0Log { alpha };
            for a in [0.01, 1.0, 300.0] {
                let want = a * a * log_e_plus(a).powf(alpha) / 6.0;
                let got = compute_h(&k, a, &spec).unwrap();
                assert!((got - want).abs() <= 1e-13 * want);
            }
        }
        let spec2 = BoundSpec::new(1.0, 2.0).unwrap();
        for a in [0.5, 2.0, 1e3] {
            let got = compute_h(&Kernel::Multiplicative, a, &spec2).unwrap();
            assert!((got - a * a * a).abs() <= 1e-13 * got);
            let got = compute_h(&Kernel::K1Log { alpha: 2.0 }, a, &spec).unwrap();
            let want = 2.0 * a * a * log_e_plus(a).powi(2);
            assert!((got - want).abs() <= 1e-13 * want);
        }
    }

    #[test]
    fn kappa_multiplicative_closed_form() {
        let spec = BoundSpec::new(0.5, 2.0).unwrap();
        let k = compute_kappa(&Kernel::Multiplicative, &spec).unwrap();
        let exact = 2.0 * 2f64.sqrt();
        assert!((k.value - exact).abs() <= 1e-9 * exact, "{k:?}");
        assert!((k.value - 2.828_427_1).abs() < 1e-7);
    }

    #[test]
    fn kappa_divergent_cases() {
        let spec = BoundSpec::new(1.0, 1.5).unwrap();
        for k in [
            Kernel::K0Log { alpha: 2.0 },
            Kernel::K0Log { alpha: 1.0 },
            Kernel::K1Log { alpha: 2.0 },
            Kernel::Additive,
            Kernel::Constant { c: 3.0 },
            Kernel::ProductPower { gamma: 1.0 },
        ] {
            assert!(compute_kappa(&k, &spec).unwrap().value.is_infinite(), "{k}");
        }
        // the gap factor vanishes on the box once r >= 2
        let wide = BoundSpec::new(1.0, 2.5).unwrap();
        assert!(compute_kappa(&Kernel::K0Log { alpha: 3.0 }, &wide).unwrap().value.is_infinite());
        let custom: Kernel = "custom(x*y)".parse().unwrap();
        assert!(matches!(
            compute_kappa(&custom, &spec),
            Err(Error::UndecidableConvergence(_))
        ));
    }

    /// Independent route: `u = ln(e + a)` over the whole range, the power part
    /// in closed form and the exponentially small remainder by Simpson's rule.
    fn k0log_kappa_oracle(alpha: f64, x0: f64, r: f64) -> f64 {
        let c = 1.0 / r - 0.5;
        let q = 0.5 * alpha;
        let u0 = (E + x0).ln();
        let main = u0.powf(1.0 - q) / (q - 1.0);
        let n = 400_000;
        let (a, b) = (u0, u0 + 80.0);
        let h = (b - a) / n as f64;
        let g = |u: f64| u.powf(-q) * ((1.0 - u).exp() / (1.0 - (1.0 - u).exp()));
        let mut s = g(a) + g(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * g(a + h * i as f64);
        }
        (main + s * h / 3.0) / c.sqrt()
    }

    #[test]
    fn kappa_k0log_matches_substitution_oracle() {
        for (alpha, x0) in [(3.0, 1.0), (2.5, 0.5), (4.0, 10.0), (3.0, 2e6)] {
            let spec = BoundSpec::new(x0, 1.5).unwrap();
            let k = compute_kappa(&Kernel::K0Log { alpha }, &spec).unwrap();
            let oracle = k0log_kappa_oracle(alpha, x0, 1.5);
            assert!(
                (k.value - oracle).abs() <= 1e-9 * oracle,
                "alpha={alpha} x0={x0}: {} vs {oracle}",
                k.value
            );
            assert!(k.error <= spec.quad_tol * k.value);
        }
    }

    #[test]
    fn kappa_power_laws_match_closed_form() {
        for gamma in [1.1, 1.5, 2.0, 3.0] {
            for x0 in [0.01, 0.5, 7.0, 3e6] {
                let spec = BoundSpec::new(x0, 1.3).unwrap();
                let got = compute_kappa(&Kernel::ProductPower { gamma }, &spec).unwrap().value;
                let exact = 2.0 / ((gamma - 1.0) * x0.powf(0.5 * (gamma - 1.0)));
                assert!((got - exact).abs() <= 1e-8 * exact, "{gamma} {x0}");
            }
        }
        // log factor on a super-quadratic profile exercises the power-map tail
        let spec = BoundSpec::new(2.0, 1.5).unwrap();
        let k = compute_kappa(&"minpow(gamma=1.5,theta=0)".parse().unwrap(), &spec).unwrap();
        assert!((k.value - 4.0 / 2f64.powf(0.25)).abs() < 1e-8 * k.value);
    }

    #[test]
    fn gel_bound_examples() {
        let spec = BoundSpec::new(0.5, 2.0).unwrap();
        let rep = gel_time_bound(&Kernel::Multiplicative, &delta1(), &spec).unwrap();
        assert!((rep.tgel_upper - 256.0).abs() <= 1e-8 * 256.0, "{}", rep.tgel_upper);
        assert_eq!(rep.route, BoundRoute::BoxFunctional);
        for x0 in [1.0, 3.0] {
            let spec = BoundSpec::new(x0, 2.0).unwrap();
            assert!(matches!(
                gel_time_bound(&Kernel::Multiplicative, &delta1(), &spec),
                Err(Error::HypothesisViolated(_))
            ));
        }
        let spec = BoundSpec::new(0.5, 1.5).unwrap();
        let rep = gel_time_bound(&Kernel::K0Log { alpha: 3.0 }, &delta1(), &spec).unwrap();
        assert!(rep.tgel_upper.is_finite() && rep.tgel_upper > 0.0);
        let rep = gel_time_bound(&Kernel::K0Log { alpha: 2.0 }, &delta1(), &spec).unwrap();
        assert!(rep.tgel_upper.is_infinite() && rep.kappa.is_infinite());
    }

    #[test]
    fn adding_mass_between_x0_and_2x0_can_raise_the_bound() {
        // M1/D² is not monotone under additions just above x0
        let spec = BoundSpec::new(1.0, 2.0).unwrap();
        let base = MassSpectrum::delta(10.0).unwrap();
        let mut more = base.clone();
        more.add(1.5, 0.5).unwrap();
        let b0 = gel_time_bound(&Kernel::Multiplicative, &base, &spec).unwrap().tgel_upper;
        let b1 = gel_time_bound(&Kernel::Multiplicative, &more, &spec).unwrap().tgel_upper;
        assert!(b1 > b0);
    }

    #[test]
    fn cascade_bound_examples() {
        let cb = cascade_bound_sequence(2.0, 40).unwrap();
        assert_eq!(cb.bn[0], 1.0);
        let want = (E + 1.0).ln() / (2.0 * (E + 2.0).ln());
        assert!((cb.bn[1] - want).abs() < 1e-15);
        assert!((cb.bn[1] - 0.42324).abs() < 1e-5);
        assert!((cb.a - 1.31326).abs() < 1e-5);
        assert!((cb.b - 2f64.ln() * (E + 1.0).ln()).abs() < 1e-15);
        assert!((cb.b - 0.910284).abs() < 1e-6);
        for w in cb.bn.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(cascade_bound_sequence(0.0, 4).is_err());
        assert!(cascade_bound_sequence(2.5, 4).is_err());
        assert_eq!(cascade_bound_sequence(0.7, 3).unwrap().bn[0], 1.0);
    }

    /// `I(z)` by an independent route: the pure power `∫_T^∞ t^{-α}` in closed
    /// form plus Simpson on the remainder in `σ = ln(t − 1)`.
    fn psi_tail_oracle(alpha: f64, z: f64) -> f64 {
        let t0 = (E + z).ln();
        let main = t0.powf(1.0 - alpha) / (alpha - 1.0);
        let (a, b) = ((z / E).ln_1p().ln(), 70f64.ln());
        let n = 40_000;
        let h = (b - a) / n as f64;
        let g = |sigma: f64| {
            let d = sigma.exp();
            let t = 1.0 + d;
            t.powf(-alpha) * (-d).exp() / -(-d).exp_m1() * d
        };
        let mut s = g(a) + g(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * g(a + h * i as f64);
        }
        main + s * h / 3.0
    }

    #[test]
    fn psi_integral_matches_oracle() {
        for alpha in [1.5, 2.0, 3.0] {
            let psi = PsiIntegral::new(alpha).unwrap();
            for z in [1e-12, 3e-5, 0.5, 1.0, 17.0, 4e8, 1e12] {
                let got = psi.tail(z);
                let want = psi_tail_oracle(alpha, z);
                assert!((got - want).abs() <= 1e-10 * want, "alpha={alpha} z={z}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn kappa_psi_is_kink_value_or_small_mass_limit() {
        // the ratio peaks at x = 1 unless its x → 0 limit 2 is larger
        for alpha in [1.5, 2.0, 3.0] {
            let psi = PsiIntegral::new(alpha).unwrap();
            let k = kappa_psi(&psi);
            let want = (2.0 * psi_tail_oracle(alpha, 0.5)).max(2.0);
            assert!((k - want).abs() <= 1e-9 * want, "alpha={alpha}: {k} vs {want}");
        }
        let k2 = kappa_psi(&PsiIntegral::new(2.0).unwrap());
        assert!((k2 - 3.292_512_6).abs() < 1e-6);
    }

    #[test]
    fn additive_bound_examples() {
        assert!(matches!(additive_gel_bound(1.0, &delta1()), Err(Error::Domain(_))));
        assert!(additive_gel_bound(0.5, &delta1()).is_err());
        let rep = additive_gel_bound(2.0, &delta1()).unwrap();
        assert_eq!(rep.route, BoundRoute::AdditiveLog);
        assert!((rep.constant_c.unwrap() - 2.0 * rep.kappa).abs() < 1e-15);
        assert!((rep.tgel_upper - rep.constant_c.unwrap()).abs() < 1e-15);

        let two: MassSpectrum = "1:1,0.5:1".parse().unwrap();
        let rep = additive_gel_bound(2.0, &two).unwrap();
        let want = 1.0 + 0.5 * (1.0 + 2f64.ln());
        assert!((rep.initial.log_weight - want).abs() < 1e-15);
    }
}
