use gelscope::bounds::*;
use gelscope::kernels::log_e_plus;
use gelscope::{Kernel, MassSpectrum};
use proptest::prelude::*;

proptest! {
    #[test]
    fn cascade_bounds_scale_exactly(alpha in 0.05f64..=2.0) {
        let cb = cascade_bound_sequence(alpha, 60).unwrap();
        let c = log_e_plus(1.0).powf(alpha / 2.0);
        for (n, b) in cb.bn.iter().enumerate() {
            let x = (n as f64).exp2();
            let v = b * x * log_e_plus(x).powf(alpha / 2.0);
            prop_assert!((v - c).abs() <= 1e-12 * c, "n = {}: {} vs {}", n, v, c);
        }
    }

    #[test]
    fn adding_mass_far_above_x0_never_raises_the_bound(
        x0 in 0.1f64..2.0,
        r in 1.2f64..4.0,
        base_mass in 1.0f64..20.0,
        extra_at in 2.0f64..50.0,
        extra in 0.01f64..5.0,
        scale in 1.0f64..10.0,
    ) {
        let spec = BoundSpec::new(x0, r).unwrap();
        let k = Kernel::Multiplicative;
        let f0 = MassSpectrum::delta(base_mass * x0 + x0).unwrap();
        let b0 = gel_time_bound(&k, &f0, &spec).unwrap().tgel_upper;
        let mut more = f0.clone();
        more.add(extra_at * x0, extra).unwrap();
        let b1 = gel_time_bound(&k, &more, &spec).unwrap().tgel_upper;
        prop_assert!(b1 <= b0 * (1.0 + 1e-12));
        let scaled = MassSpectrum::from_pairs(f0.iter().map(|(x, c)| (x, c * scale))).unwrap();
        let b2 = gel_time_bound(&k, &scaled, &spec).unwrap().tgel_upper;
        prop_assert!(b2 <= b0 * (1.0 + 1e-12));
    }
}

#[test]
fn multiplicative_bound_is_256() {
    let spec = BoundSpec::new(0.5, 2.0).unwrap();
    let kappa = compute_kappa(&Kernel::Multiplicative, &spec).unwrap();
    assert!((kappa.value - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    let f0 = MassSpectrum::delta(1.0).unwrap();
    let rep = gel_time_bound(&Kernel::Multiplicative, &f0, &spec).unwrap();
    // 2 κ² (r/(r−1))² M1 / (∫(x − x0) f0)² with κ = 2√2
    let oracle = 2.0 * 8.0 * 4.0 * 1.0 / 0.25;
    assert!((rep.tgel_upper - oracle).abs() <= 1e-8 * oracle);
    let blocked = BoundSpec::new(1.0, 2.0).unwrap();
    assert!(gel_time_bound(&Kernel::Multiplicative, &f0, &blocked).is_err());
}

#[test]
fn power_law_kappa_matches_antiderivative() {
    for gamma in [1.2, 1.5, 2.0, 3.0] {
        for x0 in [0.1, 1.0, 5.0] {
            let k = Kernel::ProductPower { gamma };
            let spec = BoundSpec::new(x0, 2.0).unwrap();
            let rho = k.infimum_on_box(1.0, 2.0, 64).unwrap().lower;
            let oracle = 2.0 / ((gamma - 1.0) * x0.powf((gamma - 1.0) / 2.0) * rho.sqrt());
            let kappa = compute_kappa(&k, &spec).unwrap().value;
            assert!((kappa - oracle).abs() <= 1e-8 * oracle, "{gamma} {x0}: {kappa} vs {oracle}");
        }
    }
}

#[test]
fn k0_log_kappa_diverges_at_two_and_converges_above() {
    let spec = BoundSpec::new(0.5, 1.5).unwrap();
    assert!(!compute_kappa(&Kernel::K0Log { alpha: 2.0 }, &spec).unwrap().is_finite());
    let f0 = MassSpectrum::delta(1.0).unwrap();
    let rep = gel_time_bound(&Kernel::K0Log { alpha: 2.0 }, &f0, &spec).unwrap();
    assert!(rep.tgel_upper.is_infinite());
    let rep = gel_time_bound(&Kernel::K0Log { alpha: 3.0 }, &f0, &spec).unwrap();
    assert!(rep.tgel_upper.is_finite() && rep.tgel_upper > 0.0);
}

#[test]
fn additive_log_constant_is_sound_on_dense_samples() {
    for alpha in [1.5, 2.0, 3.0] {
        let psi = PsiIntegral::new(alpha).unwrap();
        let kappa = kappa_psi(&psi);
        for i in 0..10_000 {
            let x = 10f64.powf(-12.0 + 24.0 * i as f64 / 9_999.0);
            let lhs = psi.psi(x);
            assert!(lhs <= kappa * psi_weight(x) * (1.0 + 1e-9), "alpha {alpha}, x {x}");
        }
    }
}

#[test]
fn additive_log_bound_uses_the_log_weight() {
    let one = additive_gel_bound(2.0, &MassSpectrum::delta(1.0).unwrap()).unwrap();
    let kappa = kappa_psi(&PsiIntegral::new(2.0).unwrap());
    assert!((one.constant_c.unwrap() - 2.0 * kappa).abs() < 1e-12);
    assert!((one.tgel_upper - 2.0 * kappa).abs() < 1e-12);
    let two = MassSpectrum::from_pairs([(1.0, 1.0), (0.5, 1.0)]).unwrap();
    let rep = additive_gel_bound(2.0, &two).unwrap();
    let weight = 1.0 + 0.5 * (1.0 + 2f64.ln());
    assert!((rep.constant_c.unwrap() - 2.0 * kappa * weight).abs() < 1e-12);
    assert!((rep.tgel_upper - 2.0 * kappa * weight / 1.5f64.powi(2)).abs() < 1e-12);
    assert!(additive_gel_bound(1.0, &two).is_err());
}
