use gelscope::kernels::log_e_plus;
use gelscope::Kernel;
use proptest::prelude::*;

fn catalog() -> impl Strategy<Value = Kernel> {
    prop_oneof![
        (0.1f64..10.0).prop_map(|c| Kernel::Constant { c }),
        Just(Kernel::Additive),
        Just(Kernel::Multiplicative),
        (0.0f64..2.5).prop_map(|gamma| Kernel::ProductPower { gamma }),
        (0.0f64..2.5, 0.0f64..2.0).prop_map(|(gamma, theta)| Kernel::MinPower { gamma, theta }),
        (0.0f64..2.5, 0.0f64..2.0).prop_map(|(gamma, theta)| Kernel::MinPowerGap { gamma, theta }),
        (0.1f64..4.0).prop_map(|alpha| Kernel::K0Log { alpha }),
        (0.0f64..4.0).prop_map(|alpha| Kernel::K1Log { alpha }),
    ]
}

fn mass() -> impl Strategy<Value = f64> {
    (-6.0f64..6.0).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #[test]
    fn rates_are_symmetric_and_nonnegative(k in catalog(), x in mass(), y in mass()) {
        let a = k.eval(x, y).unwrap();
        let b = k.eval(y, x).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn spec_strings_round_trip(k in catalog()) {
        let back: Kernel = k.to_string().parse().unwrap();
        prop_assert_eq!(back, k);
    }

    #[test]
    fn box_infimum_is_a_lower_bound(k in catalog(), a in mass(), r in 1.01f64..4.0, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let inf = k.infimum_on_box(a, r, 64).unwrap().lower;
        let (x, y) = (a * (1.0 + u * (r - 1.0)), a * (1.0 + v * (r - 1.0)));
        let k_xy = k.rate(x, y);
        prop_assert!(inf <= k_xy * (1.0 + 1e-12) + 1e-300, "{} > {}", inf, k_xy);
    }

    #[test]
    fn homogeneous_scaling_of_the_box_functional(gamma in 1.05f64..2.5, a in (-2.0f64..6.0).prop_map(|e| 10f64.powf(e)), r in 1.1f64..3.0) {
        for k in [Kernel::ProductPower { gamma }, Kernel::MinPower { gamma, theta: 0.5 }] {
            let rho = k.infimum_on_box(1.0, r, 64).unwrap().lower;
            let h = a * k.infimum_on_box(a, r, 64).unwrap().lower;
            prop_assert!(h >= rho * a.powf(1.0 + gamma) * (1.0 - 1e-10));
        }
    }
}

#[test]
fn evaluation_examples() {
    let k0 = Kernel::K0Log { alpha: 2.0 };
    let expected = 0.5 * (std::f64::consts::E + 1.0).ln().powi(2);
    assert!((k0.eval(1.0, 1.0).unwrap() - expected).abs() < 1e-15);
    assert!((expected - 0.86233).abs() < 1e-5);
    assert_eq!(k0.eval(1.0, 3.0).unwrap(), 0.0);
    assert_eq!(Kernel::Multiplicative.eval(2.0, 3.0).unwrap(), 6.0);
    assert!(Kernel::Additive.eval(0.0, 1.0).is_err());
    assert!(Kernel::Additive.eval(f64::NAN, 1.0).is_err());
}

#[test]
fn box_infimum_examples() {
    assert_eq!(Kernel::Multiplicative.infimum_on_box(1.0, 2.0, 64).unwrap().lower, 1.0);
    for a in [0.3, 1.0, 7.0, 1e4] {
        for alpha in [1.0, 2.5] {
            let k0 = Kernel::K0Log { alpha }.infimum_on_box(a, 1.5, 64).unwrap().lower;
            let oracle = a / 6.0 * log_e_plus(a).powf(alpha);
            assert!((k0 - oracle).abs() <= 1e-13 * oracle, "{a} {alpha}");
            let k1 = Kernel::K1Log { alpha }.infimum_on_box(a, 3.0, 64).unwrap().lower;
            let oracle = 2.0 * a * log_e_plus(a).powf(alpha);
            assert!((k1 - oracle).abs() <= 1e-13 * oracle);
        }
    }
}

#[test]
fn homogeneity_is_directional() {
    assert!(Kernel::Multiplicative.check_homogeneity(1000).unwrap().pass);
    assert!(Kernel::MinPower { gamma: 1.5, theta: 1.0 }.check_homogeneity(1000).unwrap().pass);
    let log = Kernel::K1Log { alpha: 1.0 }.check_homogeneity_claimed(1.0, 1000);
    assert!(!log.pass && log.max_relative_deviation > 1e-3);
    assert!(Kernel::K0Log { alpha: 2.0 }.check_homogeneity(10).is_err());
}

#[test]
fn custom_kernel_agrees_with_catalog() {
    let custom: Kernel = "custom(x * y)".parse().unwrap();
    for (x, y) in [(0.5, 3.0), (2.0, 2.0), (1e3, 1e-2)] {
        assert_eq!(custom.rate(x, y), Kernel::Multiplicative.rate(x, y));
    }
    let inf = custom.infimum_on_box(1.0, 2.0, 64).unwrap();
    assert!(inf.lower <= 1.0 && (inf.lower - 1.0).abs() < 1e-8);
}
