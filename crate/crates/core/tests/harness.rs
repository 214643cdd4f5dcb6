use gelscope::cascade::{integrate_cascade_with, CascadeOptions};
use gelscope::grid::{integrate_grid_with, GridOptions};
use gelscope::harness::check::{golden_trajectories, psi_catalog};
use gelscope::harness::psi::weak_form_residual_truncated;
use gelscope::harness::scan::{criticality_scan, Family, ScanBudget};
use gelscope::harness::*;
use gelscope::mlsim::GelRule;
use gelscope::refinement::Verdict;
use gelscope::{Kernel, MassSpectrum};
use proptest::prelude::*;

fn delta1() -> MassSpectrum {
    MassSpectrum::delta(1.0).unwrap()
}

#[test]
fn identity_test_function_sees_no_coagulation_below_its_cap() {
    let mut o = GridOptions::new(1e-8);
    o.snapshot_dt = Some(1e-4f64.sqrt() / 10.0);
    let run = integrate_grid_with(&Kernel::Additive, &delta1(), 256, 0.5, &o).unwrap();
    let psi = TestFunction::truncated_identity(1e6).unwrap();
    let r = weak_form_residual_truncated(&run.trajectory, &Kernel::Additive, &psi, 0.5, Some(256.0)).unwrap();
    assert!(r.magnitude < 1e-10, "{r:?}");
    assert!(r.residual.abs() < 1e-10, "{r:?}");
}

#[test]
fn cascade_never_charges_masses_below_one() {
    let mut o = CascadeOptions::new(1e-7);
    o.snapshot_dt = Some(0.1);
    let run = integrate_cascade_with(2.0, 5.0, 20, &o).unwrap();
    let psi = TestFunction::open_interval(0.0, 1.0).unwrap();
    for t in [0.0, 1.0, 2.55, 5.0] {
        let r = weak_form_residual(&run.trajectory, &Kernel::K0Log { alpha: 2.0 }, &psi, t).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.residual, 0.0);
    }
    assert!(weak_form_residual(&run.trajectory, &Kernel::K0Log { alpha: 2.0 }, &psi, 6.0).is_err());
}

#[test]
fn golden_runs_satisfy_the_weak_form() {
    let tol = 1e-6;
    for g in golden_trajectories(tol).unwrap() {
        assert!(monotone_mass_check(&g.trajectory).pass, "{}", g.name);
        for psi in psi_catalog() {
            for t in [0.5 * g.t_end, g.t_end] {
                let r = weak_form_residual_truncated(&g.trajectory, &g.kernel, &psi, t, g.truncation).unwrap();
                assert!(r.residual.abs() < 10.0 * tol, "{} {psi} t = {t}: {r:?}", g.name);
                assert!(r.magnitude.is_finite());
            }
        }
    }
}

#[test]
fn mass_only_leaves_past_gelation() {
    let mut o = GridOptions::new(1e-6);
    o.snapshot_dt = Some(0.05);
    let run = integrate_grid_with(&Kernel::Multiplicative, &delta1(), 512, 2.0, &o).unwrap();
    let last = run.trajectory.moments.last().unwrap();
    assert!(last.m1 < 0.9);
    let m = monotone_mass_check(&run.trajectory);
    assert!(m.pass, "{m:?}");
}

#[test]
fn scan_examples_with_a_light_budget() {
    let budget = ScanBudget {
        cascade_levels: vec![31, 62, 125, 250],
        grid_sizes: vec![256, 512, 1024, 2048],
        ..ScanBudget::default()
    };
    let k0 = criticality_scan(Family::K0Log, &[1.5, 3.0], &budget).unwrap();
    assert_eq!(k0[0].verdict, Verdict::Conserve);
    assert_eq!(k0[1].verdict, Verdict::Gel);
    assert!(k0[1].gel_time.unwrap() <= k0[1].bound.unwrap());
    assert!(k0[0].bound.is_none());

    let k1 = criticality_scan(Family::K1Log, &[0.5, 2.0], &budget).unwrap();
    assert_eq!(k1[0].verdict, Verdict::Conserve);
    assert_eq!(k1[1].verdict, Verdict::Gel);
    assert!(k1[1].gel_time.unwrap() <= k1[1].bound.unwrap());
    assert_eq!(k1[1].bound_route, Some("additive-log"));
}

#[test]
fn experiments_write_parseable_and_repeatable_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(Kernel::K0Log { alpha: 2.0 }, Solver::Cascade);
    cfg.n_max = 24;
    cfg.t_end = 5.0;
    cfg.output = dir.path().join("a");
    let first = run_experiment(&cfg).unwrap();
    let mut rdr = csv::Reader::from_path(&first.files[1]).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[0], "config_hash");
    let row = rdr.records().next().unwrap().unwrap();
    assert_eq!(&row[0], cfg.hash());
    assert_eq!(row[3].parse::<f64>().unwrap(), 5.0);
    let before: Vec<Vec<u8>> = first.files.iter().map(|p| std::fs::read(p).unwrap()).collect();
    let again = run_experiment(&cfg).unwrap();
    let after: Vec<Vec<u8>> = again.files.iter().map(|p| std::fs::read(p).unwrap()).collect();
    assert_eq!(before, after);

    cfg.tol = 0.0;
    cfg.output = dir.path().join("never");
    assert!(run_experiment(&cfg).is_err());
    assert!(!cfg.output.exists());
}

fn config() -> impl Strategy<Value = RunConfig> {
    (
        prop_oneof![Just(Solver::Cascade), Just(Solver::Grid), Just(Solver::Mlsim)],
        0.1f64..4.0,
        8usize..5000,
        1e-3f64..100.0,
        1e-12f64..1e-2,
        any::<u64>(),
        1usize..50,
        prop_oneof![Just(GelRule::TwoThirds), (0.01f64..1.0).prop_map(GelRule::Fraction)],
        "[a-z][a-z0-9_/]{0,12}",
    )
        .prop_map(|(solver, alpha, n_max, t_end, tol, seed, replicates, rule, out)| {
            let mut c = RunConfig::new(Kernel::K0Log { alpha }, solver);
            c.n_max = n_max;
            c.t_end = t_end;
            c.tol = tol;
            c.seed = seed;
            c.replicates = replicates;
            c.n = n_max * 3;
            c.rule = rule;
            c.output = out.into();
            c
        })
}

proptest! {
    #[test]
    fn configs_round_trip(cfg in config()) {
        let text = cfg.to_string();
        let back: RunConfig = text.parse().unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
    }
}
