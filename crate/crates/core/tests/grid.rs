use gelscope::bounds::additive_gel_bound;
use gelscope::grid::*;
use gelscope::harness::monotone_mass_check;
use gelscope::kernels::log_e_plus;
use gelscope::refinement::{RefinementRule, Verdict};
use gelscope::{Kernel, MassSpectrum};

fn delta1() -> MassSpectrum {
    MassSpectrum::delta(1.0).unwrap()
}

fn run(kernel: Kernel, n_max: usize, t_end: f64, tol: f64, dt: Option<f64>) -> GridRun {
    let mut o = GridOptions::new(tol);
    o.snapshot_dt = dt;
    o.record_spectra = dt.is_some();
    integrate_grid_with(&kernel, &delta1(), n_max, t_end, &o).unwrap()
}

fn moment_at(run: &GridRun, t: f64) -> &gelscope::MomentRow {
    run.trajectory.moments.iter().find(|r| (r.t - t).abs() < 1e-12).expect("snapshot time")
}

#[test]
fn constant_kernel_second_level_at_one() {
    let r = run(Kernel::Constant { c: 2.0 }, 128, 1.0, 1e-8, Some(0.25));
    let s = &r.trajectory.snapshots.last().unwrap().1;
    assert!((s.get(2.0) - 0.125).abs() < 1e-8);
}

#[test]
fn additive_number_density_decays_exponentially() {
    let r = run(Kernel::Additive, 1024, 1.0, 1e-8, Some(0.25));
    for t in [0.25, 0.5, 0.75, 1.0] {
        let m0 = moment_at(&r, t).m0;
        assert!((m0 - (-t).exp()).abs() < 1e-6 * (-t).exp(), "t = {t}");
    }
}

#[test]
fn multiplicative_second_moment_follows_its_riccati_solution() {
    let r = run(Kernel::Multiplicative, 1024, 0.6, 1e-8, Some(0.1));
    for row in &r.trajectory.moments {
        let exact = 1.0 / (1.0 - row.t);
        assert!((row.m2 - exact).abs() < 1e-5 * exact, "t = {}", row.t);
    }
    assert!(monotone_mass_check(&r.trajectory).pass);
}

#[test]
fn multiplicative_gel_time_from_refinement() {
    let runs: Vec<GridRun> = [256, 512, 1024, 2048, 4096]
        .iter()
        .map(|&n| {
            let mut o = GridOptions::new(1e-6);
            o.record_spectra = false;
            o.halt_at_loss = Some(0.01);
            integrate_grid_with(&Kernel::Multiplicative, &delta1(), n, 3.0, &o).unwrap()
        })
        .collect();
    let est = estimate_gel_time(&runs, 1e-3, &RefinementRule::default()).unwrap();
    assert_eq!(est.verdict, Verdict::Gel, "{est:?}");
    let t = est.estimate.unwrap();
    assert!((t - 1.0).abs() < 0.1 && t <= 256.0, "{t}");
}

#[test]
fn additive_kernel_is_not_called_gelling() {
    let runs: Vec<GridRun> = [128, 256, 512, 1024]
        .iter()
        .map(|&n| {
            let mut o = GridOptions::new(1e-6);
            o.record_spectra = false;
            integrate_grid_with(&Kernel::Additive, &delta1(), n, 3.0, &o).unwrap()
        })
        .collect();
    let est = estimate_gel_time(&runs, 1e-3, &RefinementRule::default()).unwrap();
    assert_eq!(est.verdict, Verdict::Conserve, "{est:?}");
}

#[test]
fn k1_log_loss_time_is_below_its_bound() {
    let bound = additive_gel_bound(2.0, &delta1()).unwrap().tgel_upper;
    let runs: Vec<GridRun> = [256, 512, 1024, 2048]
        .iter()
        .map(|&n| {
            let mut o = GridOptions::new(1e-6);
            o.record_spectra = false;
            o.halt_at_loss = Some(0.01);
            integrate_grid_with(&Kernel::K1Log { alpha: 2.0 }, &delta1(), n, 10.0, &o).unwrap()
        })
        .collect();
    let est = estimate_gel_time(&runs, 1e-3, &RefinementRule::default()).unwrap();
    let t = est.estimate.expect("finite estimate");
    assert!(t <= bound, "{t} > {bound}");
    assert!(estimate_gel_time(&[runs[0].clone(), run(Kernel::Additive, 64, 0.1, 1e-6, None)], 1e-3, &RefinementRule::default()).is_err());
}

#[test]
fn second_moment_is_stable_under_doubling_below_the_log_kernel() {
    let a = run(Kernel::Additive, 2048, 2.0, 1e-8, Some(1.0));
    let b = run(Kernel::Additive, 4096, 2.0, 1e-8, Some(1.0));
    for t in [1.0, 2.0] {
        let (ma, mb) = (moment_at(&a, t).m2, moment_at(&b, t).m2);
        assert!((ma - mb).abs() < 1e-4 * mb, "t = {t}: {ma} vs {mb}");
        assert!((mb - (2.0 * t).exp()).abs() < 1e-4 * mb);
    }
}

#[test]
fn truncated_log_moment_obeys_jensen() {
    for kernel in [Kernel::Additive, Kernel::K1Log { alpha: 1.5 }, Kernel::Multiplicative] {
        let r = run(kernel, 256, 1.5, 1e-6, Some(0.25));
        let m1_0 = r.trajectory.initial_mass().unwrap();
        for (_, s) in &r.trajectory.snapshots {
            let big_a = m1_0.max(s.moment(1.0));
            for a in [1.0, 3.0, 10.0, 50.0, 256.0] {
                let lhs = s.integrate(|y| if y <= a { y * log_e_plus(y) } else { 0.0 });
                let m2a = s.integrate(|y| if y <= a { y * y } else { 0.0 });
                let rhs = big_a * (std::f64::consts::E + m2a / big_a).ln();
                assert!(lhs <= rhs * (1.0 + 1e-12));
            }
        }
    }
}
