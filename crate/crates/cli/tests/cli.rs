use std::process::Command;

fn gelscope() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gelscope"));
    c.env_remove("GELSCOPE_SEED");
    c
}

fn stdout_of(args: &[&str]) -> String {
    let out = gelscope().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn bounds_prints_one_row() {
    let s = stdout_of(&["bounds", "--kernel", "multiplicative", "--x0", "0.5", "--r", "2"]);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "kernel,x0,r,kappa,tgel_bound,route");
    let fields: Vec<&str> = lines[1].split(',').collect();
    let t: f64 = fields[4].parse().unwrap();
    assert!((t - 256.0).abs() < 1e-6, "{t}");
    assert_eq!(fields[5], "box-functional");
}

#[test]
fn cascade_and_grid_csvs_have_their_columns() {
    let s = stdout_of(&["cascade", "--alpha", "2", "--nmax", "12", "--tend", "1"]);
    assert!(s.starts_with("t,n,c_n,M1,xlogx_moment,overflow_cum\n"));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let spec = dir.path().join("s.csv");
    stdout_of(&[
        "grid", "--kernel", "constant(c=2)", "--nmax", "64", "--tend", "1",
        "--out", out.to_str().unwrap(), "--spectrum-out", spec.to_str().unwrap(),
    ]);
    let g = std::fs::read_to_string(&out).unwrap();
    assert!(g.starts_with("t,M0,M1,M2,xlogx_moment,lost_mass\n"));
    let last: Vec<f64> = g.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    // M0 = 1/(1+t) for K = 2 from δ₁
    assert!((last[1] - 0.5).abs() < 1e-5, "{last:?}");
    assert!(std::fs::read_to_string(&spec).unwrap().starts_with("mass,concentration\n"));
}

#[test]
fn mlsim_honours_the_seed_override() {
    let args = ["mlsim", "--kernel", "multiplicative", "--n", "2000", "--seeds", "3", "--tend", "3"];
    let a = stdout_of(&args);
    let b = stdout_of(&args);
    assert_eq!(a, b);
    let out = gelscope().args(args).env("GELSCOPE_SEED", "17").output().unwrap();
    let c = String::from_utf8(out.stdout).unwrap();
    assert!(c.lines().nth(1).unwrap().starts_with("0,17,"), "{c}");
    assert_ne!(a, c);
}

#[test]
fn run_writes_config_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    let out = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!("# critical cascade\nkernel = k0log(alpha=2)\nsolver = cascade\nn_max = 16\nt_end = 2\noutput = {}\n", out.display()),
    )
    .unwrap();
    stdout_of(&["run", cfg.to_str().unwrap()]);
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("config_hash,solver,kernel,"));
    assert!(out.join("cascade.csv").exists());
}

#[test]
fn bad_input_fails_cleanly() {
    let out = gelscope().args(["grid", "--kernel", "bogus", "--nmax", "8", "--tend", "1"]).output().unwrap();
    assert!(!out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "kernel = constant\nsolver = grid\ntol = 0\n").unwrap();
    let out = gelscope().args(["run", cfg.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("tol"));
    let out = gelscope().args(["bounds", "--kernel", "additive"]).output().unwrap();
    assert!(!out.status.success());
}
