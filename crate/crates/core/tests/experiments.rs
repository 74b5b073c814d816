use std::path::Path;
use std::process::Command as Process;

use ehrenfest::config::{ExperimentConfig, ModelId, Schedule, Settings};
use ehrenfest::dilation::{ehrenfest_time, EhrenfestKind};
use ehrenfest::error::Error;
use ehrenfest::experiments::{
    delocalization_time, execute, run_dilation, run_doublewell, run_measurement_demo,
    run_scaling_sweep, Command,
};
use proptest::prelude::*;

fn cfg(hbars: &[f64], schedule: Option<Schedule>) -> ExperimentConfig {
    ExperimentConfig {
        hbars: hbars.to_vec(),
        schedule,
        ..Default::default()
    }
}

#[test]
fn dilation_rows() {
    let rows = run_dilation(&cfg(&[0.01], Some(Schedule::Ehrenfest(vec![0.0, 0.5, 1.0])))).unwrap();
    assert_eq!(rows.len(), 3);
    assert!((rows[0].dq - 0.005_f64.sqrt()).abs() <= 1e-12);
    assert!((rows[1].dq - 0.5_f64.sqrt()).abs() <= 1e-12);
    assert!(rows[2].sup_flatness <= 0.025);
    for r in &rows {
        assert!((r.product - r.hbar / 2.0).abs() <= 1e-9);
        assert!(r.grid_error.unwrap() <= 1e-6);
    }
    // Entropy grows by exactly t.
    assert!((rows[2].entropy - rows[0].entropy - rows[2].t).abs() <= 1e-12);
}

#[test]
fn dilation_rows_beyond_grid_keep_analytic_values() {
    let rows = run_dilation(&cfg(&[1e-2, 1e-4], Some(Schedule::Ehrenfest(vec![0.0, 2.0])))).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(r.product >= r.hbar / 2.0 * (1.0 - 1e-9));
    }
    // ℏ = 1e-2 fits at t = 0; after two delocalization times it overflows the grid.
    assert!(rows[0].grid_error.is_some());
    assert!(rows[1].grid_error.is_none());
    assert!((rows[1].dq - 0.005_f64.sqrt() * 1e4).abs() <= 1e-8);
    // ℏ = 1e-4 is below the default grid's resolution.
    assert!(rows[2].grid_error.is_none());
}

#[test]
fn sweep_fit() {
    let fit = run_scaling_sweep(&cfg(&[1e-2, 1e-3, 1e-4, 1e-5], None)).unwrap();
    assert!((fit.slope - 0.5).abs() <= 1e-6);
    assert!((fit.intercept - 0.5 * 2.0_f64.ln()).abs() <= 1e-6);
    assert!(fit.residual <= 1e-10);
    for (h, t) in &fit.points {
        assert!((t - 0.5 * (2.0 / h).ln()).abs() <= 1e-12);
    }
    assert!(matches!(run_scaling_sweep(&cfg(&[1e-2], None)), Err(Error::InsufficientSpan(_))));
    assert!(matches!(
        run_scaling_sweep(&cfg(&[1e-2, 5e-3, 2e-3, 1.5e-3], None)),
        Err(Error::InsufficientSpan(_))
    ));
}

#[test]
fn delocalization_time_matches_formula() {
    for h in [1.0, 0.3, 1e-2, 1e-7] {
        assert!((delocalization_time(h).unwrap() - 0.5 * (2.0_f64 / h).ln()).abs() <= 1e-12);
    }
    assert!(delocalization_time(0.0).is_err());
}

#[test]
fn model_mismatch_is_rejected() {
    let mut c = cfg(&[0.01], None);
    c.model = Some(ModelId::Harmonic);
    assert!(matches!(run_dilation(&c), Err(Error::Config(_))));
    assert!(matches!(run_doublewell(&c), Err(Error::Config(_))));
    assert!(matches!(run_measurement_demo(&c), Err(Error::Config(_))));
}

#[test]
fn doublewell_small_grid() {
    let mut c = cfg(&[0.05], Some(Schedule::Ehrenfest(vec![0.0, 1.0])));
    c.grid_n = Some(4096);
    c.grid_l = Some(32.0);
    let run = run_doublewell(&c).unwrap();
    assert_eq!(run.rows.len(), 2);
    let (r0, r1) = (&run.rows[0], &run.rows[1]);
    assert!(r0.masses.plus < r0.masses.fixed_point && r0.masses.minus < r0.masses.fixed_point);
    assert!(r1.masses.tubes > r0.masses.tubes);
    assert!((r1.masses.plus - r1.masses.minus).abs() <= 0.02 * r1.masses.plus);
    for r in &run.rows {
        assert!(r.product >= r.hbar / 2.0 * (1.0 - 1e-9));
        assert!((r.husimi_total - 1.0).abs() <= 1e-3);
        let sum = r.masses.plus + r.masses.minus + r.masses.fixed_point;
        assert!(sum <= 1.0 + 1e-12);
    }
    assert_eq!(run.husimi_csv.len(), 2);
}

#[test]
fn measurement_demo_values() {
    let demo = run_measurement_demo(&cfg(&[0.01], None)).unwrap();
    assert!((demo.dq_sampled_initial - 0.0707).abs() <= 0.001);
    assert!((demo.dq_sampled_spread - 1.0 / (2.0_f64 * 0.01).sqrt()).abs() <= 0.07);
    assert!(demo.within_three_widths >= 0.99);
    assert!((demo.t_spread - 100.0_f64.ln()).abs() <= 1e-12);
}

#[test]
fn schedules_resolve_through_config() {
    let s = Settings::parse("t-ehrenfest = 0.5, 1, 2\nhbar = 0.01, 0.001").unwrap();
    let c = ExperimentConfig::from_settings(&s).unwrap();
    for &h in &c.hbars {
        let ts = c.schedule.as_ref().unwrap().resolve(h).unwrap();
        let unit = ehrenfest_time(h, EhrenfestKind::Full).unwrap();
        assert!((ts[0] - ehrenfest_time(h, EhrenfestKind::Half).unwrap()).abs() <= 1e-12);
        assert!((ts[1] - unit).abs() <= 1e-12);
        assert!((ts[2] - 2.0 * unit).abs() <= 1e-12);
    }
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn runs_are_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = cfg(&[0.01], None);
    c.samples = Some(20_000);
    c.seed = 42;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        c.out = Some(tmp.path().join(run));
        outputs.push(read_all(&execute(Command::Measure, &c).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let names: Vec<&str> = outputs[0].iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        ["config.echo", "samples_collapsed.csv", "samples_initial.csv", "samples_spread.csv", "summary.txt"]
    );
    c.seed = 43;
    c.out = Some(tmp.path().join("c"));
    let other = read_all(&execute(Command::Measure, &c).unwrap());
    assert_ne!(other[2], outputs[0][2]);

    let mut d = cfg(&[0.05, 0.1], Some(Schedule::Ehrenfest(vec![0.0, 0.5])));
    d.grid_n = Some(2048);
    d.grid_l = Some(32.0);
    let mut outputs = Vec::new();
    for run in ["d1", "d2"] {
        d.out = Some(tmp.path().join(run));
        outputs.push(read_all(&execute(Command::DoubleWell, &d).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn failed_run_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = cfg(&[0.01], None);
    c.out = Some(tmp.path().join("sweep"));
    assert!(execute(Command::Sweep, &c).is_err());
    assert!(!tmp.path().join("sweep").exists());
}

// ------------------------------------------------------------------- CLI

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Process::new(env!("CARGO_BIN_EXE_ehrenfest")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_dilation_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = out.to_str().unwrap();
    let (code, stdout, _) = cli(&["dilation", "--hbar", "0.01", "--t-ehrenfest", "0", "--t-ehrenfest", "0.5", "--out", o]);
    assert_eq!(code, 0);
    assert_eq!(stdout.trim(), o);
    let csv = std::fs::read_to_string(out.join("dilation.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("hbar,t,dQ,dP,product,entropy,sup_flatness,grid_l2_error"));
    let row: Vec<f64> = lines.nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((row[2] - 0.5_f64.sqrt()).abs() <= 1e-12);
    assert!(out.join("config.echo").exists() && out.join("summary.txt").exists());
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().join("x");
    let o = o.to_str().unwrap();
    // Validation errors.
    assert_eq!(cli(&["dilation", "--hbar", "2", "--out", o]).0, 2);
    assert_eq!(cli(&["sweep", "--hbar", "0.01", "--out", o]).0, 2);
    assert_eq!(cli(&["dilation", "--model", "pendulum", "--out", o]).0, 2);
    assert_eq!(cli(&["dilation", "--t", "1", "--t", "0.5", "--out", o]).0, 2);
    assert_eq!(cli(&["manifold", "--model", "harmonic", "--out", o]).0, 2);
    assert_eq!(cli(&["dilation", "--t", "1", "--t-ehrenfest", "1", "--out", o]).0, 2);
    assert_eq!(cli(&["frobnicate"]).0, 2);
    // Numerical guards.
    let (code, _, err) = cli(&["evolve", "--model", "dilation", "--hbar", "0.01", "--t", "6", "--out", o]);
    assert_eq!(code, 3, "{err}");
    let (code, _, err) = cli(&[
        "evolve", "--model", "harmonic", "--hbar", "1", "--grid-n", "256", "--grid-l", "16",
        "--p0", "48", "--t", "0.01", "--out", o,
    ]);
    assert_eq!(code, 3, "{err}");
    assert!(!Path::new(o).exists());
}

#[test]
fn cli_config_file_and_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("run.conf");
    let out = tmp.path().join("sweep");
    std::fs::write(
        &conf,
        format!(
            "# scaling sweep\nhbar = 1e-2, 1e-3\nhbar = 1e-4\nhbar = 1e-5\nseed = 1\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let (code, _, err) = cli(&["sweep", "--config", conf.to_str().unwrap(), "--seed", "2"]);
    assert_eq!(code, 0, "{err}");
    let echo = std::fs::read_to_string(out.join("config.echo")).unwrap();
    assert!(echo.contains("seed = 2\n"));
    assert_eq!(echo.matches("hbar = ").count(), 4);
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    let slope: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("slope = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((slope - 0.5).abs() <= 1e-6);
    // A flag replaces the file's list instead of extending it.
    let (code, _, _) = cli(&["sweep", "--config", conf.to_str().unwrap(), "--hbar", "0.01"]);
    assert_eq!(code, 2);
    // Unknown keys are rejected.
    std::fs::write(&conf, "colour = blue\n").unwrap();
    assert_eq!(cli(&["sweep", "--config", conf.to_str().unwrap()]).0, 2);
}

#[test]
fn cli_evolve_and_manifold_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("evolve");
    let (code, _, err) = cli(&[
        "evolve", "--model", "harmonic", "--hbar", "1", "--grid-n", "2048", "--grid-l", "32",
        "--q0", "1", "--t", "0", "--t", "0.5", "--dt", "1e-3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(out.join("observables.csv")).unwrap();
    assert!(csv.starts_with("t,meanQ,meanP,dQ,dP,product,entropy\n"));
    assert_eq!(csv.lines().count(), 3);
    assert!(out.join("psi_final.csv").exists() && out.join("psi_final.meta.json").exists());

    let out = tmp.path().join("manifold");
    let (code, _, err) = cli(&["manifold", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let table = std::fs::read_to_string(out.join("fixed_points.txt")).unwrap();
    assert_eq!(table.matches("hyperbolic").count(), 1);
    assert_eq!(table.matches("elliptic").count(), 2);
    let curve = std::fs::read_to_string(out.join("unstable_plus.csv")).unwrap();
    assert!(curve.starts_with("s,q,p\n"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ehrenfest_schedules_resolve_exactly(log_h in -8.0..0.0_f64, k in 0.0..4.0_f64) {
        let h = 10f64.powf(log_h);
        let ts = Schedule::Ehrenfest(vec![0.0, k]).resolve(h).unwrap();
        prop_assert!((ts[1] - k * ehrenfest_time(h, EhrenfestKind::Full).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn dilation_rows_respect_heisenberg(log_h in -6.0..0.0_f64, k in 0.0..2.0_f64) {
        let h = 10f64.powf(log_h);
        let rows = run_dilation(&cfg(&[h], Some(Schedule::Ehrenfest(vec![0.0, k])))).unwrap();
        for r in rows {
            prop_assert!(r.product >= h / 2.0 * (1.0 - 1e-9));
        }
    }
}
