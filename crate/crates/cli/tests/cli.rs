use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_squeezelab");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    report(dir)
}

fn report(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn assert_identical(a: &Path, b: &Path) {
    let fa = files(a);
    let fb = files(b);
    assert_eq!(
        fa.iter().map(|p| p.file_name().unwrap().to_owned()).collect::<Vec<_>>(),
        fb.iter().map(|p| p.file_name().unwrap().to_owned()).collect::<Vec<_>>()
    );
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{} differs", x.display());
    }
}

const SMALL_PREPARE: &[&str] = &[
    "prepare",
    "--set",
    "squeeze.r=0.3",
    "--set",
    "layout.cutoff=10",
    "--set",
    "reservoir.cycles=3",
    "--seed",
    "11",
];

#[test]
fn prepare_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&a, SMALL_PREPARE);
    ok(&b, SMALL_PREPARE);
    assert_identical(&a, &b);
}

#[test]
fn drifted_prepare_is_reproducible_and_seed_sensitive() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = SMALL_PREPARE.to_vec();
    args.extend(["--set", "reservoir.drift_sigma=\"2pi*300\""]);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    ok(&a, &args);
    ok(&b, &args);
    assert_identical(&a, &b);
    let other: Vec<&str> = args.iter().map(|a| if *a == "11" { "12" } else { a }).collect();
    ok(&c, &other);
    assert_ne!(
        fs::read(a.join("trajectory.csv")).unwrap(),
        fs::read(c.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn estimate_is_identical_for_any_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let base = ["estimate", "--set", "metrology.trials=5000", "--seed", "3"];
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    ok(&a, &base);
    ok(&b, &base);
    assert_identical(&a, &b);
    let mut threaded = base.to_vec();
    threaded.extend(["--threads", "4"]);
    ok(&c, &threaded);
    // The thread count is part of the hashed config; the data rows must not
    // depend on it.
    let body = |d: &Path| {
        let text = fs::read_to_string(d.join("sweep.csv")).unwrap();
        text.lines().skip(1).map(str::to_owned).collect::<Vec<_>>()
    };
    assert_eq!(body(&a), body(&c));
}

#[test]
fn sideband_pipeline_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let source = r#"sideband.source={"kind":"populations","values":[[0.91,0.03,0.03,0.01,0.02],[0.95,0.02,0.01,0.01,0.01]]}"#;
    let sim = ["sideband", "simulate", "--set", source, "--set", "sideband.gamma0=500", "--seed", "5"];
    let (s1, s2) = (tmp.path().join("s1"), tmp.path().join("s2"));
    ok(&s1, &sim);
    ok(&s2, &sim);
    assert_identical(&s1, &s2);

    let c0 = s1.join("curve_0.csv");
    let c1 = s1.join("curve_1.csv");
    let fit = |dir: &Path| {
        ok(
            dir,
            &[
                "sideband",
                "fit",
                "--input",
                c0.to_str().unwrap(),
                "--input",
                c1.to_str().unwrap(),
                "--set",
                "sideband.gamma0=500",
            ],
        )
    };
    let (f1, f2) = (tmp.path().join("f1"), tmp.path().join("f2"));
    let rep = fit(&f1);
    fit(&f2);
    assert_identical(&f1, &f2);

    let truth = [[0.91, 0.03, 0.03, 0.01, 0.02], [0.95, 0.02, 0.01, 0.01, 0.01]];
    let fits = rep["payload"]["fits"].as_array().unwrap();
    for (fit, t) in fits.iter().zip(&truth) {
        let values = fit["estimate"]["values"].as_array().unwrap();
        for (v, t) in values.iter().zip(t) {
            assert!((v.as_f64().unwrap() - t).abs() <= 0.03, "{v} vs {t}");
        }
    }
    let f = rep["payload"]["f_lower"].as_f64().unwrap();
    assert!((f - 0.91 * 0.95).abs() < 0.05, "{f}");
    let estimates: Value = serde_json::from_slice(&fs::read(f1.join("estimates.json")).unwrap()).unwrap();
    assert_eq!(estimates.as_array().unwrap().len(), 2);
}

#[test]
fn epr_sweep_and_qfi_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let sweep = ["epr-sweep", "--set", "epr_sweep.r_values=[0.1,0.3]", "--set", "epr_sweep.cutoff=10", "--set", "epr_sweep.cycles=4"];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let rep = ok(&a, &sweep);
    ok(&b, &sweep);
    assert_identical(&a, &b);
    for p in rep["payload"]["points"].as_array().unwrap() {
        assert!(p["epr_ideal"].as_f64().unwrap() < 1.0);
    }

    let q = tmp.path().join("q");
    let rep = ok(&q, &["qfi", "--set", "squeeze.r=0"]);
    let numeric = &rep["payload"]["numeric"];
    assert!((numeric[0][0].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!((numeric[1][1].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn zero_cycles_returns_the_thermal_input() {
    let tmp = tempfile::tempdir().unwrap();
    let rep = ok(tmp.path(), &["prepare", "--set", "squeeze.r=0.3", "--set", "reservoir.cycles=0"]);
    let d = rep["payload"]["epr_prepared"]["delta_epr"].as_f64().unwrap();
    assert!((d - 1.4).abs() < 1e-3, "{d}");
    let csv = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "comment, header and cycle 0");
}

#[test]
fn csv_outputs_carry_version_and_config_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let rep = ok(tmp.path(), SMALL_PREPARE);
    let hash = rep["config_sha256"].as_str().unwrap();
    let csv = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        format!("# squeezelab {} config-sha256={hash}", env!("CARGO_PKG_VERSION"))
    );
    assert!(lines.next().unwrap().starts_with("cycle,f_lower,f_exact"));
}

#[test]
fn report_echoes_every_resolved_default() {
    let tmp = tempfile::tempdir().unwrap();
    let rep = ok(tmp.path(), SMALL_PREPARE);
    let cfg = &rep["config"];
    for section in ["layout", "squeeze", "reservoir", "metrology", "sideband", "epr_sweep", "three_mode", "constants"] {
        assert!(cfg[section].is_object(), "{section} missing");
    }
    assert_eq!(cfg["layout"]["cutoff"], 10);
    assert_eq!(cfg["seed"], 11);
    assert_eq!(cfg["threads"], 1);
    assert_eq!(cfg["reservoir"]["omega"].as_array().unwrap().len(), 2);
    let w = cfg["reservoir"]["omega"][0].as_f64().unwrap();
    assert!((w - 2.0 * std::f64::consts::PI * 6.8e3).abs() < 1e-9);
    assert!(cfg["sideband"]["grid"].is_object());
}

#[test]
fn config_file_with_rate_sugar_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("cfg.json");
    fs::write(
        &cfg_path,
        r#"{"squeeze": {"r": 0.3}, "layout": {"cutoff": 10}, "reservoir": {"omega": ["2pi*5e3", 31415.9], "cycles": 2}, "seed": 1}"#,
    )
    .unwrap();
    let out = tmp.path().join("o");
    let rep = ok(
        &out,
        &["prepare", "--config", cfg_path.to_str().unwrap(), "--set", "seed=2", "--seed", "3"],
    );
    assert_eq!(rep["config"]["seed"], 3);
    let w = rep["config"]["reservoir"]["omega"][0].as_f64().unwrap();
    assert!((w - 2.0 * std::f64::consts::PI * 5e3).abs() < 1e-9);
    assert_eq!(rep["config"]["reservoir"]["omega"][1].as_f64().unwrap(), 31415.9);
}

#[test]
fn config_errors_exit_2_without_partial_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["prepare", "--set", "layout.cutoff=3"],
        &["prepare", "--set", "squeeze.colour=1"],
        &["prepare", "--set", "reservoir.omega=[-1.0]"],
        &["estimate", "--set", "metrology.omega_plus=\"2pi*fast\""],
        &["prepare", "--set", "layout.modes=4"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let dir = tmp.path().join(format!("case{i}"));
        let out = run(&dir, args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!dir.exists(), "{args:?} left output behind");
    }
}

#[test]
fn truncation_failure_exits_3_without_partial_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("o");
    // N = 16 satisfies the target's tail rule, but the pumped state spills
    // past it.
    let out = run(&dir, &["prepare", "--set", "layout.cutoff=16", "--set", "reservoir.cycles=2"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("top Fock level"));
    assert!(!dir.exists());
}

#[test]
fn flat_curve_is_flagged_not_crashed() {
    let tmp = tempfile::tempdir().unwrap();
    let curve = tmp.path().join("flat.csv");
    let mut text = String::from("t,p_down,shots\n");
    for i in 0..40 {
        text.push_str(&format!("{},0.5,200\n", i as f64 * 1e-5));
    }
    fs::write(&curve, text).unwrap();
    let dir = tmp.path().join("o");
    let out = run(&dir, &["sideband", "fit", "--input", curve.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.exists());
}

#[test]
fn malformed_curve_reports_line_and_column() {
    let tmp = tempfile::tempdir().unwrap();
    let curve = tmp.path().join("bad.csv");
    fs::write(&curve, "# comment\nt,p_down,shots\n0,1,200\n1e-5,1.7,200\n").unwrap();
    let out = run(&tmp.path().join("o"), &["sideband", "fit", "--input", curve.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv:4") && err.contains("p_down"), "{err}");
}

#[test]
fn missing_input_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &tmp.path().join("o"),
        &["sideband", "fit", "--input", tmp.path().join("absent.csv").to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn engineered_simulation_of_ideal_three_mode_state_bounds_at_one() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    let rep = ok(
        &dir,
        &[
            "sideband",
            "simulate",
            "--set",
            "layout.modes=3",
            "--set",
            "squeeze.r=0.5",
            "--set",
            "sideband.model=\"three_mode\"",
            "--set",
            "sideband.n_max=2",
            "--set",
            "sideband.repetitions=null",
            "--set",
            "sideband.grid={\"start\":0,\"stop\":4e-4,\"points\":10}",
        ],
    );
    assert_eq!(rep["payload"]["f_lower"].as_f64().unwrap(), 1.0);
    let csv = fs::read_to_string(dir.join("curve_0.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap() == "t1,t2,t3,p_down,shots");
    assert_eq!(csv.lines().count(), 2 + 1000);

    let fit_dir = tmp.path().join("f");
    let rep = ok(
        &fit_dir,
        &[
            "sideband",
            "fit",
            "--input",
            dir.join("curve_0.csv").to_str().unwrap(),
            "--set",
            "layout.modes=3",
            "--set",
            "squeeze.r=0.5",
            "--set",
            "sideband.model=\"three_mode\"",
            "--set",
            "sideband.n_max=2",
            "--set",
            "sideband.float_gamma=false",
        ],
    );
    let f = rep["payload"]["f_lower"].as_f64().unwrap();
    assert!(f >= 0.85, "{f}");
}
