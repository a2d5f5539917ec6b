use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use randhull_cli::commands;
use randhull_cli::records::{append_records, from_csv_str, read_records, to_csv_string, COLUMNS};
use randhull_cli::store::CalibrationStore;
use randhull_cli::{ExperimentConfig, ResultRecord};

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(text, Path::new("inline.toml")).unwrap()
}

const SMALL_DISC: &str = r#"
experiment_id = "small-disc"
j = 2
n_grid = [16, 32]
reps = 200
y_samples = 500
routes = ["direct", "projection"]
master_seed = 3

[body]
kind = "ball"
dim = 2
radius = 1.0
"#;

fn record(n: usize, mean: f64, predicted: Option<f64>) -> ResultRecord {
    ResultRecord {
        experiment_id: "exp, with \"quotes\"".into(),
        body_kind: "ball".into(),
        d: 2,
        j: 1,
        density_kind: "uniform".into(),
        n,
        route: "support".into(),
        reps: 10,
        deficit_mean: mean,
        deficit_stderr: mean * 1e-3,
        predicted,
        wall_time_s: 0.125,
        master_seed: u64::MAX,
        git_or_build_id: "test".into(),
    }
}

#[test]
fn csv_round_trip_is_field_exact() {
    let rows = vec![
        record(32, 1.0 / 3.0, Some(PI.powi(3) / 1024.0)),
        record(64, 2.5e-17, None),
        record(128, 0.1 + 0.2, Some(f64::MIN_POSITIVE)),
    ];
    let text = to_csv_string(&rows).unwrap();
    assert!(text.starts_with(&COLUMNS.join(",")));
    assert_eq!(from_csv_str(&text).unwrap(), rows);
    assert_eq!(from_csv_str(&to_csv_string(&[]).unwrap()).unwrap(), vec![]);
}

#[test]
fn foreign_header_is_rejected() {
    assert!(from_csv_str("a,b\n1,2\n").is_err());
}

#[test]
fn appends_are_atomic_and_cumulative() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    append_records(&path, &[record(32, 1.0, None)]).unwrap();
    append_records(&path, &[record(64, 0.5, Some(0.4)), record(128, 0.25, None)]).unwrap();
    let rows = read_records(&path).unwrap();
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![32, 64, 128]);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n != "rows.csv")
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn validation_reports_field_paths() {
    let cases = [
        (SMALL_DISC.replace("n_grid = [16, 32]", "n_grid = [32, 16]"), "n_grid"),
        (SMALL_DISC.replace("reps = 200", "reps = 1"), "reps"),
        (SMALL_DISC.replace("radius = 1.0", "radius = -1.0"), "body"),
        (SMALL_DISC.replace("radius = 1.0", "side = 1.0"), "body.side"),
        (SMALL_DISC.replace("\"direct\", \"projection\"", "\"support\""), "routes[0]"),
        (SMALL_DISC.replace("j = 2", "j = 3"), "j"),
    ];
    for (text, path) in cases {
        let err = config(&text).validate().unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().starts_with(path), "{err} should name {path}");
    }
    let unknown = SMALL_DISC.replace("master_seed = 3", "master_seed = 3\ncolour = \"red\"");
    assert!(ExperimentConfig::from_toml_str(&unknown, Path::new("x.toml")).is_err());
}

#[test]
fn curvature_power_on_capsule_is_rejected() {
    let text = r#"
experiment_id = "capsule-power"
j = 3
n_grid = [100]
reps = 10
routes = ["direct"]
master_seed = 1

[body]
kind = "capsule"
dim = 3
cap_radius = 1.0
core_length = 2.0

[density]
kind = "curvature_power"
exponent = 0.25
"#;
    let err = config(text).validate().unwrap_err();
    assert!(err.to_string().contains("density not positive"), "{err}");
}

#[test]
fn simulate_is_deterministic_and_routes_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(SMALL_DISC).validate().unwrap();
    let store = CalibrationStore::default();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let mut sink = Vec::new();
        let outcome = commands::simulate(&cfg, 3, Some(&out), &store, &mut sink).unwrap();
        assert!(outcome.max_route_z < 3.0);
        (read_records(&out).unwrap(), String::from_utf8(sink).unwrap())
    };
    let (a, report) = run("a.csv");
    let (b, _) = run("b.csv");
    assert_eq!(a.len(), 4);
    assert!(report.contains("sim/pred"));
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.deficit_mean.to_bits(), y.deficit_mean.to_bits());
        assert_eq!(x.deficit_stderr.to_bits(), y.deficit_stderr.to_bits());
        let predicted = 4.0 * PI.powi(3) / (x.n * x.n) as f64;
        assert!((x.predicted.unwrap() / predicted - 1.0).abs() < 1e-9);
    }
}

#[test]
fn calibration_store_overwrites_entries() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cal.json");
    let mut sink = Vec::new();
    let first = commands::calibrate(2, 2, &[16, 32, 64], 300, 1.0, 1, &path, &mut sink).unwrap();
    let second = commands::calibrate(2, 2, &[16, 32, 64], 300, 1.0, 2, &path, &mut sink).unwrap();
    let store = CalibrationStore::load(&path).unwrap();
    assert_eq!(store.entries.len(), 1);
    assert_eq!(store.get(2, 2).unwrap(), &second);
    assert_ne!(first.master_seed, second.master_seed);
    assert!((second.c_jd - 0.5).abs() < 0.1, "{second:?}");
    assert!(chrono::DateTime::parse_from_rfc3339(&second.timestamp).is_ok());
}

#[test]
fn predict_composes_constant_and_integral() {
    let text = SMALL_DISC
        .replace("j = 2", "j = 3")
        .replace("dim = 2", "dim = 3")
        .replace("\"direct\", \"projection\"", "\"direct\"");
    let cfg = config(&text).validate().unwrap();
    let mut sink = Vec::new();
    let p = commands::predict(&cfg, 1000, &CalibrationStore::default(), None, &mut sink).unwrap();
    assert!((p.deficit - 16.0 * PI / 1000.0).abs() < 1e-9);
    let p4 = commands::predict(&cfg, 4000, &CalibrationStore::default(), None, &mut sink).unwrap();
    assert!((p4.deficit / p.deficit - 0.25).abs() < 1e-12);
}

#[test]
fn rate_from_synthetic_rows_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("synthetic.csv");
    let rows: Vec<ResultRecord> = [32usize, 64, 128, 256]
        .iter()
        .map(|&n| ResultRecord {
            experiment_id: "disc".into(),
            deficit_stderr: 0.0,
            ..record(n, 7.0 * (n as f64).powi(-2), None)
        })
        .collect();
    append_records(&csv, &rows).unwrap();
    let text = r#"
experiment_id = "disc"
j = 1
n_grid = [32, 64, 128, 256]
reps = 10
routes = ["support"]
master_seed = 1

[body]
kind = "ball"
dim = 2
radius = 1.0
"#;
    let cfg = config(text).validate().unwrap();
    let mut sink = Vec::new();
    let outcome = commands::rate(&cfg, 1, None, Some(&csv), &CalibrationStore::default(), &mut sink).unwrap();
    assert!((outcome.fit.exponent + 2.0).abs() < 1e-9);
    assert_eq!(outcome.passed, Some(true));
}

fn randhull(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_randhull"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cube = dir.path().join("cube.toml");
    std::fs::write(
        &cube,
        "experiment_id = \"cube\"\nj = 2\nn_grid = [10]\nreps = 4\nroutes = [\"direct\"]\nmaster_seed = 1\n\n[body]\nkind = \"cube\"\ndim = 2\nside = 1.0\n",
    )
    .unwrap();
    let out = randhull(&["--config", cube.to_str().unwrap(), "predict", "--n", "100"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no rolling ball"));

    let missing = randhull(&["simulate"], dir.path());
    assert_eq!(missing.status.code(), Some(1));

    let cap = randhull(
        &["--config", cube.to_str().unwrap(), "capcheck", "--direction", "1,0.2", "--t-grid", "0.1,0.01,0.001"],
        dir.path(),
    );
    assert_eq!(cap.status.code(), Some(1));

    let disc = dir.path().join("disc.toml");
    std::fs::write(&disc, SMALL_DISC).unwrap();
    let ok = randhull(
        &["--config", disc.to_str().unwrap(), "--threads", "2", "--out", "rows.csv", "simulate"],
        dir.path(),
    );
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(read_records(&dir.path().join("rows.csv")).unwrap().len(), 4);

    let capcheck = randhull(
        &["--config", disc.to_str().unwrap(), "capcheck", "--direction", "-0.4,0.7", "--t-grid", "0.05,0.02,0.01,0.005"],
        dir.path(),
    );
    assert_eq!(capcheck.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&capcheck.stdout).contains("fitted limit 0.450"));
}
