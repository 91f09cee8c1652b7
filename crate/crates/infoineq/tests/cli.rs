//! End-to-end checks of the command-line surface: the JSON report schema and
//! its round trip, CSV shape and determinism, and the exit-code contract.

use std::process::{Command, Output};

use infoineq::cli::CliReport;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infoineq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 output")
}

#[test]
fn bound_json_matches_worked_example() {
    let out = run(&[
        "bound",
        "--model",
        "uniform-max",
        "--hyper",
        "n=5",
        "--method",
        "naudts",
        "--theta",
        "2",
        "--output",
        "json",
    ]);
    assert!(out.status.success());
    let report: CliReport = serde_json::from_str(&stdout(&out)).expect("valid report JSON");
    assert!((report.bound - 4.0 / 35.0).abs() <= 1e-6);
    assert_eq!(report.attained, Some(true));
    assert_eq!(report.method, "naudts");
    assert_eq!(report.hyper["n"], 5.0);

    // round trip: parse(emit(report)) preserves every field
    let emitted = serde_json::to_string(&report).unwrap();
    let back: CliReport = serde_json::from_str(&emitted).unwrap();
    assert_eq!(report, back);
}

#[test]
fn hcr_bound_stays_below_variance() {
    let out = run(&[
        "bound", "--model", "uniform-max", "--hyper", "n=1", "--method", "hcr", "--theta", "1",
        "--output", "json",
    ]);
    assert!(out.status.success());
    let report: CliReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report.bound < 0.3333);
    assert_eq!(report.attained, Some(false));
}

#[test]
fn list_models_names_all_seven() {
    let out = run(&["list-models"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for name in [
        "uniform-max",
        "expmin",
        "uniform-max-power",
        "gamma-scale",
        "normal-x4",
        "poisson-pair",
        "uniform-joint-max",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn sweep_rows_follow_the_closed_form() {
    let out = run(&[
        "sweep", "--model", "uniform-max", "--hyper", "n=5", "--method", "naudts", "--theta",
        "1", "2", "3", "4", "5",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].starts_with("theta,bound,variance,gap,attained,"));
    for (i, line) in lines[1..].iter().enumerate() {
        let theta = (i + 1) as f64;
        let bound: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((bound - theta * theta / 35.0).abs() <= 1e-6 * bound);
        assert_eq!(line.split(',').nth(4).unwrap(), "true");
    }
}

#[test]
fn empty_sweep_emits_header_only() {
    let out = run(&["sweep", "--model", "uniform-max", "--hyper", "n=5", "--method", "naudts"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("theta,bound,"));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = [
        "bound", "--model", "normal-x4", "--method", "bhatt", "--classical", "--order", "2",
        "--theta", "1", "--output", "json",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_csv_floats_have_17_significant_digits() {
    let out = run(&[
        "sweep", "--model", "normal-x4", "--method", "bhatt", "--classical", "--order", "2",
        "--theta", "1", "2",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    let bound_cell = row.split(',').nth(1).unwrap();
    // mantissa with 16 fractional digits
    let mantissa = bound_cell.split('e').next().unwrap();
    assert_eq!(mantissa.split('.').nth(1).unwrap().len(), 16);
    let bound: f64 = bound_cell.parse().unwrap();
    assert!((bound - 32.0 / 3.0).abs() <= 1e-6 * bound);
}

#[test]
fn config_errors_exit_2() {
    let unknown_model = run(&["bound", "--model", "no-such", "--method", "naudts", "--theta", "1"]);
    assert_eq!(unknown_model.status.code(), Some(2));
    let bad_hyper = run(&[
        "bound", "--model", "gamma-scale", "--hyper", "alpha=3", "--hyper", "k=-2", "--method",
        "naudts", "--theta", "1",
    ]);
    assert_eq!(bad_hyper.status.code(), Some(2));
    let unknown_key = run(&[
        "bound", "--model", "uniform-max", "--hyper", "n=5", "--hyper", "zeta=1", "--method",
        "naudts", "--theta", "1",
    ]);
    assert_eq!(unknown_key.status.code(), Some(2));
    // clap usage errors also exit 2
    let missing = run(&["bound", "--method", "naudts", "--theta", "1"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn computation_failures_exit_1() {
    // theta on the (open) domain boundary is a computation-level error
    let out = run(&[
        "bound", "--model", "uniform-max", "--hyper", "n=5", "--method", "naudts", "--theta", "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_exports_kernel_csv() {
    let out = run(&[
        "synth", "--model", "normal-x4", "--family", "scale", "--points", "16",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("x,kernel,g\n"));
    assert_eq!(text.lines().count(), 18);
}

#[test]
fn reduce_exits_zero_when_all_checks_pass() {
    let out = run(&["reduce"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn out_file_receives_the_report() {
    let dir = std::env::temp_dir().join(format!("infoineq-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = run(&[
        "bound", "--model", "expmin", "--hyper", "n=3", "--method", "naudts", "--theta", "1",
        "--output", "json", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let report: CliReport = serde_json::from_str(&text).unwrap();
    assert!((report.bound - 1.0 / 9.0).abs() <= 1e-6);
    std::fs::remove_dir_all(&dir).ok();
}
