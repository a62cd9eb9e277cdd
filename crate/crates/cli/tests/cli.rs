use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn baseline() -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/baseline.scenario")).unwrap()
}

fn write_scenario(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn claycalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_claycalc")).args(args).output().unwrap()
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn simulate(dir: &TempDir, scenario: &Path, out: &str, extra: &[&str]) -> PathBuf {
    let out = dir.path().join(out);
    let mut args = vec!["simulate", "--scenario", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = claycalc(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn baseline_run_writes_time_series_streams_and_report() {
    let dir = TempDir::new().unwrap();
    let sc = write_scenario(&dir, "base.scenario", &baseline());
    let out = simulate(&dir, &sc, "run", &[]);
    let (header, rows) = csv(&out.join("timeseries.csv"));
    assert!(header.iter().all(|h| h.contains('[') && h.contains(']')));
    assert_eq!(header.len(), 1 + 3 * 5 + 10 * 4 + 5 + 2);
    assert_eq!(rows.len(), 121);
    assert_eq!(rows[120][0], 120.0);
    assert!(rows.iter().all(|r| r.len() == header.len() && r.iter().all(|v| v.is_finite())));

    let table = fs::read_to_string(out.join("streams_t120.csv")).unwrap();
    let names: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8", "S9", "S10"]);
    assert!(out.join("streams_t0.csv").is_file());

    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("closure.a_moiety"));
    assert!(report.contains("[jacobian_check]\nstatus = pass"));
}

#[test]
fn zero_duration_gives_the_initial_snapshot() {
    let dir = TempDir::new().unwrap();
    let text = baseline().replace("t_end = 120 s", "t_end = 0 s").replace("stream_tables = [0 s, 120 s]", "");
    let sc = write_scenario(&dir, "zero.scenario", &text);
    let out = simulate(&dir, &sc, "run", &[]);
    let (_, rows) = csv(&out.join("timeseries.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 0.0);
    assert!(out.join("streams_t0.csv").is_file());
}

#[test]
fn runs_are_bit_identical() {
    let dir = TempDir::new().unwrap();
    let text = baseline().replace("t_end = 120 s", "t_end = 70 s").replace("[0 s, 120 s]", "[70 s]");
    let sc = write_scenario(&dir, "short.scenario", &text);
    let a = simulate(&dir, &sc, "a", &[]);
    let b = simulate(&dir, &sc, "b", &[]);
    for f in ["timeseries.csv", "streams_t70.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn finite_difference_jacobian_gives_the_same_trajectory() {
    let dir = TempDir::new().unwrap();
    let sc = write_scenario(&dir, "base.scenario", &baseline());
    let a = simulate(&dir, &sc, "analytic", &["--jacobian", "analytic"]);
    let f = simulate(&dir, &sc, "fd", &["--jacobian", "fd"]);
    let (header, ra) = csv(&a.join("timeseries.csv"));
    let (_, rf) = csv(&f.join("timeseries.csv"));
    assert_eq!(ra.len(), rf.len());
    let rel_tol = 1e-6;
    let mut worst = (0.0, String::new());
    for (x, y) in ra.iter().zip(&rf) {
        for (j, (u, v)) in x.iter().zip(y).enumerate() {
            let d = (u - v).abs() / u.abs().max(v.abs()).max(1.0);
            if d > worst.0 {
                worst = (d, format!("{} at t = {}", header[j], x[0]));
            }
        }
    }
    assert!(worst.0 <= 10.0 * rel_tol, "{worst:?}");
}

#[test]
fn overrides_change_the_layout() {
    let dir = TempDir::new().unwrap();
    let text = baseline().replace("t_end = 120 s", "t_end = 2 s").replace("[0 s, 120 s]", "[]");
    let sc = write_scenario(&dir, "short.scenario", &text);
    let out = simulate(&dir, &sc, "run", &["--nz", "6", "--method", "be"]);
    let (header, _) = csv(&out.join("timeseries.csv"));
    assert!(header.contains(&"cell6.T_s [K]".to_string()));
    assert!(!header.contains(&"cell7.T_s [K]".to_string()));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("N_z = 6") && report.contains("method = be"));
}

#[test]
fn steady_writes_state_and_stream_table() {
    let dir = TempDir::new().unwrap();
    let sc = write_scenario(&dir, "base.scenario", &baseline());
    let out = dir.path().join("steady");
    let o = claycalc(&["steady", "--scenario", sc.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let state = fs::read_to_string(out.join("steady_state.csv")).unwrap();
    assert_eq!(state.lines().count(), 1 + 42 + 10 * 10 + 7);
    assert!(state.contains("loop.P1,"));
    assert!(out.join("streams_t120.csv").is_file());
    assert!(fs::read_to_string(out.join("report.txt")).unwrap().contains("[steady_state]"));
}

#[test]
fn input_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let text: String = baseline().lines().filter(|l| !l.starts_with("L = ")).map(|l| format!("{l}\n")).collect();
    let sc = write_scenario(&dir, "bad.scenario", &text);
    let o = claycalc(&["simulate", "--scenario", sc.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("calciner.L"));

    let sc = write_scenario(&dir, "unit.scenario", &baseline().replace("P_fan = 1.2 kW", "P_fan = 1.2 kg"));
    let o = claycalc(&["steady", "--scenario", sc.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));

    let o = claycalc(&["verify", "--scenario", dir.path().join("none.scenario").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solver_failure_exits_with_two_and_leaves_diagnostics() {
    let dir = TempDir::new().unwrap();
    let sc = write_scenario(&dir, "gasless.scenario", &baseline().replace("fresh_air = 150 kg/h", "fresh_air = 0 kg/h"));
    let out = dir.path().join("run");
    let o = claycalc(&["simulate", "--scenario", sc.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let diag = fs::read_to_string(out.join("diagnostics.txt")).unwrap();
    assert!(diag.contains("stage = initial steady state"));
}

fn report_section<'a>(report: &'a str, name: &str) -> &'a str {
    let start = report.find(&format!("[{name}]")).unwrap_or_else(|| panic!("no [{name}] in\n{report}"));
    let rest = &report[start..];
    &rest[..rest.find("\n\n").unwrap_or(rest.len())]
}

#[test]
fn verify_passes_on_the_baseline() {
    let dir = TempDir::new().unwrap();
    let sc = write_scenario(&dir, "base.scenario", &baseline());
    let report = dir.path().join("verify.txt");
    let o = claycalc(&["verify", "--scenario", sc.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&o.stdout).to_string();
    assert_eq!(fs::read_to_string(&report).unwrap(), text);
    for name in [
        "jacobian",
        "conservation.closed_calciner",
        "conservation.steady_species",
        "conservation.steady_energy",
        "cyclone.pressure_ordering",
        "dae_order",
        "cyclone.grid",
    ] {
        assert!(report_section(&text, name).contains("status = pass"), "{}", report_section(&text, name));
    }
    assert!(report_section(&text, "speed").contains("ratio = "));
    assert_eq!(o.status.success(), text.contains("[summary]\nstatus = pass"));
}

#[test]
fn corrupted_jacobian_entry_is_named() {
    let dir = TempDir::new().unwrap();
    let sc = write_scenario(&dir, "base.scenario", &baseline());
    let o = claycalc(&[
        "verify",
        "--scenario",
        sc.to_str().unwrap(),
        "--states",
        "2",
        "--skip-timing",
        "--inject-fault",
        "7,7,1e3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let text = String::from_utf8_lossy(&o.stdout);
    let jac = report_section(&text, "jacobian");
    assert!(jac.contains("status = fail"), "{jac}");
    assert!(jac.contains("row = 7\ncolumn = 7"), "{jac}");
    assert!(jac.contains("cyclone1.T_s"), "{jac}");
}
