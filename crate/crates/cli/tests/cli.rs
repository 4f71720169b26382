use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nudging(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nudging"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

fn summary_value(summary: &str, key: &str) -> String {
    summary
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in summary"))
        .to_string()
}

#[test]
fn run_writes_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig9");
    let o = nudging(&["run", "fig9", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let norms = read(&out, "norms.csv");
    assert_eq!(norms.lines().next().unwrap(), "t,l2,h1_semi,max_abs,mean,control_active");
    let snaps = read(&out, "snapshots.csv");
    assert!(snaps.starts_with("x,0,"));
    assert!(read(&out, "verdicts.txt").contains("recommended actuators"));
    let s = read(&out, "summary.txt");
    assert_eq!(summary_value(&s, "status"), "completed");
    assert_eq!(summary_value(&s, "stabilized"), "true");
    let rate: f64 = summary_value(&s, "decay_rate").parse().unwrap();
    assert!(rate < 0.0);
}

#[test]
fn identity_override_gives_identical_output() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(nudging(&["run", "fig1", "--out", a.to_str().unwrap()]).status.success());
    let o = nudging(&["run", "fig1", "--override", "alpha=100", "--out", b.to_str().unwrap()]);
    assert!(o.status.success());
    for f in ["norms.csv", "snapshots.csv", "summary.txt", "verdicts.txt", "config.toml"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
}

#[test]
fn config_file_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let shown = nudging(&["show", "fig5"]);
    assert!(shown.status.success());
    let path = tmp.path().join("fig5.toml");
    fs::write(&path, &shown.stdout).unwrap();
    let again = nudging(&["show", "--config", path.to_str().unwrap()]);
    assert_eq!(shown.stdout, again.stdout);
}

#[test]
fn bad_config_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    fs::write(
        &path,
        "name = \"bad\"\nmodel = \"kse\"\ninitial = \"kse_cos\"\n\n[integrator]\nt_end = 1.0\ndtt = 0.1\n",
    )
    .unwrap();
    let o = nudging(&["run", "--config", path.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 7"), "{err}");
}

#[test]
fn blow_up_exits_zero_with_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("blow");
    // the cubic term overflows an explicit step from a huge state
    let o = nudging(&[
        "run",
        "fig1",
        "--override",
        "initial=1e9*cos(3*x)",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = read(&out, "summary.txt");
    assert_eq!(summary_value(&s, "status"), "blown_up");
}

#[test]
fn cfl_violation_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nudging(&["run", "fig1", "--override", "dt=1e-3", "--out", tmp.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("CFL"));
}

#[test]
fn sweep_single_value_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let sw = tmp.path().join("sweep");
    assert!(nudging(&["run", "fig9", "--out", run.to_str().unwrap()]).status.success());
    let o = nudging(&["sweep", "fig9", "--key", "mu", "--values", "30", "--out", sw.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let one = sw.join("control.mu=30");
    for f in ["norms.csv", "snapshots.csv", "summary.txt", "verdicts.txt", "config.toml"] {
        assert_eq!(read(&run, f), read(&one, f), "{f}");
    }
    let agg = read(&sw, "aggregate.csv");
    assert_eq!(agg.lines().count(), 2);
}

#[test]
fn sweep_flags_failures_without_aborting() {
    let tmp = tempfile::tempdir().unwrap();
    let sw = tmp.path().join("sweep");
    // dt = 1 violates the CFL bound on this grid
    let o = nudging(&[
        "sweep",
        "fig9",
        "--key",
        "integrator.dt",
        "--values",
        "0.006,1",
        "--out",
        sw.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let agg = read(&sw, "aggregate.csv");
    let rows: Vec<&str> = agg.lines().skip(1).collect();
    assert!(rows[0].starts_with("0.006,ok,"));
    assert!(rows[1].starts_with("1,failed,"));
}

#[test]
fn check_and_estimates() {
    let o = nudging(&["check", "fig2"]);
    assert!(o.status.success());
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("NOT SATISFIED"));
    assert!(s.contains("3.947842e3"));
    let o = nudging(&["estimate-c", "energy"]);
    assert!(o.status.success());
    let c: f64 = String::from_utf8_lossy(&o.stdout)
        .trim()
        .strip_prefix("c = ")
        .unwrap()
        .parse()
        .unwrap();
    assert!(c > 0.0 && c < 1.0);
    let o = nudging(&["estimate-r2", "fig4", "--override", "t_end=120", "--override", "r2_burn_in=60"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("r2 = "));
}

#[test]
fn unknown_preset_fails() {
    let o = nudging(&["run", "fig99"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown scenario"));
}
