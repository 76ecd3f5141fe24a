use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn benjamin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_benjamin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_kind(o: &Output) -> String {
    assert!(!o.status.success());
    let stderr = String::from_utf8(o.stderr.clone()).unwrap();
    let line = stderr.lines().last().expect("an error line");
    let v: serde_json::Value = serde_json::from_str(line).expect("machine-readable error line");
    assert!(v["message"].is_string());
    v["error"].as_str().unwrap().to_string()
}

#[test]
fn kernel_dump_prints_csv() {
    let o = benjamin(&["kernel-dump", "--n", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,kernel,sgn_diag,wave_diag"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 4);
    for (row, (kernel, sgn, wave)) in rows.iter().zip([(0.0, "0", "0"), (0.5, "1", "1"), (0.0, "0", "0"), (-0.5, "-1", "-1")]) {
        assert!((row[1].parse::<f64>().unwrap() - kernel).abs() < 1e-15);
        assert_eq!((row[2].as_str(), row[3].as_str()), (sgn, wave));
    }
}

#[test]
fn kernel_dump_rejects_tiny_grids() {
    assert_eq!(error_kind(&benjamin(&["kernel-dump", "--n", "2"])), "invalid-grid");
}

#[test]
fn unknown_preset_is_a_config_error() {
    assert_eq!(error_kind(&benjamin(&["preset", "tsunami"])), "config");
    let o = benjamin(&["preset", "bo-soliton", "--override", "colour=red", "--print-config"]);
    assert_eq!(error_kind(&o), "config");
}

#[test]
fn printed_preset_parses_back() {
    let o = benjamin(&["preset", "bo-soliton", "--override", "scheme=tvm", "--print-config"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("points = 256"));
    let cfg = benjamin_core::experiments::RunConfig::parse(&text).unwrap();
    assert_eq!(cfg.to_text(), text);
}

fn write_config(dir: &Path, scheme: &str, points: usize) -> std::path::PathBuf {
    let path = dir.join("zero.cfg");
    let out = dir.join("out");
    fs::write(
        &path,
        format!(
            "# zero data\nalpha = 1\nbeta = 0\ngamma = 0\nlambda = 1\nlength = 30\npoints = {points}\n\
             dt = 0.01\nt_end = 0.1\nscheme = {scheme}\ninitial = gaussian(0, 1, 15)\n\
             snapshot_every = 5\ninvariants_every = 1\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    path
}

#[test]
fn run_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "euler-box", 31);
    let o = benjamin(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("steps: 10"));
    let out = tmp.path().join("out");
    for f in ["invariants.csv", "slope.csv", "run_manifest.json", "plot.py", "snapshot_0.csv", "snapshot_5.csv", "snapshot_10.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let inv = fs::read_to_string(out.join("invariants.csv")).unwrap();
    assert_eq!(inv.lines().count(), 12);
    for line in inv.lines().skip(1) {
        assert!(line.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0), "{line}");
    }
}

#[test]
fn parity_violation_fails_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "preissmann", 32);
    assert_eq!(error_kind(&benjamin(&["run", "--config", cfg.to_str().unwrap()])), "parity");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn hilbert_convergence_reports_round_off() {
    let o = benjamin(&["convergence", "--target", "hilbert"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("points,dx,error\n64,"));
    assert!(text.ends_with("order,n/a\n"));
}

#[test]
fn scheme_convergence_is_second_order() {
    let o = benjamin(&["convergence", "--target", "scheme", "--points", "63,127", "--t-end", "0.5"]);
    assert!(o.status.success());
    let order: f64 = stdout(&o)
        .lines()
        .last()
        .unwrap()
        .strip_prefix("order,")
        .unwrap()
        .parse()
        .unwrap();
    assert!((order - 2.0).abs() < 0.3, "{order}");
}
