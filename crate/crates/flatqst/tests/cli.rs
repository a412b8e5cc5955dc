use std::path::Path;
use std::process::{Command, Output};

fn flatqst(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatqst"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn trace_is_monotone_bounded_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["trace", "--N", "10", "--W", "0.2", "--g", "0.01", "--seed", "7"];
    let o = flatqst(&args, dir.path());
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    for key in ["tau =", "deltaEps =", "Csr ="] {
        assert!(text.contains(key), "{text}");
    }

    let (header, rows) = read_csv(&dir.path().join("trace.csv"));
    assert_eq!(header, ["t", "fR_abs", "fidelity", "envelope"]);
    let col = |k: usize| rows.iter().map(|r| r[k].parse::<f64>().unwrap()).collect::<Vec<_>>();
    let (t, fr) = (col(0), col(1));
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert!(fr.iter().all(|&a| (0.0..=1.0).contains(&a)));
    let window = 20.0 * std::f64::consts::PI / 0.01;
    assert!(*t.last().unwrap() >= window * (1.0 - 1e-12));

    let first = std::fs::read(dir.path().join("trace.csv")).unwrap();
    let again = tempfile::tempdir().unwrap();
    assert!(flatqst(&args, again.path()).status.success());
    assert_eq!(first, std::fs::read(again.path().join("trace.csv")).unwrap());
}

#[test]
fn ordered_trace_reports_no_transfer() {
    let dir = tempfile::tempdir().unwrap();
    let o = flatqst(&["trace", "--W", "0", "--window", "500"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("no-transfer"));
    let (_, rows) = read_csv(&dir.path().join("trace.csv"));
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn ensemble_writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = flatqst(&["ensemble", "--samples", "12", "--window", "2000", "--bins", "4"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let (header, rows) = read_csv(&dir.path().join("records.csv"));
    assert_eq!(
        header,
        [
            "seed_index", "W", "N", "g", "eta1", "etaN", "Lambda", "Delta", "Csr", "eps1", "eps2",
            "deltaEps", "tau", "Fmax", "tStar", "flags", "Csr_eff", "deltaEps_full", "Csr_full"
        ]
    );
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[3][0], "3");

    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["count"], 12);
    assert_eq!(json["params"]["N"], 10);
    assert_eq!(json["params"]["samples"], 12);
    assert!(json["observables"]["Fmax"]["mean"].as_f64().unwrap() >= 0.5);
    let h = &json["histograms"]["Csr"];
    let edges: Vec<f64> = serde_json::from_value(h["edges"].clone()).unwrap();
    let density: Vec<f64> = serde_json::from_value(h["density"].clone()).unwrap();
    assert_eq!(edges.len(), 5);
    let integral: f64 = density.iter().enumerate().map(|(b, d)| d * (edges[b + 1] - edges[b])).sum();
    assert!((integral - 1.0).abs() < 1e-9);
}

#[test]
fn ordered_ensemble_row_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let o = flatqst(&["ensemble", "--samples", "1", "--W", "0", "--observable", "Csr"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let (header, rows) = read_csv(&dir.path().join("records.csv"));
    let at = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows[0][at("Lambda")].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[0][at("Csr")], "0");
    assert!(rows[0][at("flags")].split('|').any(|f| f == "no-transfer"));
    assert_eq!(rows[0][at("Fmax")], "NaN");
}

#[test]
fn sweep_has_mad_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = flatqst(
        &["sweep", "--W", "0.05,0.1,0.2", "--samples", "20", "--observable", "deltaEps,Csr"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let (header, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(
        header,
        ["N", "W", "count", "flagged", "failed", "deltaEps_g_mean", "deltaEps_g_mad", "Csr_mean", "Csr_mad"]
    );
    assert_eq!(rows.len(), 3);
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 3);
    assert_eq!(json[2]["params"]["W"], 0.2);
}

#[test]
fn scan_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = flatqst(&["scan", "--samples", "3", "--window", "1000", "--threads", "1"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let (header, rows) = read_csv(&dir.path().join("scan.csv"));
    assert_eq!(header, ["seed", "W", "N", "g", "Fmax", "tStar"]);
    assert_eq!(rows.len(), 3);
}

#[test]
fn config_file_fills_unset_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# ensemble settings\nN = 6\nsamples = 4\nW = 0.5\nobservable = Csr\n").unwrap();
    let o = flatqst(&["ensemble", "--config", cfg.to_str().unwrap(), "--samples", "2"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let (_, rows) = read_csv(&dir.path().join("records.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[1] == "0.5" && r[2] == "6"));
}

#[test]
fn validate_defaults_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = flatqst(&["validate", "--samples", "10"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn injected_asymmetry_fails_symmetry() {
    let dir = tempfile::tempdir().unwrap();
    let o = flatqst(&["validate", "--samples", "2", "--inject-asymmetry"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("FAIL symmetry")), "{text}");
    assert_eq!(text.matches("FAIL").count(), 1);
}

#[test]
fn tight_tolerance_reports_failures_without_crashing() {
    let dir = tempfile::tempdir().unwrap();
    let o = flatqst(&["validate", "--samples", "3", "--tol", "1e-15"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 9);
    assert!(String::from_utf8_lossy(&o.stderr).contains("failing invariants"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["bogus"][..],
        &["sweep", "--W", ","],
        &["trace", "--W", "3"],
        &["trace", "--N", "1"],
        &["trace", "--W", "0.1,0.2"],
        &["ensemble", "--samples", "0"],
        &["ensemble", "--dist", "cauchy"],
        &["trace", "--config", "/nonexistent/file"],
    ] {
        let o = flatqst(args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    let help = Command::new(env!("CARGO_BIN_EXE_flatqst")).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn strong_coupling_warns() {
    let dir = tempfile::tempdir().unwrap();
    let o = flatqst(&["trace", "--g", "0.2", "--window", "100"], dir.path());
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}
