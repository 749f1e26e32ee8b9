use std::path::PathBuf;
use std::process::{Command, Output};

fn walkpot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walkpot"))
        .args(args)
        .output()
        .expect("spawn walkpot")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("walkpot-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

/// Key columns must match exactly, values to `tol`; the err column is not pinned.
fn assert_matches_golden(out: &str, golden: &str, tol: f64) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(golden);
    let want = std::fs::read_to_string(&path).unwrap();
    let got: Vec<&str> = out.lines().collect();
    let want: Vec<&str> = want.lines().collect();
    assert_eq!(got.len(), want.len(), "row count differs from {golden}");
    assert_eq!(got[0], want[0]);
    for (g, w) in got.iter().zip(&want).skip(1) {
        let g: Vec<&str> = g.split(',').collect();
        let w: Vec<&str> = w.split(',').collect();
        assert_eq!(g[..4], w[..4], "keys differ");
        let (gv, wv): (f64, f64) = (g[4].parse().unwrap(), w[4].parse().unwrap());
        assert!((gv - wv).abs() <= tol, "{g:?} vs {w:?}");
    }
}

#[test]
fn srw_exit_matches_golden() {
    let o = walkpot(&["exit", "--law", "corpus:srw", "--N-ladder", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_matches_golden(&stdout(&o), "srw_exit_10.csv", 1e-12);
}

#[test]
fn srw_kernel_matches_golden() {
    let o = walkpot(&["kernel", "--law", "corpus:srw", "--xmax", "5", "--window", "256"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_matches_golden(&stdout(&o), "srw_kernel_5.csv", 1e-10);
}

#[test]
fn describe_reports_regimes() {
    let o = walkpot(&["describe", "--law", "corpus:srw", "--window", "256"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["sigma2"], 1.0);
    assert!((v["EZ"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(v["regime"], "finite-variance");

    let o = walkpot(&["describe", "--law", "corpus:heavy15", "--window", "512"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["sigma2"], "inf");
    assert_eq!(v["A"], 1.0);
    assert_eq!(v["regime"], "heavy-left");
}

#[test]
fn law_file_round_trip_and_outputs() {
    let d = tmp("law");
    let law = d.join("srw.json");
    std::fs::write(&law, r#"{"core": {"-1": "0.5", "1": "0.5"}, "left_tail": {"kind": "none"}}"#).unwrap();
    let o = walkpot(&["ladder", "--law", law.to_str().unwrap(), "--xmax", "4", "--window", "64", "--out", d.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("ladder.csv")).unwrap();
    let fr3: f64 = csv
        .lines()
        .find(|l| l.starts_with("f_r,3,"))
        .and_then(|l| l.split(',').nth(4))
        .unwrap()
        .parse()
        .unwrap();
    assert!((fr3 - 6.0).abs() < 1e-10, "{fr3}");
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("ladder.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["version"], 1);
}

#[test]
fn malformed_inputs_exit_2() {
    let d = tmp("bad");
    let bad = d.join("bad.json");
    std::fs::write(&bad, "{\n  \"core\": {\"-1\": \"0.5\",\n  \"1\": 0.5\n").unwrap();
    let o = walkpot(&["describe", "--law", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line") && stderr(&o).contains("column"), "{}", stderr(&o));

    let skew = d.join("skew.json");
    std::fs::write(&skew, r#"{"core": {"-1": "0.4", "1": "0.6"}}"#).unwrap();
    assert_eq!(walkpot(&["describe", "--law", skew.to_str().unwrap()]).status.code(), Some(2));

    for args in [
        vec!["verify", "--law", "corpus:srw", "--suite", "bogus"],
        vec!["exit", "--law", "corpus:srw", "--N-ladder", "10,5"],
        vec!["kernel", "--law", "corpus:srw", "--tol", "-1"],
        vec!["kernel", "--law", "/nonexistent/law.json"],
        vec!["simulate", "--law", "corpus:srw", "--rule", "sideways:3"],
        vec!["kernel"],
    ] {
        let o = walkpot(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn srw_verify_all_passes_tightly() {
    let o = walkpot(&["verify", "--law", "corpus:srw", "--window", "512", "--N-ladder", "16,64"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    for line in out.lines().skip(1) {
        let residual: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(residual <= 1e-10, "{line}");
    }
}

#[test]
fn heavy_tail_half_line_suite_passes() {
    let o = walkpot(&["verify", "--law", "corpus:heavy15", "--suite", "eqPS"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn injected_fault_is_named() {
    let o = walkpot(&[
        "verify", "--law", "corpus:srw", "--window", "256", "--suite", "half-line",
        "--inject-fault", "potential:3:1e-3",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("half-line-potential"), "{}", stderr(&o));
}

#[test]
fn simulate_is_byte_reproducible() {
    let args = [
        "simulate", "--law", "corpus:heavy15", "--start", "4", "--rule", "exit:0:16", "--paths", "5000",
        "--seed", "11",
    ];
    let a = walkpot(&args);
    let b = walkpot(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let mut other = args;
    other[10] = "12";
    let c = walkpot(&other);
    assert!(c.status.success(), "{}", stderr(&c));
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn classify_heavy_law() {
    let o = walkpot(&["classify", "--law", "corpus:heavy15"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let alpha = v["alpha_hat"].as_f64().unwrap();
    let limit = v["spitzer_limit"].as_f64().unwrap();
    assert!((alpha - 1.5).abs() < 0.05, "{alpha}");
    assert!((limit - 2.0 / 3.0).abs() < 0.03, "{limit}");
}
