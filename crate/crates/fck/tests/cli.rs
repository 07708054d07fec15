use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fck")).args(args).env_remove("FCK_ORDER").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fck-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn partitions_listing_and_count() {
    let o = fck(&["--format", "plain", "partitions", "enum", "--n", "3", "--family", "nc"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().collect::<Vec<_>>(), ["{1,2,3}", "{1,2|3}", "{1,3|2}", "{1|2,3}", "{1|2|3}"]);
    let o = fck(&["partitions", "enum", "--n", "6", "--family", "nc", "--count-only"]);
    assert_eq!(stdout(&o).trim(), "132");
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(fck(&["partitions", "enum", "--n", "x"]).status.code(), Some(2));
    assert_eq!(fck(&["dist", "make", "--law", "poisson", "--params", "1"]).status.code(), Some(2));
    let o = fck(&["lukacs", "th1", "--alpha", "1", "--b", "1/2", "--c", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bc > 1"));
}

#[test]
fn law_file_round_trip() {
    let path = tmp("poisson.json");
    let p = path.to_str().unwrap();
    let o = fck(&["--order", "6", "dist", "make", "--law", "poisson", "--params", "1/2,3", "--out", p]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let law: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(law["moments"][1], "3/2");
    assert_eq!(law["free_cumulants"][2], "3/4");
    let o = fck(&["--order", "6", "dist", "transform", "--in", p, "--which", "m"]);
    assert_eq!(o.status.code(), Some(0));
    let m: Value = serde_json::from_str(&stdout(&o)).unwrap();
    // M(z) = Σ_{n≥1} φ(U^n) z^n
    assert_eq!(m["coeffs"][1], law["moments"][1]);
    assert_eq!(m["coeffs"][3], law["moments"][3]);
}

#[test]
fn cumulant_table_round_trip() {
    let moments = tmp("moments.json");
    let free = tmp("free.json");
    std::fs::write(
        &moments,
        r#"{"kind":"moments","backend":"exact","entries":{"x":"1","y":"2","x x":"3","x y":"1/2","y x":"1/2","y y":"5"}}"#,
    )
    .unwrap();
    let (m, f) = (moments.to_str().unwrap(), free.to_str().unwrap());
    let o = fck(&["cumulants", "convert", "--kind", "free", "--dir", "m2c", "--n", "2", "--in", m, "--out", f]);
    assert_eq!(o.status.code(), Some(0));
    let kappa: Value = serde_json::from_str(&std::fs::read_to_string(&free).unwrap()).unwrap();
    assert_eq!(kappa["entries"]["x y"], "-3/2");
    let o = fck(&["cumulants", "convert", "--kind", "free", "--dir", "c2m", "--n", "2", "--in", f]);
    let back: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let orig: Value = serde_json::from_str(&std::fs::read_to_string(&moments).unwrap()).unwrap();
    assert_eq!(back["entries"], orig["entries"]);
}

#[test]
fn verify_suite_passes_at_order_eight() {
    let o = fck(&["--order", "8", "verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert!(rows.len() >= 40, "{} rows", rows.len());
    assert!(rows.iter().all(|r| r["verdict"] == "pass"));
    let again = fck(&["--order", "8", "verify"]);
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn inadmissible_override_exits_one() {
    let o = fck(&["verify", "--scope", "lukacs", "--alpha", "1", "--b", "1/2", "--c", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ERROR lukacs.000 regression system: α = 1, b = 1/2, c = 1"), "{err}");
}
