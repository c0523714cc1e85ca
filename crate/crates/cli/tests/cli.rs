use std::path::Path;
use std::process::{Command, Output};

fn dioph(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dioph")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn construct_exports_one_file_per_member() {
    let t = tempfile::tempdir().unwrap();
    let o = dioph(t.path(), &["construct", "--variant", "ch5", "--n", "3", "--theta", "5", "--betas", "3,4", "--N-max", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<_> = std::fs::read_dir(t.path().join("family")).unwrap().collect();
    assert_eq!(files.len(), 16);
    let d = json(&t.path().join("descriptor.json"));
    assert_eq!(d["descriptor"]["predictions"], serde_json::json!([[1, "4"], [2, "12"]]));
    let f = json(&t.path().join("family/ch5_e1_N8.json"));
    assert_eq!(f["subspace"]["e"], 1);
    assert_eq!(f["config"]["seed"], 1);
}

#[test]
fn ch8_descriptor_is_in_theorem_mode() {
    let t = tempfile::tempdir().unwrap();
    let o = dioph(t.path(), &["construct", "--variant", "ch8", "--d", "2", "--q", "2", "--alpha", "36", "--N-max", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&t.path().join("descriptor.json"));
    assert_eq!(d["mode_flags"], "theorem");
    assert_eq!(d["descriptor"]["violations"], serde_json::json!([]));
}

#[test]
fn golden_bound_violation_is_a_config_error() {
    let t = tempfile::tempdir().unwrap();
    let o = dioph(t.path(), &["construct", "--variant", "ch5", "--n", "3", "--betas", "2,4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2+(√5−1)/2"));
    let o = dioph(t.path(), &["--mode", "relaxed", "construct", "--variant", "ch5", "--n", "3", "--betas", "2,4", "--N-max", "2"]);
    assert!(o.status.success());
    assert_eq!(json(&t.path().join("descriptor.json"))["mode_flags"], "relaxed+violated");
}

#[test]
fn config_errors_carry_field_paths() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("run.toml");
    std::fs::write(&cfg, "[construction]\nvariant = \"ch5\"\nn = 3\nbetas = [\"3\", \"x/2\"]\n").unwrap();
    let o = dioph(t.path(), &["--config", cfg.to_str().unwrap(), "construct"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    assert!(err.contains("construction") && err.contains("x/2"), "{err}");
    std::fs::write(&cfg, "[measure]\nn_min = 2\ne = [1, \"two\"]\n").unwrap();
    let o = dioph(t.path(), &["--config", cfg.to_str().unwrap(), "verify"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    assert!(err.contains("measure.e[1]"), "{err}");
}

#[test]
fn empty_family_is_rejected() {
    let t = tempfile::tempdir().unwrap();
    let o = dioph(t.path(), &["measure", "--variant", "ch5", "--n", "3", "--betas", "3,4", "--N-min", "5", "--N-max", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn measure_and_report_from_a_toml_config() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("run.toml");
    std::fs::write(&cfg, "seed = 1\n[construction]\nvariant = \"ch5\"\nn = 3\ntheta = 5\nbetas = [\"3\", \"4\"]\n[measure]\nn_min = 6\nn_max = 9\ne = [1, 2]\n").unwrap();
    let o = dioph(t.path(), &["--config", cfg.to_str().unwrap(), "measure"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(t.path().join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
    assert!(csv.lines().skip(1).all(|l| l.ends_with("theorem;bits=256")));
    let o = dioph(t.path(), &["report"]);
    assert!(o.status.success());
    let report = std::fs::read_to_string(t.path().join("report.csv")).unwrap();
    let rows: Vec<Vec<&str>> = report.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for (row, want) in rows.iter().zip(["4", "12"]) {
        assert_eq!(row[8], want);
        assert!(row[10].parse::<f64>().unwrap().abs() < 0.01, "{row:?}");
    }
}

#[test]
fn json_config_matches_toml() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("run.json");
    std::fs::write(&cfg, r#"{"construction": {"variant": "ch5", "n": 3, "betas": ["3", "4"]}, "measure": {"n_max": 2}}"#).unwrap();
    let o = dioph(&t.path().join("j"), &["--config", cfg.to_str().unwrap(), "construct"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = dioph(&t.path().join("k"), &["construct", "--variant", "ch5", "--n", "3", "--betas", "3,4", "--N-max", "2"]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(t.path().join("j/descriptor.json")).unwrap(), std::fs::read(t.path().join("k/descriptor.json")).unwrap());
}

#[test]
fn enumerate_sqrt2_finds_convergents() {
    let t = tempfile::tempdir().unwrap();
    let o = dioph(t.path(), &["enumerate", "--n", "2", "--bound", "100000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(t.path().join("records.csv")).unwrap();
    for c in ["(1,1)", "(2,3)", "(5,7)", "(12,17)", "(29,41)", "(70,99)", "(169,239)", "(408,577)", "(985,1393)"] {
        assert!(csv.contains(&format!(",{c},")), "{c} missing");
    }
}

#[test]
fn verify_exact_suite_passes() {
    let t = tempfile::tempdir().unwrap();
    let o = dioph(t.path(), &["verify", "--suite", "exact", "--cases", "40"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&t.path().join("verify.json"));
    assert_eq!(v["passed"], true);
    assert_eq!(v["checks"].as_array().unwrap().len(), 7);
    let o = dioph(t.path(), &["verify", "--suite", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn measure_with_duality_pairs_columns() {
    let t = tempfile::tempdir().unwrap();
    let o = dioph(t.path(), &["measure", "--variant", "ch5", "--n", "3", "--betas", "3,4", "--N-max", "3", "--e", "1", "--duality"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&t.path().join("records.json"));
    let rows = r["sequences"][0]["duality"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let gap: f64 = row["relative_gap"].as_str().unwrap().parse().unwrap();
        assert!(gap < 1e-30);
    }
}
