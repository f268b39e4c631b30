//! End-to-end CLI tests: literals, subcommands, exit codes, reproducibility.

use std::io::Write;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_opplab"))
}

fn write_form(dir: &std::path::Path, name: &str, json: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(json.as_bytes()).unwrap();
    path
}

const Q0: &str = r#"{"radicand": 1, "coeffs": {"c22": [1, 1], "c13": [-2, 1]}}"#;
const Q_IRR: &str =
    r#"{"radicand": 2, "coeffs": {"c22": [1, 1], "c13": [-2, 1], "c23": [0, 1, 1, 1]}}"#;

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("Usage") || text.contains("usage"));
}

#[test]
fn count_command_reports_and_is_reproducible() {
    let dir = tempdir();
    let form = write_form(&dir, "q.json", Q_IRR);
    let run = || {
        let out = bin()
            .args(["count", "--form", form.to_str().unwrap(), "--a", "-1", "--b", "1", "--T", "40"])
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let first = run();
    let second = run();
    assert_eq!(first, second, "identical invocations must give identical bytes");
    let text = String::from_utf8_lossy(&first);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let raw = v["report"]["raw"].as_u64().unwrap();
    let modified = v["report"]["modified"].as_u64().unwrap();
    let lines = v["report"]["line_points"].as_u64().unwrap();
    let planes = v["report"]["plane_points"].as_u64().unwrap();
    assert_eq!(raw, modified + lines + planes);
    assert!(raw > 0);
}

#[test]
fn census_of_the_irrational_form() {
    let dir = tempdir();
    let form = write_form(&dir, "q.json", Q_IRR);
    let out = bin()
        .args(["census", "--form", form.to_str().unwrap(), "--radius", "30"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(v["lines"].as_array().unwrap().len(), 2);
    assert_eq!(v["planes"].as_array().unwrap().len(), 2);
    assert_eq!(v["line_census_truncated"], serde_json::Value::Bool(false));
}

#[test]
fn cq_surface_only_on_q0() {
    let dir = tempdir();
    let form = write_form(&dir, "q0.json", Q0);
    let out = bin()
        .args(["cq", "--form", form.to_str().unwrap(), "--method", "surface"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    let c = v["surface"]["value"].as_f64().unwrap();
    assert!((c - (4.0 + 2.0 * 2f64.ln())).abs() < 1e-5);
}

#[test]
fn verify_contraction_battery_rows() {
    let out = bin()
        .args(["verify", "contraction", "--which", "phi", "--trials", "10", "--seed", "1", "--t", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<&str> = text.trim().lines().collect();
    assert_eq!(rows.len(), 11); // header + 10 rows
    for row in &rows[1..] {
        assert!(row.ends_with("true"), "row should pass: {row}");
    }
}

#[test]
fn schedule_command() {
    let out = bin()
        .args(["schedule", "--B", "3", "--delta", "0.2", "--T", "1", "--t", "4"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    let s = v["s"].as_array().unwrap();
    assert_eq!(s.len(), 2);
    assert!((s[0].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert!((s[1].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(v["valid"], serde_json::Value::Bool(true));
}

#[test]
fn precondition_violations_exit_2() {
    let dir = tempdir();
    let form = write_form(&dir, "q.json", Q_IRR);
    // Empty window a ≥ b.
    let out = bin()
        .args(["count", "--form", form.to_str().unwrap(), "--a", "1", "--b", "-1", "--T", "10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // Malformed literal.
    let bad = write_form(&dir, "bad.json", r#"{"radicand": 12, "coeffs": {"c11": [1, 1]}}"#);
    let out = bin()
        .args(["census", "--form", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn resource_caps_exit_3() {
    let dir = tempdir();
    let form = write_form(&dir, "q.json", Q_IRR);
    let out = bin()
        .args(["dioph", "type", "--form", form.to_str().unwrap(), "--cap", "59"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn dioph_type_finds_exact_hit_for_rational_form() {
    let dir = tempdir();
    let form = write_form(&dir, "q0.json", Q0);
    let out = bin()
        .args(["dioph", "type", "--form", form.to_str().unwrap(), "--cap", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(v["c_min"].as_f64().unwrap(), 0.0);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempdir();
    let form = write_form(&dir, "q.json", Q_IRR);
    let out_path = dir.join("report.json");
    let out = bin()
        .args([
            "iq",
            "--form",
            form.to_str().unwrap(),
            "--a",
            "-1",
            "--b",
            "1",
            "--out",
            out_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let iq = v["I_Q"].as_f64().unwrap();
    assert!((iq - 5.0).abs() < 0.05, "I_Q = {iq}");
    // Report embeds the resolved config.
    assert!(v["config"]["eta"].is_number());
}

#[test]
fn lattice_literal_input() {
    let dir = tempdir();
    let lat = write_form(
        &dir,
        "lat.json",
        r#"{"basis": [[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.5]], "exact": false}"#,
    );
    let out = bin()
        .args(["alpha", "--lattice", lat.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert!((v["alpha"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn empty_battery_selection_exits_zero() {
    let out = bin().args(["battery", "--ids", ""]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(v["results"].as_array().unwrap().len(), 0);
    assert_eq!(v["all_pass"], serde_json::Value::Bool(true));
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("opplab-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
