use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn airy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_airy-graph"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const LOOP: &str = r#"{"vertices":["v"],"edges":[{"id":"e1","a":0.0,"b":1.0,"from":"v","to":"v","alpha":1.0,"beta":0.0}]}"#;

const STAR: &str = r#"{"vertices":["c","l1","l2","l3"],"edges":[
  {"id":"s1","a":-1.0,"b":0.0,"from":"l1","to":"c","alpha":1.0,"beta":0.5},
  {"id":"s2","a":0.0,"b":0.7,"from":"c","to":"l2","alpha":2.0,"beta":-1.0},
  {"id":"s3","a":0.0,"b":1.3,"from":"c","to":"l3","alpha":0.5,"beta":0.0}]}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn check_builtins() {
    for name in ["loop_periodic", "two_halflines_unitary"] {
        let out = airy(&["check", "--builtin", name]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stderr(&out));
        let report = stdout_json(&out);
        assert_eq!(report["global"], "unitary");
        assert_eq!(report["consistent"], true);
        assert!(report["vertices"][0]["unitary"]["residual_norms"]["form_residual"].is_number());
    }
}

#[test]
fn scaled_identity_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "g.json", LOOP);
    let two = "[2,0],[0,0],[0,0],[0,0],[2,0],[0,0],[0,0],[0,0],[2,0]";
    let bc = write(
        dir.path(),
        "bc.json",
        &format!(r#"{{"vertex_blocks":{{"v":{{"rows":3,"cols":3,"entries":[{two}]}}}}}}"#),
    );
    let out = airy(&["check", "--graph", &graph, "--bc", &bc]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["global"], "neither");

    let out = airy(&["simulate", "--graph", &graph, "--bc", &bc, "--n", "16", "--scheme", "expm", "--dt", "1", "--t-end", "1",
        "--out", &dir.path().join("blowup").to_string_lossy()]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("non-finite"));
}

#[test]
fn malformed_input_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "g.json", "{\"vertices\": [\"v\"],\n \"edges\": [");
    let out = airy(&["check", "--graph", &graph, "--bc", &graph]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
    assert_eq!(airy(&["check", "--builtin", "nonsense"]).status.code(), Some(1));
    assert_eq!(airy(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn generate_round_trips_through_check() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "g.json", LOOP);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (kind, target) in [("unitary", &a), ("unitary", &b)] {
        let out = airy(&["generate", "--graph", &graph, "--kind", kind, "--seed", "7", "--out", &target.to_string_lossy()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let out = airy(&["check", "--graph", &graph, "--bc", &a.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["global"], "unitary");

    let out = airy(&["generate", "--graph", &graph, "--kind", "bicontractive", "--seed", "7", "--strictness", "0.4"]);
    assert_eq!(out.status.code(), Some(0));
    let bc = write(dir.path(), "bi.json", &String::from_utf8_lossy(&out.stdout));
    let out = airy(&["check", "--graph", &graph, "--bc", &bc]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["global"], "bi_contractive");
}

#[test]
fn generate_rejects_unbalanced_vertices() {
    let out = airy(&["generate", "--builtin", "star(0,3)", "--kind", "unitary"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no Krein-unitary exists"), "{}", stderr(&out));
    assert!(stderr(&out).contains("dim mismatch 0 vs 9"), "{}", stderr(&out));
}

#[test]
fn simulate_writes_records() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("fourier");
    let out = airy(&["simulate", "--builtin", "loop_periodic", "--grid", "fourier", "--n", "32", "--scheme", "expm",
        "--dt", "1e-4", "--t-end", "0.01", "--out", &prefix.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = stdout_json(&out);
    assert!((summary["final_norm_ratio"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
    assert!(prefix.with_extension("csv").exists());
    let record: Value = serde_json::from_str(&fs::read_to_string(prefix.with_extension("json")).unwrap()).unwrap();
    assert_eq!(record["times"].as_array().unwrap().len(), 101);

    let prefix = dir.path().join("diag");
    let out = airy(&["simulate", "--builtin", "loop_diag(1,0)", "--n", "24", "--init", "gaussian(0.5,0.1)",
        "--dt", "1e-4", "--t-end", "0.02", "--out", &prefix.to_string_lossy(), "--dump", &dir.path().join("mtx").to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout_json(&out)["final_norm_ratio"].as_f64().unwrap() < 1.0);
    let record: Value = serde_json::from_str(&fs::read_to_string(prefix.with_extension("json")).unwrap()).unwrap();
    let norms: Vec<f64> = record["norm2"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(norms.windows(2).all(|w| w[1] <= w[0]));
    assert!(dir.path().join("mtx").join("generator.mtx").exists());

    let prefix = dir.path().join("still");
    let out = airy(&["simulate", "--builtin", "loop_periodic", "--n", "16", "--t-end", "0", "--out", &prefix.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["final_norm_ratio"], 1.0);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let prefix = dir.path().join(name);
        let out = airy(&["simulate", "--builtin", "two_halflines_unitary(4)", "--n", "16", "--init", "gaussian(0.5,0.1)",
            "--dt", "1e-3", "--t-end", "0.01", "--out", &prefix.to_string_lossy()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        fs::read(prefix.with_extension("csv")).unwrap()
    };
    assert_eq!(run("one"), run("two"));
}

#[test]
fn simulate_reads_nodal_files() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<[f64; 2]> = (0..17).map(|j| [(j as f64 / 16.0 * std::f64::consts::PI).sin(), 0.0]).collect();
    let init = write(dir.path(), "u0.json", &serde_json::json!({ "e1": values }).to_string());
    let prefix = dir.path().join("nodal").to_string_lossy().into_owned();
    let at = format!("@{init}");
    let out = airy(&["simulate", "--builtin", "loop_periodic", "--n", "16", "--init", &at, "--dt", "1e-3", "--t-end", "0.01", "--out", &prefix]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout_json(&out)["projection_residual"].as_f64().unwrap() > 0.0);

    let short = write(dir.path(), "short.json", r#"{"e1": [[1, 0]]}"#);
    let at = format!("@{short}");
    let out = airy(&["simulate", "--builtin", "loop_periodic", "--n", "16", "--init", &at, "--out", &prefix]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_form() {
    let dir = tempfile::tempdir().unwrap();
    let star = write(dir.path(), "star.json", STAR);
    let out = airy(&["verify-form", "--builtin", "loop_periodic", "--samples", "100"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout_json(&out)["max_residual"].as_f64().unwrap() <= 1e-8);
    let out = airy(&["verify-form", "--graph", &star, "--samples", "100"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = airy(&["verify-form", "--builtin", "loop_periodic", "--quad-order", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("quadrature order too low"));
}

#[test]
fn convergence_tables() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("conv");
    let out = airy(&["convergence", "--degrees", "16,24", "--dts", "2e-4,1e-4", "--t-end", "0.002", "--out", &prefix.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let temporal = fs::read_to_string(dir.path().join("conv_temporal.csv")).unwrap();
    let ratio: f64 = temporal.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((3.5..=4.5).contains(&ratio), "{temporal}");
    assert!(dir.path().join("conv_spatial.csv").exists());
    let out = airy(&["convergence", "--builtin", "loop_diag(1,0)"]);
    assert_eq!(out.status.code(), Some(1));
}
