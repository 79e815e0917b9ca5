use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn nodal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nodal")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn verify_small_trees_passes() {
    let out = nodal(&["verify", "--max-vertices", "6"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["summary"]["failed"], 0);
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["status"] != "fail"));
    assert!(checks.iter().any(|c| c["status"] == "skipped"));
}

#[test]
fn verify_is_reproducible_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let args = ["verify", "--max-vertices", "4", "--N", "128", "--seed", "5", "--format", "csv", "--out", out_dir];
    let first = nodal(&args);
    let second = Command::new(env!("CARGO_BIN_EXE_nodal")).args(args).env("NTL_THREADS", "1").output().unwrap();
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    let csv = fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert_eq!(csv.as_bytes(), first.stdout.as_slice());
    assert!(csv.starts_with("id,status,claim,detail\n"));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 5);
}

#[test]
fn trees_enumerate_six() {
    let out = nodal(&["trees", "enumerate", "--n", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["count"], 6);
    assert_eq!(v["trees"].as_array().unwrap().len(), 6);
    assert!(v["trees"].as_array().unwrap().iter().all(|t| t["vertices"].as_array().unwrap().len() == 6));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(nodal(&["bogus"]).status.code(), Some(2));
    assert_eq!(nodal(&["trees", "enumerate"]).status.code(), Some(2));
    assert_eq!(nodal(&["trees", "enumerate", "--n", "11"]).status.code(), Some(2));
    assert_eq!(nodal(&["mobius", "decompose", "--matrix", "1,2,2,4"]).status.code(), Some(2));
    assert_eq!(nodal(&["aut", "analyze", "/nonexistent/tree.json"]).status.code(), Some(2));
    assert_eq!(nodal(&["verify", "--max-vertices", "11"]).status.code(), Some(2));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_nodal"))
        .args(["trees", "enumerate", "--n", "3"])
        .env("NTL_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn tree_commands() {
    let dir = tempfile::tempdir().unwrap();
    let star = dir.path().join("star.json");
    fs::write(&star, r#"{"vertices":[0,1,2,3],"edges":[[0,1],[0,2],[0,3]]}"#).unwrap();
    let star = star.to_str().unwrap();

    let aut = json(&nodal(&["aut", "analyze", star]));
    assert_eq!(aut["order"], 6);
    assert_eq!(aut["involution_midpoint"], Value::Null);
    assert_eq!(aut["stabilizers"]["0"]["structure"]["order"], 6);

    let order = json(&nodal(&["order", "compute", star, "--tips", "1,2,3"]));
    assert_eq!(order["vertex_order"], serde_json::json!([1, 0, 2, 3]));

    let fold = dir.path().join("fold.json");
    fs::write(
        &fold,
        r#"{"domain":{"vertices":[0,1,2],"edges":[[0,1],[1,2]]},
            "codomain":{"vertices":[0,1],"edges":[[0,1]]},
            "map":{"0":0,"1":1,"2":0}}"#,
    )
    .unwrap();
    let m = json(&nodal(&["morphism", "check", fold.to_str().unwrap()]));
    assert_eq!(m["premorphism"], true);
    assert_eq!(m["morphism"], false);
    assert_eq!(m["flipped_witness"], serde_json::json!([0, 1, 2]));
}

#[test]
fn mobius_commands() {
    let k = json(&nodal(&["mobius", "decompose", "--matrix", "2,1+i,0,0.5"]));
    assert!(k["residual"].as_f64().unwrap() < 1e-12);
    assert!(k["a"].as_f64().unwrap() > 0.0 && k["a"].as_f64().unwrap() <= 1.0);

    let c = json(&nodal(&["mobius", "classify", "--group", "D4"]));
    assert_eq!(c["kind"], serde_json::json!({ "dihedral": 4 }));
    assert_eq!(c["order"], 8);
    let c = json(&nodal(&["mobius", "classify", "--group", "icosahedral"]));
    assert_eq!(c["element_orders"], serde_json::json!({ "1": 1, "2": 15, "3": 20, "5": 24 }));

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c3.json");
    let (s, h) = (3f64.sqrt() / 2.0, 0.5);
    // Rotation by 2π/3 about the z-axis, as an SU(2) matrix.
    let group = format!(r#"{{"generators":[{{"a":[{h},{s}],"b":[0,0],"c":[0,0],"d":[{h},{}]}}]}}"#, -s);
    fs::write(&file, group).unwrap();
    let c = json(&nodal(&["mobius", "classify", "--group", file.to_str().unwrap()]));
    assert_eq!(c["kind"], serde_json::json!({ "cyclic": 3 }));
}

#[test]
fn moduli_chart_reads_cross_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("config.json");
    fs::write(
        &file,
        r#"{"vertices":[0,1],"edges":[[0,1]],"n":5,"labels":{"1":0,"2":0,"3":1,"4":1,"5":1},
            "points":{"0":[[0,0],[1,0],"inf"],"1":[[[0,0],[1,0]],[2,0],[3,1],[0.5,-2]]}}"#,
    )
    .unwrap();
    let out = nodal(&["moduli", "chart", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let w = &json(&out)["w"];
    assert_eq!(w["0"], serde_json::json!({}));
    // (0 : 2 : 3+i : 1/2-2i) = (7 - 45i)/122
    let z = &w["1"]["4"];
    assert!((z[0].as_f64().unwrap() - 7.0 / 122.0).abs() < 1e-12);
    assert!((z[1].as_f64().unwrap() + 45.0 / 122.0).abs() < 1e-12);
}

#[test]
fn energy_experiment_outputs() {
    let out = nodal(&["energy", "experiment", "--map", "inclusion", "--R", "1", "--steps", "8", "--N", "64", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 9);
    assert!(csv.starts_with("n,a,energy\n"));

    let out = nodal(&["energy", "experiment", "--N", "64"]);
    let v = json(&out);
    assert_eq!(v["report"]["verdict"], "pass");
    let p = v["report"]["exponent"].as_f64().unwrap();
    assert!((1.8..=2.2).contains(&p));

    assert_eq!(nodal(&["energy", "experiment", "--map", "constant", "--N", "64"]).status.code(), Some(2));
}
