use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

fn resist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resist")).args(args).output().expect("spawn resist")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const CENTRE_CONE: &str = r#"{"type":"cone","apex":[0,0,-1]}"#;

#[test]
fn eval_centre_cone() {
    let o = resist(&["eval", "--body", CENTRE_CONE, "--M", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], "1");
    assert!((v["total"].as_f64().unwrap() - PI / 2.0).abs() < 1e-13);
    assert_eq!(v["delta"].as_f64(), Some(1.0));
}

#[test]
fn eval_reads_body_files_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let body = dir.path().join("body.json");
    std::fs::write(&body, r#"{"type":"polygon","k":3,"rho":0.5,"depth":1}"#).unwrap();
    let out = dir.path().join("parts.csv");
    let facets = dir.path().join("facets.csv");
    let o = resist(&[
        "eval", "--body", body.to_str().unwrap(), "--delta", "0.5", "--format", "csv",
        "--out", out.to_str().unwrap(), "--facets", facets.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("id,kind,value\n"));
    let total: f64 = text.lines().last().unwrap().rsplit(',').next().unwrap().parse().unwrap();
    let parts: f64 = text
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with("total"))
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - parts).abs() < 1e-12);
    assert!(std::fs::metadata(facets).unwrap().len() > 0);
}

#[test]
fn validation_errors_exit_2() {
    assert_eq!(resist(&["eval", "--body", CENTRE_CONE]).status.code(), Some(2));
    assert_eq!(resist(&["eval", "--body", CENTRE_CONE, "--M", "1", "--delta", "1"]).status.code(), Some(2));
    assert_eq!(resist(&["eval", "--body", CENTRE_CONE, "--M", "1", "--bogus"]).status.code(), Some(2));
    assert_eq!(resist(&["eval", "--body", r#"{"type":"cone","apex":[2,0,-1]}"#, "--M", "1"]).status.code(), Some(2));
    assert_eq!(resist(&["frobnicate"]).status.code(), Some(2));
    let o = resist(&["eval", "--body", CENTRE_CONE, "--M", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn non_convergence_exits_3() {
    let o = resist(&["optimize", "--kind", "kfold", "--M", "1", "--k", "3", "--knots", "8", "--max-iter", "2"]);
    assert_eq!(o.status.code(), Some(3));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["converged"], false);
}

#[test]
fn verify_perturbation_suite() {
    let o = resist(&["verify", "--suite", "perturbation"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 2, "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn output_is_deterministic() {
    let args = ["perturb", "--x0", "0.3", "--y0", "0.2", "--m1", "0.5", "--delta", "0.5"];
    let a = resist(&args);
    let b = resist(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("eps,resistance,variation,c3_fit,c3_closed\n"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn skeleton_export() {
    let o = resist(&["perturb", "--x0", "0.3", "--y0", "0.2", "--m1", "0.5", "--M", "1", "--skeleton", "0"]);
    let text = stdout(&o);
    assert!(text.contains("node,P2,1.0,0.0,,"), "{text}");
    for name in ["P0", "P1", "phi+", "phi-"] {
        assert!(text.contains(&format!("node,{name},")));
    }
}

#[test]
fn level_sets_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("levels.csv");
    let o = resist(&["levelsets", "--heights", "0.25,0.5,1,inf", "--samples", "20", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out).unwrap();
    let heights: std::collections::BTreeSet<&str> =
        text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(heights.len(), 4);
    assert!(heights.contains("inf"));
}

#[test]
fn criterion_on_polygon_and_single_cone() {
    let o = resist(&["criterion", "--body", r#"{"type":"polygon","k":4,"rho":0.5,"depth":1}"#, "--M", "1"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["flags"], "CN");
    assert_eq!(v["cones"].as_array().unwrap().len(), 4);
    let o = resist(&["criterion", "--cone", "0,0,1,0,6.283185307179586", "--M", "1", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    // the centred cone: Z₀ = -1 on the whole circle
    assert!(stdout(&o).contains("NON_OPTIMAL"));
}

#[test]
fn config_file_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, format!(r#"{{"command":"eval","body":{},"M":2}}"#, serde_json::to_string(CENTRE_CONE).unwrap()))
        .unwrap();
    let o = resist(&["--config", cfg.to_str().unwrap()]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["total"].as_f64().unwrap() - PI / 1.25).abs() < 1e-13);
    let o = resist(&["eval", "--config", cfg.to_str().unwrap(), "--M", "1"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["total"].as_f64().unwrap() - PI / 2.0).abs() < 1e-13);
}

#[test]
fn screwdriver_optimum_and_audit() {
    let o = resist(&["optimize", "--kind", "screwdriver", "--limit"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["argument"][0].as_f64().unwrap() - 0.55527).abs() < 1e-3);
    let o = resist(&["audit", "--reference", "e1", "--format", "csv"]);
    assert!(stdout(&o).lines().nth(1).unwrap().contains("NON_OPTIMAL"));
}

#[test]
fn tables_row() {
    let o = resist(&["tables", "--rows", "1.0", "--k", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let j: f64 = row[2].parse().unwrap();
    assert!((j / 1.1377294 - 1.0).abs() < 0.01);
    assert_eq!(row[4], "CN");
}
