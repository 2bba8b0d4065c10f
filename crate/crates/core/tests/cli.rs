mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use common::*;
use serde_json::Value;

use realnorm::curve::build_curve;
use realnorm::differential::SingularPart;
use realnorm::flow::integral::{critical_values, CriticalValueOptions, LocalPrimitive};
use realnorm::flow::ray::FlowContext;
use realnorm::flow::zeros::find_zeros;
use realnorm::io::svg::superlevel_components;
use realnorm::rn::solve_rn;

fn run(input: &Path, out: &Path, extra: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_realnorm"))
        .arg("--input")
        .arg(input)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_job(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn rn_job_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let job = write_job(dir.path(), "rn.json", r#"{"schema":"realnorm/1","command":"rn","curve":[-1,0,1],"singular":[1]}"#);
    let (code, _) = run(&job, &dir.path().join("out"), &[]);
    assert_eq!(code, 0);
    let doc = read(&dir.path().join("out/rn.json"));
    assert!(doc["result"]["certificate"].as_f64().unwrap() < 1e-9);
    for key in ["input_sha256", "version", "tolerances", "seed"] {
        assert!(doc.get(key).is_some(), "{key}");
    }
}

#[test]
fn zeros_job_lists_four_zeros_at_genus_two() {
    let dir = tempfile::tempdir().unwrap();
    let job = write_job(
        dir.path(),
        "z.json",
        r#"{"schema":"realnorm/1","command":"zeros","curve":[[0,0],[1,0],[-0.9,0.7],[0.4,-1.1],[1.6,0.9]],"singular":[[1,0.3]]}"#,
    );
    let (code, _) = run(&job, &dir.path().join("out"), &[]);
    assert_eq!(code, 0);
    let doc = read(&dir.path().join("out/zeros.json"));
    assert_eq!(doc["result"]["zeros"].as_array().unwrap().len(), 4);
    assert!(dir.path().join("out/zeros.svg").exists());
}

#[test]
fn malformed_input_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    for body in ["{not json", r#"{"schema":"other/9","command":"rn","curve":[-1,0,1],"singular":[1]}"#, r#"{"schema":"realnorm/1","command":"rn","curve":[-1,0,1],"singular":[1],"tolerances":{"quad_rel":-1}}"#] {
        let job = write_job(dir.path(), "bad.json", body);
        let (code, err) = run(&job, &dir.path().join("out"), &[]);
        assert_eq!(code, 1);
        assert!(err.contains("SchemaError"), "{err}");
    }
}

#[test]
fn domain_and_numerical_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let job = write_job(dir.path(), "dup.json", r#"{"schema":"realnorm/1","command":"rn","curve":[0,0,1],"singular":[1]}"#);
    let (code, err) = run(&job, &dir.path().join("out"), &[]);
    assert_eq!(code, 1);
    assert!(err.contains("DuplicateBranchPoint"));
    let doc = read(&dir.path().join("out/rn.json"));
    assert_eq!(doc["status"], "error");
    assert_eq!(realnorm::io::job::exit_code(&realnorm::Error::IllConditioned(1e13)), 2);
}

#[test]
fn no_svg_flag_suppresses_plots() {
    let dir = tempfile::tempdir().unwrap();
    let job = write_job(dir.path(), "g.json", r#"{"schema":"realnorm/1","command":"graph","curve":[[-1,0.1],[0.2,-0.3],[1.1,0.2]],"singular":[[1,0.4]]}"#);
    let (code, _) = run(&job, &dir.path().join("out"), &["--no-svg"]);
    assert_eq!(code, 0);
    assert!(!dir.path().join("out/graph.svg").exists());
}

#[test]
fn interrupted_walk_resumes_to_the_same_result() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"schema":"realnorm/1","command":"leafwalk","curve":[[0,0],[1,0],[-0.9,0.7],[0.4,-1.1],[1.6,0.9]],"singular":[[1,0.3]],"walk":{"steps":4,"step_size":0.002}}"#;
    let job = write_job(dir.path(), "w.json", body);
    let full = dir.path().join("full");
    assert_eq!(run(&job, &full, &[]).0, 0);
    let part = dir.path().join("part");
    fs::create_dir_all(&part).unwrap();
    let lines: Vec<String> = fs::read_to_string(full.join("leafwalk.jsonl")).unwrap().lines().map(String::from).collect();
    assert_eq!(lines.len(), 4);
    // Two complete lines and a torn third one.
    let torn = format!("{}\n{}\n{}", lines[0], lines[1], &lines[2][..lines[2].len() / 2]);
    fs::write(part.join("leafwalk.jsonl"), torn).unwrap();
    assert_eq!(run(&job, &part, &[]).0, 0);
    assert_eq!(fs::read(full.join("leafwalk.json")).unwrap(), fs::read(part.join("leafwalk.json")).unwrap());
    assert_eq!(fs::read(full.join("leafwalk.jsonl")).unwrap(), fs::read(part.join("leafwalk.jsonl")).unwrap());
}

#[test]
fn high_levels_form_n_petals() {
    for n in 1..=3 {
        let curve = build_curve(&[c(-1.0, 0.1), c(0.2, -0.3), c(1.1, 0.2)]).unwrap();
        let r: Vec<_> = (0..n).map(|k| c(0.5 + 0.2 * k as f64, 0.3 - 0.1 * k as f64)).collect();
        let rn = solve_rn(&curve, &SingularPart::new(r)).unwrap();
        let zeros = find_zeros(&rn).unwrap();
        let values = critical_values(&rn, &zeros, &CriticalValueOptions::default()).unwrap();
        let ctx = FlowContext::new(&rn, values.clone()).unwrap();
        let prim = LocalPrimitive::new(&curve, &rn.expr).unwrap();
        let h = ctx.phi_threshold.max(values.f0() + 1.0);
        let delta = ctx.term_radius.powf(-0.5);
        let count = superlevel_components(|t| (prim.eval(t) + values.shift).im, delta, h, 80, 1440);
        assert_eq!(count, n, "n = {n}");
    }
}
