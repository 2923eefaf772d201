use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn domain(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/domains").join(name)
}

fn nidplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nidplan")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn plan_args<'a>(rules: &'a str, problem: &'a str, rest: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["plan", "--rules", rules, "--problem", problem];
    v.extend_from_slice(rest);
    v
}

#[test]
fn prada_plan_json() {
    let (r, p) = (domain("cubeworld.nid"), domain("cubeworld.prob"));
    let (r, p) = (r.to_str().unwrap(), p.to_str().unwrap());
    let v = json(&nidplan(&plan_args(r, p, &["--planner", "prada", "--horizon", "4", "--samples", "300"])));
    assert_eq!(v["actions"].as_array().unwrap().len(), 4);
    assert!(v["value"].as_f64().unwrap() >= 0.95 * 0.95 * 0.8 - 1e-12);
    assert_eq!(v["reward_posteriors"].as_array().unwrap().len(), 4);
    let v = json(&nidplan(&plan_args(r, p, &["--planner", "aprada", "--horizon", "4", "--samples", "300"])));
    assert_eq!(v["planner"], "aprada");
}

#[test]
fn tree_planners_json() {
    let (r, p) = (domain("cubeworld.nid"), domain("cubeworld.prob"));
    let (r, p) = (r.to_str().unwrap(), p.to_str().unwrap());
    let v = json(&nidplan(&plan_args(r, p, &["--planner", "sst", "--horizon", "2"])));
    assert!(v["action"].as_str().unwrap().starts_with("grab"));
    let v = json(&nidplan(&plan_args(r, p, &["--planner", "uct", "--horizon", "3", "--episodes", "100"])));
    assert_eq!(v["q"].as_array().unwrap().len(), 4);
}

#[test]
fn exit_codes() {
    let (r, p) = (domain("cubeworld.nid"), domain("cubeworld.prob"));
    let (r, p) = (r.to_str().unwrap(), p.to_str().unwrap());
    let out = nidplan(&plan_args(r, p, &["--horizon", "1", "--samples", "20", "--theta", "5"]));
    assert_eq!(out.status.code(), Some(3));
    let out = nidplan(&plan_args("/nonexistent.nid", p, &["--horizon", "1", "--samples", "5"]));
    assert_eq!(out.status.code(), Some(4));
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.nid");
    std::fs::write(&broken, "predicate on/2\nrule grab(X) : -> { 1.0 : on(X) }\n").unwrap();
    let out = nidplan(&plan_args(broken.to_str().unwrap(), p, &["--horizon", "1", "--samples", "5"]));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.nid:2"));
}

#[test]
fn run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        format!(
            "rules = \"{}\"\nproblem = \"{}\"\nplanner = \"prada\"\nsamples = 100\ntrials = 3\nmax_actions = 6\ntiming = false\n",
            domain("cubeworld.nid").display(),
            domain("cubeworld.prob").display()
        ),
    )
    .unwrap();
    let v = json(&nidplan(&["run", "--config", cfg.to_str().unwrap()]));
    assert_eq!(v["trials"], 3);
    assert!(dir.path().join("report.json").exists());
    let csv = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    std::fs::write(&cfg, "planner = \"prada\"\n").unwrap();
    assert_eq!(nidplan(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn convert_both_ways() {
    let dir = tempfile::tempdir().unwrap();
    let nid = dir.path().join("putdown.nid");
    let ppddl = dir.path().join("putdown.ppddl");
    let input = domain("exploding_putdown.ppddl");
    json(&nidplan(&["convert", "--from", "ppddl", "--to", "nid", input.to_str().unwrap(), nid.to_str().unwrap()]));
    let text = std::fs::read_to_string(&nid).unwrap();
    assert_eq!(text.matches("rule ").count(), 2);
    json(&nidplan(&["convert", "--from", "nid", "--to", "ppddl", nid.to_str().unwrap(), ppddl.to_str().unwrap()]));
    assert!(std::fs::read_to_string(&ppddl).unwrap().contains(":action"));
    let out = nidplan(&["convert", "--from", "nid", "--to", "nid", nid.to_str().unwrap(), ppddl.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn score_triples() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("triples.csv");
    std::fs::write(
        &csv,
        "state,action,next\n\
         \"on(red,blue) ball(red) cube(blue) table(floor)\",grab(red),\"inhand(red) ball(red) cube(blue) table(floor)\"\n\
         \"on(red,blue) ball(red) cube(blue) table(floor)\",grab(red),\"on(red,floor) ball(red) cube(blue) table(floor)\"\n",
    )
    .unwrap();
    let rules = domain("robot_grab.nid");
    let v = json(&nidplan(&[
        "score",
        "--rules",
        rules.to_str().unwrap(),
        "--triples",
        csv.to_str().unwrap(),
        "--alpha",
        "0.5",
    ]));
    let expect = 0.7f64.ln() + 0.2f64.ln() - 0.5 * 8.0;
    assert!((v["score"].as_f64().unwrap() - expect).abs() < 1e-6, "{v}");
}
