#![allow(dead_code)]

pub mod convert;
pub mod gen;

use std::path::PathBuf;

use nidplan::io::{parse_problem, parse_rules, ProblemFile, RuleFile};
use nidplan::rules::{ground_rules, GroundAction, GroundRuleSet};

pub fn domain_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("domains").join(name)
}

pub fn read_domain(name: &str) -> String {
    std::fs::read_to_string(domain_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub struct Loaded {
    pub rules: RuleFile,
    pub problem: ProblemFile,
    pub gamma: GroundRuleSet,
}

pub fn load(nid: &str, prob: &str) -> Loaded {
    let rules = parse_rules(&read_domain(nid), nid).unwrap();
    let problem = parse_problem(&read_domain(prob), prob, rules.signature.clone()).unwrap();
    let gamma = ground_rules(&rules.rules, problem.vocab.clone(), &problem.init).unwrap();
    Loaded { rules, problem, gamma }
}

pub fn cubeworld() -> Loaded {
    load("cubeworld.nid", "cubeworld.prob")
}

pub fn action(l: &Loaded, text: &str) -> GroundAction {
    GroundAction::parse(text, &l.problem.vocab).unwrap()
}

pub fn atom(l: &Loaded, text: &str) -> usize {
    let v = &l.problem.vocab;
    let (name, rest) = text.split_once('(').unwrap_or((text, ")"));
    let args: Vec<_> = rest
        .trim_end_matches(')')
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|o| v.object_id(o).unwrap())
        .collect();
    v.atom_index(v.signature().pred_id(name).unwrap(), &args).unwrap()
}
