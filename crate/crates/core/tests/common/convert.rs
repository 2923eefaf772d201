//! Converter oracles: rule text views and successor distributions keyed by atom names.

use std::collections::BTreeSet;
use std::sync::Arc;

use nidplan::io::{Formula, PpddlDomain, RuleFile};
use nidplan::logic::{ObjectId, State, Vocabulary};
use nidplan::rules::{ground_rules_with, GroundAction, GroundRuleSet, GroundingOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn literal_strings(file: &RuleFile, i: usize) -> (BTreeSet<String>, Vec<(f64, BTreeSet<String>)>) {
    let text = nidplan::io::serialize_rule(&file.signature, &file.rules[i]);
    let (head, body) = text.split_once("->").unwrap();
    let ctx = head.split_once(':').map_or("", |x| x.1);
    let set = |s: &str| -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut depth = 0;
        let mut cur = String::new();
        for c in s.chars() {
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                _ => {}
            }
            if c == ',' && depth == 0 {
                out.insert(cur.trim().to_string());
                cur.clear();
            } else {
                cur.push(c);
            }
        }
        if !cur.trim().is_empty() {
            out.insert(cur.trim().to_string());
        }
        out
    };
    let outcomes = body
        .lines()
        .filter_map(|l| l.split_once(" : "))
        .map(|(p, lits)| (p.trim().parse().unwrap(), set(lits)))
        .collect();
    (set(ctx), outcomes)
}

pub fn strs(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

pub const THREE: &str = "
predicate a/0
predicate b/0
predicate c/0
predicate x/0
predicate y/0
predicate z/0
action act/0
rule act() : a() -> { 1.0 : x() }
rule act() : b() -> { 1.0 : y() }
rule act() : c() -> { 0.5 : z() 0.5 : noise }
";

pub fn conj(names: &[&str]) -> Formula {
    Formula::And(names.iter().map(|n| Formula::atom(n, vec![])).collect())
}

/// Successor distribution keyed by the names of true primitive atoms.
pub type NamedDist = Vec<(BTreeSet<String>, f64)>;

pub fn named(vocab: &Vocabulary, s: &State) -> BTreeSet<String> {
    vocab.primitive_atoms().into_iter().filter(|&i| s.atom(i)).map(|i| vocab.atom_name(i)).collect()
}

pub fn from_names(vocab: &Vocabulary, names: &BTreeSet<String>) -> State {
    let idx = vocab.primitive_atoms().into_iter().filter(|&i| names.contains(&vocab.atom_name(i)));
    State::from_true_atoms(vocab, idx).with_derived(vocab)
}

pub fn canonical(mut d: NamedDist) -> NamedDist {
    d.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: NamedDist = Vec::new();
    for (s, p) in d {
        match out.last_mut() {
            Some(last) if last.0 == s => last.1 += p,
            _ => out.push((s, p)),
        }
    }
    out.retain(|(_, p)| *p > 1e-15);
    out
}

pub fn nid_dist(gamma: &GroundRuleSet, s: &State, a: &GroundAction) -> NamedDist {
    let vocab = gamma.vocab();
    let Some(id) = gamma.unique_covering_rule(s, a) else { return vec![(named(vocab, s), 1.0)] };
    let d = gamma.transition_distribution(id, s);
    let mut out: NamedDist = d.entries.iter().map(|(x, p)| (named(vocab, x), *p)).collect();
    out.push((named(vocab, s), d.noise));
    canonical(out)
}

pub fn ppddl_dist(dom: &PpddlDomain, vocab: &Vocabulary, s: &State, a: &str, args: &[ObjectId]) -> NamedDist {
    match nidplan::io::ppddl_successors(dom, vocab, s, a, args).unwrap() {
        None => vec![(named(vocab, s), 1.0)],
        Some(v) => canonical(v.into_iter().map(|(x, p, _)| (named(vocab, &x), p)).collect()),
    }
}

pub fn assert_same(a: &NamedDist, b: &NamedDist, what: &str) {
    assert_eq!(a.len(), b.len(), "{what}: {a:?} vs {b:?}");
    for ((s1, p1), (s2, p2)) in a.iter().zip(b) {
        assert_eq!(s1, s2, "{what}");
        assert!((p1 - p2).abs() < 1e-12, "{what}: {p1} vs {p2}");
    }
}

pub fn unpruned(rules: &RuleFile, vocab: &Arc<Vocabulary>) -> GroundRuleSet {
    let s = State::new(vocab);
    ground_rules_with(&rules.rules, vocab.clone(), &s, GroundingOptions { prune_static: false, ..Default::default() })
        .unwrap()
}

pub fn all_actions(vocab: &Vocabulary) -> Vec<GroundAction> {
    let sig = vocab.signature();
    let mut out = Vec::new();
    for (id, p) in sig.predicates() {
        if p.kind == nidplan::logic::PredKind::Action {
            for args in vocab.tuples(p.arity) {
                out.push(GroundAction { pred: id, args });
            }
        }
    }
    out
}

/// Reachable states of the cube world plus random ones, under both vocabularies.
pub fn cube_states(vocab: &Vocabulary, gamma: &GroundRuleSet, s0: &State, seed: u64) -> Vec<State> {
    let mut out = vec![s0.clone()];
    let mut frontier = vec![s0.clone()];
    for _ in 0..4 {
        let mut next = Vec::new();
        for s in &frontier {
            for a in gamma.actions() {
                if let Some(id) = gamma.unique_covering_rule(s, a) {
                    for (x, _) in gamma.transition_distribution(id, s).entries {
                        if !out.contains(&x) {
                            out.push(x.clone());
                            next.push(x);
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prims = vocab.primitive_atoms();
    for _ in 0..150 {
        let density = rng.random_range(0.05..0.5);
        let s = State::from_true_atoms(vocab, prims.iter().copied().filter(|_| rng.random_bool(density)));
        out.push(s.with_derived(vocab));
    }
    out
}
