mod common;

use std::sync::Arc;

use common::convert::*;
use common::{cubeworld, domain_path, read_domain};
use nidplan::io::{
    nid_to_ppddl, parse_ppddl, parse_problem, parse_rules, ppddl_to_nid, serialize_rules, write_ppddl, Effect, Formula,
    PTerm, RuleFile, ToNidOptions, ToPpddlOptions,
};
use nidplan::logic::{State, Vocabulary};
use nidplan::rules::GroundAction;
use proptest::prelude::*;

fn corpus() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(domain_path(""))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".nid"))
        .collect();
    names.sort();
    names
}

#[test]
fn corpus_round_trips() {
    let names = corpus();
    assert!(names.len() >= 2);
    for name in names {
        let first = parse_rules(&read_domain(&name), &name).unwrap();
        let text = serialize_rules(&first);
        let second = parse_rules(&text, &name).unwrap();
        assert_eq!(first.rules, second.rules, "{name}");
        assert_eq!(first.signature, second.signature, "{name}");
        assert_eq!(serialize_rules(&second), text, "{name}");
    }
}

#[test]
fn cubeworld_puton_rule_is_deterministic() {
    let l = cubeworld();
    let r = &l.rules.rules[2];
    assert_eq!(r.outcomes.len(), 1);
    assert_eq!(r.outcomes[0].prob, 1.0);
    assert_eq!(r.noise, 0.0);
}

#[test]
fn rule_errors_carry_positions() {
    let cases = [
        ("predicate p/1\nrule p(X) -> { 1.0 : p(X) }", "not a declared action"),
        ("predicate p/1\naction a/1\nrule a(X) -> { 0.5 : p(X) }", "sum"),
        ("predicate p/1\naction a/1\nrule a(X) -> { 1.0 : p(X,X) }", "argument"),
        ("predicate p/1\naction a/1\nrule a(X) -> { 1.0 : q(X) }", "unknown symbol"),
        ("predicate p/1\naction a/1\nrule a(X) : p(X) { 1.0 : p(X) }", "expected"),
    ];
    for (text, needle) in cases {
        let e = parse_rules(text, "bad.nid").unwrap_err();
        let shown = e.to_string();
        assert!(shown.starts_with("bad.nid:"), "{shown}");
        assert!(shown.to_lowercase().contains(needle), "{shown} lacks {needle}");
        assert!(e.line >= 1 && e.col >= 1);
    }
    let e = parse_rules("predicate p/1\naction a/1\nrule a(X) -> { 1.0 : p(X), !p(X) }", "c.nid").unwrap_err();
    assert_eq!(e.line, 3);
}

#[test]
fn problem_start_state_and_goal() {
    let l = cubeworld();
    let p = &l.problem;
    let v = &p.vocab;
    let s0 = p.start_state().unwrap();
    let on = v.signature().pred_id("on").unwrap();
    let true_on: Vec<String> =
        (0..v.n_atoms()).filter(|&i| s0.atom(i) && v.atom_at(i).0 == on).map(|i| v.atom_name(i)).collect();
    assert_eq!(true_on, vec!["on(a,b)", "on(b,c)", "on(c,t)"]);
    for name in ["cube(a)", "cube(b)", "cube(c)", "table(t)"] {
        assert!(s0.atom(common::atom(&l, name)), "{name}");
    }
    assert!(!s0.atom(common::atom(&l, "table(a)")));
    assert_eq!(p.goal.len(), 1);
    assert_eq!(p.horizon, Some(4));
    assert_eq!(p.discount, Some(0.95));
    assert_eq!(p.reward_terms().len(), 1);
}

#[test]
fn problem_with_prior_has_no_start_state() {
    let rules = parse_rules(&read_domain("cubeworld.nid"), "c").unwrap();
    let text = "objects a b c t\ninit cube(a), cube(b)\nprior on(a,b) = 0.5\ngoal on(b,a)";
    let p = parse_problem(text, "p.prob", rules.signature.clone()).unwrap();
    assert!(p.start_state().is_none());
    let prior = p.prior.as_ref().unwrap();
    assert_eq!(prior.atoms.len(), 1);
    assert_eq!(prior.atoms[0].1, 0.5);
}

#[test]
fn problem_errors() {
    let rules = parse_rules(&read_domain("cubeworld.nid"), "c").unwrap();
    let sig = rules.signature.clone();
    let missing_goal = parse_problem("objects a b\ninit cube(a)", "p.prob", sig.clone()).unwrap_err();
    assert!(missing_goal.message.contains("goal"));
    assert!(parse_problem("objects a\nprior on(a,a) = 1.5\ngoal cube(a)", "p.prob", sig.clone()).is_err());
    assert!(parse_problem("objects a\ninit clear(a)\ngoal cube(a)", "p.prob", sig.clone()).is_err());
    assert!(parse_problem("objects a\ngoal cube(b)", "p.prob", sig).is_err());
    let fsig = parse_rules("function size/1 in 0..2\naction a/0", "f").unwrap().signature;
    let bad = parse_problem("objects o\nprior size(o) = [0.5, 0.25, 0.2]\ngoal size(o)=1", "p.prob", fsig.clone())
        .unwrap_err();
    assert!(bad.message.contains("sums"), "{}", bad.message);
    assert!(parse_problem("objects o\nprior size(o) = [0.5, 0.25, 0.25]\ngoal size(o)=1", "p.prob", fsig).is_ok());
}

#[test]
fn exploding_putdown_converts_to_two_rules() {
    let dom = parse_ppddl(&read_domain("exploding_putdown.ppddl"), "x.ppddl").unwrap();
    let c = ppddl_to_nid(&dom, ToNidOptions::default()).unwrap();
    assert!(c.warnings.is_empty(), "{:?}", c.warnings);
    assert_eq!(c.rules.rules.len(), 2);
    let base = ["emptyhand()", "onTable(X)", "!holding(X)"];
    let (ctx, out) = literal_strings(&c.rules, 0);
    assert_eq!(ctx, strs(&["block(X)", "holding(X)", "noDestroyedTable()", "!noDetonated(X)"]));
    assert_eq!(out, vec![(1.0, strs(&base))]);
    let (ctx, out) = literal_strings(&c.rules, 1);
    assert_eq!(ctx, strs(&["block(X)", "holding(X)", "noDestroyedTable()", "noDetonated(X)"]));
    let mut exploded = base.to_vec();
    exploded.extend(["!noDestroyedTable()", "!noDetonated(X)"]);
    assert_eq!(out, vec![(0.6, strs(&base)), (0.4, strs(&exploded))]);
    assert!(c.rules.rules.iter().all(|r| r.noise == 0.0));
}

#[test]
fn plain_operator_becomes_one_rule() {
    let text = "(define (domain d) (:predicates (p ?x) (q ?x))
      (:action a :parameters (?x) :precondition (p ?x)
        :effect (probabilistic 0.7 (q ?x) 0.2 (not (p ?x)))))";
    let c = ppddl_to_nid(&parse_ppddl(text, "d").unwrap(), ToNidOptions::default()).unwrap();
    assert_eq!(c.rules.rules.len(), 1);
    let (ctx, out) = literal_strings(&c.rules, 0);
    assert_eq!(ctx, strs(&["p(X)"]));
    assert_eq!(out, vec![(0.7, strs(&["q(X)"])), (0.2, strs(&["!p(X)"])), (0.1, strs(&["nochange"]))]);
}

#[test]
fn disjunctive_precondition_splits_exclusively() {
    let text = "(define (domain d) (:predicates (a) (b) (g))
      (:action act :parameters () :precondition (or (a) (b)) :effect (g)))";
    let c = ppddl_to_nid(&parse_ppddl(text, "d").unwrap(), ToNidOptions::default()).unwrap();
    let ctxs: Vec<_> = (0..c.rules.rules.len()).map(|i| literal_strings(&c.rules, i).0).collect();
    assert_eq!(ctxs, vec![strs(&["a()"]), strs(&["!a()", "b()"])]);
    assert!(c.warnings.is_empty());

    let text = "(define (domain d) (:constants base) (:predicates (at ?x) (alive) (g))
      (:action goto :parameters (?x) :precondition (imply (not (= ?x base)) (alive)) :effect (at ?x)))";
    let c = ppddl_to_nid(&parse_ppddl(text, "d").unwrap(), ToNidOptions::default());
    assert!(c.is_err(), "positive equality has no rule-context form");
}

#[test]
fn universal_effect_needs_unique_referent_flag() {
    let text = "(define (domain d) (:predicates (on ?x ?y) (clear ?x))
      (:action pick :parameters (?x)
        :effect (forall (?y) (when (on ?x ?y) (and (clear ?y) (not (on ?x ?y)))))))";
    let dom = parse_ppddl(text, "d.ppddl").unwrap();
    let err = ppddl_to_nid(&dom, ToNidOptions::default()).unwrap_err();
    assert!(err.to_string().contains("pick") && err.to_string().contains("?y"), "{err}");
    let c = ppddl_to_nid(&dom, ToNidOptions { unique_referent: true, ..Default::default() }).unwrap();
    assert_eq!(c.rules.rules.len(), 1);
    assert_eq!(c.rules.rules[0].deictic_vars(), vec!["Y".to_string()]);
}

#[test]
fn nested_conditions_hit_the_rule_cap() {
    let mut effect = String::from("(and");
    for i in 0..9 {
        effect.push_str(&format!(" (when (c{i}) (e{i}))"));
    }
    effect.push(')');
    let preds: String = (0..9).map(|i| format!("(c{i}) (e{i}) ")).collect();
    let text = format!("(define (domain d) (:predicates {preds}) (:action a :parameters () :effect {effect}))");
    let err = ppddl_to_nid(&parse_ppddl(&text, "d").unwrap(), ToNidOptions::default()).unwrap_err();
    assert!(err.to_string().contains("256"), "{err}");
    let ok = ppddl_to_nid(&parse_ppddl(&text.replace(" (when (c8) (e8))", ""), "d").unwrap(), ToNidOptions::default())
        .unwrap();
    assert_eq!(ok.rules.rules.len(), 255);
}

#[test]
fn three_overlapping_rules_give_four_conditions() {
    let rules = parse_rules(THREE, "three.nid").unwrap();
    let dom = nid_to_ppddl(&rules, &ToPpddlOptions::default()).unwrap();
    let Effect::And(blocks) = &dom.actions[0].effect else { panic!() };
    assert_eq!(blocks.len(), 4);
    let (a, b, c) = (conj(&["a"]), conj(&["b"]), conj(&["c"]));
    let not = |f: &Formula| Formula::not(f.clone());
    let expect = [
        Formula::And(vec![a.clone(), not(&b), not(&c)]),
        Formula::And(vec![b.clone(), not(&a), not(&c)]),
        Formula::And(vec![c.clone(), not(&a), not(&b)]),
    ];
    for (blk, want) in blocks.iter().zip(&expect) {
        let Effect::When(cond, _) = blk else { panic!() };
        assert_eq!(cond, want);
    }
    let Effect::When(c4, body) = &blocks[3] else { panic!() };
    assert_eq!(
        c4,
        &Formula::Or(vec![
            Formula::And(vec![not(&a), not(&b), not(&c)]),
            Formula::And(vec![a.clone(), b.clone()]),
            Formula::And(vec![a.clone(), c.clone()]),
            Formula::And(vec![b.clone(), c.clone()]),
        ])
    );
    assert!(body.is_empty());
    let Effect::When(_, third) = &blocks[2] else { panic!() };
    assert_eq!(
        **third,
        Effect::Prob(vec![(0.5, Effect::And(vec![Effect::Lit { pred: "z".into(), args: vec![], positive: true }]))])
    );

    // the written domain reads back identically
    let again = parse_ppddl(&write_ppddl(&dom), "three.ppddl").unwrap();
    assert_eq!(again.actions, dom.actions);
}

#[test]
fn single_rule_gives_condition_and_residual() {
    let rules = parse_rules("predicate p/1\naction a/1\nrule a(X) : p(X) -> { 1.0 : !p(X) }", "one").unwrap();
    let dom = nid_to_ppddl(&rules, &ToPpddlOptions::default()).unwrap();
    let Effect::And(blocks) = &dom.actions[0].effect else { panic!() };
    assert_eq!(blocks.len(), 2);
    let p = Formula::atom("p", vec![PTerm::Var("X".into())]);
    assert_eq!(
        blocks[0],
        Effect::When(
            Formula::And(vec![Formula::And(vec![p.clone()])]),
            Box::new(Effect::And(vec![Effect::Lit {
                pred: "p".into(),
                args: vec![PTerm::Var("X".into())],
                positive: false
            }]))
        )
    );
    assert_eq!(blocks[1], Effect::When(Formula::not(Formula::And(vec![p])), Box::new(Effect::And(vec![]))));
}

#[test]
fn converted_putdown_matches_ppddl_on_every_state() {
    let dom = parse_ppddl(&read_domain("exploding_putdown.ppddl"), "x.ppddl").unwrap();
    let c = ppddl_to_nid(&dom, ToNidOptions::default()).unwrap();
    let vocab = Arc::new(Vocabulary::new(c.rules.signature.clone(), vec!["b1".into(), "b2".into()]).unwrap());
    let gamma = unpruned(&c.rules, &vocab);
    let prims = vocab.primitive_atoms();
    assert_eq!(prims.len(), 10);
    for bits in 0u32..(1 << prims.len()) {
        let s = State::from_true_atoms(
            &vocab,
            prims.iter().enumerate().filter(|(k, _)| bits >> k & 1 == 1).map(|(_, &i)| i),
        );
        for a in all_actions(&vocab) {
            let name = &vocab.signature().predicate(a.pred).name;
            assert_same(&nid_dist(&gamma, &s, &a), &ppddl_dist(&dom, &vocab, &s, name, &a.args), name);
        }
    }
}

#[test]
fn cubeworld_round_trip_preserves_distributions() {
    let l = cubeworld();
    let dom = nid_to_ppddl(&l.rules, &ToPpddlOptions::default()).unwrap();
    let text = write_ppddl(&dom);
    let reread = parse_ppddl(&text, "cube.ppddl").unwrap();
    let back = ppddl_to_nid(&reread, ToNidOptions { unique_referent: true, ..Default::default() }).unwrap();
    let show = |f: &RuleFile| f.rules.iter().map(|r| nidplan::io::serialize_rule(&f.signature, r)).collect::<Vec<_>>();
    assert_eq!(show(&back.rules), show(&l.rules));

    let vocab = &l.problem.vocab;
    let gamma = unpruned(&l.rules, vocab);
    let back_vocab = Arc::new(Vocabulary::new(back.rules.signature.clone(), vocab.objects().to_vec()).unwrap());
    let back_gamma = unpruned(&back.rules, &back_vocab);
    let states = cube_states(vocab, &gamma, &l.problem.init, 11);
    assert!(states.len() > 100);
    for s in &states {
        let s_back = from_names(&back_vocab, &named(vocab, s));
        for a in all_actions(vocab) {
            let name = vocab.signature().predicate(a.pred).name.clone();
            let want = nid_dist(&gamma, s, &a);
            assert_same(&want, &ppddl_dist(&reread, vocab, s, &name, &a.args), &name);
            let a_back = GroundAction { pred: back_vocab.signature().pred_id(&name).unwrap(), args: a.args.clone() };
            assert_same(&want, &nid_dist(&back_gamma, &s_back, &a_back), &name);
        }
    }
}

#[test]
fn independent_noise_export_flips_changeable_predicates() {
    let rules = parse_rules(&read_domain("robot_grab.nid"), "r").unwrap();
    let opts =
        ToPpddlOptions { noise: nidplan::io::NoiseExport::Independent { change_prob: 0.25 }, ..Default::default() };
    let dom = nid_to_ppddl(&rules, &opts).unwrap();
    let text = write_ppddl(&dom);
    assert!(text.contains("0.1"));
    let reread = parse_ppddl(&text, "r.ppddl").unwrap();
    let vocab =
        Arc::new(Vocabulary::new(rules.signature.clone(), vec!["red".into(), "blue".into(), "floor".into()]).unwrap());
    let p = parse_problem(&read_domain("robot_grab.prob"), "p", rules.signature.clone()).unwrap();
    let red = vocab.object_id("red").unwrap();
    let d = ppddl_dist(&reread, &vocab, &p.init, "grab", &[red]);
    let total: f64 = d.iter().map(|x| x.1).sum();
    assert!((total - 1.0).abs() < 1e-9);
    // the 0.1 noise branch spreads over many successors besides the explicit two
    assert!(d.len() > 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Random propositional rule sets survive NID -> PPDDL -> NID with unchanged dynamics.
    #[test]
    fn random_propositional_round_trip(spec in prop::collection::vec((0u8..16, 0u8..16, 0u8..4), 1..4)) {
        let mut text = String::from("predicate p0/0\npredicate p1/0\npredicate p2/0\npredicate p3/0\naction go/0\n");
        let lit = |bit: u8, sign: u8| format!("{}p{}()", if sign & 1 == 0 { "" } else { "!" }, bit);
        for (ctx, eff, extra) in &spec {
            let ctx_lits: Vec<String> = (0..4u8).filter(|b| ctx >> b & 1 == 1).map(|b| lit(b, ctx >> (b ^ 1) & 1)).collect();
            let eff_lits: Vec<String> = (0..4u8).filter(|b| eff >> b & 1 == 1).map(|b| lit(b, (eff >> ((b + 1) % 4)) & 1)).collect();
            let first = if eff_lits.is_empty() { "nochange".to_string() } else { eff_lits.join(", ") };
            let ctx_text = if ctx_lits.is_empty() { String::new() } else { format!(" : {}", ctx_lits.join(", ")) };
            text.push_str(&format!("rule go(){ctx_text} -> {{ 0.6 : {first} 0.4 : {} }}\n", lit(*extra, *extra)));
        }
        let rules = parse_rules(&text, "rand.nid").unwrap();
        let dom = parse_ppddl(&write_ppddl(&nid_to_ppddl(&rules, &ToPpddlOptions::default()).unwrap()), "r").unwrap();
        let back = ppddl_to_nid(&dom, ToNidOptions { unique_referent: true, ..Default::default() }).unwrap();
        let vocab = Arc::new(Vocabulary::new(rules.signature.clone(), vec![]).unwrap());
        let gamma = unpruned(&rules, &vocab);
        let back_vocab = Arc::new(Vocabulary::new(back.rules.signature.clone(), vec![]).unwrap());
        let back_gamma = unpruned(&back.rules, &back_vocab);
        let go = GroundAction { pred: vocab.signature().pred_id("go").unwrap(), args: vec![] };
        let go_back = GroundAction { pred: back_vocab.signature().pred_id("go").unwrap(), args: vec![] };
        for bits in 0u32..16 {
            let s = State::from_true_atoms(&vocab, (0..4usize).filter(|i| bits >> i & 1 == 1));
            let want = nid_dist(&gamma, &s, &go);
            assert_same(&want, &ppddl_dist(&dom, &vocab, &s, "go", &[]), "ppddl");
            assert_same(&want, &nid_dist(&back_gamma, &from_names(&back_vocab, &named(&vocab, &s)), &go_back), "nid");
        }
    }
}
