//! Random rule domains and exact oracles shared by several test targets.

use std::collections::HashMap;

use nidplan::io::{parse_problem, parse_rules, ProblemFile, RuleFile};
use nidplan::logic::State;
use nidplan::rules::{ground_rules, Action, GroundRuleSet};
use nidplan::tree::{applicable_actions, RewardSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Domain {
    pub text: String,
    pub rules: RuleFile,
    pub problem: ProblemFile,
    pub gamma: GroundRuleSet,
    pub reward: RewardSpec,
}

pub fn build(rules_text: &str, problem_text: &str) -> Domain {
    let rules = parse_rules(rules_text, "gen.nid").unwrap_or_else(|e| panic!("{e}\n{rules_text}"));
    let problem = parse_problem(problem_text, "gen.prob", rules.signature.clone()).unwrap();
    let gamma = ground_rules(&rules.rules, problem.vocab.clone(), &problem.init).unwrap();
    let reward = RewardSpec::from_conjunctions(&problem.vocab, &problem.reward_terms()).unwrap().unwrap();
    Domain { text: rules_text.to_string(), rules, problem, gamma, reward }
}

fn lit(rng: &mut ChaCha8Rng, n_props: usize) -> (usize, bool) {
    (rng.random_range(0..n_props), rng.random_bool(0.5))
}

fn show(l: (usize, bool)) -> String {
    format!("{}p{}()", if l.1 { "" } else { "!" }, l.0)
}

/// Distinct-atom literal list of the given length.
fn lits(rng: &mut ChaCha8Rng, n_props: usize, len: usize) -> Vec<(usize, bool)> {
    let mut out: Vec<(usize, bool)> = Vec::new();
    while out.len() < len.min(n_props) {
        let l = lit(rng, n_props);
        if out.iter().all(|m| m.0 != l.0) {
            out.push(l);
        }
    }
    out
}

/// Propositional domain with `n_props` atoms, deterministic rules and a random
/// conjunctive goal that does not hold initially.
pub fn random_deterministic(seed: u64, n_props: usize, n_actions: usize) -> Domain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    for i in 0..n_props {
        text.push_str(&format!("predicate p{i}/0\n"));
    }
    for a in 0..n_actions {
        text.push_str(&format!("action act{a}/0\n"));
    }
    for a in 0..n_actions {
        let n_rules = rng.random_range(1..=2);
        let pivot = rng.random_range(0..n_props);
        for k in 0..n_rules {
            // rules of one action disagree on the pivot atom, so they never overlap
            let mut ctx = vec![(pivot, k == 0)];
            let extra = rng.random_range(0..=1);
            for l in lits(&mut rng, n_props, extra) {
                if l.0 != pivot {
                    ctx.push(l);
                }
            }
            let n_eff = rng.random_range(1..=2);
            let eff = lits(&mut rng, n_props, n_eff);
            let ctx_text: Vec<String> = ctx.into_iter().map(show).collect();
            let eff_text: Vec<String> = eff.into_iter().map(show).collect();
            text.push_str(&format!("rule act{a}() : {} -> {{ 1.0 : {} }}\n", ctx_text.join(", "), eff_text.join(", ")));
        }
    }
    loop {
        let init: Vec<String> = (0..n_props).filter(|_| rng.random_bool(0.5)).map(|i| format!("p{i}()")).collect();
        let n_goal = rng.random_range(1..=2);
        let goal: Vec<String> = lits(&mut rng, n_props, n_goal).into_iter().map(show).collect();
        let problem = format!("objects\ninit {}\ngoal {}", init.join(", "), goal.join(", "));
        let d = build(&text, &problem);
        if d.reward.eval(&d.problem.init) == 0.0 {
            return d;
        }
    }
}

/// Exact finite-horizon values under the planners' model: noise and default
/// transitions stay in place with one extra γ, `doNothing` is exact.
pub struct ValueIteration<'a> {
    pub gamma_set: &'a GroundRuleSet,
    pub reward: &'a RewardSpec,
    pub discount: f64,
    memo: HashMap<(State, usize), f64>,
}

impl<'a> ValueIteration<'a> {
    pub fn new(gamma_set: &'a GroundRuleSet, reward: &'a RewardSpec, discount: f64) -> Self {
        ValueIteration { gamma_set, reward, discount, memo: HashMap::new() }
    }

    pub fn q(&mut self, s: &State, a: &Action, left: usize) -> f64 {
        let g = self.discount;
        let r = self.reward.eval(s);
        let cont = match a {
            Action::DoNothing => self.value(s, left - 1),
            Action::Ground(ga) => match self.gamma_set.unique_covering_rule(s, ga) {
                None => g * self.value(s, left - 1),
                Some(id) => {
                    let rule = self.gamma_set.rule(id);
                    let mut v = rule.noise * g * self.value(s, left - 1);
                    for o in &rule.outcomes {
                        let next = o.apply(s, self.gamma_set.vocab());
                        v += o.prob * (o.reward + self.value(&next, left - 1));
                    }
                    v
                }
            },
        };
        r + g * cont
    }

    pub fn value(&mut self, s: &State, left: usize) -> f64 {
        if left == 0 {
            return self.reward.eval(s);
        }
        if let Some(v) = self.memo.get(&(s.clone(), left)) {
            return *v;
        }
        let best =
            applicable_actions(self.gamma_set, s).iter().map(|a| self.q(s, a, left)).fold(f64::NEG_INFINITY, f64::max);
        self.memo.insert((s.clone(), left), best);
        best
    }

    /// Root actions whose Q is within `tol` of the optimum.
    pub fn optimal_actions(&mut self, s: &State, left: usize, tol: f64) -> (Vec<Action>, f64) {
        let acts = applicable_actions(self.gamma_set, s);
        let qs: Vec<f64> = acts.iter().map(|a| self.q(s, a, left)).collect();
        let best = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (acts.into_iter().zip(qs).filter(|(_, q)| *q >= best - tol).map(|(a, _)| a).collect(), best)
    }
}

pub const BANDIT: &str = "
predicate g/0
predicate h/0
action good/0
action bad/0
action coin/0
rule good() : -> { 1.0 : g() }
rule bad() : -> { 1.0 : h() }
rule coin() : -> { 0.5 : g() 0.5 : h() }
";

/// Exact joint filtering over whole states. Requires noise-free rules;
/// uncovered actions and `doNothing` keep the state.
pub fn exact_filter(gamma: &GroundRuleSet, start: &State, actions: &[Action]) -> Vec<(State, f64)> {
    let mut dist: HashMap<State, f64> = HashMap::from([(start.clone(), 1.0)]);
    for a in actions {
        let mut next: HashMap<State, f64> = HashMap::new();
        for (s, p) in dist {
            let id = match a {
                Action::Ground(ga) => gamma.unique_covering_rule(&s, ga),
                Action::DoNothing => None,
            };
            match id {
                None => *next.entry(s).or_default() += p,
                Some(id) => {
                    let rule = gamma.rule(id);
                    assert_eq!(rule.noise, 0.0, "exact filter needs noise-free rules");
                    for o in &rule.outcomes {
                        *next.entry(o.apply(&s, gamma.vocab())).or_default() += p * o.prob;
                    }
                }
            }
        }
        dist = next;
    }
    dist.into_iter().collect()
}

pub fn marginal(dist: &[(State, f64)], atom: usize) -> f64 {
    dist.iter().filter(|(s, _)| s.atom(atom)).map(|(_, p)| p).sum()
}

const SPLITS: [&[f64]; 5] = [&[1.0], &[0.3, 0.7], &[0.5, 0.5], &[0.2, 0.3, 0.5], &[0.25, 0.25, 0.5]];

/// Control atoms `c*` have deterministic effects and decide which rule fires;
/// payload atoms `x*` change stochastically and never appear in contexts.
/// At most 12 atoms in total.
pub fn random_control_payload(seed: u64) -> Domain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_c = rng.random_range(2..=4);
    let n_x = rng.random_range(3..=12 - n_c);
    let n_a = rng.random_range(1..=4);
    let mut text = String::new();
    for i in 0..n_c {
        text.push_str(&format!("predicate c{i}/0\n"));
    }
    for i in 0..n_x {
        text.push_str(&format!("predicate x{i}/0\n"));
    }
    for a in 0..n_a {
        text.push_str(&format!("action act{a}/0\n"));
    }
    let name = |prefix: &str, l: (usize, bool)| format!("{}{prefix}{}()", if l.1 { "" } else { "!" }, l.0);
    for a in 0..n_a {
        let pivot = rng.random_range(0..n_c);
        for k in 0..rng.random_range(1..=2) {
            let mut ctx = vec![(pivot, k == 0)];
            let extra = rng.random_range(0..=1);
            ctx.extend(lits(&mut rng, n_c, extra).into_iter().filter(|l| l.0 != pivot));
            let n_ctrl = rng.random_range(0..=2);
            let ctrl: Vec<String> = lits(&mut rng, n_c, n_ctrl).into_iter().map(|l| name("c", l)).collect();
            let split = SPLITS[rng.random_range(0..SPLITS.len())];
            let mut outcomes = String::new();
            for p in split {
                let n_pay = rng.random_range(1..=2);
                let mut eff = ctrl.clone();
                eff.extend(lits(&mut rng, n_x, n_pay).into_iter().map(|l| name("x", l)));
                outcomes.push_str(&format!(" {p} : {}", eff.join(", ")));
            }
            let ctx_text: Vec<String> = ctx.into_iter().map(|l| name("c", l)).collect();
            text.push_str(&format!("rule act{a}() : {} ->{{{outcomes} }}\n", ctx_text.join(", ")));
        }
    }
    let mut init: Vec<String> = (0..n_c).filter(|_| rng.random_bool(0.5)).map(|i| format!("c{i}()")).collect();
    init.extend((0..n_x).filter(|_| rng.random_bool(0.3)).map(|i| format!("x{i}()")));
    build(&text, &format!("objects\ninit {}\ngoal x0()", init.join(", ")))
}

/// Relational domain over three objects with a binary relation, a derived
/// predicate and deictic variables bound through positive `r` literals.
pub fn random_relational(seed: u64) -> Domain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::from(
        "predicate p/1\npredicate q/1\npredicate r/2\naction poke/1\naction pull/1\nderived free(X) := forall Y: !r(Y,X)\n",
    );
    for act in ["poke", "pull"] {
        for _ in 0..rng.random_range(1..=2) {
            let deictic = rng.random_bool(0.6);
            let mut ctx: Vec<String> = Vec::new();
            if deictic {
                ctx.push(if rng.random_bool(0.5) { "r(X,Y)".into() } else { "r(Y,X)".into() });
            }
            let mut pool = vec!["p(X)", "q(X)", "free(X)"];
            if deictic {
                pool.extend(["p(Y)", "q(Y)", "free(Y)"]);
            }
            for _ in 0..rng.random_range(0..=2) {
                let atom = pool.swap_remove(rng.random_range(0..pool.len()));
                ctx.push(format!("{}{atom}", if rng.random_bool(0.5) { "" } else { "!" }));
            }
            let mut targets = vec!["p(X)", "q(X)"];
            if deictic {
                targets.extend(["p(Y)", "q(Y)", "r(X,Y)", "r(Y,X)"]);
            } else {
                targets.push("r(X,X)");
            }
            let noisy = rng.random_bool(0.5);
            let split: &[f64] = match (noisy, rng.random_range(0..3)) {
                (false, k) => SPLITS[[0, 1, 3][k]],
                (true, 0) => &[0.9],
                (true, 1) => &[0.6, 0.3],
                (true, _) => &[0.5, 0.2, 0.2],
            };
            let mut outcomes = String::new();
            for p in split {
                let mut pool = targets.clone();
                let mut eff = Vec::new();
                for _ in 0..rng.random_range(1..=2) {
                    let atom = pool.swap_remove(rng.random_range(0..pool.len()));
                    eff.push(format!("{}{atom}", if rng.random_bool(0.5) { "" } else { "!" }));
                }
                outcomes.push_str(&format!(" {p} : {}", eff.join(", ")));
            }
            if noisy {
                outcomes.push_str(" 0.1 : noise");
            }
            let head = if ctx.is_empty() { String::new() } else { format!(" : {}", ctx.join(", ")) };
            text.push_str(&format!("rule {act}(X){head} ->{{{outcomes} }}\n"));
        }
    }
    let objs = ["o1", "o2", "o3"];
    let mut init = Vec::new();
    for o in objs {
        for pred in ["p", "q"] {
            if rng.random_bool(0.4) {
                init.push(format!("{pred}({o})"));
            }
        }
        for o2 in objs {
            if rng.random_bool(0.25) {
                init.push(format!("r({o},{o2})"));
            }
        }
    }
    build(&text, &format!("objects o1 o2 o3\ninit {}\ngoal q(o1)", init.join(", ")))
}
