use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::logic::{
    search_bindings, GroundConj, GroundLiteral, Literal, ObjectId, PredId, PredKind, Signature, State, Substitution,
    Term, Vocabulary,
};

use super::{AbstractRule, GroundAction, RuleError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroundingOptions {
    /// Deictic variables never bind to an object that is also an action argument.
    pub deictic_distinct_from_action_args: bool,
    /// Drop groundings whose context fails in `s0` on a literal that no rule can change.
    pub prune_static: bool,
}

impl Default for GroundingOptions {
    fn default() -> Self {
        GroundingOptions { deictic_distinct_from_action_args: true, prune_static: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundOutcome {
    pub prob: f64,
    /// Atom and function assignments; no `Const` entries.
    pub effects: Vec<GroundLiteral>,
    pub reward: f64,
}

impl GroundOutcome {
    /// Applies deletions, then additions and function assignments, then re-derives.
    pub fn apply(&self, s: &State, vocab: &Vocabulary) -> State {
        let mut next = s.clone();
        for e in &self.effects {
            if let GroundLiteral::Atom { index, value: false } = *e {
                next.set_atom(index, false);
            }
        }
        for e in &self.effects {
            match *e {
                GroundLiteral::Atom { index, value: true } => next.set_atom(index, true),
                GroundLiteral::Func { index, value } => next.set_func(index, value),
                _ => {}
            }
        }
        next.eval_derived(vocab);
        next
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundRule {
    /// Index of the abstract rule this was instantiated from.
    pub source: usize,
    pub substitution: Substitution,
    pub action: GroundAction,
    pub context: GroundConj,
    pub outcomes: Vec<GroundOutcome>,
    pub noise: f64,
    pub noise_changes: f64,
    /// Display label such as `(1, b/act)`.
    pub label: String,
}

impl GroundRule {
    pub fn covers(&self, s: &State) -> bool {
        self.context.holds_in(s)
    }

    pub fn is_deterministic(&self) -> bool {
        self.noise == 0.0 && self.outcomes.len() == 1
    }
}

/// The ground rule set Γ with its per-action index and changeable attributes.
#[derive(Clone, Debug)]
pub struct GroundRuleSet {
    vocab: Arc<Vocabulary>,
    rules: Vec<GroundRule>,
    by_action: BTreeMap<GroundAction, Vec<usize>>,
    changeable_atoms: Vec<usize>,
    changeable_funcs: Vec<usize>,
}

impl GroundRuleSet {
    pub fn new(vocab: Arc<Vocabulary>, rules: Vec<GroundRule>) -> Self {
        let mut by_action: BTreeMap<GroundAction, Vec<usize>> = BTreeMap::new();
        let mut atoms = BTreeSet::new();
        let mut funcs = BTreeSet::new();
        for (i, r) in rules.iter().enumerate() {
            by_action.entry(r.action.clone()).or_default().push(i);
            for o in &r.outcomes {
                for e in &o.effects {
                    match *e {
                        GroundLiteral::Atom { index, .. } => {
                            atoms.insert(index);
                        }
                        GroundLiteral::Func { index, .. } => {
                            funcs.insert(index);
                        }
                        GroundLiteral::Const(_) => {}
                    }
                }
            }
        }
        GroundRuleSet {
            vocab,
            rules,
            by_action,
            changeable_atoms: atoms.into_iter().collect(),
            changeable_funcs: funcs.into_iter().collect(),
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_arc(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn rules(&self) -> &[GroundRule] {
        &self.rules
    }

    pub fn rule(&self, id: usize) -> &GroundRule {
        &self.rules[id]
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Ground actions with at least one rule, in sorted order.
    pub fn actions(&self) -> impl Iterator<Item = &GroundAction> {
        self.by_action.keys()
    }

    /// Γ(a): ids of the rules for a ground action.
    pub fn rules_for(&self, action: &GroundAction) -> &[usize] {
        self.by_action.get(action).map(Vec::as_slice).unwrap_or(&[])
    }

    /// S_c restricted to binary atoms.
    pub fn changeable_atoms(&self) -> &[usize] {
        &self.changeable_atoms
    }

    pub fn changeable_funcs(&self) -> &[usize] {
        &self.changeable_funcs
    }

    /// |S_c|, counting atoms and function applications.
    pub fn n_changeable(&self) -> usize {
        self.changeable_atoms.len() + self.changeable_funcs.len()
    }

    pub fn covering_rules(&self, s: &State, action: &GroundAction) -> Vec<usize> {
        self.rules_for(action).iter().copied().filter(|&i| self.rules[i].covers(s)).collect()
    }

    /// The single rule of Γ(a) whose context holds in `s`, if exactly one does.
    pub fn unique_covering_rule(&self, s: &State, action: &GroundAction) -> Option<usize> {
        let mut found = None;
        for &i in self.rules_for(action) {
            if self.rules[i].covers(s) {
                if found.is_some() {
                    return None;
                }
                found = Some(i);
            }
        }
        found
    }

    pub fn find_label(&self, label: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.label == label)
    }
}

/// Grounds with default options.
pub fn ground_rules(rules: &[AbstractRule], vocab: Arc<Vocabulary>, s0: &State) -> Result<GroundRuleSet, RuleError> {
    ground_rules_with(rules, vocab, s0, GroundingOptions::default())
}

pub fn ground_rules_with(
    rules: &[AbstractRule],
    vocab: Arc<Vocabulary>,
    s0: &State,
    opts: GroundingOptions,
) -> Result<GroundRuleSet, RuleError> {
    let sig = vocab.signature();
    for r in rules {
        r.validate(sig)?;
    }
    let (preds, funcs) = changeable_symbols(rules, sig);
    let is_static = |lit: &Literal| match lit {
        Literal::Atom { pred, .. } => !preds.contains(pred),
        Literal::FuncEq { func, .. } => !funcs.contains(func),
        Literal::Neq(..) => true,
    };

    let mut out = Vec::new();
    for (ri, rule) in rules.iter().enumerate() {
        let mut vars = rule.action_vars();
        let deictic = rule.deictic_vars();
        vars.extend(deictic.iter().cloned());
        let mut filter: Vec<Literal> = distinctness(rule, opts);
        if opts.prune_static {
            filter.extend(rule.context.literals().iter().filter(|l| is_static(l)).cloned());
        }
        let mut subs = Vec::new();
        search_bindings(
            &vocab,
            &vars,
            &Substitution::new(),
            &filter,
            |_, g| s0.satisfies(g),
            |s| subs.push(s.clone()),
        )?;
        for sub in subs {
            if let Some(g) = instantiate(ri, rule, &deictic, &sub, &vocab)? {
                out.push(g);
            }
        }
    }
    Ok(GroundRuleSet::new(vocab, out))
}

/// Predicates and functions that some outcome changes, closed under derived dependencies.
fn changeable_symbols(rules: &[AbstractRule], sig: &Signature) -> (BTreeSet<PredId>, BTreeSet<crate::logic::FuncId>) {
    let mut preds = BTreeSet::new();
    let mut funcs = BTreeSet::new();
    for r in rules {
        for o in &r.outcomes {
            for l in o.effects.literals() {
                match l {
                    Literal::Atom { pred, .. } => {
                        preds.insert(*pred);
                    }
                    Literal::FuncEq { func, .. } => {
                        funcs.insert(*func);
                    }
                    Literal::Neq(..) => {}
                }
            }
        }
    }
    if let Ok(order) = sig.derived_order() {
        for d in order {
            if sig.derived_dependencies(d).iter().any(|p| preds.contains(p)) {
                preds.insert(d);
            }
        }
    }
    (preds, funcs)
}

fn distinctness(rule: &AbstractRule, opts: GroundingOptions) -> Vec<Literal> {
    let mut out = Vec::new();
    if opts.deictic_distinct_from_action_args {
        for d in rule.deictic_vars() {
            for t in &rule.action.args {
                out.push(Literal::Neq(Term::Var(d.clone()), t.clone()));
            }
        }
    }
    out
}

fn instantiate(
    source: usize,
    rule: &AbstractRule,
    deictic: &[String],
    sub: &Substitution,
    vocab: &Vocabulary,
) -> Result<Option<GroundRule>, RuleError> {
    let args = rule.action.args.iter().map(|t| vocab.resolve_term(t, sub)).collect::<Result<Vec<_>, _>>()?;
    let mut ctx = Vec::new();
    for l in rule.context.literals() {
        match vocab.ground_literal(l, sub)? {
            GroundLiteral::Const(true) => {}
            GroundLiteral::Const(false) => return Ok(None),
            g => {
                if ctx.iter().any(|c: &GroundLiteral| c.conflicts_with(&g)) {
                    return Ok(None);
                }
                if !ctx.contains(&g) {
                    ctx.push(g);
                }
            }
        }
    }
    let mut outcomes = Vec::with_capacity(rule.outcomes.len());
    for o in &rule.outcomes {
        let mut effects = Vec::new();
        for l in o.effects.literals() {
            let g = vocab.ground_literal(l, sub)?;
            if !effects.contains(&g) {
                effects.push(g);
            }
        }
        outcomes.push(GroundOutcome { prob: o.prob, effects, reward: o.reward });
    }
    let deictic_objs: Vec<ObjectId> = deictic.iter().map(|d| sub[d]).collect();
    let label = ground_label(source, &args, &deictic_objs, vocab);
    Ok(Some(GroundRule {
        source,
        substitution: sub.clone(),
        action: GroundAction { pred: rule.action.pred, args },
        context: GroundConj(ctx),
        outcomes,
        noise: rule.noise,
        noise_changes: rule.noise_changes,
        label,
    }))
}

fn join_names(objs: &[ObjectId], vocab: &Vocabulary) -> String {
    let names: Vec<&str> = objs.iter().map(|o| vocab.object_name(*o)).collect();
    if names.iter().all(|n| n.chars().count() == 1) {
        names.concat()
    } else {
        names.join(",")
    }
}

fn ground_label(source: usize, args: &[ObjectId], deictic: &[ObjectId], vocab: &Vocabulary) -> String {
    let mut label = format!("({}", source + 1);
    if !args.is_empty() || !deictic.is_empty() {
        label.push_str(", ");
        label.push_str(&join_names(args, vocab));
        if !deictic.is_empty() {
            label.push('/');
            label.push_str(&join_names(deictic, vocab));
        }
    }
    label.push(')');
    label
}

/// Groundings `(rule index, substitution)` of the abstract rules for `action` whose
/// context holds in `state`. No pruning is applied.
pub fn covering_groundings(
    rules: &[AbstractRule],
    vocab: &Vocabulary,
    state: &State,
    action: &GroundAction,
    opts: GroundingOptions,
) -> Result<Vec<(usize, Substitution)>, RuleError> {
    let mut out = Vec::new();
    for (ri, rule) in rules.iter().enumerate() {
        if rule.action.pred != action.pred {
            continue;
        }
        let Some(fixed) = unify_action(rule, action, vocab)? else { continue };
        let deictic = rule.deictic_vars();
        let mut lits: Vec<Literal> = distinctness(rule, opts);
        lits.extend(rule.context.literals().iter().cloned());
        search_bindings(vocab, &deictic, &fixed, &lits, |_, g| state.satisfies(g), |s| out.push((ri, s.clone())))?;
    }
    Ok(out)
}

fn unify_action(
    rule: &AbstractRule,
    action: &GroundAction,
    vocab: &Vocabulary,
) -> Result<Option<Substitution>, RuleError> {
    if vocab.signature().predicate(rule.action.pred).kind != PredKind::Action {
        return Err(RuleError::NotAnAction(vocab.signature().predicate(rule.action.pred).name.clone()));
    }
    let mut sub = Substitution::new();
    for (t, o) in rule.action.args.iter().zip(&action.args) {
        match t {
            Term::Var(v) => match sub.get(v) {
                Some(bound) if bound != o => return Ok(None),
                _ => {
                    sub.insert(v.clone(), *o);
                }
            },
            Term::Const(c) => {
                if vocab.object_id(c) != Some(*o) {
                    return Ok(None);
                }
            }
        }
    }
    Ok(Some(sub))
}
