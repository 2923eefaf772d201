//! Conversions between PPDDL operators and NID rules.

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::logic::{Conjunction, DerivedBody, DerivedDef, Literal, PredKind, Signature, Term};
use crate::rules::{AbstractRule, ActionAtom, Outcome};

use super::lexer::is_variable;
use super::nid::RuleFile;
use super::ppddl::{w_formula, DerivedDecl, Effect, Formula, PTerm, PpddlAction, PpddlDomain, PredicateDecl, TypedVar};

#[derive(Clone, Debug, Error, PartialEq)]
#[error("{0}")]
pub struct ConvertError(pub String);

fn err<T>(msg: impl Into<String>) -> Result<T, ConvertError> {
    Err(ConvertError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToNidOptions {
    /// Treat universally quantified effect variables as deictic references that pick
    /// out exactly one object.
    pub unique_referent: bool,
    pub max_rules_per_operator: usize,
}

impl Default for ToNidOptions {
    fn default() -> Self {
        ToNidOptions { unique_referent: false, max_rules_per_operator: 256 }
    }
}

/// How the noise outcome of a rule is written to PPDDL.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseExport {
    /// The noise mass becomes the residual no-change branch.
    NoChange,
    /// Every attribute of a changeable predicate flips independently with this probability.
    Independent { change_prob: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToPpddlOptions {
    pub domain_name: String,
    pub noise: NoiseExport,
}

impl Default for ToPpddlOptions {
    fn default() -> Self {
        ToPpddlOptions { domain_name: "converted".to_string(), noise: NoiseExport::NoChange }
    }
}

#[derive(Clone, Debug)]
pub struct Conversion {
    pub rules: RuleFile,
    pub warnings: Vec<String>,
}

type Lits = Vec<Literal>;
/// Outcome distribution under construction: (probability, effects, reward).
type Dist = Vec<(f64, Lits, f64)>;

const VAR_NAMES: &[&str] = &["X", "Y", "Z", "W"];

struct Namer {
    map: Vec<(String, String)>,
    used: usize,
}

impl Namer {
    fn new() -> Self {
        Namer { map: Vec::new(), used: 0 }
    }

    /// Keeps names that are already valid rule variables, otherwise takes the next
    /// free name from X, Y, Z, W, V1, V2, ...
    fn bind(&mut self, ppddl: &str) -> String {
        let taken = |n: &str, map: &[(String, String)]| map.iter().any(|(_, m)| m == n);
        let valid = is_variable(ppddl) && ppddl.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        let name = if valid && !taken(ppddl, &self.map) {
            ppddl.to_string()
        } else {
            loop {
                let cand = match VAR_NAMES.get(self.used) {
                    Some(n) => n.to_string(),
                    None => format!("V{}", self.used - VAR_NAMES.len() + 1),
                };
                self.used += 1;
                if !taken(&cand, &self.map) {
                    break cand;
                }
            }
        };
        self.map.push((ppddl.to_string(), name.clone()));
        name
    }

    fn get(&self, ppddl: &str) -> Option<&str> {
        self.map.iter().rev().find(|(p, _)| p == ppddl).map(|(_, n)| n.as_str())
    }
}

struct ToNid<'a> {
    sig: &'a Signature,
    opts: ToNidOptions,
    namer: Namer,
    action: String,
}

impl ToNid<'_> {
    fn term(&self, t: &PTerm) -> Result<Term, ConvertError> {
        match t {
            PTerm::Var(v) => match self.namer.get(v) {
                Some(n) => Ok(Term::Var(n.to_string())),
                None => err(format!("{}: unbound variable ?{v}", self.action)),
            },
            PTerm::Const(c) => Ok(Term::Const(c.clone())),
        }
    }

    fn atom(&self, pred: &str, args: &[PTerm], positive: bool) -> Result<Literal, ConvertError> {
        let Some(id) = self.sig.pred_id(pred) else {
            return err(format!("{}: unknown predicate `{pred}`", self.action));
        };
        let args = args.iter().map(|a| self.term(a)).collect::<Result<Vec<_>, _>>()?;
        let lit = Literal::Atom { pred: id, args, positive };
        self.sig.check_literal(&lit).map_err(|e| ConvertError(format!("{}: {e}", self.action)))?;
        Ok(lit)
    }

    fn typing(&self, v: &TypedVar) -> Result<Option<Literal>, ConvertError> {
        if v.ty == "object" {
            return Ok(None);
        }
        self.atom(&v.ty, &[PTerm::Var(v.name.clone())], true).map(Some)
    }

    /// Mutually exclusive conjunctions whose union is `f` (or its negation).
    fn xdnf(&self, f: &Formula, positive: bool) -> Result<Vec<Lits>, ConvertError> {
        Ok(match f {
            Formula::Atom { pred, args } => vec![vec![self.atom(pred, args, positive)?]],
            Formula::Eq(a, b) => {
                if positive {
                    return err(format!(
                        "{}: equality `{}` is not expressible in a rule context",
                        self.action,
                        w_formula(f)
                    ));
                }
                vec![vec![Literal::Neq(self.term(a)?, self.term(b)?)]]
            }
            Formula::Not(x) => self.xdnf(x, !positive)?,
            Formula::And(v) if positive => {
                let mut acc = vec![Vec::new()];
                for x in v {
                    acc = self.conj_product(&acc, &self.xdnf(x, true)?);
                }
                acc
            }
            Formula::Or(v) if !positive => {
                let mut acc = vec![Vec::new()];
                for x in v {
                    acc = self.conj_product(&acc, &self.xdnf(x, false)?);
                }
                acc
            }
            // a disjunction d1 | d2 | ... splits into d1, !d1 & d2, ...
            Formula::And(v) | Formula::Or(v) => {
                let branch_sign = matches!(f, Formula::Or(_));
                let mut out = Vec::new();
                let mut prefix = vec![Vec::new()];
                for x in v {
                    out.extend(self.conj_product(&prefix, &self.xdnf(x, branch_sign)?));
                    prefix = self.conj_product(&prefix, &self.xdnf(x, !branch_sign)?);
                    if prefix.is_empty() {
                        break;
                    }
                }
                out
            }
            Formula::Imply(a, b) => self.xdnf(&Formula::Or(vec![Formula::Not(a.clone()), (**b).clone()]), positive)?,
            Formula::Exists(..) | Formula::Forall(..) => {
                return err(format!(
                    "{}: quantified condition `{}` cannot be expressed in a rule context",
                    self.action,
                    w_formula(f)
                ))
            }
        })
    }

    fn conj_product(&self, a: &[Lits], b: &[Lits]) -> Vec<Lits> {
        let mut out = Vec::new();
        for x in a {
            for y in b {
                if let Some(c) = merge_conj(x, y) {
                    out.push(c);
                }
            }
        }
        out
    }

    fn cases(&mut self, e: &Effect, in_forall: bool) -> Result<Vec<(Lits, Dist)>, ConvertError> {
        let out = match e {
            Effect::Lit { pred, args, positive } => {
                vec![(Vec::new(), vec![(1.0, vec![self.atom(pred, args, *positive)?], 0.0)])]
            }
            Effect::Reward(k) => vec![(Vec::new(), vec![(1.0, Vec::new(), *k)])],
            Effect::And(v) => {
                let mut acc: Vec<(Lits, Dist)> = vec![(Vec::new(), vec![(1.0, Vec::new(), 0.0)])];
                for x in v {
                    if x.is_empty() {
                        continue;
                    }
                    let xs = self.cases(x, in_forall)?;
                    let mut next = Vec::new();
                    for (c1, d1) in &acc {
                        for (c2, d2) in &xs {
                            if let Some(c) = merge_conj(c1, c2) {
                                next.push((c, dist_product(d1, d2)));
                            }
                        }
                    }
                    acc = next;
                    self.check_cap(acc.len())?;
                }
                acc
            }
            Effect::Prob(branches) => {
                let mut acc: Vec<(Lits, Vec<Dist>)> = vec![(Vec::new(), Vec::new())];
                for (_, x) in branches {
                    let xs = self.cases(x, in_forall)?;
                    let mut next = Vec::new();
                    for (c1, ds) in &acc {
                        for (c2, d2) in &xs {
                            if let Some(c) = merge_conj(c1, c2) {
                                let mut ds = ds.clone();
                                ds.push(d2.clone());
                                next.push((c, ds));
                            }
                        }
                    }
                    acc = next;
                    self.check_cap(acc.len())?;
                }
                let total: f64 = branches.iter().map(|(p, _)| p).sum();
                acc.into_iter()
                    .map(|(c, ds)| {
                        let mut mix: Dist = vec![(1.0 - total, Vec::new(), 0.0)];
                        for ((p, _), d) in branches.iter().zip(ds) {
                            mix.extend(d.into_iter().map(|(q, e, r)| (p * q, e, r)));
                        }
                        (c, mix)
                    })
                    .collect()
            }
            Effect::When(c, x) => {
                let mut out = Vec::new();
                if !(in_forall && self.opts.unique_referent) {
                    for conj in self.xdnf(c, false)? {
                        out.push((conj, vec![(1.0, Vec::new(), 0.0)]));
                    }
                }
                let inner = self.cases(x, in_forall)?;
                for conj in self.xdnf(c, true)? {
                    for (c2, d) in &inner {
                        if let Some(m) = merge_conj(&conj, c2) {
                            out.push((m, d.clone()));
                        }
                    }
                }
                out
            }
            Effect::Forall(vars, x) => {
                if !self.opts.unique_referent {
                    return err(format!(
                        "{}: universal effect over ({}) cannot be expressed with unique deictic references; \
                         enable the unique-referent option if each quantified variable always refers to exactly one object",
                        self.action,
                        vars.iter().map(|v| format!("?{}", v.name)).collect::<Vec<_>>().join(" ")
                    ));
                }
                let mut typing = Vec::new();
                for v in vars {
                    self.namer.bind(&v.name);
                    if let Some(t) = self.typing(v)? {
                        typing.push(t);
                    }
                }
                let mut out = Vec::new();
                for (c, d) in self.cases(x, true)? {
                    if let Some(m) = merge_conj(&typing, &c) {
                        out.push((m, d));
                    }
                }
                out
            }
        };
        self.check_cap(out.len())?;
        Ok(out)
    }

    fn check_cap(&self, n: usize) -> Result<(), ConvertError> {
        if n > self.opts.max_rules_per_operator {
            return err(format!(
                "{}: conversion needs more than {} rules",
                self.action, self.opts.max_rules_per_operator
            ));
        }
        Ok(())
    }
}

/// Union of two literal lists, or `None` when they contradict.
fn merge_conj(a: &[Literal], b: &[Literal]) -> Option<Lits> {
    let mut c = Conjunction::from_literals(a.iter().cloned());
    for l in b {
        c.push(l.clone());
    }
    let self_neq = c.literals().iter().any(|l| matches!(l, Literal::Neq(x, y) if x == y));
    if c.is_contradictory() || self_neq {
        None
    } else {
        Some(c.literals().to_vec())
    }
}

/// Joint effects of two independent effect distributions; an atom both added and
/// deleted ends up added.
fn dist_product(a: &Dist, b: &Dist) -> Dist {
    let mut out = Dist::new();
    for (p, e1, r1) in a {
        for (q, e2, r2) in b {
            let mut effects: Lits = Vec::new();
            for l in e1.iter().chain(e2) {
                if effects.contains(l) {
                    continue;
                }
                if let Literal::Atom { positive: false, .. } = l {
                    if e1.iter().chain(e2).any(|m| m.contradicts(l)) {
                        continue;
                    }
                }
                effects.push(l.clone());
            }
            out.push((p * q, effects, r1 + r2));
        }
    }
    out
}

fn same_set(a: &[Literal], b: &[Literal]) -> bool {
    a.len() == b.len() && a.iter().all(|l| b.contains(l))
}

fn normalize(d: Dist) -> Vec<Outcome> {
    let mut merged: Dist = Vec::new();
    for (p, e, r) in d {
        if p <= 0.0 {
            continue;
        }
        match merged.iter_mut().find(|(_, e2, r2)| same_set(&e, e2) && *r2 == r) {
            Some(x) => x.0 += p,
            None => merged.push((p, e, r)),
        }
    }
    merged.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    merged
        .into_iter()
        // products of decimal probabilities pick up float dust like 0.10000000000000009
        .map(|(p, e, r)| Outcome { prob: (p * 1e12).round() / 1e12, effects: Conjunction::from_literals(e), reward: r })
        .collect()
}

fn derived_body(sig: &Signature, d: &DerivedDecl, namer: &mut Namer) -> Result<DerivedBody, ConvertError> {
    let lit = |f: &Formula, namer: &Namer| -> Result<Literal, ConvertError> {
        let (inner, positive) = match f {
            Formula::Not(x) => (&**x, false),
            x => (x, true),
        };
        let Formula::Atom { pred, args } = inner else {
            return err(format!("derived `{}`: unsupported body `{}`", d.name, w_formula(f)));
        };
        let id = sig.pred_id(pred).ok_or_else(|| ConvertError(format!("unknown predicate `{pred}`")))?;
        let args = args
            .iter()
            .map(|a| match a {
                PTerm::Var(v) => namer
                    .get(v)
                    .map(|n| Term::Var(n.to_string()))
                    .ok_or_else(|| ConvertError(format!("derived `{}`: unbound variable ?{v}", d.name))),
                PTerm::Const(c) => Ok(Term::Const(c.clone())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Literal::Atom { pred: id, args, positive })
    };
    Ok(match &d.body {
        Formula::Forall(vars, body) if vars.len() == 1 => {
            let var = namer.bind(&vars[0].name);
            match lit(body, namer)? {
                Literal::Atom { pred, args, positive: false } => DerivedBody::ForallNot { var, pred, args },
                _ => return err(format!("derived `{}`: forall body must be a negated atom", d.name)),
            }
        }
        Formula::And(v) => DerivedBody::And(v.iter().map(|f| lit(f, namer)).collect::<Result<_, _>>()?),
        Formula::Or(v) => DerivedBody::Or(v.iter().map(|f| lit(f, namer)).collect::<Result<_, _>>()?),
        f => DerivedBody::And(vec![lit(f, namer)?]),
    })
}

fn build_signature(dom: &PpddlDomain) -> Result<Signature, ConvertError> {
    let mut sig = Signature::new();
    let e = |x: crate::logic::LogicError| ConvertError(x.to_string());
    for p in &dom.predicates {
        sig.add_predicate(&p.name, p.params.len(), PredKind::Primitive).map_err(e)?;
    }
    for (t, _) in &dom.types {
        if t == "object" {
            continue;
        }
        match sig.pred_id(t) {
            Some(id) if sig.predicate(id).arity == 1 => {}
            Some(_) => return err(format!("type `{t}` clashes with a predicate of another arity")),
            None => {
                sig.add_predicate(t, 1, PredKind::Primitive).map_err(e)?;
            }
        }
    }
    for d in &dom.derived {
        let id = sig.add_predicate(&d.name, d.params.len(), PredKind::Derived).map_err(e)?;
        let mut namer = Namer::new();
        let params: Vec<String> = d.params.iter().map(|p| namer.bind(&p.name)).collect();
        let body = derived_body(&sig, d, &mut namer)?;
        sig.define(id, DerivedDef { params, body }).map_err(e)?;
    }
    for a in &dom.actions {
        sig.add_predicate(&a.name, a.params.len(), PredKind::Action).map_err(e)?;
    }
    Ok(sig)
}

/// A when-block emitted by [`nid_to_ppddl`] for one rule: its context group, the
/// effect, and the quantified deictic variables. The remaining conjuncts only encode
/// uniqueness and are implied by the covering semantics of rules.
fn as_selector(e: &Effect) -> Option<(&[TypedVar], &Formula, &Effect)> {
    let (vars, inner): (&[TypedVar], &Effect) = match e {
        Effect::Forall(v, x) => (v, x),
        other => (&[], other),
    };
    let Effect::When(Formula::And(items), body) = inner else { return None };
    let [group @ Formula::And(_), rest @ ..] = items.as_slice() else { return None };
    let encoding = |f: &Formula| match f {
        Formula::Not(x) => matches!(**x, Formula::Exists(..) | Formula::Eq(..) | Formula::And(_)),
        Formula::Forall(_, x) => matches!(**x, Formula::Imply(..)),
        _ => false,
    };
    if rest.is_empty() || !rest.iter().all(encoding) {
        return None;
    }
    Some((vars, group, body))
}

pub fn ppddl_to_nid(dom: &PpddlDomain, opts: ToNidOptions) -> Result<Conversion, ConvertError> {
    let sig = build_signature(dom)?;
    let mut rules = Vec::new();
    let mut warnings = Vec::new();
    for action in &dom.actions {
        let start = rules.len();
        let selectors = convert_action(&sig, action, opts, &mut rules)?;
        if !selectors {
            let group = &rules[start..];
            for i in 0..group.len() {
                for j in i + 1..group.len() {
                    let (a, b): (&AbstractRule, &AbstractRule) = (&group[i], &group[j]);
                    let disjoint =
                        a.context.literals().iter().any(|x| b.context.literals().iter().any(|y| x.contradicts(y)));
                    if !disjoint {
                        warnings.push(format!(
                            "{}: generated rules {} and {} have overlapping contexts",
                            action.name,
                            start + i + 1,
                            start + j + 1
                        ));
                    }
                }
            }
        }
    }
    for (i, r) in rules.iter().enumerate() {
        r.validate(&sig).map_err(|e| ConvertError(format!("generated rule {}: {e}", i + 1)))?;
    }
    Ok(Conversion { rules: RuleFile { signature: Arc::new(sig), rules }, warnings })
}

/// Appends the rules of one operator; returns whether selector blocks were used.
fn convert_action(
    sig: &Signature,
    action: &PpddlAction,
    opts: ToNidOptions,
    rules: &mut Vec<AbstractRule>,
) -> Result<bool, ConvertError> {
    let pred = sig.pred_id(&action.name).expect("declared above");
    let mut cx = ToNid { sig, opts, namer: Namer::new(), action: action.name.clone() };
    let mut head = Vec::new();
    let mut typing = Vec::new();
    for p in &action.params {
        head.push(Term::Var(cx.namer.bind(&p.name)));
        if let Some(t) = cx.typing(p)? {
            typing.push(t);
        }
    }
    let pre = cx.xdnf(&action.precondition, true)?;
    let emit = |context: Lits, dist: Dist, rules: &mut Vec<AbstractRule>| {
        let outcomes = normalize(dist);
        if outcomes.iter().all(|o| o.effects.is_empty() && o.reward == 0.0) {
            return;
        }
        rules.push(AbstractRule {
            action: ActionAtom { pred, args: head.clone() },
            context: Conjunction::from_literals(context),
            outcomes,
            noise: 0.0,
            noise_changes: 1.0,
        });
    };

    let items: Vec<&Effect> = match &action.effect {
        Effect::And(v) => v.iter().collect(),
        e => vec![e],
    };
    let use_selectors = opts.unique_referent && items.iter().any(|e| as_selector(e).is_some());
    let start = rules.len();
    if use_selectors {
        for item in items {
            if item.is_empty() {
                continue;
            }
            let Some((vars, group, body)) = as_selector(item) else {
                return err(format!("{}: effect mixes rule-selector blocks with plain effects", action.name));
            };
            let mark = cx.namer.map.len();
            let used = cx.namer.used;
            let mut local_typing = typing.clone();
            for v in vars {
                cx.namer.bind(&v.name);
                if let Some(t) = cx.typing(v)? {
                    local_typing.push(t);
                }
            }
            let groups = cx.xdnf(group, true)?;
            let cases = cx.cases(body, true)?;
            for p in &pre {
                for g in &groups {
                    for (c, d) in &cases {
                        let ctx = merge_conj(&local_typing, p)
                            .and_then(|x| merge_conj(&x, g))
                            .and_then(|x| merge_conj(&x, c));
                        if let Some(ctx) = ctx {
                            emit(ctx, d.clone(), rules);
                        }
                    }
                }
            }
            cx.namer.map.truncate(mark);
            cx.namer.used = used;
        }
    } else {
        let cases = cx.cases(&action.effect, false)?;
        for p in &pre {
            for (c, d) in &cases {
                if let Some(ctx) = merge_conj(&typing, p).and_then(|x| merge_conj(&x, c)) {
                    emit(ctx, d.clone(), rules);
                }
            }
        }
    }
    cx.check_cap(rules.len() - start)?;
    Ok(use_selectors)
}

struct ToPpddl<'a> {
    sig: &'a Signature,
}

impl ToPpddl<'_> {
    fn term(t: &Term, map: &[(String, String)]) -> PTerm {
        match t {
            Term::Var(v) => PTerm::Var(map.iter().find(|(a, _)| a == v).map_or_else(|| v.clone(), |(_, b)| b.clone())),
            Term::Const(c) => PTerm::Const(c.clone()),
        }
    }

    fn literal(&self, l: &Literal, map: &[(String, String)]) -> Result<Formula, ConvertError> {
        Ok(match l {
            Literal::Atom { pred, args, positive } => {
                let a =
                    Formula::atom(&self.sig.predicate(*pred).name, args.iter().map(|t| Self::term(t, map)).collect());
                if *positive {
                    a
                } else {
                    Formula::not(a)
                }
            }
            Literal::Neq(a, b) => Formula::not(Formula::Eq(Self::term(a, map), Self::term(b, map))),
            Literal::FuncEq { func, .. } => {
                return err(format!(
                    "function `{}` cannot be written as a PPDDL literal",
                    self.sig.function(*func).name
                ))
            }
        })
    }
}

struct RuleView {
    deictic: Vec<String>,
    /// Head conditions plus context, under the rule's own variable names.
    group: Vec<Literal>,
    /// Head equalities that must hold besides the context.
    head_eqs: Vec<Formula>,
    /// Rule variable name -> operator parameter name.
    param_map: Vec<(String, String)>,
}

fn fresh(base: &str, taken: &mut BTreeSet<String>) -> String {
    let mut n = 2;
    loop {
        let cand = format!("{base}{n}");
        if taken.insert(cand.clone()) {
            return cand;
        }
        n += 1;
    }
}

pub fn nid_to_ppddl(file: &RuleFile, opts: &ToPpddlOptions) -> Result<PpddlDomain, ConvertError> {
    let sig = &*file.signature;
    let conv = ToPpddl { sig };
    let mut dom = PpddlDomain { name: opts.domain_name.clone(), ..PpddlDomain::default() };
    let mut reqs = vec![
        ":probabilistic-effects",
        ":conditional-effects",
        ":negative-preconditions",
        ":disjunctive-preconditions",
        ":equality",
        ":quantified-preconditions",
    ];
    let pvars = |n: usize| (0..n).map(|i| TypedVar::untyped(&format!("a{}", i + 1))).collect::<Vec<_>>();
    for (id, p) in sig.predicates() {
        match p.kind {
            PredKind::Primitive => dom.predicates.push(PredicateDecl { name: p.name.clone(), params: pvars(p.arity) }),
            PredKind::Derived => {
                let def = &sig.derived()[&id];
                let map: Vec<(String, String)> = Vec::new();
                let body = match &def.body {
                    DerivedBody::ForallNot { var, pred, args } => Formula::Forall(
                        vec![TypedVar::untyped(var)],
                        Box::new(
                            conv.literal(&Literal::Atom { pred: *pred, args: args.clone(), positive: false }, &map)?,
                        ),
                    ),
                    DerivedBody::And(v) => {
                        Formula::And(v.iter().map(|l| conv.literal(l, &map)).collect::<Result<_, _>>()?)
                    }
                    DerivedBody::Or(v) => {
                        Formula::Or(v.iter().map(|l| conv.literal(l, &map)).collect::<Result<_, _>>()?)
                    }
                };
                dom.derived.push(DerivedDecl {
                    name: p.name.clone(),
                    params: def.params.iter().map(|v| TypedVar::untyped(v)).collect(),
                    body,
                });
            }
            PredKind::Action => {}
        }
    }
    if !dom.derived.is_empty() {
        reqs.push(":derived-predicates");
    }
    if file.rules.iter().any(|r| r.outcomes.iter().any(|o| o.reward != 0.0)) {
        reqs.push(":rewards");
    }
    dom.requirements = reqs.into_iter().map(str::to_string).collect();

    let changeable: BTreeSet<_> = file
        .rules
        .iter()
        .flat_map(|r| r.outcomes.iter().flat_map(|o| o.effects.literals().iter()))
        .filter_map(|l| match l {
            Literal::Atom { pred, .. } => Some(*pred),
            _ => None,
        })
        .collect();

    for (id, p) in sig.predicates() {
        if p.kind != PredKind::Action {
            continue;
        }
        let group: Vec<&AbstractRule> = file.rules.iter().filter(|r| r.action.pred == id).collect();
        let params: Vec<String> = (0..p.arity)
            .map(|i| match group.first().and_then(|r| r.action.args.get(i)) {
                Some(Term::Var(v))
                    if group[0].action.args.iter().filter(|t| *t == &Term::Var(v.clone())).count() == 1 =>
                {
                    v.clone()
                }
                _ => format!("A{}", i + 1),
            })
            .collect();
        let views: Vec<RuleView> = group.iter().map(|r| rule_view(r, &params)).collect();
        let mut taken: BTreeSet<String> = params.iter().cloned().collect();
        for r in &group {
            for v in r.context.free_vars() {
                taken.insert(v);
            }
        }

        // the context group of a rule, with deictic variables renamed by `dmap`
        let group_formula = |v: &RuleView, dmap: &[(String, String)]| -> Result<Formula, ConvertError> {
            let mut map = v.param_map.clone();
            map.extend(dmap.iter().cloned());
            let mut items = v.head_eqs.clone();
            for l in &v.group {
                items.push(conv.literal(l, &map)?);
            }
            Ok(Formula::And(items))
        };
        let distinct = |names: &[String]| -> Vec<Formula> {
            let mut out = Vec::new();
            for d in names {
                for a in &params {
                    out.push(Formula::not(Formula::Eq(PTerm::Var(d.clone()), PTerm::Var(a.clone()))));
                }
            }
            out
        };
        let ident =
            |v: &RuleView| -> Vec<(String, String)> { v.deictic.iter().map(|d| (d.clone(), d.clone())).collect() };

        let mut blocks = Vec::new();
        let mut exists_forms = Vec::new();
        for (j, (r, v)) in group.iter().zip(&views).enumerate() {
            let mut cond = vec![group_formula(v, &ident(v))?];
            cond.extend(distinct(&v.deictic));
            if !v.deictic.is_empty() {
                let renamed: Vec<(String, String)> =
                    v.deictic.iter().map(|d| (d.clone(), fresh(d, &mut taken))).collect();
                let new_names: Vec<String> = renamed.iter().map(|(_, n)| n.clone()).collect();
                let mut lhs = match group_formula(v, &renamed)? {
                    Formula::And(items) => items,
                    f => vec![f],
                };
                lhs.extend(distinct(&new_names));
                let eqs =
                    renamed.iter().map(|(d, n)| Formula::Eq(PTerm::Var(n.clone()), PTerm::Var(d.clone()))).collect();
                cond.push(Formula::Forall(
                    new_names.iter().map(|n| TypedVar::untyped(n)).collect(),
                    Box::new(Formula::Imply(Box::new(Formula::And(lhs)), Box::new(Formula::And(eqs)))),
                ));
            }
            for (k, w) in views.iter().enumerate() {
                if k == j {
                    continue;
                }
                if w.deictic.is_empty() {
                    cond.push(Formula::not(group_formula(w, &[])?));
                } else {
                    let renamed: Vec<(String, String)> =
                        w.deictic.iter().map(|d| (d.clone(), fresh(d, &mut taken))).collect();
                    let new_names: Vec<String> = renamed.iter().map(|(_, n)| n.clone()).collect();
                    let mut body = match group_formula(w, &renamed)? {
                        Formula::And(items) => items,
                        f => vec![f],
                    };
                    body.extend(distinct(&new_names));
                    cond.push(Formula::not(Formula::Exists(
                        new_names.iter().map(|n| TypedVar::untyped(n)).collect(),
                        Box::new(Formula::And(body)),
                    )));
                }
            }
            let cond = Formula::And(cond);
            let mut map = v.param_map.clone();
            map.extend(ident(v));
            let effect = rule_effect(&conv, r, &map, opts.noise, &changeable)?;
            let when = Effect::When(cond.clone(), Box::new(effect));
            if v.deictic.is_empty() {
                exists_forms.push(cond);
                blocks.push(when);
            } else {
                let vars: Vec<TypedVar> = v.deictic.iter().map(|d| TypedVar::untyped(d)).collect();
                exists_forms.push(Formula::Exists(vars.clone(), Box::new(cond)));
                blocks.push(Effect::Forall(vars, Box::new(when)));
            }
        }
        if !group.is_empty() {
            let residual = if views.iter().all(|v| v.deictic.is_empty()) {
                let groups: Vec<Formula> = views.iter().map(|v| group_formula(v, &[])).collect::<Result<_, _>>()?;
                let mut alts = vec![and_of(groups.iter().map(|g| Formula::not(g.clone())).collect())];
                for i in 0..groups.len() {
                    for k in i + 1..groups.len() {
                        alts.push(Formula::And(vec![groups[i].clone(), groups[k].clone()]));
                    }
                }
                or_of(alts)
            } else {
                Formula::not(or_of(exists_forms))
            };
            blocks.push(Effect::When(residual, Box::new(Effect::And(Vec::new()))));
        }
        dom.actions.push(PpddlAction {
            name: p.name.clone(),
            params: params.iter().map(|n| TypedVar::untyped(n)).collect(),
            precondition: Formula::And(Vec::new()),
            effect: Effect::And(blocks),
        });
    }
    Ok(dom)
}

fn and_of(mut v: Vec<Formula>) -> Formula {
    if v.len() == 1 {
        v.pop().unwrap()
    } else {
        Formula::And(v)
    }
}

fn or_of(mut v: Vec<Formula>) -> Formula {
    if v.len() == 1 {
        v.pop().unwrap()
    } else {
        Formula::Or(v)
    }
}

fn rule_view(r: &AbstractRule, params: &[String]) -> RuleView {
    let mut param_map = Vec::new();
    let mut head_eqs = Vec::new();
    for (i, t) in r.action.args.iter().enumerate() {
        match t {
            Term::Var(v) => match param_map.iter().find(|(a, _): &&(String, String)| a == v) {
                Some((_, first)) => {
                    head_eqs.push(Formula::Eq(PTerm::Var(first.clone()), PTerm::Var(params[i].clone())));
                }
                None => param_map.push((v.clone(), params[i].clone())),
            },
            Term::Const(c) => head_eqs.push(Formula::Eq(PTerm::Var(params[i].clone()), PTerm::Const(c.clone()))),
        }
    }
    RuleView { deictic: r.deictic_vars(), group: r.context.literals().to_vec(), head_eqs, param_map }
}

fn rule_effect(
    conv: &ToPpddl,
    r: &AbstractRule,
    map: &[(String, String)],
    noise: NoiseExport,
    changeable: &BTreeSet<crate::logic::PredId>,
) -> Result<Effect, ConvertError> {
    let outcome = |o: &Outcome| -> Result<Effect, ConvertError> {
        let mut items = Vec::new();
        for l in o.effects.literals() {
            match conv.literal(l, map)? {
                Formula::Atom { pred, args } => items.push(Effect::Lit { pred, args, positive: true }),
                Formula::Not(x) => match *x {
                    Formula::Atom { pred, args } => items.push(Effect::Lit { pred, args, positive: false }),
                    _ => return err("unsupported outcome literal"),
                },
                _ => return err("unsupported outcome literal"),
            }
        }
        if o.reward != 0.0 {
            items.push(Effect::Reward(o.reward));
        }
        Ok(Effect::And(items))
    };
    let mut branches: Vec<(f64, Effect)> =
        r.outcomes.iter().map(|o| Ok((o.prob, outcome(o)?))).collect::<Result<_, ConvertError>>()?;
    if let NoiseExport::Independent { change_prob } = noise {
        if r.noise > 0.0 {
            let mut flips = Vec::new();
            for &p in changeable {
                let decl = conv.sig.predicate(p);
                let vars: Vec<TypedVar> = (0..decl.arity).map(|i| TypedVar::untyped(&format!("n{}", i + 1))).collect();
                let args: Vec<PTerm> = vars.iter().map(|v| PTerm::Var(v.name.clone())).collect();
                let atom = Formula::atom(&decl.name, args.clone());
                let flip = |now: bool| {
                    Effect::When(
                        if now { atom.clone() } else { Formula::not(atom.clone()) },
                        Box::new(Effect::Prob(vec![(
                            change_prob,
                            Effect::Lit { pred: decl.name.clone(), args: args.clone(), positive: !now },
                        )])),
                    )
                };
                if vars.is_empty() {
                    flips.push(flip(true));
                    flips.push(flip(false));
                } else {
                    flips.push(Effect::Forall(vars.clone(), Box::new(flip(true))));
                    flips.push(Effect::Forall(vars, Box::new(flip(false))));
                }
            }
            branches.push((r.noise, Effect::And(flips)));
        }
    }
    if branches.len() == 1 && branches[0].0 >= 1.0 {
        return Ok(branches.pop().unwrap().1);
    }
    Ok(Effect::Prob(branches))
}
