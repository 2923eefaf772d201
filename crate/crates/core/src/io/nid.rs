//! The `.nid` rule language.
//!
//! ```text
//! predicate on/2
//! action grab/1
//! function size/1 in 0..3
//! derived clear(X) := forall Y: !on(Y,X)
//!
//! rule grab(X) : on(Y,X), cube(X) -> {
//!   0.7 : inhand(X), !on(Y,X)
//!   0.2 : nochange
//!   0.1 : noise
//! }
//! ```

use std::fmt::Write as _;
use std::sync::Arc;

use crate::logic::{Conjunction, DerivedBody, DerivedDef, Literal, PredKind, Signature, Symbol, Term};
use crate::rules::{AbstractRule, ActionAtom, Outcome};

use super::lexer::{is_variable, Cursor, Tok};
use super::ParseError;

const RESERVED: &[&str] = &[
    "rule",
    "predicate",
    "action",
    "function",
    "derived",
    "noise",
    "nochange",
    "reward",
    "forall",
    "in",
    "objects",
    "init",
    "prior",
    "goal",
    "horizon",
    "discount",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RuleFile {
    pub signature: Arc<Signature>,
    pub rules: Vec<AbstractRule>,
}

pub fn parse_rules(text: &str, file: &str) -> Result<RuleFile, ParseError> {
    let mut cur = Cursor::new(text, file)?;
    let mut sig = Signature::new();
    let mut rules = Vec::new();
    while !cur.at_end() {
        let pos = cur.here();
        let kw = cur.ident()?;
        match kw.as_str() {
            "predicate" | "action" => {
                let name = declared_name(&mut cur)?;
                cur.expect(&Tok::Slash)?;
                let arity = arity(&mut cur)?;
                let kind = if kw == "action" { PredKind::Action } else { PredKind::Primitive };
                sig.add_predicate(&name, arity, kind).map_err(|e| cur.error_at(pos, e.to_string()))?;
            }
            "function" => {
                let name = declared_name(&mut cur)?;
                cur.expect(&Tok::Slash)?;
                let arity = arity(&mut cur)?;
                if !cur.is_keyword("in") {
                    return Err(cur.unexpected("`in`"));
                }
                cur.next();
                let min = cur.integer()?;
                cur.expect(&Tok::DotDot)?;
                let max = cur.integer()?;
                sig.add_function(&name, arity, min, max).map_err(|e| cur.error_at(pos, e.to_string()))?;
            }
            "derived" => parse_derived(&mut cur, &mut sig)?,
            "rule" => {
                let rule = parse_rule(&mut cur, &sig)?;
                rule.validate(&sig).map_err(|e| cur.error_at(pos, e.to_string()))?;
                rules.push(rule);
            }
            _ => return Err(cur.error_at(pos, format!("expected a declaration or rule, found `{kw}`"))),
        }
    }
    Ok(RuleFile { signature: Arc::new(sig), rules })
}

fn declared_name(cur: &mut Cursor) -> Result<String, ParseError> {
    let pos = cur.here();
    let name = cur.ident()?;
    if RESERVED.contains(&name.as_str()) || is_variable(&name) || name == "doNothing" {
        return Err(cur.error_at(pos, format!("`{name}` cannot be used as a symbol name")));
    }
    Ok(name)
}

fn arity(cur: &mut Cursor) -> Result<usize, ParseError> {
    let pos = cur.here();
    let n = cur.integer()?;
    usize::try_from(n).map_err(|_| cur.error_at(pos, "arity must be non-negative"))
}

fn parse_derived(cur: &mut Cursor, sig: &mut Signature) -> Result<(), ParseError> {
    let pos = cur.here();
    let name = declared_name(cur)?;
    let params: Vec<String> = term_list(cur)?
        .into_iter()
        .map(|t| match t {
            Term::Var(v) => Ok(v),
            Term::Const(c) => Err(cur.error_at(pos, format!("derived parameter `{c}` must be a variable"))),
        })
        .collect::<Result<_, _>>()?;
    cur.expect(&Tok::Define)?;
    let body = if cur.is_keyword("forall") {
        cur.next();
        let var = cur.ident()?;
        cur.expect(&Tok::Colon)?;
        let lpos = cur.here();
        match parse_literal(cur, sig, true)? {
            Literal::Atom { pred, args, positive: false } => DerivedBody::ForallNot { var, pred, args },
            _ => return Err(cur.error_at(lpos, "forall body must be a negated atom")),
        }
    } else {
        let mut lits = vec![parse_literal(cur, sig, true)?];
        let mut disjunctive = None;
        while let Some(t @ (Tok::Amp | Tok::Pipe)) = cur.peek() {
            let or = *t == Tok::Pipe;
            if disjunctive.is_some_and(|d| d != or) {
                return Err(cur.error("cannot mix `&` and `|` in one definition"));
            }
            disjunctive = Some(or);
            cur.next();
            lits.push(parse_literal(cur, sig, true)?);
        }
        if disjunctive == Some(true) {
            DerivedBody::Or(lits)
        } else {
            DerivedBody::And(lits)
        }
    };
    let id = sig.add_predicate(&name, params.len(), PredKind::Derived).map_err(|e| cur.error_at(pos, e.to_string()))?;
    sig.define(id, DerivedDef { params, body }).map_err(|e| cur.error_at(pos, e.to_string()))
}

fn term_list(cur: &mut Cursor) -> Result<Vec<Term>, ParseError> {
    let mut out = Vec::new();
    if !cur.eat(&Tok::LParen) {
        return Ok(out);
    }
    if cur.eat(&Tok::RParen) {
        return Ok(out);
    }
    loop {
        let name = cur.ident()?;
        out.push(if is_variable(&name) { Term::Var(name) } else { Term::Const(name) });
        if cur.eat(&Tok::RParen) {
            return Ok(out);
        }
        cur.expect(&Tok::Comma)?;
    }
}

/// Parses one literal: `p(args)`, `!p(args)`, `f(args)=k` or `A != B`.
pub(crate) fn parse_literal(cur: &mut Cursor, sig: &Signature, allow_vars: bool) -> Result<Literal, ParseError> {
    let pos = cur.here();
    let negated = cur.eat(&Tok::Bang);
    let name = cur.ident()?;
    let symbol = sig.lookup(&name);
    if !negated && (symbol.is_none() || is_variable(&name)) && cur.peek() == Some(&Tok::Neq) {
        cur.next();
        let other = cur.ident()?;
        let term = |n: String| if is_variable(&n) { Term::Var(n) } else { Term::Const(n) };
        let lit = Literal::Neq(term(name), term(other));
        return check_vars(cur, pos, lit, allow_vars);
    }
    let lit = match symbol {
        Some(Symbol::Pred(pred)) => {
            let p = sig.predicate(pred);
            if p.kind == PredKind::Action {
                return Err(cur.error_at(pos, format!("action `{name}` used as a literal")));
            }
            let args = term_list(cur)?;
            Literal::Atom { pred, args, positive: !negated }
        }
        Some(Symbol::Func(func)) => {
            if negated {
                return Err(cur.error_at(pos, "function assertions cannot be negated"));
            }
            let args = term_list(cur)?;
            cur.expect(&Tok::Eq)?;
            let value = cur.integer()?;
            Literal::FuncEq { func, args, value }
        }
        None => return Err(cur.error_at(pos, format!("unknown symbol `{name}`"))),
    };
    sig.check_literal(&lit).map_err(|e| cur.error_at(pos, e.to_string()))?;
    check_vars(cur, pos, lit, allow_vars)
}

fn check_vars(cur: &Cursor, pos: (usize, usize), lit: Literal, allow_vars: bool) -> Result<Literal, ParseError> {
    if !allow_vars {
        if let Some(v) = lit.variables().next() {
            return Err(cur.error_at(pos, format!("variable `{v}` in a ground formula")));
        }
    }
    Ok(lit)
}

fn starts_literal(cur: &Cursor) -> bool {
    match cur.peek() {
        Some(Tok::Bang) => true,
        Some(Tok::Ident(s)) => !RESERVED.contains(&s.as_str()),
        _ => false,
    }
}

/// A literal list with optional commas, stopping before anything that cannot start a literal.
pub(crate) fn parse_literals(cur: &mut Cursor, sig: &Signature, allow_vars: bool) -> Result<Conjunction, ParseError> {
    let mut conj = Conjunction::new();
    while starts_literal(cur) {
        conj.push(parse_literal(cur, sig, allow_vars)?);
        cur.eat(&Tok::Comma);
    }
    Ok(conj)
}

fn parse_rule(cur: &mut Cursor, sig: &Signature) -> Result<AbstractRule, ParseError> {
    let pos = cur.here();
    let name = cur.ident()?;
    let pred = match sig.lookup(&name) {
        Some(Symbol::Pred(p)) if sig.predicate(p).kind == PredKind::Action => p,
        _ => return Err(cur.error_at(pos, format!("`{name}` is not a declared action"))),
    };
    let args = term_list(cur)?;
    let context = if cur.eat(&Tok::Colon) { parse_literals(cur, sig, true)? } else { Conjunction::new() };
    cur.expect(&Tok::Arrow)?;
    cur.expect(&Tok::LBrace)?;
    let mut outcomes = Vec::new();
    let mut noise: Option<(f64, f64)> = None;
    while !cur.eat(&Tok::RBrace) {
        let ppos = cur.here();
        let prob = cur.number()?;
        cur.expect(&Tok::Colon)?;
        if cur.is_keyword("noise") {
            cur.next();
            let mut changes = 1.0;
            if cur.eat(&Tok::LParen) {
                changes = cur.number()?;
                cur.expect(&Tok::RParen)?;
            }
            if noise.replace((prob, changes)).is_some() {
                return Err(cur.error_at(ppos, "more than one noise outcome"));
            }
            continue;
        }
        let effects = if cur.is_keyword("nochange") {
            cur.next();
            Conjunction::new()
        } else {
            let e = parse_literals(cur, sig, true)?;
            if e.is_empty() {
                return Err(cur.unexpected("outcome literals, `nochange` or `noise`"));
            }
            e
        };
        let mut reward = 0.0;
        if cur.is_keyword("reward") {
            cur.next();
            reward = cur.number()?;
        }
        outcomes.push(Outcome { prob, effects, reward });
    }
    let (noise, noise_changes) = noise.unwrap_or((0.0, 1.0));
    Ok(AbstractRule { action: ActionAtom { pred, args }, context, outcomes, noise, noise_changes })
}

/// Formats a number so that it parses back to the same value.
pub(crate) fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}

fn fmt_terms(args: &[Term]) -> String {
    let names: Vec<&str> = args
        .iter()
        .map(|t| match t {
            Term::Var(v) | Term::Const(v) => v.as_str(),
        })
        .collect();
    format!("({})", names.join(","))
}

pub(crate) fn fmt_literal(sig: &Signature, lit: &Literal) -> String {
    match lit {
        Literal::Atom { pred, args, positive } => {
            format!("{}{}{}", if *positive { "" } else { "!" }, sig.predicate(*pred).name, fmt_terms(args))
        }
        Literal::FuncEq { func, args, value } => format!("{}{}={}", sig.function(*func).name, fmt_terms(args), value),
        Literal::Neq(a, b) => {
            let n = |t: &Term| match t {
                Term::Var(v) | Term::Const(v) => v.clone(),
            };
            format!("{} != {}", n(a), n(b))
        }
    }
}

pub(crate) fn fmt_conj(sig: &Signature, c: &Conjunction) -> String {
    c.literals().iter().map(|l| fmt_literal(sig, l)).collect::<Vec<_>>().join(", ")
}

pub fn serialize_rule(sig: &Signature, r: &AbstractRule) -> String {
    let mut s = String::new();
    let head = &sig.predicate(r.action.pred).name;
    let _ = write!(s, "rule {}{}", head, fmt_terms(&r.action.args));
    if !r.context.is_empty() {
        let _ = write!(s, " : {}", fmt_conj(sig, &r.context));
    }
    s.push_str(" -> {\n");
    for o in &r.outcomes {
        let body = if o.effects.is_empty() { "nochange".to_string() } else { fmt_conj(sig, &o.effects) };
        let _ = write!(s, "  {} : {}", fmt_num(o.prob), body);
        if o.reward != 0.0 {
            let _ = write!(s, " reward {}", fmt_num(o.reward));
        }
        s.push('\n');
    }
    if r.noise != 0.0 || r.noise_changes != 1.0 {
        let _ = write!(s, "  {} : noise", fmt_num(r.noise));
        if r.noise_changes != 1.0 {
            let _ = write!(s, "({})", fmt_num(r.noise_changes));
        }
        s.push('\n');
    }
    s.push_str("}\n");
    s
}

pub fn serialize_rules(file: &RuleFile) -> String {
    let sig = &file.signature;
    let mut s = String::new();
    for (_, f) in sig.functions() {
        let _ = writeln!(s, "function {}/{} in {}..{}", f.name, f.arity, f.min, f.max);
    }
    for (id, p) in sig.predicates() {
        match p.kind {
            PredKind::Primitive => {
                let _ = writeln!(s, "predicate {}/{}", p.name, p.arity);
            }
            PredKind::Action => {
                let _ = writeln!(s, "action {}/{}", p.name, p.arity);
            }
            PredKind::Derived => {
                let def = &sig.derived()[&id];
                let body = match &def.body {
                    DerivedBody::ForallNot { var, pred, args } => format!(
                        "forall {}: {}",
                        var,
                        fmt_literal(sig, &Literal::Atom { pred: *pred, args: args.clone(), positive: false })
                    ),
                    DerivedBody::And(lits) => lits.iter().map(|l| fmt_literal(sig, l)).collect::<Vec<_>>().join(" & "),
                    DerivedBody::Or(lits) => lits.iter().map(|l| fmt_literal(sig, l)).collect::<Vec<_>>().join(" | "),
                };
                let params: Vec<Term> = def.params.iter().map(|p| Term::Var(p.clone())).collect();
                let _ = writeln!(s, "derived {}{} := {}", p.name, fmt_terms(&params), body);
            }
        }
    }
    for r in &file.rules {
        s.push('\n');
        s.push_str(&serialize_rule(sig, r));
    }
    s
}
