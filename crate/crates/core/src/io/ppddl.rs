//! A PPDDL subset: STRIPS with negative and disjunctive preconditions, typing,
//! probabilistic, conditional and universal effects, reward increments and
//! `:derived` predicates in the forms the rule language supports.

use std::fmt::Write as _;

use super::sexpr::{parse_sexprs, SExpr};
use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PTerm {
    /// Variable name without the leading `?`.
    Var(String),
    Const(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedVar {
    pub name: String,
    pub ty: String,
}

impl TypedVar {
    pub fn untyped(name: &str) -> Self {
        TypedVar { name: name.to_string(), ty: "object".to_string() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    Atom { pred: String, args: Vec<PTerm> },
    Eq(PTerm, PTerm),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Imply(Box<Formula>, Box<Formula>),
    Exists(Vec<TypedVar>, Box<Formula>),
    Forall(Vec<TypedVar>, Box<Formula>),
}

impl Formula {
    pub fn atom(pred: &str, args: Vec<PTerm>) -> Self {
        Formula::Atom { pred: pred.to_string(), args }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Effect {
    Lit {
        pred: String,
        args: Vec<PTerm>,
        positive: bool,
    },
    And(Vec<Effect>),
    Prob(Vec<(f64, Effect)>),
    When(Formula, Box<Effect>),
    Forall(Vec<TypedVar>, Box<Effect>),
    /// `(increase (reward) k)`; `decrease` stores `-k`.
    Reward(f64),
}

impl Effect {
    pub fn is_empty(&self) -> bool {
        match self {
            Effect::And(v) => v.iter().all(Effect::is_empty),
            Effect::Prob(v) => v.iter().all(|(_, e)| e.is_empty()),
            Effect::When(_, e) | Effect::Forall(_, e) => e.is_empty(),
            Effect::Lit { .. } | Effect::Reward(_) => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PpddlAction {
    pub name: String,
    pub params: Vec<TypedVar>,
    pub precondition: Formula,
    pub effect: Effect,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedVar>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivedDecl {
    pub name: String,
    pub params: Vec<TypedVar>,
    pub body: Formula,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PpddlDomain {
    pub name: String,
    pub requirements: Vec<String>,
    /// `(type, parent)`; the root type `object` is implicit.
    pub types: Vec<(String, String)>,
    pub constants: Vec<TypedVar>,
    pub predicates: Vec<PredicateDecl>,
    pub derived: Vec<DerivedDecl>,
    pub actions: Vec<PpddlAction>,
}

struct Reader<'a> {
    file: &'a str,
}

impl Reader<'_> {
    fn err(&self, e: &SExpr, msg: impl Into<String>) -> ParseError {
        let (l, c) = e.pos();
        ParseError::new(self.file, l, c, msg)
    }

    fn list<'e>(&self, e: &'e SExpr) -> Result<&'e [SExpr], ParseError> {
        e.as_list().ok_or_else(|| self.err(e, format!("expected a list, found `{e}`")))
    }

    fn atom<'e>(&self, e: &'e SExpr) -> Result<&'e str, ParseError> {
        e.as_atom().ok_or_else(|| self.err(e, format!("expected a name, found `{e}`")))
    }

    fn term(&self, e: &SExpr) -> Result<PTerm, ParseError> {
        let s = self.atom(e)?;
        Ok(match s.strip_prefix('?') {
            Some(v) if !v.is_empty() => PTerm::Var(v.to_string()),
            Some(_) => return Err(self.err(e, "empty variable name")),
            None => PTerm::Const(s.to_string()),
        })
    }

    /// `?a ?b - t ?c` style lists; names keep no `?`.
    fn typed_list(&self, items: &[SExpr], vars: bool) -> Result<Vec<TypedVar>, ParseError> {
        let mut out = Vec::new();
        let mut pending: Vec<String> = Vec::new();
        let mut i = 0;
        while i < items.len() {
            let s = self.atom(&items[i])?;
            if s == "-" {
                let ty = items.get(i + 1).ok_or_else(|| self.err(&items[i], "missing type after `-`"))?;
                let ty = self.atom(ty)?.to_string();
                for n in pending.drain(..) {
                    out.push(TypedVar { name: n, ty: ty.clone() });
                }
                i += 2;
                continue;
            }
            let name = if vars {
                s.strip_prefix('?').ok_or_else(|| self.err(&items[i], format!("expected a variable, found `{s}`")))?
            } else {
                s
            };
            pending.push(name.to_string());
            i += 1;
        }
        out.extend(pending.into_iter().map(|n| TypedVar::untyped(&n)));
        Ok(out)
    }

    fn formula(&self, e: &SExpr) -> Result<Formula, ParseError> {
        let items = self.list(e)?;
        let Some(head) = e.head() else {
            return if items.is_empty() { Ok(Formula::And(Vec::new())) } else { Err(self.err(e, "malformed formula")) };
        };
        let args = &items[1..];
        let one = |what: &str| -> Result<&SExpr, ParseError> {
            if args.len() == 1 {
                Ok(&args[0])
            } else {
                Err(self.err(e, format!("`{what}` takes one argument")))
            }
        };
        Ok(match head.as_str() {
            "and" => Formula::And(args.iter().map(|a| self.formula(a)).collect::<Result<_, _>>()?),
            "or" => Formula::Or(args.iter().map(|a| self.formula(a)).collect::<Result<_, _>>()?),
            "not" => Formula::Not(Box::new(self.formula(one("not")?)?)),
            "imply" => {
                if args.len() != 2 {
                    return Err(self.err(e, "`imply` takes two arguments"));
                }
                Formula::Imply(Box::new(self.formula(&args[0])?), Box::new(self.formula(&args[1])?))
            }
            "exists" | "forall" => {
                if args.len() != 2 {
                    return Err(self.err(e, format!("`{head}` takes a variable list and a body")));
                }
                let vars = self.typed_list(self.list(&args[0])?, true)?;
                let body = Box::new(self.formula(&args[1])?);
                if head == "exists" {
                    Formula::Exists(vars, body)
                } else {
                    Formula::Forall(vars, body)
                }
            }
            "=" => {
                if args.len() != 2 {
                    return Err(self.err(e, "`=` takes two arguments"));
                }
                Formula::Eq(self.term(&args[0])?, self.term(&args[1])?)
            }
            _ => Formula::Atom {
                pred: self.atom(&items[0])?.to_string(),
                args: args.iter().map(|a| self.term(a)).collect::<Result<_, _>>()?,
            },
        })
    }

    fn prob(&self, e: &SExpr) -> Result<f64, ParseError> {
        let s = self.atom(e)?;
        let v = match s.split_once('/') {
            Some((n, d)) => match (n.parse::<f64>(), d.parse::<f64>()) {
                (Ok(n), Ok(d)) if d != 0.0 => Some(n / d),
                _ => None,
            },
            None => s.parse::<f64>().ok(),
        };
        match v {
            Some(p) if (0.0..=1.0).contains(&p) => Ok(p),
            _ => Err(self.err(e, format!("bad probability `{s}`"))),
        }
    }

    fn effect(&self, e: &SExpr) -> Result<Effect, ParseError> {
        let items = self.list(e)?;
        let Some(head) = e.head() else {
            return if items.is_empty() { Ok(Effect::And(Vec::new())) } else { Err(self.err(e, "malformed effect")) };
        };
        let args = &items[1..];
        Ok(match head.as_str() {
            "and" => Effect::And(args.iter().map(|a| self.effect(a)).collect::<Result<_, _>>()?),
            "not" => {
                if args.len() != 1 {
                    return Err(self.err(e, "`not` takes one argument"));
                }
                match self.effect(&args[0])? {
                    Effect::Lit { pred, args, positive: true } => Effect::Lit { pred, args, positive: false },
                    _ => return Err(self.err(e, "only atoms can be negated in effects")),
                }
            }
            "probabilistic" => {
                if args.len() % 2 != 0 {
                    return Err(self.err(e, "`probabilistic` needs probability/effect pairs"));
                }
                let mut branches = Vec::new();
                for pair in args.chunks(2) {
                    branches.push((self.prob(&pair[0])?, self.effect(&pair[1])?));
                }
                let total: f64 = branches.iter().map(|(p, _)| p).sum();
                if total > 1.0 + 1e-9 {
                    return Err(self.err(e, format!("branch probabilities sum to {total}")));
                }
                Effect::Prob(branches)
            }
            "when" => {
                if args.len() != 2 {
                    return Err(self.err(e, "`when` takes a condition and an effect"));
                }
                Effect::When(self.formula(&args[0])?, Box::new(self.effect(&args[1])?))
            }
            "forall" => {
                if args.len() != 2 {
                    return Err(self.err(e, "`forall` takes a variable list and an effect"));
                }
                Effect::Forall(self.typed_list(self.list(&args[0])?, true)?, Box::new(self.effect(&args[1])?))
            }
            "increase" | "decrease" => {
                if args.len() != 2 || args[0].head().as_deref() != Some("reward") {
                    return Err(self.err(e, "only `(increase (reward) k)` fluent updates are supported"));
                }
                let k: f64 = self
                    .atom(&args[1])?
                    .parse()
                    .map_err(|_| self.err(&args[1], "reward increment must be a number"))?;
                Effect::Reward(if head == "increase" { k } else { -k })
            }
            _ => Effect::Lit {
                pred: self.atom(&items[0])?.to_string(),
                args: args.iter().map(|a| self.term(a)).collect::<Result<_, _>>()?,
                positive: true,
            },
        })
    }

    fn action(&self, e: &SExpr) -> Result<PpddlAction, ParseError> {
        let items = self.list(e)?;
        let name = self.atom(items.get(1).ok_or_else(|| self.err(e, "action without a name"))?)?.to_string();
        let mut params = Vec::new();
        let mut precondition = Formula::And(Vec::new());
        let mut effect = Effect::And(Vec::new());
        let mut i = 2;
        while i < items.len() {
            let key = self.atom(&items[i])?.to_ascii_lowercase();
            let val = items.get(i + 1).ok_or_else(|| self.err(&items[i], format!("missing value for `{key}`")))?;
            match key.as_str() {
                ":parameters" => params = self.typed_list(self.list(val)?, true)?,
                ":precondition" => precondition = self.formula(val)?,
                ":effect" => effect = self.effect(val)?,
                _ => return Err(self.err(&items[i], format!("unsupported action field `{key}`"))),
            }
            i += 2;
        }
        Ok(PpddlAction { name, params, precondition, effect })
    }

    fn domain(&self, e: &SExpr) -> Result<PpddlDomain, ParseError> {
        let items = self.list(e)?;
        if e.head().as_deref() != Some("define") {
            return Err(self.err(e, "expected `(define (domain ...) ...)`"));
        }
        let mut dom = PpddlDomain::default();
        let name = items.get(1).ok_or_else(|| self.err(e, "missing domain name"))?;
        let nl = self.list(name)?;
        if name.head().as_deref() != Some("domain") || nl.len() != 2 {
            return Err(self.err(name, "expected `(domain NAME)`"));
        }
        dom.name = self.atom(&nl[1])?.to_string();
        for section in &items[2..] {
            let body = &self.list(section)?[1..];
            match section.head().as_deref() {
                Some(":requirements") => {
                    dom.requirements =
                        body.iter().map(|b| self.atom(b).map(str::to_string)).collect::<Result<_, _>>()?
                }
                Some(":types") => {
                    dom.types = self.typed_list(body, false)?.into_iter().map(|t| (t.name, t.ty)).collect();
                }
                Some(":constants") => dom.constants = self.typed_list(body, false)?,
                Some(":predicates") => {
                    for p in body {
                        let pl = self.list(p)?;
                        let name = self.atom(pl.first().ok_or_else(|| self.err(p, "empty predicate"))?)?;
                        dom.predicates
                            .push(PredicateDecl { name: name.to_string(), params: self.typed_list(&pl[1..], true)? });
                    }
                }
                Some(":functions") => {
                    for f in body {
                        if f.head().as_deref() != Some("reward") {
                            return Err(self.err(f, "only the `(reward)` fluent is supported"));
                        }
                    }
                }
                Some(":derived") => {
                    if body.len() != 2 {
                        return Err(self.err(section, "`:derived` takes a head and a body"));
                    }
                    let head = self.list(&body[0])?;
                    let name = self.atom(head.first().ok_or_else(|| self.err(&body[0], "empty head"))?)?;
                    dom.derived.push(DerivedDecl {
                        name: name.to_string(),
                        params: self.typed_list(&head[1..], true)?,
                        body: self.formula(&body[1])?,
                    });
                }
                Some(":action") => dom.actions.push(self.action(section)?),
                other => {
                    return Err(self.err(section, format!("unsupported domain section `{}`", other.unwrap_or("?"))))
                }
            }
        }
        Ok(dom)
    }
}

pub fn parse_ppddl(text: &str, file: &str) -> Result<PpddlDomain, ParseError> {
    let exprs = parse_sexprs(text, file)?;
    let r = Reader { file };
    match exprs.as_slice() {
        [e] => r.domain(e),
        [] => Err(ParseError::new(file, 1, 1, "empty PPDDL file")),
        [_, e, ..] => Err(r.err(e, "expected a single domain definition")),
    }
}

fn w_term(t: &PTerm) -> String {
    match t {
        PTerm::Var(v) => format!("?{v}"),
        PTerm::Const(c) => c.clone(),
    }
}

fn w_app(name: &str, args: &[PTerm]) -> String {
    let mut s = format!("({name}");
    for a in args {
        s.push(' ');
        s.push_str(&w_term(a));
    }
    s.push(')');
    s
}

fn w_typed(vars: &[TypedVar], prefix: &str) -> String {
    let mut parts = Vec::new();
    for v in vars {
        if v.ty == "object" {
            parts.push(format!("{prefix}{}", v.name));
        } else {
            parts.push(format!("{prefix}{} - {}", v.name, v.ty));
        }
    }
    parts.join(" ")
}

pub(crate) fn w_formula(f: &Formula) -> String {
    let join = |head: &str, v: &[Formula]| {
        let mut s = format!("({head}");
        for x in v {
            s.push(' ');
            s.push_str(&w_formula(x));
        }
        s.push(')');
        s
    };
    match f {
        Formula::Atom { pred, args } => w_app(pred, args),
        Formula::Eq(a, b) => format!("(= {} {})", w_term(a), w_term(b)),
        Formula::Not(x) => format!("(not {})", w_formula(x)),
        Formula::And(v) => join("and", v),
        Formula::Or(v) => join("or", v),
        Formula::Imply(a, b) => format!("(imply {} {})", w_formula(a), w_formula(b)),
        Formula::Exists(vs, b) => format!("(exists ({}) {})", w_typed(vs, "?"), w_formula(b)),
        Formula::Forall(vs, b) => format!("(forall ({}) {})", w_typed(vs, "?"), w_formula(b)),
    }
}

fn w_prob(p: f64) -> String {
    format!("{p}")
}

fn w_effect(e: &Effect, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    match e {
        Effect::Lit { pred, args, positive } => {
            if *positive {
                let _ = write!(out, "{pad}{}", w_app(pred, args));
            } else {
                let _ = write!(out, "{pad}(not {})", w_app(pred, args));
            }
        }
        Effect::Reward(k) => {
            if *k < 0.0 {
                let _ = write!(out, "{pad}(decrease (reward) {})", -k);
            } else {
                let _ = write!(out, "{pad}(increase (reward) {k})");
            }
        }
        Effect::And(v) if v.iter().all(|x| matches!(x, Effect::Lit { .. } | Effect::Reward(_))) => {
            let _ = write!(out, "{pad}(and");
            for x in v {
                out.push(' ');
                w_effect(x, 0, out);
            }
            out.push(')');
        }
        Effect::And(v) => {
            let _ = writeln!(out, "{pad}(and");
            for x in v {
                w_effect(x, indent + 2, out);
                out.push('\n');
            }
            let _ = write!(out, "{pad})");
        }
        Effect::Prob(branches) => {
            let _ = writeln!(out, "{pad}(probabilistic");
            for (p, x) in branches {
                let _ = writeln!(out, "{pad}  {}", w_prob(*p));
                w_effect(x, indent + 4, out);
                out.push('\n');
            }
            let _ = write!(out, "{pad})");
        }
        Effect::When(c, x) => {
            let _ = writeln!(out, "{pad}(when {}", w_formula(c));
            w_effect(x, indent + 2, out);
            out.push(')');
        }
        Effect::Forall(vs, x) => {
            let _ = writeln!(out, "{pad}(forall ({})", w_typed(vs, "?"));
            w_effect(x, indent + 2, out);
            out.push(')');
        }
    }
}

pub fn write_ppddl(dom: &PpddlDomain) -> String {
    let mut s = format!("(define (domain {})\n", dom.name);
    if !dom.requirements.is_empty() {
        let _ = writeln!(s, "  (:requirements {})", dom.requirements.join(" "));
    }
    if !dom.types.is_empty() {
        let tv: Vec<TypedVar> = dom.types.iter().map(|(n, p)| TypedVar { name: n.clone(), ty: p.clone() }).collect();
        let _ = writeln!(s, "  (:types {})", w_typed(&tv, ""));
    }
    if !dom.constants.is_empty() {
        let _ = writeln!(s, "  (:constants {})", w_typed(&dom.constants, ""));
    }
    s.push_str("  (:predicates");
    for p in &dom.predicates {
        if p.params.is_empty() {
            let _ = write!(s, "\n    ({})", p.name);
        } else {
            let _ = write!(s, "\n    ({} {})", p.name, w_typed(&p.params, "?"));
        }
    }
    s.push_str(")\n");
    if dom.actions.iter().any(|a| contains_reward(&a.effect)) {
        s.push_str("  (:functions (reward))\n");
    }
    for d in &dom.derived {
        let head = if d.params.is_empty() {
            format!("({})", d.name)
        } else {
            format!("({} {})", d.name, w_typed(&d.params, "?"))
        };
        let _ = writeln!(s, "  (:derived {} {})", head, w_formula(&d.body));
    }
    for a in &dom.actions {
        let _ = writeln!(s, "  (:action {}", a.name);
        let _ = writeln!(s, "    :parameters ({})", w_typed(&a.params, "?"));
        let _ = writeln!(s, "    :precondition {}", w_formula(&a.precondition));
        s.push_str("    :effect\n");
        w_effect(&a.effect, 6, &mut s);
        s.push_str(")\n");
    }
    s.push_str(")\n");
    s
}

fn contains_reward(e: &Effect) -> bool {
    match e {
        Effect::Reward(_) => true,
        Effect::Lit { .. } => false,
        Effect::And(v) => v.iter().any(contains_reward),
        Effect::Prob(v) => v.iter().any(|(_, x)| contains_reward(x)),
        Effect::When(_, x) | Effect::Forall(_, x) => contains_reward(x),
    }
}
