//! The `.prob` planning-problem format.
//!
//! ```text
//! objects a b c t
//! init on(a,b), on(b,c), cube(a), table(t)
//! prior on(a,b) = 0.5, size(a) = [0.2, 0.3, 0.5]
//! goal on(b,a)
//! reward 0.5 : on(b,a)
//! horizon 4
//! discount 0.95
//! ```

use std::sync::Arc;

use crate::logic::{Conjunction, GroundLiteral, Literal, PredKind, Signature, State, Substitution, Symbol, Vocabulary};

use super::lexer::{Cursor, Tok};
use super::nid::parse_literals;
use super::ParseError;

const SECTIONS: &[&str] = &["objects", "init", "prior", "goal", "reward", "horizon", "discount"];

/// Marginal specification of an uncertain start state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Prior {
    pub atoms: Vec<(usize, f64)>,
    /// Categorical over `min..=max` per function application.
    pub funcs: Vec<(usize, Vec<f64>)>,
}

#[derive(Clone, Debug)]
pub struct ProblemFile {
    pub vocab: Arc<Vocabulary>,
    /// Closed-world start state; also the base that a prior overrides.
    pub init: State,
    pub prior: Option<Prior>,
    pub goal: Conjunction,
    pub rewards: Vec<(f64, Conjunction)>,
    pub horizon: Option<usize>,
    pub discount: Option<f64>,
}

impl ProblemFile {
    /// The deterministic start state, unless the problem starts from a prior.
    pub fn start_state(&self) -> Option<&State> {
        if self.prior.is_some() {
            None
        } else {
            Some(&self.init)
        }
    }

    /// Reward terms; a bare goal is the single term `(1.0, goal)`.
    pub fn reward_terms(&self) -> Vec<(f64, Conjunction)> {
        if self.rewards.is_empty() {
            vec![(1.0, self.goal.clone())]
        } else {
            self.rewards.clone()
        }
    }
}

pub fn parse_problem(text: &str, file: &str, sig: Arc<Signature>) -> Result<ProblemFile, ParseError> {
    let mut cur = Cursor::new(text, file)?;
    let mut vocab: Option<Arc<Vocabulary>> = None;
    let mut init: Vec<GroundLiteral> = Vec::new();
    let mut prior: Option<Prior> = None;
    let mut goal: Option<Conjunction> = None;
    let mut rewards = Vec::new();
    let mut horizon = None;
    let mut discount = None;

    while !cur.at_end() {
        let pos = cur.here();
        let kw = cur.ident()?;
        if kw != "objects" && vocab.is_none() {
            return Err(cur.error_at(pos, "the `objects` section must come first"));
        }
        match kw.as_str() {
            "objects" => {
                if vocab.is_some() {
                    return Err(cur.error_at(pos, "duplicate `objects` section"));
                }
                let mut list = Vec::new();
                while let Some(Tok::Ident(s)) = cur.peek() {
                    if SECTIONS.contains(&s.as_str()) {
                        break;
                    }
                    list.push(s.clone());
                    cur.next();
                    cur.eat(&Tok::Comma);
                }
                let v = Vocabulary::new(sig.clone(), list).map_err(|e| cur.error_at(pos, e.to_string()))?;
                vocab = Some(Arc::new(v));
            }
            "init" => {
                let v = vocab.as_ref().unwrap();
                let lpos = cur.here();
                let conj = parse_literals(&mut cur, &sig, false)?;
                for l in conj.literals() {
                    match l {
                        Literal::Atom { pred, positive: true, .. }
                            if sig.predicate(*pred).kind == PredKind::Primitive => {}
                        Literal::FuncEq { .. } => {}
                        _ => {
                            return Err(
                                cur.error_at(lpos, "init lists only positive primitive atoms and function values")
                            )
                        }
                    }
                    init.push(
                        v.ground_literal(l, &Substitution::new()).map_err(|e| cur.error_at(lpos, e.to_string()))?,
                    );
                }
            }
            "prior" => {
                let v = vocab.as_ref().unwrap();
                let p = prior.get_or_insert_with(Prior::default);
                parse_prior(&mut cur, &sig, v, p)?;
            }
            "goal" => {
                if goal.is_some() {
                    return Err(cur.error_at(pos, "duplicate `goal` section"));
                }
                let g = parse_literals(&mut cur, &sig, false)?;
                ground_check(&cur, pos, vocab.as_ref().unwrap(), &g)?;
                goal = Some(g);
            }
            "reward" => {
                let w = cur.number()?;
                cur.expect(&Tok::Colon)?;
                let c = parse_literals(&mut cur, &sig, false)?;
                ground_check(&cur, pos, vocab.as_ref().unwrap(), &c)?;
                rewards.push((w, c));
            }
            "horizon" => {
                let n = cur.integer()?;
                if n < 1 {
                    return Err(cur.error_at(pos, "horizon must be at least 1"));
                }
                horizon = Some(n as usize);
            }
            "discount" => {
                let g = cur.number()?;
                if !(g > 0.0 && g <= 1.0) {
                    return Err(cur.error_at(pos, "discount must lie in (0, 1]"));
                }
                discount = Some(g);
            }
            _ => return Err(cur.error_at(pos, format!("unknown section `{kw}`"))),
        }
    }
    let Some(vocab) = vocab else { return Err(cur.error("missing `objects` section")) };
    let Some(goal) = goal else { return Err(cur.error("missing `goal` section")) };
    let mut state = State::new(&vocab);
    for g in init {
        match g {
            GroundLiteral::Atom { index, value } => state.set_atom(index, value),
            GroundLiteral::Func { index, value } => state.set_func(index, value),
            GroundLiteral::Const(_) => {}
        }
    }
    state.eval_derived(&vocab);
    Ok(ProblemFile { vocab, init: state, prior, goal, rewards, horizon, discount })
}

fn ground_check(cur: &Cursor, pos: (usize, usize), vocab: &Vocabulary, c: &Conjunction) -> Result<(), ParseError> {
    c.ground(vocab, &Substitution::new()).map(|_| ()).map_err(|e| cur.error_at(pos, e.to_string()))
}

fn parse_prior(cur: &mut Cursor, sig: &Signature, vocab: &Vocabulary, prior: &mut Prior) -> Result<(), ParseError> {
    while let Some(Tok::Ident(name)) = cur.peek() {
        if SECTIONS.contains(&name.as_str()) {
            break;
        }
        let pos = cur.here();
        let name = cur.ident()?;
        let mut args = Vec::new();
        if cur.eat(&Tok::LParen) && !cur.eat(&Tok::RParen) {
            loop {
                let apos = cur.here();
                let o = cur.ident()?;
                args.push(vocab.object_id(&o).ok_or_else(|| cur.error_at(apos, format!("unknown object `{o}`")))?);
                if cur.eat(&Tok::RParen) {
                    break;
                }
                cur.expect(&Tok::Comma)?;
            }
        }
        cur.expect(&Tok::Eq)?;
        match sig.lookup(&name) {
            Some(Symbol::Pred(p)) if sig.predicate(p).kind == PredKind::Primitive => {
                let idx = vocab.atom_index(p, &args).map_err(|e| cur.error_at(pos, e.to_string()))?;
                let ppos = cur.here();
                let v = cur.number()?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(cur.error_at(ppos, format!("marginal {v} outside [0, 1]")));
                }
                prior.atoms.push((idx, v));
            }
            Some(Symbol::Func(f)) => {
                let idx = vocab.func_index(f, &args).map_err(|e| cur.error_at(pos, e.to_string()))?;
                let ppos = cur.here();
                cur.expect(&Tok::LBracket)?;
                let mut probs = Vec::new();
                while !cur.eat(&Tok::RBracket) {
                    probs.push(cur.number()?);
                    cur.eat(&Tok::Comma);
                }
                let func = sig.function(f);
                if probs.len() != func.range_len() {
                    return Err(cur.error_at(
                        ppos,
                        format!("`{}` needs {} probabilities, found {}", func.name, func.range_len(), probs.len()),
                    ));
                }
                let total: f64 = probs.iter().sum();
                if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-9 {
                    return Err(cur.error_at(ppos, format!("categorical for `{}` sums to {total}", func.name)));
                }
                prior.funcs.push((idx, probs));
            }
            _ => return Err(cur.error_at(pos, format!("`{name}` is not a primitive predicate or function"))),
        }
        cur.eat(&Tok::Comma);
    }
    Ok(())
}
