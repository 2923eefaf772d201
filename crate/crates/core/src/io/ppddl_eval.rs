//! Direct interpretation of PPDDL operators over the states of a vocabulary,
//! used as the reference semantics for converted rules.

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::{ObjectId, State, Vocabulary};

use super::ppddl::{Effect, Formula, PTerm, PpddlAction, PpddlDomain, TypedVar};

/// Successor state, probability and expected reward.
pub type Successors = Vec<(State, f64, f64)>;

type Env = BTreeMap<String, ObjectId>;

#[derive(Clone, Debug, PartialEq)]
struct Delta {
    adds: BTreeSet<usize>,
    dels: BTreeSet<usize>,
    reward: f64,
}

impl Delta {
    fn empty() -> Self {
        Delta { adds: BTreeSet::new(), dels: BTreeSet::new(), reward: 0.0 }
    }

    fn join(&self, other: &Delta) -> Delta {
        Delta {
            adds: self.adds.union(&other.adds).copied().collect(),
            dels: self.dels.union(&other.dels).copied().collect(),
            reward: self.reward + other.reward,
        }
    }
}

type Dist = Vec<(Delta, f64)>;

fn push(dist: &mut Dist, d: Delta, p: f64) {
    if p == 0.0 {
        return;
    }
    match dist.iter_mut().find(|(x, _)| *x == d) {
        Some(e) => e.1 += p,
        None => dist.push((d, p)),
    }
}

/// Evaluates PPDDL operators against states of `vocab`, whose signature must
/// contain the domain's predicates and one unary typing predicate per type.
pub struct PpddlGrounding<'a> {
    pub domain: &'a PpddlDomain,
    pub vocab: &'a Vocabulary,
}

impl PpddlGrounding<'_> {
    fn obj(&self, t: &PTerm, env: &Env) -> Result<ObjectId, String> {
        match t {
            PTerm::Var(v) => env.get(v).copied().ok_or_else(|| format!("unbound variable ?{v}")),
            PTerm::Const(c) => self.vocab.object_id(c).ok_or_else(|| format!("unknown object `{c}`")),
        }
    }

    fn atom_index(&self, pred: &str, args: &[PTerm], env: &Env) -> Result<usize, String> {
        let id = self.vocab.signature().pred_id(pred).ok_or_else(|| format!("unknown predicate `{pred}`"))?;
        let objs = args.iter().map(|a| self.obj(a, env)).collect::<Result<Vec<_>, _>>()?;
        self.vocab.atom_index(id, &objs).map_err(|e| e.to_string())
    }

    fn has_type(&self, s: &State, o: ObjectId, ty: &str) -> Result<bool, String> {
        if ty == "object" {
            return Ok(true);
        }
        let id = self.vocab.signature().pred_id(ty).ok_or_else(|| format!("unknown type `{ty}`"))?;
        Ok(s.atom(self.vocab.atom_index(id, &[o]).map_err(|e| e.to_string())?))
    }

    /// All extensions of `env` binding `vars` to objects of their types.
    fn bindings(&self, s: &State, vars: &[TypedVar], env: &Env) -> Result<Vec<Env>, String> {
        let mut out = vec![env.clone()];
        for v in vars {
            let mut next = Vec::new();
            for e in &out {
                for o in 0..self.vocab.n_objects() {
                    let o = ObjectId(o as u32);
                    if self.has_type(s, o, &v.ty)? {
                        let mut e2 = e.clone();
                        e2.insert(v.name.clone(), o);
                        next.push(e2);
                    }
                }
            }
            out = next;
        }
        Ok(out)
    }

    pub fn holds(&self, s: &State, f: &Formula, env: &Env) -> Result<bool, String> {
        Ok(match f {
            Formula::Atom { pred, args } => s.atom(self.atom_index(pred, args, env)?),
            Formula::Eq(a, b) => self.obj(a, env)? == self.obj(b, env)?,
            Formula::Not(x) => !self.holds(s, x, env)?,
            Formula::And(v) => {
                for x in v {
                    if !self.holds(s, x, env)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(v) => {
                for x in v {
                    if self.holds(s, x, env)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Imply(a, b) => !self.holds(s, a, env)? || self.holds(s, b, env)?,
            Formula::Exists(vars, body) => {
                for e in self.bindings(s, vars, env)? {
                    if self.holds(s, body, &e)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Forall(vars, body) => {
                for e in self.bindings(s, vars, env)? {
                    if !self.holds(s, body, &e)? {
                        return Ok(false);
                    }
                }
                true
            }
        })
    }

    fn effect_dist(&self, s: &State, e: &Effect, env: &Env) -> Result<Dist, String> {
        Ok(match e {
            Effect::Lit { pred, args, positive } => {
                let idx = self.atom_index(pred, args, env)?;
                let mut d = Delta::empty();
                if *positive {
                    d.adds.insert(idx);
                } else {
                    d.dels.insert(idx);
                }
                vec![(d, 1.0)]
            }
            Effect::Reward(k) => vec![(Delta { reward: *k, ..Delta::empty() }, 1.0)],
            Effect::And(v) => {
                let mut acc: Dist = vec![(Delta::empty(), 1.0)];
                for x in v {
                    acc = product(&acc, &self.effect_dist(s, x, env)?);
                }
                acc
            }
            Effect::Prob(branches) => {
                let mut out = Dist::new();
                let mut rest = 1.0;
                for (p, x) in branches {
                    rest -= p;
                    for (d, q) in self.effect_dist(s, x, env)? {
                        push(&mut out, d, p * q);
                    }
                }
                push(&mut out, Delta::empty(), rest.max(0.0));
                out
            }
            Effect::When(c, x) => {
                if self.holds(s, c, env)? {
                    self.effect_dist(s, x, env)?
                } else {
                    vec![(Delta::empty(), 1.0)]
                }
            }
            Effect::Forall(vars, x) => {
                let mut acc: Dist = vec![(Delta::empty(), 1.0)];
                for e2 in self.bindings(s, vars, env)? {
                    acc = product(&acc, &self.effect_dist(s, x, &e2)?);
                }
                acc
            }
        })
    }

    /// Successor distribution with per-successor expected reward, or `None` when the
    /// parameters are mistyped or the precondition fails.
    pub fn successors(&self, s: &State, action: &PpddlAction, args: &[ObjectId]) -> Result<Option<Successors>, String> {
        if args.len() != action.params.len() {
            return Err(format!("`{}` takes {} arguments", action.name, action.params.len()));
        }
        let mut env = Env::new();
        for (p, o) in action.params.iter().zip(args) {
            if !self.has_type(s, *o, &p.ty)? {
                return Ok(None);
            }
            env.insert(p.name.clone(), *o);
        }
        if !self.holds(s, &action.precondition, &env)? {
            return Ok(None);
        }
        let mut out: Vec<(State, f64, f64)> = Vec::new();
        for (d, p) in self.effect_dist(s, &action.effect, &env)? {
            let mut next = s.clone();
            for &i in &d.dels {
                next.set_atom(i, false);
            }
            for &i in &d.adds {
                next.set_atom(i, true);
            }
            next.eval_derived(self.vocab);
            match out.iter_mut().find(|(x, _, _)| *x == next) {
                Some(e) => {
                    e.2 = (e.2 * e.1 + d.reward * p) / (e.1 + p);
                    e.1 += p;
                }
                None => out.push((next, p, d.reward)),
            }
        }
        Ok(Some(out))
    }
}

fn product(a: &Dist, b: &Dist) -> Dist {
    let mut out = Dist::new();
    for (x, p) in a {
        for (y, q) in b {
            push(&mut out, x.join(y), p * q);
        }
    }
    out
}

/// Successor distribution of the named operator; see [`PpddlGrounding::successors`].
pub fn ppddl_successors(
    domain: &PpddlDomain,
    vocab: &Vocabulary,
    s: &State,
    action: &str,
    args: &[ObjectId],
) -> Result<Option<Successors>, String> {
    let op = domain.actions.iter().find(|a| a.name == action).ok_or_else(|| format!("unknown action `{action}`"))?;
    PpddlGrounding { domain, vocab }.successors(s, op, args)
}
