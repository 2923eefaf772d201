use std::collections::BTreeMap;

use super::vocab::{FuncId, ObjectId, PredId, Vocabulary};
use super::LogicError;

/// Maps variable names to objects.
pub type Substitution = BTreeMap<String, ObjectId>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Self {
        Term::Const(name.to_string())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

/// A (possibly negated) atom, a function equality `f(args)=k`, or an inequality `X != Y`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Literal {
    Atom { pred: PredId, args: Vec<Term>, positive: bool },
    FuncEq { func: FuncId, args: Vec<Term>, value: i64 },
    Neq(Term, Term),
}

impl Literal {
    pub fn atom(pred: PredId, args: Vec<Term>) -> Self {
        Literal::Atom { pred, args, positive: true }
    }

    pub fn not(pred: PredId, args: Vec<Term>) -> Self {
        Literal::Atom { pred, args, positive: false }
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Literal::Atom { args, .. } | Literal::FuncEq { args, .. } => args.iter().collect(),
            Literal::Neq(a, b) => vec![a, b],
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.terms().into_iter().filter_map(Term::as_var)
    }

    /// The literal with its sign flipped. Function equalities have no negated form.
    pub fn negated(&self) -> Option<Literal> {
        match self {
            Literal::Atom { pred, args, positive } => {
                Some(Literal::Atom { pred: *pred, args: args.clone(), positive: !positive })
            }
            _ => None,
        }
    }

    pub fn substitute(&self, sub: &Substitution, vocab: &Vocabulary) -> Result<Literal, LogicError> {
        let map = |t: &Term| -> Result<Term, LogicError> {
            match t {
                Term::Var(v) => sub
                    .get(v)
                    .map(|o| Term::Const(vocab.object_name(*o).to_string()))
                    .ok_or_else(|| LogicError::UnboundVariable(v.clone())),
                c => Ok(c.clone()),
            }
        };
        Ok(match self {
            Literal::Atom { pred, args, positive } => Literal::Atom {
                pred: *pred,
                args: args.iter().map(map).collect::<Result<_, _>>()?,
                positive: *positive,
            },
            Literal::FuncEq { func, args, value } => {
                Literal::FuncEq { func: *func, args: args.iter().map(map).collect::<Result<_, _>>()?, value: *value }
            }
            Literal::Neq(a, b) => Literal::Neq(map(a)?, map(b)?),
        })
    }

    /// Whether two literals can never hold together: same atom with opposite signs,
    /// or the same function application equal to different values.
    pub fn contradicts(&self, other: &Literal) -> bool {
        match (self, other) {
            (
                Literal::Atom { pred: p1, args: a1, positive: s1 },
                Literal::Atom { pred: p2, args: a2, positive: s2 },
            ) => p1 == p2 && a1 == a2 && s1 != s2,
            (Literal::FuncEq { func: f1, args: a1, value: v1 }, Literal::FuncEq { func: f2, args: a2, value: v2 }) => {
                f1 == f2 && a1 == a2 && v1 != v2
            }
            _ => false,
        }
    }
}

/// An ordered conjunction of literals without duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Conjunction {
    literals: Vec<Literal>,
}

impl Conjunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_literals(lits: impl IntoIterator<Item = Literal>) -> Self {
        let mut c = Self::new();
        for l in lits {
            c.push(l);
        }
        c
    }

    /// Appends a literal; returns false when it was already present.
    pub fn push(&mut self, lit: Literal) -> bool {
        if self.literals.contains(&lit) {
            false
        } else {
            self.literals.push(lit);
            true
        }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// Free variables in order of first appearance.
    pub fn free_vars(&self) -> Vec<String> {
        let mut vars: Vec<String> = Vec::new();
        for l in &self.literals {
            for v in l.variables() {
                if !vars.iter().any(|x| x == v) {
                    vars.push(v.to_string());
                }
            }
        }
        vars
    }

    pub fn is_ground(&self) -> bool {
        self.literals.iter().all(|l| l.variables().next().is_none())
    }

    /// Some pair of literals contradicts syntactically.
    pub fn is_contradictory(&self) -> bool {
        self.literals.iter().enumerate().any(|(i, a)| self.literals[i + 1..].iter().any(|b| a.contradicts(b)))
    }

    /// Replaces every variable by its bound object.
    pub fn apply_substitution(&self, sub: &Substitution, vocab: &Vocabulary) -> Result<Conjunction, LogicError> {
        Ok(Conjunction::from_literals(
            self.literals.iter().map(|l| l.substitute(sub, vocab)).collect::<Result<Vec<_>, _>>()?,
        ))
    }

    pub fn ground(&self, vocab: &Vocabulary, sub: &Substitution) -> Result<GroundConj, LogicError> {
        Ok(GroundConj(self.literals.iter().map(|l| vocab.ground_literal(l, sub)).collect::<Result<_, _>>()?))
    }
}

impl FromIterator<Literal> for Conjunction {
    fn from_iter<I: IntoIterator<Item = Literal>>(iter: I) -> Self {
        Conjunction::from_literals(iter)
    }
}

/// A literal resolved against the flat ground layout of a vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroundLiteral {
    Atom {
        index: usize,
        value: bool,
    },
    Func {
        index: usize,
        value: i64,
    },
    /// Inequalities are decided at grounding time.
    Const(bool),
}

impl GroundLiteral {
    pub fn conflicts_with(&self, other: &GroundLiteral) -> bool {
        match (self, other) {
            (GroundLiteral::Atom { index: i, value: a }, GroundLiteral::Atom { index: j, value: b }) => {
                i == j && a != b
            }
            (GroundLiteral::Func { index: i, value: a }, GroundLiteral::Func { index: j, value: b }) => {
                i == j && a != b
            }
            _ => false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct GroundConj(pub Vec<GroundLiteral>);

impl GroundConj {
    pub fn literals(&self) -> &[GroundLiteral] {
        &self.0
    }

    pub fn holds_in(&self, state: &super::State) -> bool {
        self.0.iter().all(|l| state.satisfies(l))
    }
}
