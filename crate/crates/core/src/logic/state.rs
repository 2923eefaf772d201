use std::fmt;

use super::formula::{Conjunction, GroundLiteral, Substitution};
use super::vocab::Vocabulary;
use super::LogicError;

/// A complete assignment to every ground atom and ground function application.
///
/// Derived atoms are stored alongside primitive ones and are only meaningful after
/// [`State::eval_derived`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    atoms: Vec<bool>,
    funcs: Vec<i64>,
}

impl State {
    /// All atoms false, every function at the bottom of its range; derived atoms evaluated.
    pub fn new(vocab: &Vocabulary) -> Self {
        let mut funcs = Vec::with_capacity(vocab.n_funcs());
        for idx in 0..vocab.n_funcs() {
            let (f, _) = vocab.func_at(idx);
            funcs.push(vocab.signature().function(f).min);
        }
        let mut s = State { atoms: vec![false; vocab.n_atoms()], funcs };
        s.eval_derived(vocab);
        s
    }

    pub fn from_parts(atoms: Vec<bool>, funcs: Vec<i64>) -> Self {
        State { atoms, funcs }
    }

    /// Closed-world state: the given atoms true, everything else false.
    pub fn from_true_atoms(vocab: &Vocabulary, true_atoms: impl IntoIterator<Item = usize>) -> Self {
        let mut s = State::new(vocab);
        for i in true_atoms {
            s.atoms[i] = true;
        }
        s.eval_derived(vocab);
        s
    }

    pub fn atoms(&self) -> &[bool] {
        &self.atoms
    }

    pub fn funcs(&self) -> &[i64] {
        &self.funcs
    }

    pub fn atom(&self, index: usize) -> bool {
        self.atoms[index]
    }

    pub fn func(&self, index: usize) -> i64 {
        self.funcs[index]
    }

    pub fn set_atom(&mut self, index: usize, value: bool) {
        self.atoms[index] = value;
    }

    pub fn set_func(&mut self, index: usize, value: i64) {
        self.funcs[index] = value;
    }

    pub fn satisfies(&self, lit: &GroundLiteral) -> bool {
        match *lit {
            GroundLiteral::Atom { index, value } => self.atoms[index] == value,
            GroundLiteral::Func { index, value } => self.funcs[index] == value,
            GroundLiteral::Const(v) => v,
        }
    }

    /// Recomputes all derived atoms in dependency order. Primitive atoms are untouched.
    pub fn eval_derived(&mut self, vocab: &Vocabulary) {
        for d in vocab.derived_plan() {
            let value = if d.disjunctive {
                d.inputs.iter().any(|l| self.satisfies(l))
            } else {
                d.inputs.iter().all(|l| self.satisfies(l))
            };
            self.atoms[d.atom] = value;
        }
    }

    pub fn with_derived(mut self, vocab: &Vocabulary) -> Self {
        self.eval_derived(vocab);
        self
    }

    /// Same primitive atoms and function values (derived atoms ignored).
    pub fn same_primitives(&self, other: &State, vocab: &Vocabulary) -> bool {
        self.funcs == other.funcs && vocab.primitive_atoms().into_iter().all(|i| self.atoms[i] == other.atoms[i])
    }

    pub fn display<'a>(&'a self, vocab: &'a Vocabulary) -> impl fmt::Display + 'a {
        struct D<'a>(&'a State, &'a Vocabulary);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let mut parts: Vec<String> = Vec::new();
                for i in self.1.primitive_atoms() {
                    if self.0.atoms[i] {
                        parts.push(self.1.atom_name(i));
                    }
                }
                for (i, v) in self.0.funcs.iter().enumerate() {
                    parts.push(format!("{}={}", self.1.func_name(i), v));
                }
                write!(f, "{}", parts.join(" "))
            }
        }
        D(self, vocab)
    }
}

/// Truth of a ground conjunction in a state. Errors on free variables.
pub fn holds(vocab: &Vocabulary, state: &State, formula: &Conjunction) -> Result<bool, LogicError> {
    let g = formula.ground(vocab, &Substitution::new())?;
    Ok(g.holds_in(state))
}
