//! NID rules: representation, grounding, unique covering rules, the successor
//! distribution, successor sampling and rule-set scoring.

mod ground;
mod score;
mod transition;

pub use ground::{
    covering_groundings, ground_rules, ground_rules_with, GroundOutcome, GroundRule, GroundRuleSet, GroundingOptions,
};
pub use score::{rule_likelihood, score_ruleset, ExperienceTriple};
pub use transition::{NoiseModel, Sampled, StayInState, TransitionDistribution, TransitionKind};

use std::fmt;

use thiserror::Error;

use crate::logic::{Conjunction, LogicError, ObjectId, PredId, PredKind, Signature, Term, Vocabulary};

/// Tolerance for outcome probabilities summing to one.
pub const PROB_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RuleError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("outcome probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityRange(f64),
    #[error("`{0}` is not an action predicate")]
    NotAnAction(String),
    #[error("outcome changes non-primitive predicate `{0}`")]
    NonPrimitiveOutcome(String),
    #[error("outcome {0} both asserts and negates the same attribute")]
    ContradictoryOutcome(usize),
    #[error("inequality literal in outcome {0}")]
    InequalityInOutcome(usize),
    #[error("variable `{0}` is neither an action argument nor bound by the context")]
    UnboundVariable(String),
    #[error("noise change count {0} must be non-negative")]
    NoiseChanges(f64),
    #[error("{0}")]
    InvalidParameter(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionAtom {
    pub pred: PredId,
    pub args: Vec<Term>,
}

/// One explicit outcome: probability, the literals it makes true, and an optional reward.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub prob: f64,
    pub effects: Conjunction,
    pub reward: f64,
}

impl Outcome {
    pub fn new(prob: f64, effects: Conjunction) -> Self {
        Outcome { prob, effects, reward: 0.0 }
    }
}

/// An abstract NID rule `action : context -> { p_i : outcome_i, p_0 : noise }`.
#[derive(Clone, Debug, PartialEq)]
pub struct AbstractRule {
    pub action: ActionAtom,
    pub context: Conjunction,
    pub outcomes: Vec<Outcome>,
    /// Probability of the noise outcome.
    pub noise: f64,
    /// Expected number of changed attributes under the noise outcome.
    pub noise_changes: f64,
}

impl AbstractRule {
    pub fn new(action: ActionAtom, context: Conjunction, outcomes: Vec<Outcome>, noise: f64) -> Self {
        AbstractRule { action, context, outcomes, noise, noise_changes: 1.0 }
    }

    pub fn action_vars(&self) -> Vec<String> {
        let mut vars: Vec<String> = Vec::new();
        for t in &self.action.args {
            if let Term::Var(v) = t {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
        vars
    }

    /// Deictic references: context variables that are not action arguments, in order
    /// of first appearance.
    pub fn deictic_vars(&self) -> Vec<String> {
        let action = self.action_vars();
        self.context.free_vars().into_iter().filter(|v| !action.contains(v)).collect()
    }

    /// Total number of literals in context and outcomes.
    pub fn penalty(&self) -> usize {
        self.context.len() + self.outcomes.iter().map(|o| o.effects.len()).sum::<usize>()
    }

    pub fn total_probability(&self) -> f64 {
        self.noise + self.outcomes.iter().map(|o| o.prob).sum::<f64>()
    }

    pub fn validate(&self, sig: &Signature) -> Result<(), RuleError> {
        let a = sig.predicate(self.action.pred);
        if a.kind != PredKind::Action {
            return Err(RuleError::NotAnAction(a.name.clone()));
        }
        if a.arity != self.action.args.len() {
            return Err(
                LogicError::Arity { name: a.name.clone(), expected: a.arity, found: self.action.args.len() }.into()
            );
        }
        for p in std::iter::once(self.noise).chain(self.outcomes.iter().map(|o| o.prob)) {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(RuleError::ProbabilityRange(p));
            }
        }
        let total = self.total_probability();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(RuleError::ProbabilitySum(total));
        }
        if self.noise_changes < 0.0 || self.noise_changes.is_nan() {
            return Err(RuleError::NoiseChanges(self.noise_changes));
        }
        for lit in self.context.literals() {
            sig.check_literal(lit)?;
            if let crate::logic::Literal::Atom { pred, .. } = lit {
                if sig.predicate(*pred).kind == PredKind::Action {
                    return Err(RuleError::Logic(LogicError::KindMismatch {
                        name: sig.predicate(*pred).name.clone(),
                        expected: "state predicate",
                    }));
                }
            }
        }
        let mut bound = self.action_vars();
        bound.extend(self.deictic_vars());
        for (i, o) in self.outcomes.iter().enumerate() {
            for lit in o.effects.literals() {
                sig.check_literal(lit)?;
                match lit {
                    crate::logic::Literal::Atom { pred, .. } => {
                        let p = sig.predicate(*pred);
                        if p.kind != PredKind::Primitive {
                            return Err(RuleError::NonPrimitiveOutcome(p.name.clone()));
                        }
                    }
                    crate::logic::Literal::FuncEq { .. } => {}
                    crate::logic::Literal::Neq(..) => return Err(RuleError::InequalityInOutcome(i + 1)),
                }
                for v in lit.variables() {
                    if !bound.iter().any(|b| b == v) {
                        return Err(RuleError::UnboundVariable(v.to_string()));
                    }
                }
            }
            if o.effects.is_contradictory() {
                return Err(RuleError::ContradictoryOutcome(i + 1));
            }
        }
        Ok(())
    }
}

/// A ground action predicate such as `grab(b)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAction {
    pub pred: PredId,
    pub args: Vec<ObjectId>,
}

impl GroundAction {
    pub fn display<'a>(&'a self, vocab: &'a Vocabulary) -> impl fmt::Display + 'a {
        struct D<'a>(&'a GroundAction, &'a Vocabulary);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let name = &self.1.signature().predicate(self.0.pred).name;
                f.write_str(&self.1.format_app(name, &self.0.args))
            }
        }
        D(self, vocab)
    }

    /// Parses `name(arg,...)` against the vocabulary.
    pub fn parse(text: &str, vocab: &Vocabulary) -> Result<Self, LogicError> {
        let text = text.trim();
        let (name, rest) = match text.find('(') {
            Some(i) => (&text[..i], text[i + 1..].trim_end().trim_end_matches(')')),
            None => (text, ""),
        };
        let pred = vocab.signature().pred_id(name.trim()).ok_or_else(|| LogicError::UnknownSymbol(name.to_string()))?;
        let p = vocab.signature().predicate(pred);
        if p.kind != PredKind::Action {
            return Err(LogicError::KindMismatch { name: p.name.clone(), expected: "action" });
        }
        let args = rest
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| vocab.object_id(s).ok_or_else(|| LogicError::UnknownObject(s.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if args.len() != p.arity {
            return Err(LogicError::Arity { name: p.name.clone(), expected: p.arity, found: args.len() });
        }
        Ok(GroundAction { pred, args })
    }
}

/// A planner action: a ground action predicate or the built-in `doNothing`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Ground(GroundAction),
    DoNothing,
}

impl Action {
    pub fn display<'a>(&'a self, vocab: &'a Vocabulary) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Action, &'a Vocabulary);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match self.0 {
                    Action::Ground(g) => write!(f, "{}", g.display(self.1)),
                    Action::DoNothing => f.write_str("doNothing()"),
                }
            }
        }
        D(self, vocab)
    }

    pub fn parse(text: &str, vocab: &Vocabulary) -> Result<Self, LogicError> {
        let t = text.trim();
        if (t == "doNothing" || t == "doNothing()") && vocab.signature().pred_id("doNothing").is_none() {
            return Ok(Action::DoNothing);
        }
        GroundAction::parse(t, vocab).map(Action::Ground)
    }

    pub fn as_ground(&self) -> Option<&GroundAction> {
        match self {
            Action::Ground(g) => Some(g),
            Action::DoNothing => None,
        }
    }
}

impl From<GroundAction> for Action {
    fn from(g: GroundAction) -> Self {
        Action::Ground(g)
    }
}
