//! Look-ahead tree planners over the rule-driven generative model.

mod sst;
mod uct;

pub use sst::{sst_plan, SstResult};
pub use uct::{uct_plan, UctNode, UctResult};

use rand::Rng;

use crate::logic::{Conjunction, GroundConj, LogicError, State, Substitution, Vocabulary};
use crate::rules::{Action, GroundRuleSet, Sampled};

/// R(s) as a weighted sum of conjunction indicators.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardSpec {
    terms: Vec<(f64, GroundConj)>,
}

impl RewardSpec {
    pub fn new(terms: Vec<(f64, GroundConj)>) -> Option<Self> {
        if terms.is_empty() {
            None
        } else {
            Some(RewardSpec { terms })
        }
    }

    pub fn goal(goal: GroundConj) -> Self {
        RewardSpec { terms: vec![(1.0, goal)] }
    }

    /// Grounds variable-free conjunctions against a vocabulary.
    pub fn from_conjunctions(vocab: &Vocabulary, terms: &[(f64, Conjunction)]) -> Result<Option<Self>, LogicError> {
        let ground = terms
            .iter()
            .map(|(w, c)| Ok((*w, c.ground(vocab, &Substitution::new())?)))
            .collect::<Result<Vec<_>, LogicError>>()?;
        Ok(Self::new(ground))
    }

    pub fn terms(&self) -> &[(f64, GroundConj)] {
        &self.terms
    }

    pub fn eval(&self, s: &State) -> f64 {
        self.terms.iter().filter(|(_, c)| c.holds_in(s)).map(|(w, _)| w).sum()
    }

    pub fn max_value(&self) -> f64 {
        self.terms.iter().map(|(w, _)| w.max(0.0)).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreePlanConfig {
    pub horizon: usize,
    pub gamma: f64,
    /// Samples per action in SST.
    pub branching: usize,
    /// Episodes in UCT.
    pub episodes: usize,
    /// UCT exploration constant c.
    pub bias: f64,
    pub seed: u64,
}

impl Default for TreePlanConfig {
    fn default() -> Self {
        TreePlanConfig { horizon: 4, gamma: 0.95, branching: 2, episodes: 1000, bias: 1.0, seed: 0 }
    }
}

impl TreePlanConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.horizon < 1 {
            return Err("horizon must be at least 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(format!("discount must lie in (0, 1), got {}", self.gamma));
        }
        if self.branching < 1 {
            return Err("branching factor must be at least 1".into());
        }
        if self.episodes < 1 {
            return Err("episode budget must be at least 1".into());
        }
        if self.bias.is_nan() || self.bias < 0.0 {
            return Err(format!("exploration bias must be non-negative, got {}", self.bias));
        }
        Ok(())
    }
}

/// Actions with a unique covering rule in `s`, followed by `doNothing`.
pub fn applicable_actions(rules: &GroundRuleSet, s: &State) -> Vec<Action> {
    let mut out: Vec<Action> = rules
        .actions()
        .filter(|a| rules.unique_covering_rule(s, a).is_some())
        .map(|a| Action::Ground(a.clone()))
        .collect();
    out.push(Action::DoNothing);
    out
}

/// Extra discount on the value after a transition: noise and default outcomes
/// are treated as staying put and cost one more factor of γ. `doNothing` is exact.
pub(crate) fn continuation_factor(action: &Action, x: &Sampled, gamma: f64) -> f64 {
    if x.is_uninformative() && *action != Action::DoNothing {
        gamma
    } else {
        1.0
    }
}

/// Index of a maximal value, ties broken uniformly.
pub(crate) fn argmax_uniform<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= best - 1e-12).collect();
    ties[rng.random_range(0..ties.len())]
}
