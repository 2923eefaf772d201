use rand::Rng;

use crate::logic::State;

use super::ground::{GroundRule, GroundRuleSet};
use super::Action;

/// Successor distribution of one ground rule: explicit successors with merged
/// probabilities, plus the unspecified noise mass.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionDistribution {
    pub entries: Vec<(State, f64)>,
    pub noise: f64,
}

impl TransitionDistribution {
    pub fn total(&self) -> f64 {
        self.noise + self.entries.iter().map(|(_, p)| p).sum::<f64>()
    }

    pub fn prob_of(&self, s: &State) -> f64 {
        self.entries.iter().filter(|(x, _)| x == s).map(|(_, p)| p).sum()
    }
}

/// How a sampled successor came about.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransitionKind {
    /// Explicit outcome, by index into the rule's `outcomes`.
    Outcome(usize),
    /// The covering rule's noise outcome.
    Noise,
    /// No unique covering rule, or `doNothing`.
    Default,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sampled {
    pub state: State,
    pub rule: Option<usize>,
    pub kind: TransitionKind,
    /// Reward attached to the sampled outcome.
    pub reward: f64,
}

impl Sampled {
    /// Noise and default transitions, which planners discount once more.
    pub fn is_uninformative(&self) -> bool {
        !matches!(self.kind, TransitionKind::Outcome(_))
    }
}

/// Successor of a state under a rule's noise outcome.
pub trait NoiseModel {
    fn noise_successor<R: Rng + ?Sized>(
        &self,
        rules: &GroundRuleSet,
        rule: &GroundRule,
        s: &State,
        rng: &mut R,
    ) -> State;
}

/// The planners' noise policy: nothing changes.
#[derive(Clone, Copy, Debug, Default)]
pub struct StayInState;

impl NoiseModel for StayInState {
    fn noise_successor<R: Rng + ?Sized>(&self, _: &GroundRuleSet, _: &GroundRule, s: &State, _: &mut R) -> State {
        s.clone()
    }
}

impl GroundRuleSet {
    pub fn transition_distribution(&self, rule: usize, s: &State) -> TransitionDistribution {
        let r = self.rule(rule);
        let mut entries: Vec<(State, f64)> = Vec::with_capacity(r.outcomes.len());
        for o in &r.outcomes {
            let next = o.apply(s, self.vocab());
            match entries.iter_mut().find(|(x, _)| *x == next) {
                Some(e) => e.1 += o.prob,
                None => entries.push((next, o.prob)),
            }
        }
        TransitionDistribution { entries, noise: r.noise }
    }

    pub fn sample_successor<R: Rng + ?Sized, N: NoiseModel>(
        &self,
        s: &State,
        action: &Action,
        rng: &mut R,
        noise: &N,
    ) -> Sampled {
        let stay = || Sampled { state: s.clone(), rule: None, kind: TransitionKind::Default, reward: 0.0 };
        let Action::Ground(a) = action else { return stay() };
        let Some(id) = self.unique_covering_rule(s, a) else { return stay() };
        let r = self.rule(id);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, o) in r.outcomes.iter().enumerate() {
            acc += o.prob;
            if u < acc {
                return Sampled {
                    state: o.apply(s, self.vocab()),
                    rule: Some(id),
                    kind: TransitionKind::Outcome(i),
                    reward: o.reward,
                };
            }
        }
        if r.noise > 0.0 || r.outcomes.is_empty() {
            return Sampled {
                state: noise.noise_successor(self, r, s, rng),
                rule: Some(id),
                kind: TransitionKind::Noise,
                reward: 0.0,
            };
        }
        // rounding left u above the cumulative sum; fall back to the last outcome
        let i = r.outcomes.len() - 1;
        Sampled {
            state: r.outcomes[i].apply(s, self.vocab()),
            rule: Some(id),
            kind: TransitionKind::Outcome(i),
            reward: r.outcomes[i].reward,
        }
    }
}
