use crate::logic::{State, Vocabulary};

use super::ground::{covering_groundings, GroundOutcome, GroundingOptions};
use super::{AbstractRule, GroundAction, RuleError};

/// An observed transition `(s, a, s')`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperienceTriple {
    pub state: State,
    pub action: GroundAction,
    pub next: State,
}

/// P(s' | s, a) under the unique covering rule, or under the noisy default rule when
/// there is none. The noise outcome contributes `p_0 * p_min`.
pub fn rule_likelihood(
    rules: &[AbstractRule],
    vocab: &Vocabulary,
    triple: &ExperienceTriple,
    p_min: f64,
    opts: GroundingOptions,
) -> Result<f64, RuleError> {
    let covering = covering_groundings(rules, vocab, &triple.state, &triple.action, opts)?;
    if covering.len() != 1 {
        let changed = !triple.state.same_primitives(&triple.next, vocab);
        return Ok(if changed { p_min } else { 1.0 - p_min });
    }
    let (ri, sub) = &covering[0];
    let rule = &rules[*ri];
    let mut p = rule.noise * p_min;
    for o in &rule.outcomes {
        let outcome = GroundOutcome { prob: o.prob, effects: o.effects.ground(vocab, sub)?.0, reward: o.reward };
        let next = outcome.apply(&triple.state, vocab);
        if next.same_primitives(&triple.next, vocab) {
            p += o.prob;
        }
    }
    Ok(p)
}

/// Log-likelihood of the triples minus `alpha` times the total literal count of the rules.
pub fn score_ruleset(
    rules: &[AbstractRule],
    vocab: &Vocabulary,
    triples: &[ExperienceTriple],
    alpha: f64,
    p_min: f64,
) -> Result<f64, RuleError> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(RuleError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if !(p_min > 0.0 && p_min < 1.0) {
        return Err(RuleError::InvalidParameter(format!("p_min must lie in (0, 1), got {p_min}")));
    }
    for r in rules {
        r.validate(vocab.signature())?;
    }
    let mut log_lik = 0.0;
    for t in triples {
        log_lik += rule_likelihood(rules, vocab, t, p_min, GroundingOptions::default())?.ln();
    }
    let pen: usize = rules.iter().map(AbstractRule::penalty).sum();
    Ok(log_lik - alpha * pen as f64)
}
