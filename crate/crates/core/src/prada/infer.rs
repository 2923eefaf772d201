use crate::logic::GroundLiteral;
use crate::rules::{Action, GroundAction};

use super::{Belief, CompetitorPosterior, CompiledModel, NoiseChangeModel};

/// Result of pushing a belief through one action.
#[derive(Clone, Debug, PartialEq)]
pub struct Propagation {
    pub belief: Belief,
    /// P(R = r | a) for each r in Γ(a).
    pub rule_posteriors: Vec<(usize, f64)>,
    /// Mass of the default "nothing happens" case.
    pub no_rule: f64,
    /// Elementary operations performed, for complexity checks.
    pub ops: u64,
}

impl CompiledModel {
    fn literal_prob(&self, b: &Belief, l: &GroundLiteral, ops: &mut u64) -> f64 {
        *ops += 1;
        b.prob(self.vocab(), l)
    }

    fn context_prob(&self, b: &Belief, r: usize, ops: &mut u64) -> f64 {
        let mut p = 1.0;
        for l in &self.compiled(r).context {
            p *= self.literal_prob(b, l, ops);
            if p == 0.0 {
                break;
            }
        }
        p
    }

    /// P(Φ_r = 1): product of the marginals of r's context literals.
    pub fn context_posterior(&self, b: &Belief, r: usize) -> f64 {
        self.context_prob(b, r, &mut 0)
    }

    fn unique_prob(&self, b: &Belief, r: usize, ops: &mut u64) -> f64 {
        let phi = self.context_prob(b, r, ops);
        if phi == 0.0 {
            return 0.0;
        }
        let mut p = phi;
        let own = &self.compiled(r).context_keys;
        for &r2 in self.rules_for(&self.rules().rule(r).action) {
            if r2 == r || self.contradiction(r, r2) {
                continue;
            }
            let holds = match self.options().competitor {
                CompetitorPosterior::FullContext => self.context_prob(b, r2, ops),
                CompetitorPosterior::ExcludeShared => {
                    let mut q = 1.0;
                    for l in &self.compiled(r2).context {
                        let shared = match *l {
                            GroundLiteral::Atom { index, .. } => own.binary_search(&(0, index)).is_ok(),
                            GroundLiteral::Func { index, .. } => own.binary_search(&(1, index)).is_ok(),
                            GroundLiteral::Const(_) => false,
                        };
                        if !shared {
                            q *= self.literal_prob(b, l, ops);
                        }
                    }
                    q
                }
            };
            p *= 1.0 - holds;
        }
        p
    }

    /// P(Φ_r = 1, Φ_r′ = 0 for all competitors r′ of r) under the product approximation.
    pub fn unique_rule_posterior(&self, b: &Belief, r: usize) -> f64 {
        self.unique_prob(b, r, &mut 0)
    }

    /// Probability that the action has a unique covering rule.
    pub fn action_coverage(&self, b: &Belief, a: &GroundAction) -> f64 {
        self.rules_for(a).iter().map(|&r| self.unique_rule_posterior(b, r)).sum()
    }

    /// Normalised action-sampling distribution; empty when no action is covered.
    pub fn sample_distribution(&self, b: &Belief) -> Vec<(GroundAction, f64)> {
        let weights: Vec<(GroundAction, f64)> =
            self.actions().map(|a| (a.clone(), self.action_coverage(b, a))).filter(|(_, w)| *w > 0.0).collect();
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Vec::new();
        }
        weights.into_iter().map(|(a, w)| (a, w / total)).collect()
    }

    /// Expected reward under the product-of-marginals belief.
    pub fn reward_posterior(&self, b: &Belief) -> f64 {
        self.reward().terms().iter().map(|(w, c)| w * b.conj_prob(self.vocab(), c.literals())).sum()
    }

    /// One factored-frontier step. Every rule of Γ(a) predicts with weight equal to
    /// its unique-rule posterior; the remaining mass keeps the belief unchanged.
    pub fn propagate(&self, b: &Belief, action: &Action) -> Propagation {
        let mut ops = 0u64;
        let Action::Ground(a) = action else {
            return Propagation { belief: b.clone(), rule_posteriors: Vec::new(), no_rule: 1.0, ops };
        };
        let ids = self.rules_for(a);
        let mut weights: Vec<(usize, f64)> = ids.iter().map(|&r| (r, self.unique_prob(b, r, &mut ops))).collect();
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        if total > 1.0 {
            for w in &mut weights {
                w.1 /= total;
            }
        }
        let no_rule = (1.0 - total).clamp(0.0, 1.0);

        let mut next = b.clone();
        let vocab = self.vocab();
        for &(r, w) in &weights {
            if w == 0.0 {
                continue;
            }
            let rule = self.compiled(r);
            for o in &rule.outcomes {
                let m = w * o.prob;
                for &(i, v) in &o.atoms {
                    ops += 1;
                    next.atoms[i] += m * (f64::from(u8::from(v)) - b.atoms[i]);
                }
                for &(i, v) in &o.funcs {
                    let min = vocab.signature().function(vocab.func_at(i).0).min;
                    let k = (v - min) as usize;
                    for (j, p) in b.funcs[i].iter().enumerate() {
                        ops += 1;
                        let target = if j == k { 1.0 } else { 0.0 };
                        next.funcs[i][j] += m * (target - p);
                    }
                }
            }
            let c = rule.noise_change;
            if rule.noise > 0.0 && c > 0.0 {
                let m = w * rule.noise;
                for &i in self.rules().changeable_atoms() {
                    ops += 1;
                    let p = b.atoms[i];
                    let changed = match self.options().noise {
                        NoiseChangeModel::Flip => 1.0 - p,
                        NoiseChangeModel::TowardUniform => 0.5,
                    };
                    next.atoms[i] += m * c * (changed - p);
                }
                for &i in self.rules().changeable_funcs() {
                    let dist = &b.funcs[i];
                    let k = dist.len() as f64;
                    for (j, p) in dist.iter().enumerate() {
                        ops += 1;
                        let changed = match self.options().noise {
                            NoiseChangeModel::Flip if k > 1.0 => (1.0 - p) / (k - 1.0),
                            NoiseChangeModel::Flip => *p,
                            NoiseChangeModel::TowardUniform => 1.0 / k,
                        };
                        next.funcs[i][j] += m * c * (changed - p);
                    }
                }
            }
        }
        for p in &mut next.atoms {
            *p = p.clamp(0.0, 1.0);
        }
        for dist in &mut next.funcs {
            for p in dist.iter_mut() {
                *p = p.clamp(0.0, 1.0);
            }
        }
        next.refresh_derived(vocab);
        Propagation { belief: next, rule_posteriors: weights, no_rule, ops }
    }
}
