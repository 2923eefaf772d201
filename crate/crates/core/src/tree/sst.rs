use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::logic::State;
use crate::rules::{Action, GroundRuleSet, StayInState};

use super::{applicable_actions, argmax_uniform, continuation_factor, RewardSpec, TreePlanConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct SstResult {
    pub action: Action,
    /// Estimated value of the root state.
    pub value: f64,
    /// Q estimate per applicable root action.
    pub q: Vec<(Action, f64)>,
    /// Number of tree nodes at each depth, root first.
    pub layer_sizes: Vec<usize>,
}

struct Sst<'a> {
    rules: &'a GroundRuleSet,
    reward: &'a RewardSpec,
    cfg: &'a TreePlanConfig,
    rng: ChaCha8Rng,
    layers: Vec<usize>,
}

impl Sst<'_> {
    fn q_values(&mut self, s: &State, left: usize, level: usize) -> Vec<(Action, f64)> {
        let gamma = self.cfg.gamma;
        let b = self.cfg.branching;
        let mut out = Vec::new();
        for a in applicable_actions(self.rules, s) {
            let mut sum = 0.0;
            for _ in 0..b {
                let x = self.rules.sample_successor(s, &a, &mut self.rng, &StayInState);
                let k = continuation_factor(&a, &x, gamma);
                sum += x.reward + k * self.value(&x.state, left - 1, level + 1);
            }
            out.push((a, self.reward.eval(s) + gamma * sum / b as f64));
        }
        out
    }

    fn value(&mut self, s: &State, left: usize, level: usize) -> f64 {
        self.layers[level] += 1;
        if left == 0 {
            return self.reward.eval(s);
        }
        self.q_values(s, left, level).iter().map(|(_, q)| *q).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Sparse sampling: every applicable action, `branching` successors each, to depth
/// `horizon`; V(s) = R(s) + γ max_a mean(children).
pub fn sst_plan(rules: &GroundRuleSet, s: &State, reward: &RewardSpec, cfg: &TreePlanConfig) -> SstResult {
    let mut sst =
        Sst { rules, reward, cfg, rng: ChaCha8Rng::seed_from_u64(cfg.seed), layers: vec![0; cfg.horizon + 1] };
    sst.layers[0] = 1;
    let q = sst.q_values(s, cfg.horizon.max(1), 0);
    let values: Vec<f64> = q.iter().map(|(_, v)| *v).collect();
    let best = argmax_uniform(&values, &mut sst.rng);
    SstResult { action: q[best].0.clone(), value: values[best], layer_sizes: sst.layers, q }
}
