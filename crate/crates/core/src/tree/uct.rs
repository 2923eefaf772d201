use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::logic::State;
use crate::rules::{Action, GroundRuleSet, StayInState};

use super::{applicable_actions, argmax_uniform, continuation_factor, RewardSpec, TreePlanConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct UctNode {
    pub actions: Vec<Action>,
    pub visits: u64,
    pub action_visits: Vec<u64>,
    pub q: Vec<f64>,
    /// Sum of all returns credited to each action.
    pub return_sums: Vec<f64>,
}

impl UctNode {
    fn new(actions: Vec<Action>) -> Self {
        let n = actions.len();
        UctNode { actions, visits: 0, action_visits: vec![0; n], q: vec![0.0; n], return_sums: vec![0.0; n] }
    }

    fn select<R: Rng + ?Sized>(&self, bias: f64, rng: &mut R) -> usize {
        let unexplored: Vec<usize> = (0..self.actions.len()).filter(|&i| self.action_visits[i] == 0).collect();
        if !unexplored.is_empty() {
            return unexplored[rng.random_range(0..unexplored.len())];
        }
        let log_n = (self.visits as f64).ln();
        let bounds: Vec<f64> =
            (0..self.actions.len()).map(|i| self.q[i] + bias * (log_n / self.action_visits[i] as f64).sqrt()).collect();
        argmax_uniform(&bounds, rng)
    }
}

#[derive(Clone, Debug)]
pub struct UctResult {
    pub action: Action,
    /// Root statistics: (action, Q, visits).
    pub q: Vec<(Action, f64, u64)>,
    /// The whole tree, keyed by (state, depth).
    pub nodes: HashMap<(State, usize), UctNode>,
}

struct Step {
    key: (State, usize),
    action: usize,
    reward: f64,
    outcome_reward: f64,
    factor: f64,
}

/// UCT with nodes keyed by (state, depth). Returns follow
/// G_t = R(s_t) + γ (r_t + k_t G_{t+1}) with k_t = γ after a noise or default
/// transition, else 1, and G_d = R(s_d).
pub fn uct_plan(rules: &GroundRuleSet, s: &State, reward: &RewardSpec, cfg: &TreePlanConfig) -> UctResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut nodes: HashMap<(State, usize), UctNode> = HashMap::new();
    let d = cfg.horizon.max(1);
    for _ in 0..cfg.episodes.max(1) {
        let mut steps: Vec<Step> = Vec::with_capacity(d);
        let mut cur = s.clone();
        for t in 0..d {
            let key = (cur.clone(), t);
            let node = nodes.entry(key.clone()).or_insert_with(|| UctNode::new(applicable_actions(rules, &cur)));
            let i = node.select(cfg.bias, &mut rng);
            let a = node.actions[i].clone();
            let x = rules.sample_successor(&cur, &a, &mut rng, &StayInState);
            steps.push(Step {
                key,
                action: i,
                reward: reward.eval(&cur),
                outcome_reward: x.reward,
                factor: continuation_factor(&a, &x, cfg.gamma),
            });
            cur = x.state;
        }
        let mut g = reward.eval(&cur);
        for step in steps.iter().rev() {
            g = step.reward + cfg.gamma * (step.outcome_reward + step.factor * g);
            let node = nodes.get_mut(&step.key).expect("visited node");
            node.visits += 1;
            node.action_visits[step.action] += 1;
            node.return_sums[step.action] += g;
            let n = node.action_visits[step.action] as f64;
            node.q[step.action] += (g - node.q[step.action]) / n;
        }
    }
    let root = &nodes[&(s.clone(), 0)];
    let explored: Vec<f64> = (0..root.actions.len())
        .map(|i| if root.action_visits[i] > 0 { root.q[i] } else { f64::NEG_INFINITY })
        .collect();
    let best = argmax_uniform(&explored, &mut rng);
    let q = (0..root.actions.len()).map(|i| (root.actions[i].clone(), root.q[i], root.action_visits[i])).collect();
    UctResult { action: root.actions[best].clone(), q, nodes }
}
