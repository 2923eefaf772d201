use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rules::{Action, GroundAction};

use super::{Belief, CompiledModel};

/// First time step whose reward posterior counts towards Q. The t = 0 term does
/// not depend on the actions and is left out.
pub const Q_FIRST_STEP: i32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub actions: Vec<Action>,
    /// Σ_{t=1..T} γ^t P(U^t).
    pub value: f64,
    /// Reward posterior after each action.
    pub reward_posteriors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PradaConfig {
    pub n_samples: usize,
    pub horizon: usize,
    pub gamma: f64,
    /// A plan is returned only if its value exceeds this.
    pub theta: f64,
    pub seed: u64,
    /// Share propagation work between sequences with a common prefix.
    pub cache: bool,
}

impl Default for PradaConfig {
    fn default() -> Self {
        PradaConfig { n_samples: 200, horizon: 4, gamma: 0.95, theta: 0.0, seed: 0, cache: true }
    }
}

impl PradaConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_samples < 1 {
            return Err("at least one sample is needed".into());
        }
        if self.horizon < 1 {
            return Err("horizon must be at least 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(format!("discount must lie in (0, 1), got {}", self.gamma));
        }
        Ok(())
    }
}

fn discounted(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().enumerate().map(|(t, r)| gamma.powi(t as i32 + Q_FIRST_STEP) * r).sum()
}

/// Propagates the belief through the whole sequence; linear in its length.
pub fn evaluate_sequence(model: &CompiledModel, b0: &Belief, actions: &[Action], gamma: f64) -> Plan {
    let mut b = b0.clone();
    let mut rewards = Vec::with_capacity(actions.len());
    for a in actions {
        b = model.propagate(&b, a).belief;
        rewards.push(model.reward_posterior(&b));
    }
    Plan { actions: actions.to_vec(), value: discounted(&rewards, gamma), reward_posteriors: rewards }
}

fn draw<R: Rng + ?Sized>(dist: &[(GroundAction, f64)], rng: &mut R) -> Option<GroundAction> {
    if dist.is_empty() {
        return None;
    }
    let w = WeightedIndex::new(dist.iter().map(|(_, p)| *p)).ok()?;
    Some(dist[w.sample(rng)].0.clone())
}

/// Draws an action with probability proportional to its coverage; `None` if no
/// action can be covered.
pub fn sample_action<R: Rng + ?Sized>(model: &CompiledModel, b: &Belief, rng: &mut R) -> Option<GroundAction> {
    draw(&model.sample_distribution(b), rng)
}

struct Node {
    belief: Belief,
    reward: f64,
    dist: Option<Vec<(GroundAction, f64)>>,
    children: HashMap<GroundAction, usize>,
}

/// Prefix tree of propagated beliefs.
struct Prefixes<'a> {
    model: &'a CompiledModel,
    nodes: Vec<Node>,
    keep: bool,
}

impl Prefixes<'_> {
    fn dist(&mut self, n: usize) -> Vec<(GroundAction, f64)> {
        if let Some(d) = &self.nodes[n].dist {
            return d.clone();
        }
        let d = self.model.sample_distribution(&self.nodes[n].belief);
        if self.keep {
            self.nodes[n].dist = Some(d.clone());
        }
        d
    }

    fn child(&mut self, n: usize, a: &GroundAction) -> usize {
        if let Some(&c) = self.nodes[n].children.get(a) {
            return c;
        }
        let belief = self.model.propagate(&self.nodes[n].belief, &Action::Ground(a.clone())).belief;
        let reward = self.model.reward_posterior(&belief);
        self.nodes.push(Node { belief, reward, dist: None, children: HashMap::new() });
        let c = self.nodes.len() - 1;
        if self.keep {
            self.nodes[n].children.insert(a.clone(), c);
        }
        c
    }
}

/// Samples `n_samples` sequences step by step from the coverage distribution of
/// each sequence's own belief and returns the best one if its value exceeds θ.
/// Sequences that reach a belief with no covered action are dropped.
pub fn prada_plan(model: &CompiledModel, b0: &Belief, cfg: &PradaConfig) -> Option<Plan> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let reward0 = model.reward_posterior(b0);
    let mut tree = Prefixes {
        model,
        nodes: vec![Node { belief: b0.clone(), reward: reward0, dist: None, children: HashMap::new() }],
        keep: cfg.cache,
    };
    let mut best: Option<Plan> = None;
    'samples: for _ in 0..cfg.n_samples {
        let mut node = 0;
        let mut actions = Vec::with_capacity(cfg.horizon);
        let mut rewards = Vec::with_capacity(cfg.horizon);
        for _ in 0..cfg.horizon {
            let d = tree.dist(node);
            let Some(a) = draw(&d, &mut rng) else { continue 'samples };
            node = tree.child(node, &a);
            if !cfg.cache {
                // keep only the root so memory stays flat
                let n = tree.nodes.pop().expect("fresh child");
                tree.nodes.truncate(1);
                tree.nodes.push(n);
                node = 1;
            }
            rewards.push(tree.nodes[node].reward);
            actions.push(Action::Ground(a));
        }
        let value = discounted(&rewards, cfg.gamma);
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(Plan { actions, value, reward_posteriors: rewards });
        }
    }
    best.filter(|p| p.value > cfg.theta)
}

/// Repeatedly drops an action, shifting the tail forward and padding with
/// `doNothing`, whenever that strictly increases the value.
pub fn aprada_refine(model: &CompiledModel, b0: &Belief, plan: &Plan, gamma: f64) -> Plan {
    let n = plan.actions.len();
    let mut best = evaluate_sequence(model, b0, &plan.actions, gamma);
    for t in 0..n {
        loop {
            let mut cand = Vec::with_capacity(n);
            cand.extend_from_slice(&best.actions[..t]);
            cand.extend_from_slice(&best.actions[t + 1..]);
            cand.push(Action::DoNothing);
            let q = evaluate_sequence(model, b0, &cand, gamma);
            if q.value > best.value {
                best = q;
            } else {
                break;
            }
        }
    }
    best
}
