use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::logic::State;
use crate::rules::{Action, GroundRule, GroundRuleSet, NoiseModel, Sampled, StayInState};

/// What the simulated world does when a rule's noise outcome fires.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimNoise {
    /// Nothing changes.
    #[default]
    NoChange,
    /// k ~ Poisson(N^r), truncated at |S_c|, distinct changeable attributes take a
    /// different value.
    FlipK,
}

impl std::str::FromStr for SimNoise {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "no-change" => Ok(SimNoise::NoChange),
            "flip-k" => Ok(SimNoise::FlipK),
            _ => Err(format!("unknown noise policy `{s}` (expected no-change or flip-k)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct FlipK;

impl NoiseModel for FlipK {
    fn noise_successor<R: Rng + ?Sized>(
        &self,
        rules: &GroundRuleSet,
        rule: &GroundRule,
        s: &State,
        rng: &mut R,
    ) -> State {
        let atoms = rules.changeable_atoms();
        let funcs = rules.changeable_funcs();
        let n = atoms.len() + funcs.len();
        if n == 0 || rule.noise_changes <= 0.0 {
            return s.clone();
        }
        let k = match Poisson::new(rule.noise_changes) {
            Ok(p) => (p.sample(rng) as usize).min(n),
            Err(_) => 0,
        };
        let vocab = rules.vocab();
        let mut next = s.clone();
        for j in sample(rng, n, k) {
            if j < atoms.len() {
                next.set_atom(atoms[j], !s.atom(atoms[j]));
            } else {
                let i = funcs[j - atoms.len()];
                let f = vocab.signature().function(vocab.func_at(i).0);
                if f.range_len() > 1 {
                    // uniform over the other values
                    let mut v = rng.random_range(f.min..f.max);
                    if v >= s.func(i) {
                        v += 1;
                    }
                    next.set_func(i, v);
                }
            }
        }
        next.eval_derived(vocab);
        next
    }
}

/// One world step under the configured noise policy.
pub fn simulate_step<R: Rng + ?Sized>(
    rules: &GroundRuleSet,
    s: &State,
    a: &Action,
    rng: &mut R,
    noise: SimNoise,
) -> Sampled {
    match noise {
        SimNoise::NoChange => rules.sample_successor(s, a, rng, &StayInState),
        SimNoise::FlipK => rules.sample_successor(s, a, rng, &FlipK),
    }
}
