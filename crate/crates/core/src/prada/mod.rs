//! Factored-frontier inference over ground NID rules and planning by sampling
//! action sequences from the propagated beliefs.

mod infer;
mod plan;

pub use infer::Propagation;
pub use plan::{aprada_refine, evaluate_sequence, prada_plan, sample_action, Plan, PradaConfig};

use std::collections::BTreeMap;

use crate::io::Prior;
use crate::logic::{GroundLiteral, State, Vocabulary};
use crate::rules::{GroundAction, GroundRuleSet};
use crate::tree::RewardSpec;

/// How competing rules enter the unique-rule posterior.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CompetitorPosterior {
    /// 1 − P(Φ_r′) over the competitor's whole context.
    #[default]
    FullContext,
    /// 1 − product over the competitor's literals on atoms outside r's context.
    ExcludeShared,
}

/// Post-change marginal of an attribute altered by a noise outcome.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoiseChangeModel {
    /// A change moves the value to one of the other values, uniformly.
    #[default]
    Flip,
    /// A change re-draws the value uniformly over the whole range.
    TowardUniform,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InferenceOptions {
    pub competitor: CompetitorPosterior,
    pub noise: NoiseChangeModel,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BeliefError {
    #[error("marginal {value} of `{name}` lies outside [0, 1]")]
    Marginal { name: String, value: f64 },
    #[error("categorical of `{name}` has {found} entries, expected {expected}")]
    CategoricalLength { name: String, expected: usize, found: usize },
    #[error("categorical of `{name}` sums to {total}")]
    CategoricalSum { name: String, total: f64 },
    #[error("index {0} is out of range")]
    Index(usize),
    #[error("`{0}` is derived and cannot be given a prior")]
    Derived(String),
}

/// Product-of-marginals belief: P(S_i = 1) per atom and a categorical per
/// function application. Derived atoms hold their independence-combined marginal.
#[derive(Clone, Debug, PartialEq)]
pub struct Belief {
    atoms: Vec<f64>,
    funcs: Vec<Vec<f64>>,
}

impl Belief {
    pub fn atom(&self, index: usize) -> f64 {
        self.atoms[index]
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    /// Categorical over the function's range, lowest value first.
    pub fn func(&self, index: usize) -> &[f64] {
        &self.funcs[index]
    }

    /// Probability that a ground literal holds.
    pub fn prob(&self, vocab: &Vocabulary, lit: &GroundLiteral) -> f64 {
        match *lit {
            GroundLiteral::Atom { index, value } => {
                if value {
                    self.atoms[index]
                } else {
                    1.0 - self.atoms[index]
                }
            }
            GroundLiteral::Func { index, value } => {
                let min = func_min(vocab, index);
                usize::try_from(value - min).ok().and_then(|k| self.funcs[index].get(k)).copied().unwrap_or(0.0)
            }
            GroundLiteral::Const(v) => f64::from(u8::from(v)),
        }
    }

    pub fn conj_prob(&self, vocab: &Vocabulary, lits: &[GroundLiteral]) -> f64 {
        lits.iter().map(|l| self.prob(vocab, l)).product()
    }

    /// Recomputes derived marginals from their inputs, in dependency order.
    pub fn refresh_derived(&mut self, vocab: &Vocabulary) {
        for d in vocab.derived_plan() {
            let v = if d.disjunctive {
                1.0 - d.inputs.iter().map(|l| 1.0 - self.prob(vocab, l)).product::<f64>()
            } else {
                d.inputs.iter().map(|l| self.prob(vocab, l)).product()
            };
            self.atoms[d.atom] = v;
        }
    }

    /// Marginals are within [0, 1] and every categorical sums to one, up to `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.atoms.iter().all(|p| *p >= -tol && *p <= 1.0 + tol)
            && self.funcs.iter().all(|c| c.iter().all(|p| *p >= -tol) && (c.iter().sum::<f64>() - 1.0).abs() <= tol)
    }

    /// True when every marginal is 0 or 1.
    pub fn is_certain(&self) -> bool {
        self.atoms.iter().all(|p| *p == 0.0 || *p == 1.0)
            && self.funcs.iter().all(|c| c.iter().all(|p| *p == 0.0 || *p == 1.0))
    }
}

fn func_min(vocab: &Vocabulary, index: usize) -> i64 {
    vocab.signature().function(vocab.func_at(index).0).min
}

/// Point-mass belief on a state.
pub fn belief_from_state(vocab: &Vocabulary, s: &State) -> Belief {
    let atoms = s.atoms().iter().map(|&b| f64::from(u8::from(b))).collect();
    let funcs = (0..vocab.n_funcs())
        .map(|i| {
            let f = vocab.signature().function(vocab.func_at(i).0);
            let mut c = vec![0.0; f.range_len()];
            if let Some(k) = usize::try_from(s.func(i) - f.min).ok().filter(|k| *k < c.len()) {
                c[k] = 1.0;
            }
            c
        })
        .collect();
    Belief { atoms, funcs }
}

/// Belief from a base state whose listed attributes are overridden by prior marginals.
pub fn belief_from_prior(vocab: &Vocabulary, base: &State, prior: &Prior) -> Result<Belief, BeliefError> {
    let mut b = belief_from_state(vocab, base);
    for &(i, p) in &prior.atoms {
        if i >= b.atoms.len() {
            return Err(BeliefError::Index(i));
        }
        if vocab.is_derived_atom(i) {
            return Err(BeliefError::Derived(vocab.atom_name(i)));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(BeliefError::Marginal { name: vocab.atom_name(i), value: p });
        }
        b.atoms[i] = p;
    }
    for (i, c) in &prior.funcs {
        let Some(slot) = b.funcs.get_mut(*i) else { return Err(BeliefError::Index(*i)) };
        let name = vocab.func_name(*i);
        if c.len() != slot.len() {
            return Err(BeliefError::CategoricalLength { name, expected: slot.len(), found: c.len() });
        }
        if let Some(p) = c.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(BeliefError::Marginal { name, value: *p });
        }
        let total: f64 = c.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(BeliefError::CategoricalSum { name, total });
        }
        slot.clone_from(c);
    }
    b.refresh_derived(vocab);
    Ok(b)
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct CompiledOutcome {
    pub prob: f64,
    /// Final value per changed atom; an add overrides a delete of the same atom.
    pub atoms: Vec<(usize, bool)>,
    pub funcs: Vec<(usize, i64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct CompiledRule {
    pub context: Vec<GroundLiteral>,
    /// Sorted attribute keys of the context: atoms as `(0, i)`, functions as `(1, i)`.
    pub context_keys: Vec<(u8, usize)>,
    pub outcomes: Vec<CompiledOutcome>,
    pub noise: f64,
    /// Per changeable attribute probability of change under the noise outcome.
    pub noise_change: f64,
    /// Position of this rule in its action's rule list.
    pub slot: usize,
}

fn key(l: &GroundLiteral) -> Option<(u8, usize)> {
    match *l {
        GroundLiteral::Atom { index, .. } => Some((0, index)),
        GroundLiteral::Func { index, .. } => Some((1, index)),
        GroundLiteral::Const(_) => None,
    }
}

/// Γ compiled into the index structures used by propagation.
#[derive(Clone, Debug)]
pub struct CompiledModel {
    rules: GroundRuleSet,
    reward: RewardSpec,
    options: InferenceOptions,
    compiled: Vec<CompiledRule>,
    by_action: BTreeMap<GroundAction, Vec<usize>>,
    /// Per action, contradiction flags between its rules indexed by slot.
    contradicts: BTreeMap<GroundAction, Vec<Vec<bool>>>,
}

pub fn compile(rules: GroundRuleSet, reward: RewardSpec) -> CompiledModel {
    compile_with(rules, reward, InferenceOptions::default())
}

pub fn compile_with(rules: GroundRuleSet, reward: RewardSpec, options: InferenceOptions) -> CompiledModel {
    let n_changeable = rules.n_changeable();
    let mut compiled = Vec::with_capacity(rules.len());
    let mut by_action: BTreeMap<GroundAction, Vec<usize>> = BTreeMap::new();
    for (i, r) in rules.rules().iter().enumerate() {
        let ids = by_action.entry(r.action.clone()).or_default();
        let slot = ids.len();
        ids.push(i);
        let context: Vec<GroundLiteral> =
            r.context.literals().iter().copied().filter(|l| *l != GroundLiteral::Const(true)).collect();
        let mut context_keys: Vec<(u8, usize)> = context.iter().filter_map(key).collect();
        context_keys.sort_unstable();
        context_keys.dedup();
        let outcomes = r
            .outcomes
            .iter()
            .map(|o| {
                let mut atoms: BTreeMap<usize, bool> = BTreeMap::new();
                let mut funcs: BTreeMap<usize, i64> = BTreeMap::new();
                for e in &o.effects {
                    match *e {
                        GroundLiteral::Atom { index, value } => {
                            let v = atoms.entry(index).or_insert(value);
                            *v |= value;
                        }
                        GroundLiteral::Func { index, value } => {
                            funcs.insert(index, value);
                        }
                        GroundLiteral::Const(_) => {}
                    }
                }
                CompiledOutcome { prob: o.prob, atoms: atoms.into_iter().collect(), funcs: funcs.into_iter().collect() }
            })
            .collect();
        let noise_change = if n_changeable == 0 { 0.0 } else { (r.noise_changes / n_changeable as f64).min(1.0) };
        compiled.push(CompiledRule { context, context_keys, outcomes, noise: r.noise, noise_change, slot });
    }
    let contradicts = by_action
        .iter()
        .map(|(a, ids)| {
            let flags = ids
                .iter()
                .map(|&i| {
                    ids.iter()
                        .map(|&j| {
                            compiled[i].context.iter().any(|x| compiled[j].context.iter().any(|y| x.conflicts_with(y)))
                        })
                        .collect()
                })
                .collect();
            (a.clone(), flags)
        })
        .collect();
    CompiledModel { rules, reward, options, compiled, by_action, contradicts }
}

impl CompiledModel {
    pub fn rules(&self) -> &GroundRuleSet {
        &self.rules
    }

    pub fn vocab(&self) -> &Vocabulary {
        self.rules.vocab()
    }

    pub fn reward(&self) -> &RewardSpec {
        &self.reward
    }

    pub fn options(&self) -> InferenceOptions {
        self.options
    }

    /// Ground actions with at least one rule, in canonical order.
    pub fn actions(&self) -> impl Iterator<Item = &GroundAction> {
        self.by_action.keys()
    }

    /// Γ(a) as ground-rule ids.
    pub fn rules_for(&self, a: &GroundAction) -> &[usize] {
        self.by_action.get(a).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Whether the contexts of two rules of the same action assert opposite values
    /// on a shared attribute. Rules of different actions never contradict.
    pub fn contradiction(&self, r1: usize, r2: usize) -> bool {
        let a = &self.rules.rule(r1).action;
        if *a != self.rules.rule(r2).action {
            return false;
        }
        self.contradicts[a][self.compiled[r1].slot][self.compiled[r2].slot]
    }

    pub fn init_belief(&self, s: &State) -> Belief {
        belief_from_state(self.vocab(), s)
    }

    pub fn init_belief_prior(&self, base: &State, prior: &Prior) -> Result<Belief, BeliefError> {
        belief_from_prior(self.vocab(), base, prior)
    }

    pub(crate) fn compiled(&self, r: usize) -> &CompiledRule {
        &self.compiled[r]
    }
}
