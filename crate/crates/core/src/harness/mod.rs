//! Closed-loop trials against a simulated world, metric aggregation and the
//! experiment configuration format.

mod report;
mod sim;

pub use report::{write_report, Report, Summary, TrialRow};
pub use sim::{simulate_step, FlipK, SimNoise};

use std::hash::{DefaultHasher, Hash, Hasher};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::{parse_problem, parse_rules, ParseError, ProblemFile, RuleFile};
use crate::logic::{GroundConj, LogicError, State, Substitution};
use crate::prada::{aprada_refine, compile, prada_plan, CompiledModel, PradaConfig};
use crate::rules::{ground_rules_with, Action, GroundRuleSet, GroundingOptions, RuleError};
use crate::tree::{sst_plan, uct_plan, RewardSpec, TreePlanConfig};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl From<LogicError> for HarnessError {
    fn from(e: LogicError) -> Self {
        HarnessError::Rules(e.into())
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Sst,
    Uct,
    Prada,
    Aprada,
}

impl std::str::FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sst" => Ok(PlannerKind::Sst),
            "uct" => Ok(PlannerKind::Uct),
            "prada" => Ok(PlannerKind::Prada),
            "aprada" | "a-prada" => Ok(PlannerKind::Aprada),
            _ => Err(format!("unknown planner `{s}` (expected sst, uct, prada or aprada)")),
        }
    }
}

fn default_horizon() -> usize {
    4
}
fn default_samples() -> usize {
    200
}
fn default_episodes() -> usize {
    1000
}
fn default_branching() -> usize {
    2
}
fn default_bias() -> f64 {
    1.0
}
fn default_max_actions() -> usize {
    30
}
fn default_retries() -> usize {
    10
}
fn default_trials() -> usize {
    10
}
fn default_true() -> bool {
    true
}

/// One experiment, read from a TOML key/value file. Relative paths are resolved
/// against the file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub rules: PathBuf,
    pub problem: PathBuf,
    pub planner: PlannerKind,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_branching")]
    pub branching: usize,
    #[serde(default = "default_bias")]
    pub bias: f64,
    #[serde(default)]
    pub theta: f64,
    /// Falls back to the problem's discount, then 0.95.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_max_actions")]
    pub max_actions: usize,
    #[serde(default = "default_retries")]
    pub retries: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise: SimNoise,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// When false, measured times are reported as zero so reruns are byte-identical.
    #[serde(default = "default_true")]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, HarnessError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        for p in [&mut cfg.rules, &mut cfg.problem] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(out) = cfg.output_dir.as_mut().filter(|p| p.is_relative()) {
            *out = base.join(&*out);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.trials < 1 {
            return fail("trials must be at least 1");
        }
        if self.max_actions < 1 {
            return fail("max_actions must be at least 1");
        }
        if self.retries < 1 {
            return fail("retries must be at least 1");
        }
        if let Some(g) = self.gamma.filter(|g| !(*g > 0.0 && *g < 1.0)) {
            return Err(HarnessError::Config(format!("gamma must lie in (0, 1), got {g}")));
        }
        self.tree_config(0.95, 0).validate().map_err(HarnessError::Config)?;
        self.prada_config(0.95, 0).validate().map_err(HarnessError::Config)
    }

    fn tree_config(&self, gamma: f64, seed: u64) -> TreePlanConfig {
        TreePlanConfig {
            horizon: self.horizon,
            gamma,
            branching: self.branching,
            episodes: self.episodes,
            bias: self.bias,
            seed,
        }
    }

    fn prada_config(&self, gamma: f64, seed: u64) -> PradaConfig {
        PradaConfig { n_samples: self.samples, horizon: self.horizon, gamma, theta: self.theta, seed, cache: true }
    }
}

/// A loaded planning problem with its goal and reward.
#[derive(Clone, Debug)]
pub struct World {
    pub rules: RuleFile,
    pub problem: ProblemFile,
    pub gamma: f64,
    pub goal: GroundConj,
    pub reward: RewardSpec,
}

impl World {
    pub fn new(rules: RuleFile, problem: ProblemFile, gamma: Option<f64>) -> Result<Self, HarnessError> {
        let vocab = problem.vocab.clone();
        let goal = problem.goal.ground(&vocab, &Substitution::new())?;
        let reward = RewardSpec::from_conjunctions(&vocab, &problem.reward_terms())?
            .ok_or_else(|| HarnessError::Config("empty reward".into()))?;
        let gamma = gamma.or(problem.discount).unwrap_or(0.95);
        Ok(World { rules, problem, gamma, goal, reward })
    }

    pub fn load(rules: &Path, problem: &Path, gamma: Option<f64>) -> Result<Self, HarnessError> {
        let rtext = std::fs::read_to_string(rules).map_err(io_err(rules))?;
        let ptext = std::fs::read_to_string(problem).map_err(io_err(problem))?;
        let rf = parse_rules(&rtext, &rules.display().to_string())?;
        let pf = parse_problem(&ptext, &problem.display().to_string(), rf.signature.clone())?;
        Self::new(rf, pf, gamma)
    }

    /// Grounds the rules for trials starting in `s0`. Static pruning is only
    /// sound when the start state is fixed.
    pub fn ground(&self, s0: &State) -> Result<GroundRuleSet, HarnessError> {
        let opts = GroundingOptions { prune_static: self.problem.prior.is_none(), ..Default::default() };
        Ok(ground_rules_with(&self.rules.rules, self.problem.vocab.clone(), s0, opts)?)
    }

    /// The start state, drawn from the prior when there is one.
    pub fn sample_start<R: Rng + ?Sized>(&self, rng: &mut R) -> State {
        let mut s = self.problem.init.clone();
        if let Some(prior) = &self.problem.prior {
            for &(i, p) in &prior.atoms {
                s.set_atom(i, rng.random_bool(p));
            }
            let vocab = &self.problem.vocab;
            for (i, c) in &prior.funcs {
                let min = vocab.signature().function(vocab.func_at(*i).0).min;
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut k = c.len() - 1;
                for (j, p) in c.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        k = j;
                        break;
                    }
                }
                s.set_func(*i, min + k as i64);
            }
            s.eval_derived(vocab);
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub action: Action,
    /// The planner's value estimate for its choice.
    pub value: f64,
}

/// Anything that picks an action in a state; `None` means no plan was found.
pub trait Planner {
    fn plan(&mut self, s: &State, seed: u64) -> Option<Decision>;
}

/// The four built-in planners over a fixed grounding.
pub struct ConfiguredPlanner {
    kind: PlannerKind,
    rules: Arc<GroundRuleSet>,
    reward: RewardSpec,
    tree: TreePlanConfig,
    prada: PradaConfig,
    model: Option<CompiledModel>,
}

impl ConfiguredPlanner {
    pub fn new(cfg: &ExperimentConfig, world: &World, rules: GroundRuleSet) -> Self {
        let model = matches!(cfg.planner, PlannerKind::Prada | PlannerKind::Aprada)
            .then(|| compile(rules.clone(), world.reward.clone()));
        ConfiguredPlanner {
            kind: cfg.planner,
            rules: Arc::new(rules),
            reward: world.reward.clone(),
            tree: cfg.tree_config(world.gamma, 0),
            prada: cfg.prada_config(world.gamma, 0),
            model,
        }
    }
}

impl Planner for ConfiguredPlanner {
    fn plan(&mut self, s: &State, seed: u64) -> Option<Decision> {
        match self.kind {
            PlannerKind::Sst => {
                let r = sst_plan(&self.rules, s, &self.reward, &TreePlanConfig { seed, ..self.tree.clone() });
                Some(Decision { action: r.action, value: r.value })
            }
            PlannerKind::Uct => {
                let r = uct_plan(&self.rules, s, &self.reward, &TreePlanConfig { seed, ..self.tree.clone() });
                let value = r.q.iter().find(|(a, _, _)| *a == r.action).map_or(0.0, |(_, q, _)| *q);
                Some(Decision { action: r.action, value })
            }
            PlannerKind::Prada | PlannerKind::Aprada => {
                let model = self.model.as_ref().expect("compiled for PRADA");
                let b0 = model.init_belief(s);
                let mut plan = prada_plan(model, &b0, &PradaConfig { seed, ..self.prada.clone() })?;
                if self.kind == PlannerKind::Aprada {
                    plan = aprada_refine(model, &b0, &plan, self.prada.gamma);
                }
                Some(Decision { action: plan.actions[0].clone(), value: plan.value })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepLog {
    /// Stable digest of the visited state.
    pub state: String,
    pub reward: f64,
    pub action: Option<String>,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub actions: usize,
    /// Σ_t γ^t R(s_t) over the visited states.
    pub reward: f64,
    /// Discounted reward of staying in the start state for as many steps.
    pub baseline: f64,
    pub plan_time_ms: f64,
    pub steps: Vec<StepLog>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialSettings {
    pub max_actions: usize,
    pub retries: usize,
    pub noise: SimNoise,
    pub timing: bool,
}

fn digest(s: &State) -> String {
    let mut h = DefaultHasher::new();
    s.hash(&mut h);
    format!("{:016x}", h.finish())
}

/// Seeded generators for the world and the planner, on separate ChaCha streams.
pub fn trial_streams(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut sim = ChaCha8Rng::seed_from_u64(seed);
    sim.set_stream(1);
    let mut planner = ChaCha8Rng::seed_from_u64(seed);
    planner.set_stream(2);
    (sim, planner)
}

/// Replans after every executed action; stops on the goal, the action budget, or
/// when the planner fails `retries` times in a row.
#[allow(clippy::too_many_arguments)]
pub fn run_trial_with(
    planner: &mut dyn Planner,
    world: &World,
    rules: &GroundRuleSet,
    s0: State,
    settings: &TrialSettings,
    trial: usize,
    seed: u64,
    mut sim: ChaCha8Rng,
    mut prng: ChaCha8Rng,
) -> TrialResult {
    let g = world.gamma;
    let r0 = world.reward.eval(&s0);
    let mut s = s0;
    let mut steps = Vec::new();
    let mut reward = 0.0;
    let mut baseline = 0.0;
    let mut plan_ms = 0.0;
    let mut success = false;
    for t in 0.. {
        let r = world.reward.eval(&s);
        reward += g.powi(t as i32) * r;
        baseline += g.powi(t as i32) * r0;
        let mut log = StepLog { state: digest(&s), reward: r, action: None, value: None };
        if world.goal.holds_in(&s) {
            success = true;
            steps.push(log);
            break;
        }
        if t == settings.max_actions {
            steps.push(log);
            break;
        }
        let mut decision = None;
        for _ in 0..settings.retries {
            let start = Instant::now();
            decision = planner.plan(&s, prng.next_u64());
            if settings.timing {
                plan_ms += start.elapsed().as_secs_f64() * 1e3;
            }
            if decision.is_some() {
                break;
            }
        }
        let Some(d) = decision else {
            steps.push(log);
            break;
        };
        log.action = Some(d.action.display(&world.problem.vocab).to_string());
        log.value = Some(d.value);
        steps.push(log);
        s = simulate_step(rules, &s, &d.action, &mut sim, settings.noise).state;
    }
    TrialResult { trial, seed, success, actions: steps.len() - 1, reward, baseline, plan_time_ms: plan_ms, steps }
}

/// A configured experiment with its world loaded.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub world: World,
}

impl Experiment {
    pub fn load(config: ExperimentConfig) -> Result<Self, HarnessError> {
        let world = World::load(&config.rules, &config.problem, config.gamma)?;
        Ok(Experiment { config, world })
    }

    fn settings(&self) -> TrialSettings {
        TrialSettings {
            max_actions: self.config.max_actions,
            retries: self.config.retries,
            noise: self.config.noise,
            timing: self.config.timing,
        }
    }

    pub fn run_trial(&self, trial: usize, seed: u64) -> Result<TrialResult, HarnessError> {
        let (mut sim, prng) = trial_streams(seed);
        let s0 = self.world.sample_start(&mut sim);
        let rules = self.world.ground(&s0)?;
        let mut planner = ConfiguredPlanner::new(&self.config, &self.world, rules.clone());
        Ok(run_trial_with(&mut planner, &self.world, &rules, s0, &self.settings(), trial, seed, sim, prng))
    }

    /// Runs trials with seeds `seed + i`.
    pub fn run(&self) -> Result<Report, HarnessError> {
        let trials = (0..self.config.trials)
            .map(|i| self.run_trial(i, self.config.seed.wrapping_add(i as u64)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Report::new(self.config.planner, trials))
    }
}

/// Loads, runs and, when an output directory is configured, writes the results.
pub fn run_experiment(config: ExperimentConfig) -> Result<Report, HarnessError> {
    let out = config.output_dir.clone();
    let report = Experiment::load(config)?.run()?;
    if let Some(dir) = out {
        write_report(&report, &dir)?;
    }
    Ok(report)
}
