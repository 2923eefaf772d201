use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use nidplan::harness::{run_experiment, ExperimentConfig, HarnessError, PlannerKind, World};
use nidplan::io::{
    nid_to_ppddl, parse_ppddl, parse_rules, parse_triples, ppddl_to_nid, serialize_rules, write_ppddl, ParseError,
    ToNidOptions, ToPpddlOptions,
};
use nidplan::prada::{aprada_refine, compile, prada_plan, PradaConfig};
use nidplan::rules::score_ruleset;
use nidplan::tree::{sst_plan, uct_plan, TreePlanConfig};

#[derive(Parser)]
#[command(name = "nidplan", version, about = "Planning with noisy indeterministic deictic rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Ppddl,
    Nid,
}

#[derive(Subcommand)]
enum Command {
    /// Plan once from the problem's start state and print the result as JSON.
    Plan {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value = "prada")]
        planner: PlannerKind,
        #[arg(long)]
        horizon: usize,
        /// Action-sequence samples (PRADA).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Episodes (UCT).
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        /// Successors per action (SST).
        #[arg(long, default_value_t = 2)]
        branching: usize,
        /// Exploration constant (UCT).
        #[arg(long, default_value_t = 1.0)]
        bias: f64,
    },
    /// Run an experiment described by a TOML key/value file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Convert between PPDDL domains and NID rule files.
    Convert {
        #[arg(long)]
        from: Format,
        #[arg(long)]
        to: Format,
        input: PathBuf,
        output: PathBuf,
        /// Accept `forall` effects as unique deictic references.
        #[arg(long)]
        unique_referent: bool,
    },
    /// Score a rule set on experience triples.
    Score {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        triples: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-9)]
        pmin: f64,
    },
}

enum Failure {
    Parse(String),
    NoPlan(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 2,
            Failure::NoPlan(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Parse(m) | Failure::NoPlan(m) | Failure::Io(m) => m,
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Parse(e.to_string()),
        }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Parse(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn bad(msg: impl ToString) -> Failure {
    Failure::Parse(msg.to_string())
}

#[allow(clippy::too_many_arguments)]
fn plan(
    rules: &Path,
    problem: &Path,
    planner: PlannerKind,
    horizon: usize,
    samples: Option<usize>,
    theta: f64,
    gamma: Option<f64>,
    seed: u64,
    episodes: usize,
    branching: usize,
    bias: f64,
) -> Result<Value, Failure> {
    let world = World::load(rules, problem, gamma)?;
    let vocab = world.problem.vocab.clone();
    let name = |a: &nidplan::rules::Action| a.display(&vocab).to_string();
    let g = world.gamma;
    match planner {
        PlannerKind::Sst | PlannerKind::Uct => {
            let s0 = world.problem.start_state().ok_or_else(|| bad("tree planners need a fixed start state"))?.clone();
            let gamma_set = world.ground(&s0)?;
            let cfg = TreePlanConfig { horizon, gamma: g, branching, episodes, bias, seed };
            cfg.validate().map_err(bad)?;
            if planner == PlannerKind::Sst {
                let r = sst_plan(&gamma_set, &s0, &world.reward, &cfg);
                let q: Vec<Value> = r.q.iter().map(|(a, v)| json!({"action": name(a), "q": v})).collect();
                Ok(json!({"planner": "sst", "action": name(&r.action), "value": r.value, "q": q}))
            } else {
                let r = uct_plan(&gamma_set, &s0, &world.reward, &cfg);
                let q: Vec<Value> =
                    r.q.iter().map(|(a, v, n)| json!({"action": name(a), "q": v, "visits": n})).collect();
                let value = r.q.iter().find(|(a, _, _)| *a == r.action).map_or(0.0, |x| x.1);
                Ok(json!({"planner": "uct", "action": name(&r.action), "value": value, "q": q}))
            }
        }
        PlannerKind::Prada | PlannerKind::Aprada => {
            let n_samples = samples.ok_or_else(|| bad("--samples is required for PRADA"))?;
            let cfg = PradaConfig { n_samples, horizon, gamma: g, theta, seed, cache: true };
            cfg.validate().map_err(bad)?;
            let s0 = world.problem.init.clone();
            let model = compile(world.ground(&s0)?, world.reward.clone());
            let b0 = match &world.problem.prior {
                Some(p) => model.init_belief_prior(&s0, p).map_err(bad)?,
                None => model.init_belief(&s0),
            };
            let mut best = prada_plan(&model, &b0, &cfg)
                .ok_or_else(|| Failure::NoPlan(format!("no plan with value above {theta}")))?;
            if planner == PlannerKind::Aprada {
                best = aprada_refine(&model, &b0, &best, g);
            }
            let kind = if planner == PlannerKind::Prada { "prada" } else { "aprada" };
            Ok(json!({
                "planner": kind,
                "actions": best.actions.iter().map(name).collect::<Vec<_>>(),
                "value": best.value,
                "reward_posteriors": best.reward_posteriors,
            }))
        }
    }
}

fn convert(from: Format, to: Format, input: &Path, output: &Path, unique_referent: bool) -> Result<Value, Failure> {
    let text = read(input)?;
    let file = input.display().to_string();
    let (out, warnings) = match (from, to) {
        (Format::Ppddl, Format::Nid) => {
            let dom = parse_ppddl(&text, &file)?;
            let opts = ToNidOptions { unique_referent, ..Default::default() };
            let c = ppddl_to_nid(&dom, opts).map_err(bad)?;
            (serialize_rules(&c.rules), c.warnings)
        }
        (Format::Nid, Format::Ppddl) => {
            let rf = parse_rules(&text, &file)?;
            (write_ppddl(&nid_to_ppddl(&rf, &ToPpddlOptions::default()).map_err(bad)?), Vec::new())
        }
        _ => return Err(bad("conversion must go between ppddl and nid")),
    };
    write(output, &out)?;
    Ok(json!({"output": output.display().to_string(), "warnings": warnings}))
}

fn score(rules: &Path, triples: &Path, alpha: f64, pmin: f64) -> Result<Value, Failure> {
    let rf = parse_rules(&read(rules)?, &rules.display().to_string())?;
    let (vocab, data) = parse_triples(&read(triples)?, &triples.display().to_string(), rf.signature.clone())?;
    let s = score_ruleset(&rf.rules, &vocab, &data, alpha, pmin).map_err(bad)?;
    Ok(json!({"score": s, "triples": data.len()}))
}

fn run(cli: Cli) -> Result<Value, Failure> {
    match cli.command {
        Command::Plan { rules, problem, planner, horizon, samples, theta, gamma, seed, episodes, branching, bias } => {
            plan(&rules, &problem, planner, horizon, samples, theta, gamma, seed, episodes, branching, bias)
        }
        Command::Run { config } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if cfg.output_dir.is_none() {
                cfg.output_dir = Some(config.parent().unwrap_or(Path::new(".")).to_path_buf());
            }
            let report = run_experiment(cfg)?;
            serde_json::to_value(&report).map_err(|e| Failure::Io(e.to_string()))
        }
        Command::Convert { from, to, input, output, unique_referent } => {
            convert(from, to, &input, &output, unique_referent)
        }
        Command::Score { rules, triples, alpha, pmin } => score(&rules, &triples, alpha, pmin),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("serialisable"));
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
