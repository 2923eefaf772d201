use std::path::Path;

use serde::Serialize;

use super::{io_err, HarnessError, PlannerKind, TrialResult};

/// Mean and standard deviation of the mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub sdm: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Summary { mean: 0.0, sdm: 0.0 };
        }
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Summary { mean, sdm: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Summary { mean, sdm: (var / n).sqrt() }
    }
}

/// One row of `trials.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub actions: usize,
    pub reward: f64,
    pub plan_time_ms: f64,
    pub reward_minus_baseline: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub planner: PlannerKind,
    pub trials: usize,
    pub success_rate: f64,
    pub reward: Summary,
    pub reward_minus_baseline: Summary,
    pub actions: Summary,
    pub plan_time_ms: Summary,
    #[serde(skip)]
    pub results: Vec<TrialResult>,
}

impl Report {
    pub fn new(planner: PlannerKind, results: Vec<TrialResult>) -> Self {
        let col = |f: fn(&TrialResult) -> f64| Summary::of(&results.iter().map(f).collect::<Vec<_>>());
        let n = results.len().max(1) as f64;
        Report {
            planner,
            trials: results.len(),
            success_rate: results.iter().filter(|r| r.success).count() as f64 / n,
            reward: col(|r| r.reward),
            reward_minus_baseline: col(|r| r.reward - r.baseline),
            actions: col(|r| r.actions as f64),
            plan_time_ms: col(|r| r.plan_time_ms),
            results: results.clone(),
        }
    }

    pub fn rows(&self) -> Vec<TrialRow> {
        self.results
            .iter()
            .map(|r| TrialRow {
                trial: r.trial,
                seed: r.seed,
                success: r.success,
                actions: r.actions,
                reward: r.reward,
                plan_time_ms: r.plan_time_ms,
                reward_minus_baseline: r.reward - r.baseline,
            })
            .collect()
    }
}

/// Writes `report.json` and `trials.csv` into `dir`, creating it if needed.
pub fn write_report(report: &Report, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let json_path = dir.join("report.json");
    let json = serde_json::to_string_pretty(report).map_err(|e| HarnessError::Config(e.to_string()))?;
    std::fs::write(&json_path, json + "\n").map_err(io_err(&json_path))?;
    let csv_path = dir.join("trials.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| csv_io(&csv_path, e))?;
    for row in report.rows() {
        w.serialize(row).map_err(|e| csv_io(&csv_path, e))?;
    }
    w.flush().map_err(io_err(&csv_path))
}

fn csv_io(path: &Path, e: csv::Error) -> HarnessError {
    HarnessError::Io { path: path.to_path_buf(), source: std::io::Error::other(e) }
}
