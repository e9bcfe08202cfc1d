use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::sampler::{propose, SamplerKind, TpeSettings};
use super::space::{Point, SearchSpace};
use super::TuneError;
use crate::evalx::{cv_train, FoldPlan};
use crate::gbdt::TrainConfig;
use crate::util::{mean, seeded_rng, std_dev};
use crate::vectorize::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    Failed,
}

/// One evaluated configuration. Failed trials carry an error and no AUC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: usize,
    pub status: TrialStatus,
    pub config: TrainConfig,
    pub mean_auc: Option<f64>,
    pub std_auc: Option<f64>,
    pub per_fold_auc: Vec<f64>,
    pub best_iterations: Vec<usize>,
    /// Seconds; excluded from [`TrialRecord::same_outcome`].
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    /// Equality ignoring wall-clock time.
    pub fn same_outcome(&self, other: &TrialRecord) -> bool {
        TrialRecord { wall_time: 0.0, ..self.clone() } == TrialRecord { wall_time: 0.0, ..other.clone() }
    }
}

/// What an objective reports for one config.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldScores {
    pub per_fold_auc: Vec<f64>,
    pub best_iterations: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub n_trials: usize,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub tpe: TpeSettings,
    /// Append-only JSONL history; existing records are resumed.
    pub history_path: Option<PathBuf>,
}

impl SearchOptions {
    pub fn new(n_trials: usize, sampler: SamplerKind, seed: u64) -> Self {
        SearchOptions {
            n_trials,
            sampler,
            seed,
            tpe: TpeSettings::default(),
            history_path: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: Option<TrialRecord>,
    pub history: Vec<TrialRecord>,
}

pub fn read_history(path: &Path) -> Result<Vec<TrialRecord>, TuneError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path).map_err(|e| TuneError::Io(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| TuneError::History(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

fn append_record(path: &Path, rec: &TrialRecord) -> Result<(), TuneError> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| TuneError::Io(format!("{}: {e}", path.display())))?;
    let line = serde_json::to_string(rec).expect("trial serializes");
    writeln!(f, "{line}").map_err(|e| TuneError::Io(format!("{}: {e}", path.display())))
}

/// Best successful trial; ties keep the earliest.
pub fn best_trial(history: &[TrialRecord]) -> Option<&TrialRecord> {
    let mut best: Option<&TrialRecord> = None;
    for r in history {
        if let Some(a) = r.mean_auc {
            if best.is_none_or(|b| a > b.mean_auc.unwrap()) {
                best = Some(r);
            }
        }
    }
    best
}

fn record(trial_id: usize, config: TrainConfig, result: Result<FoldScores, String>, started: Instant) -> TrialRecord {
    let wall_time = started.elapsed().as_secs_f64();
    match result {
        Ok(s) => TrialRecord {
            trial_id,
            status: TrialStatus::Ok,
            config,
            mean_auc: Some(mean(&s.per_fold_auc)),
            std_auc: Some(std_dev(&s.per_fold_auc)),
            per_fold_auc: s.per_fold_auc,
            best_iterations: s.best_iterations,
            wall_time,
            error: None,
        },
        Err(e) => TrialRecord {
            trial_id,
            status: TrialStatus::Failed,
            config,
            mean_auc: None,
            std_auc: None,
            per_fold_auc: Vec::new(),
            best_iterations: Vec::new(),
            wall_time,
            error: Some(e),
        },
    }
}

/// Sequential search over `space` with an arbitrary objective. The proposal
/// for trial `t` depends only on the seed, `t` and trials `0..t`, so an
/// interrupted run resumed from its history continues identically.
pub fn run_search_with<F>(
    space: &SearchSpace,
    base: &TrainConfig,
    opts: &SearchOptions,
    mut objective: F,
) -> Result<SearchOutcome, TuneError>
where
    F: FnMut(&TrainConfig) -> Result<FoldScores, String>,
{
    if opts.n_trials < 1 {
        return Err(TuneError::InvalidArgument("n_trials must be >= 1".into()));
    }
    let mut history = match &opts.history_path {
        Some(p) => read_history(p)?,
        None => Vec::new(),
    };
    if history.len() > opts.n_trials {
        history.truncate(opts.n_trials);
    }
    for (i, r) in history.iter().enumerate() {
        if r.trial_id != i {
            return Err(TuneError::History(format!("trial {} recorded at position {i}", r.trial_id)));
        }
    }
    if !history.is_empty() {
        log::info!("resuming search at trial {}", history.len());
    }
    for t in history.len()..opts.n_trials {
        let done: Vec<(Point, f64)> = history
            .iter()
            .filter_map(|r| r.mean_auc.map(|a| (space.to_point(&r.config), a)))
            .collect();
        let mut rng = seeded_rng(opts.seed, 1 + t as u64);
        let point = propose(opts.sampler, &opts.tpe, space, &done, &mut rng);
        let config = space.to_config(&point, base);
        let started = Instant::now();
        let rec = record(t, config.clone(), objective(&config), started);
        match rec.mean_auc {
            Some(a) => log::info!("trial {t}: mean AUC {a:.5}"),
            None => log::warn!("trial {t} failed: {}", rec.error.as_deref().unwrap_or("")),
        }
        if let Some(p) = &opts.history_path {
            append_record(p, &rec)?;
        }
        history.push(rec);
    }
    Ok(SearchOutcome {
        best: best_trial(&history).cloned(),
        history,
    })
}

fn cv_objective<'a>(
    x: &'a SparseMatrix,
    y: &'a [u8],
    plan: &'a FoldPlan,
) -> impl FnMut(&TrainConfig) -> Result<FoldScores, String> + 'a {
    move |c| {
        let cv = cv_train(x, y, c, plan).map_err(|e| e.to_string())?;
        Ok(FoldScores {
            per_fold_auc: cv.per_fold_auc,
            best_iterations: cv.models.iter().map(|m| m.best_iteration).collect(),
        })
    }
}

/// Search with the k-fold mean AUC of `cv_train` as objective.
pub fn run_search(
    x: &SparseMatrix,
    y: &[u8],
    plan: &FoldPlan,
    space: &SearchSpace,
    base: &TrainConfig,
    opts: &SearchOptions,
) -> Result<SearchOutcome, TuneError> {
    run_search_with(space, base, opts, cv_objective(x, y, plan))
}

/// Evaluate exactly one configuration. Values outside `space` are allowed
/// and logged.
pub fn replay_config(
    config: &TrainConfig,
    x: &SparseMatrix,
    y: &[u8],
    plan: &FoldPlan,
    space: &SearchSpace,
) -> TrialRecord {
    for v in space.violations(config) {
        log::warn!("replay: {v}");
    }
    let started = Instant::now();
    record(0, config.clone(), cv_objective(x, y, plan)(config), started)
}
