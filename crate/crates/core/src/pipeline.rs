//! File-level glue: feature extraction, fold training with artifacts on
//! disk, prediction and evaluation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{concatenate_all, CorpusError, NarrativeRecord};
use crate::evalx::{
    cv_train, ensemble_predict, evaluate, optimize_threshold, CvResult, EvalError, EvalReport,
    FoldPlan, ThresholdMetric,
};
use crate::experiments::{dynamics_of, DynamicsReport, ExperimentError};
use crate::gbdt::{GbdtError, GbdtModel, TrainConfig};
use crate::medpatterns::{extract_all, FEATURE_NAMES, N_FEATURES};
use crate::tune::TuneError;
use crate::vectorize::{
    assemble_features, fit_char_tfidf, fit_word_tfidf, load_matrix, transform_tfidf, Category,
    FeatureBlock, FeatureRegistry, SparseMatrix, VectorizeError, VectorizerConfig,
    VectorizerModel,
};
use crate::SCHEMA_VERSION;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Vectorize(#[from] VectorizeError),
    #[error(transparent)]
    Gbdt(#[from] GbdtError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Tune(#[from] TuneError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Word and character vectorizers fitted on one corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedVectorizers {
    pub schema_version: u32,
    pub word: VectorizerModel,
    pub char: VectorizerModel,
}

impl FittedVectorizers {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let v: FittedVectorizers = serde_json::from_str(&read_file(path)?)
            .map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))?;
        Ok(FittedVectorizers {
            schema_version: v.schema_version,
            word: v.word.ready(),
            char: v.char.ready(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        write_file(path, to_json_pretty(self))
    }
}

/// `dir/features.fmx` -> `dir/features.vectorizers.json`.
pub fn vectorizers_path(fmx: &Path) -> PathBuf {
    let stem = fmx.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    fmx.with_file_name(format!("{stem}.vectorizers.json"))
}

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub word: VectorizerConfig,
    pub char: VectorizerConfig,
    /// Reuse these instead of fitting on the corpus.
    pub vectorizers: Option<FittedVectorizers>,
    pub embeddings: Option<PathBuf>,
    pub scores: Option<PathBuf>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            word: VectorizerConfig::word_default(),
            char: VectorizerConfig::char_default(),
            vectorizers: None,
            embeddings: None,
            scores: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Extracted {
    pub matrix: SparseMatrix,
    pub registry: FeatureRegistry,
    pub vectorizers: FittedVectorizers,
}

/// Load an externally produced block (embeddings or scores). Its registry
/// supplies the column names; the category is forced to `category`.
pub fn load_external_block(
    path: &Path,
    category: Category,
    n_rows: usize,
) -> Result<FeatureBlock, PipelineError> {
    let (m, reg) = load_matrix(path)?;
    if m.n_rows() != n_rows {
        return Err(PipelineError::Data(format!(
            "{} has {} rows, corpus has {n_rows}",
            path.display(),
            m.n_rows()
        )));
    }
    let names = reg.entries.into_iter().map(|e| e.name).collect();
    Ok(FeatureBlock::sparse(category, names, m))
}

/// Medical patterns, word TF-IDF, char n-grams and any external blocks,
/// assembled into one matrix.
pub fn extract(records: &[NarrativeRecord], opts: &ExtractOptions) -> Result<Extracted, PipelineError> {
    let docs = concatenate_all(records);
    let vecs = match &opts.vectorizers {
        Some(v) => v.clone(),
        None => FittedVectorizers {
            schema_version: SCHEMA_VERSION,
            word: fit_word_tfidf(&docs, &opts.word)?,
            char: fit_char_tfidf(&docs, &opts.char)?,
        },
    };
    let n = records.len();
    let med: Vec<f32> = extract_all(&docs, records)
        .iter()
        .flat_map(|v| v.values.iter().map(|&x| x as f32))
        .collect();
    let mut blocks = vec![
        FeatureBlock::dense(
            Category::Medical,
            FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            n,
            med,
        ),
        FeatureBlock::sparse(Category::Word, vecs.word.feature_names(), transform_tfidf(&vecs.word, &docs)),
        FeatureBlock::sparse(Category::Char, vecs.char.feature_names(), transform_tfidf(&vecs.char, &docs)),
    ];
    debug_assert_eq!(blocks[0].names.len(), N_FEATURES);
    if let Some(p) = &opts.embeddings {
        blocks.push(load_external_block(p, Category::Embedding, n)?);
    }
    if let Some(p) = &opts.scores {
        blocks.push(load_external_block(p, Category::TransformerScore, n)?);
    }
    let (matrix, registry) = assemble_features(blocks)?;
    Ok(Extracted {
        matrix,
        registry,
        vectorizers: vecs,
    })
}

pub fn labels_of(records: &[NarrativeRecord]) -> Vec<u8> {
    records.iter().map(|r| r.label).collect()
}

/// Negatives over positives.
pub fn scale_pos_weight_from(y: &[u8]) -> Result<f64, PipelineError> {
    let pos = y.iter().filter(|&&v| v == 1).count();
    let neg = y.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(PipelineError::Data("labels contain a single class".into()));
    }
    Ok(neg as f64 / pos as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub schema_version: u32,
    pub n_rows: usize,
    pub n_features: usize,
    pub n_positive: usize,
    pub folds: usize,
    pub fold_seed: u64,
    pub config: TrainConfig,
    pub per_fold_auc: Vec<f64>,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub oof_auc: f64,
    /// F1-optimal threshold on the out-of-fold probabilities.
    pub threshold: f64,
    pub oof_eval: EvalReport,
    pub dynamics: DynamicsReport,
}

pub fn model_path(dir: &Path, fold: usize) -> PathBuf {
    dir.join(format!("model_fold{fold}.json"))
}

pub fn train_report(cv: &CvResult, y: &[u8], n_features: usize, config: &TrainConfig, plan: &FoldPlan) -> TrainReport {
    let (threshold, oof_eval) = optimize_threshold(y, &cv.oof.probs, ThresholdMetric::F1);
    TrainReport {
        schema_version: SCHEMA_VERSION,
        n_rows: y.len(),
        n_features,
        n_positive: y.iter().filter(|&&v| v == 1).count(),
        folds: plan.k,
        fold_seed: plan.seed,
        config: config.clone(),
        per_fold_auc: cv.per_fold_auc.clone(),
        mean_auc: cv.mean_auc,
        std_auc: cv.std_auc,
        oof_auc: cv.oof_auc,
        threshold,
        oof_eval,
        dynamics: dynamics_of(&cv.models, &cv.per_fold_auc),
    }
}

#[derive(Serialize)]
struct FoldsFile<'a> {
    schema_version: u32,
    #[serde(flatten)]
    plan: &'a FoldPlan,
}

/// Cross-validated training with every artifact written to `out`:
/// `model_fold{k}.json`, `oof.csv`, `folds.json` and `report.json`.
pub fn train_to_dir(
    x: &SparseMatrix,
    y: &[u8],
    ids: Option<&[String]>,
    config: &TrainConfig,
    plan: &FoldPlan,
    out: &Path,
) -> Result<(CvResult, TrainReport), PipelineError> {
    fs::create_dir_all(out).map_err(|source| PipelineError::Io {
        path: out.display().to_string(),
        source,
    })?;
    let cv = cv_train(x, y, config, plan)?;
    for (k, m) in cv.models.iter().enumerate() {
        m.save(model_path(out, k))?;
    }
    write_file(&out.join("oof.csv"), cv.oof.to_csv(ids, y))?;
    write_file(
        &out.join("folds.json"),
        to_json_pretty(&FoldsFile { schema_version: SCHEMA_VERSION, plan }),
    )?;
    let report = train_report(&cv, y, x.n_cols(), config, plan);
    write_file(&out.join("report.json"), to_json_pretty(&report))?;
    Ok((cv, report))
}

/// All `model_fold{k}.json` in `dir`, ordered by fold.
pub fn load_models(dir: &Path) -> Result<Vec<GbdtModel>, PipelineError> {
    let mut models = Vec::new();
    loop {
        let p = model_path(dir, models.len());
        if !p.exists() {
            break;
        }
        models.push(GbdtModel::load(&p)?);
    }
    if models.is_empty() {
        return Err(PipelineError::Data(format!("no model_fold0.json in {}", dir.display())));
    }
    Ok(models)
}

pub fn predict_with(models: &[GbdtModel], x: &SparseMatrix) -> Result<Vec<f64>, PipelineError> {
    Ok(ensemble_predict(models, x)?)
}

/// `row,prob` (or `id,prob` when ids are given).
pub fn probs_csv(probs: &[f64], ids: Option<&[String]>) -> String {
    let mut s = String::from(if ids.is_some() { "id,prob\n" } else { "row,prob\n" });
    for (i, p) in probs.iter().enumerate() {
        match ids {
            Some(ids) => s.push_str(&format!("{},{p}\n", ids[i])),
            None => s.push_str(&format!("{i},{p}\n")),
        }
    }
    s
}

/// Keys and probabilities from a probability CSV. The key column is the
/// first column; the probability column is named `prob`.
pub fn read_probs_csv(text: &str) -> Result<(String, Vec<(String, f64)>), PipelineError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| PipelineError::Data("empty probability file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let pcol = cols
        .iter()
        .position(|&c| c == "prob")
        .ok_or_else(|| PipelineError::Data("probability file has no `prob` column".into()))?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let p: f64 = f
            .get(pcol)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| PipelineError::Data(format!("line {}: bad probability", i + 2)))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(PipelineError::Data(format!("line {}: probability {p} outside [0, 1]", i + 2)));
        }
        out.push((f[0].to_string(), p));
    }
    Ok((cols[0].to_string(), out))
}

/// Align probabilities to corpus labels by id or by row index.
pub fn align_probs(
    text: &str,
    records: &[NarrativeRecord],
) -> Result<(Vec<u8>, Vec<f64>), PipelineError> {
    let (key, rows) = read_probs_csv(text)?;
    if rows.len() != records.len() {
        return Err(PipelineError::Data(format!(
            "{} probabilities for {} corpus records",
            rows.len(),
            records.len()
        )));
    }
    let mut probs = vec![f64::NAN; records.len()];
    if key == "id" {
        let index: std::collections::HashMap<&str, usize> =
            records.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
        for (id, p) in rows {
            let i = *index
                .get(id.as_str())
                .ok_or_else(|| PipelineError::Data(format!("id {id} is not in the corpus")))?;
            probs[i] = p;
        }
    } else {
        for (k, (row, p)) in rows.into_iter().enumerate() {
            if row != k.to_string() {
                return Err(PipelineError::Data(format!("row {row} out of order at position {k}")));
            }
            probs[k] = p;
        }
    }
    Ok((labels_of(records), probs))
}

/// Evaluation document written by `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOutput {
    pub schema_version: u32,
    pub report: EvalReport,
    pub optimized: bool,
}

pub fn evaluate_probs(y: &[u8], probs: &[f64], threshold: Option<f64>) -> EvaluationOutput {
    match threshold {
        Some(t) => EvaluationOutput {
            schema_version: SCHEMA_VERSION,
            report: evaluate(y, probs, t),
            optimized: false,
        },
        None => EvaluationOutput {
            schema_version: SCHEMA_VERSION,
            report: optimize_threshold(y, probs, ThresholdMetric::F1).1,
            optimized: true,
        },
    }
}
