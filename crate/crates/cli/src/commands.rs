use std::fs;
use std::path::Path;

use dosescreen::corpus::{concatenate_all, corpus_stats, generate_synthetic_corpus, load_corpus, write_corpus, NarrativeRecord};
use dosescreen::evalx::{make_folds, sweep_csv, threshold_sweep, FoldPlan};
use dosescreen::experiments::{
    ablation_csv, ablation_markdown, aggregate_importance, importance_csv, importance_markdown,
    run_ablation, topk_csv, topk_experiment, topk_markdown,
};
use dosescreen::gbdt::TrainConfig;
use dosescreen::pipeline::{
    align_probs, evaluate_probs, extract, labels_of, load_models, predict_with, probs_csv,
    scale_pos_weight_from, to_json_pretty, train_to_dir, vectorizers_path, ExtractOptions,
    FittedVectorizers,
};
use dosescreen::tune::{replay_config, run_search, SamplerKind, SearchOptions, SearchSpace};
use dosescreen::vectorize::{decode_registry, load_matrix, registry_path, save_matrix, Category, VectorizerConfig};
use dosescreen::{FeatureRegistry, SparseMatrix, SCHEMA_VERSION};
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;
use crate::{
    AblateArgs, Command, CorpusAction, DataArgs, EvaluateArgs, ExtractArgs, ImportanceArgs,
    PredictArgs, SynthArgs, TopkArgs, TrainArgs, TrainingArgs, TuneAction, TuneArgs,
};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Corpus { action: CorpusAction::Stats { corpus } } => stats(&corpus),
        Command::Extract(a) => extract_cmd(a),
        Command::Train(a) => train(a),
        Command::Tune(a) => tune(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Ablate(a) => ablate(a),
        Command::SelectTopk(a) => topk(a),
        Command::Importance(a) => importance(a),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) {
    print!("{}", to_json_pretty(value));
}

fn synth(a: SynthArgs) -> Result<()> {
    if a.n < 10 {
        return Err(CliError::usage("--n", format!("must be >= 10, got {}", a.n)));
    }
    if !(a.rate > 0.0 && a.rate < 1.0) {
        return Err(CliError::usage("--rate", format!("must be in (0, 1), got {}", a.rate)));
    }
    if !(0.0..=1.0).contains(&a.strength) {
        return Err(CliError::usage("--strength", format!("must be in [0, 1], got {}", a.strength)));
    }
    let recs = generate_synthetic_corpus(a.n, a.rate, a.strength, a.seed)?;
    write(&a.out, write_corpus(&recs))?;
    let pos = recs.iter().filter(|r| r.label == 1).count();
    print_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "out": a.out,
        "n": recs.len(),
        "n_positive": pos,
    }));
    Ok(())
}

fn stats(corpus: &Path) -> Result<()> {
    let recs = load_corpus(corpus)?;
    let s = corpus_stats(&concatenate_all(&recs))?;
    print_json(&json!({ "schema_version": SCHEMA_VERSION, "stats": s }));
    Ok(())
}

fn extract_cmd(a: ExtractArgs) -> Result<()> {
    if a.word_max_features == 0 {
        return Err(CliError::usage("--word-max-features", "must be >= 1"));
    }
    if a.char_max_features == 0 {
        return Err(CliError::usage("--char-max-features", "must be >= 1"));
    }
    let recs = load_corpus(&a.corpus)?;
    let vectorizers = match &a.vectorizers {
        Some(p) => Some(FittedVectorizers::load(p)?),
        None => None,
    };
    let opts = ExtractOptions {
        word: VectorizerConfig { max_features: a.word_max_features, ..VectorizerConfig::word_default() },
        char: VectorizerConfig { max_features: a.char_max_features, ..VectorizerConfig::char_default() },
        vectorizers,
        embeddings: a.embeddings.clone(),
        scores: a.scores.clone(),
    };
    let e = extract(&recs, &opts)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|err| CliError::data(format!("{}: {err}", dir.display())))?;
    }
    save_matrix(&a.out, &e.matrix, &e.registry)?;
    e.vectorizers.save(&vectorizers_path(&a.out))?;
    let widths: serde_json::Map<String, serde_json::Value> = e
        .registry
        .categories()
        .into_iter()
        .map(|c| (c.as_str().to_string(), json!(e.registry.width(c))))
        .collect();
    print_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "out": a.out,
        "registry": registry_path(&a.out),
        "n_rows": e.matrix.n_rows(),
        "n_cols": e.matrix.n_cols(),
        "nnz": e.matrix.nnz(),
        "widths": widths,
    }));
    Ok(())
}

struct Loaded {
    x: SparseMatrix,
    registry: FeatureRegistry,
    records: Vec<NarrativeRecord>,
    y: Vec<u8>,
}

fn load_data(d: &DataArgs) -> Result<Loaded> {
    let (x, registry) = load_matrix(&d.features)?;
    let records = load_corpus(&d.labels_from)?;
    if records.len() != x.n_rows() {
        return Err(CliError::data(format!(
            "{} has {} rows but {} has {} records",
            d.features.display(),
            x.n_rows(),
            d.labels_from.display(),
            records.len()
        )));
    }
    let y = labels_of(&records);
    Ok(Loaded { x, registry, records, y })
}

fn training_setup(t: &TrainingArgs, y: &[u8]) -> Result<(TrainConfig, FoldPlan)> {
    let mut config = match &t.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<TrainConfig>(&text)
                .map_err(|e| CliError::usage("--config", format!("{}: {e}", p.display())))?
        }
        None => TrainConfig::default(),
    };
    config.seed = t.seed;
    config.scale_pos_weight = match t.scale_pos_weight {
        Some(w) if !(w > 0.0 && w.is_finite()) => {
            return Err(CliError::usage("--scale-pos-weight", format!("must be > 0, got {w}")))
        }
        Some(w) => w,
        None => scale_pos_weight_from(y)?,
    };
    config
        .validate()
        .map_err(|e| CliError::usage("--config", e.to_string()))?;
    let plan = make_folds(y, t.folds as usize, t.seed).map_err(|e| CliError::data(e.to_string()))?;
    Ok((config, plan))
}

fn ids(records: &[NarrativeRecord]) -> Vec<String> {
    records.iter().map(|r| r.id.clone()).collect()
}

fn train(a: TrainArgs) -> Result<()> {
    let d = load_data(&a.data)?;
    let (config, plan) = training_setup(&a.training, &d.y)?;
    let ids = ids(&d.records);
    let (_, report) = train_to_dir(&d.x, &d.y, Some(&ids), &config, &plan, &a.out)?;
    print_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "out": a.out,
        "mean_auc": report.mean_auc,
        "std_auc": report.std_auc,
        "oof_auc": report.oof_auc,
        "per_fold_auc": report.per_fold_auc,
        "threshold": report.threshold,
        "best_iterations": report.dynamics.best_iterations,
    }));
    Ok(())
}

fn tune(a: TuneArgs) -> Result<()> {
    if let Some(TuneAction::Replay { data, training, out }) = a.action {
        let d = load_data(&data)?;
        let (config, plan) = training_setup(&training, &d.y)?;
        let rec = replay_config(&config, &d.x, &d.y, &plan, &SearchSpace::default());
        let doc = json!({ "schema_version": SCHEMA_VERSION, "trial": rec });
        if let Some(p) = out {
            write(&p, to_json_pretty(&doc))?;
        }
        print_json(&doc);
        return Ok(());
    }
    let data = a.data.ok_or_else(|| CliError::usage("--features", "required for a search"))?;
    let out = a.out.ok_or_else(|| CliError::usage("--out", "required for a search"))?;
    let sampler: SamplerKind = a.sampler.parse().map_err(|e: String| CliError::usage("--sampler", e))?;
    if a.trials == 0 {
        return Err(CliError::usage("--trials", "must be >= 1"));
    }
    let d = load_data(&data)?;
    let (base, plan) = training_setup(&a.training, &d.y)?;
    let mut opts = SearchOptions::new(a.trials, sampler, a.training.seed);
    opts.history_path = Some(out.clone());
    let outcome = run_search(&d.x, &d.y, &plan, &SearchSpace::default(), &base, &opts)?;
    print_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "history": out,
        "n_trials": outcome.history.len(),
        "n_failed": outcome.history.iter().filter(|r| r.mean_auc.is_none()).count(),
        "best": outcome.best,
    }));
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let models = load_models(&a.models)?;
    let (x, _) = load_matrix(&a.features)?;
    let probs = predict_with(&models, &x)?;
    let ids = match &a.ids_from {
        Some(p) => {
            let recs = load_corpus(p)?;
            if recs.len() != x.n_rows() {
                return Err(CliError::data(format!(
                    "--ids-from has {} records for {} rows",
                    recs.len(),
                    x.n_rows()
                )));
            }
            Some(ids(&recs))
        }
        None => None,
    };
    write(&a.out, probs_csv(&probs, ids.as_deref()))?;
    print_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "out": a.out,
        "n_rows": probs.len(),
        "n_models": models.len(),
    }));
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    if let Some(t) = a.threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(CliError::usage("--threshold", format!("must be in [0, 1], got {t}")));
        }
    }
    if let Some(s) = &a.sweep {
        if let Some(t) = s.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(CliError::usage("--sweep", format!("threshold {t} outside [0, 1]")));
        }
    }
    let text = fs::read_to_string(&a.probs).map_err(|e| CliError::data(format!("{}: {e}", a.probs.display())))?;
    let recs = load_corpus(&a.labels_from)?;
    let (y, probs) = align_probs(&text, &recs)?;
    let threshold = if a.optimize_f1 { None } else { Some(a.threshold.unwrap_or(0.5)) };
    let out = evaluate_probs(&y, &probs, threshold);
    if let Some(p) = &a.out {
        write(p, to_json_pretty(&out))?;
    }
    print_json(&out);
    if let Some(ts) = &a.sweep {
        let csv = sweep_csv(&threshold_sweep(&y, &probs, ts));
        match &a.sweep_out {
            Some(p) => write(p, csv)?,
            None => print!("{csv}"),
        }
    }
    Ok(())
}

fn parse_categories(names: &[String]) -> Result<Vec<Category>> {
    names
        .iter()
        .map(|n| n.parse::<Category>().map_err(|e| CliError::usage("--drop", e.to_string())))
        .collect()
}

fn ablate(a: AblateArgs) -> Result<()> {
    let d = load_data(&a.data)?;
    let (config, plan) = training_setup(&a.training, &d.y)?;
    let drop = match &a.drop {
        Some(names) => parse_categories(names)?,
        None => d.registry.categories(),
    };
    for c in &drop {
        if d.registry.width(*c) == 0 {
            return Err(CliError::usage("--drop", format!("category {c} is not in the registry")));
        }
    }
    let rows = run_ablation(&d.x, &d.y, &d.registry, &drop, &config, &plan)?;
    write(&a.out.join("ablation.md"), ablation_markdown(&rows))?;
    write(&a.out.join("ablation.csv"), ablation_csv(&rows))?;
    let doc = json!({ "schema_version": SCHEMA_VERSION, "rows": rows });
    write(&a.out.join("ablation.json"), to_json_pretty(&doc))?;
    print_json(&doc);
    Ok(())
}

fn topk(a: TopkArgs) -> Result<()> {
    let d = load_data(&a.data)?;
    let width = d.x.n_cols();
    if let Some(&k) = a.ks.iter().find(|&&k| k == 0 || k > width) {
        return Err(CliError::usage("--ks", format!("k={k} outside 1..={width}")));
    }
    let (config, plan) = training_setup(&a.training, &d.y)?;
    let baseline = dosescreen::evalx::cv_train(&d.x, &d.y, &config, &plan)?;
    let out = topk_experiment(&d.x, &d.y, &a.ks, &config, &plan, &baseline)?;
    write(&a.out.join("topk.md"), topk_markdown(&out.rows))?;
    write(&a.out.join("topk.csv"), topk_csv(&out.rows))?;
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "baseline_mean_auc": out.baseline_mean_auc,
        "baseline_oof_auc": baseline.oof_auc,
        "rows": out.rows,
        "ranking": out.ranking.iter().take(a.ks.iter().copied().max().unwrap_or(0)).map(|&c| &d.registry.entries[c].name).collect::<Vec<_>>(),
    });
    write(&a.out.join("topk.json"), to_json_pretty(&doc))?;
    print_json(&doc);
    Ok(())
}

fn importance(a: ImportanceArgs) -> Result<()> {
    let models = load_models(&a.models)?;
    let side = registry_path(&a.features);
    let text = fs::read_to_string(&side).map_err(|e| CliError::data(format!("{}: {e}", side.display())))?;
    let registry = decode_registry(&text)?;
    let report = aggregate_importance(&models, &registry)?;
    if let Some(dir) = &a.out {
        write(&dir.join("importance.md"), importance_markdown(&report))?;
        write(&dir.join("importance.csv"), importance_csv(&report))?;
        write(&dir.join("importance.json"), to_json_pretty(&json!({ "schema_version": SCHEMA_VERSION, "report": report })))?;
    }
    print_json(&json!({ "schema_version": SCHEMA_VERSION, "categories": report.categories }));
    Ok(())
}
