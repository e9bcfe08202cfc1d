//! End-to-end acceptance suite. Prints one PASS/FAIL/SKIPPED line per
//! criterion and fails if any criterion failed.
//!
//! The dataset-dependent criteria run only when `DOSESCREEN_CTDEB_DIR` points
//! at a directory holding `train.fmx`, `train.jsonl`, `test.fmx` and
//! `test.jsonl` (each matrix with its registry sidecar).

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use dosescreen::corpus::{generate_synthetic_corpus, load_corpus, write_corpus, ConcatenatedDoc};
use dosescreen::evalx::{
    cv_train, ensemble_predict, make_folds, optimize_threshold, roc_auc, threshold_sweep, ThresholdMetric,
};
use dosescreen::experiments::{aggregate_importance, rank_features, run_ablation, select_topk, topk_experiment};
use dosescreen::gbdt::{gradients, train, weighted_log_loss, Node, TrainConfig};
use dosescreen::pipeline::{
    evaluate_probs, extract, labels_of, scale_pos_weight_from, to_json_pretty, train_to_dir, ExtractOptions,
};
use dosescreen::vectorize::{fit_word_tfidf, load_matrix, save_matrix, transform_tfidf, Category, VectorizerConfig};
use dosescreen::SparseMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skipped(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- 1. AUC

fn pairwise_auc(y: &[u8], s: &[f64]) -> Option<f64> {
    let (mut doubled, mut pairs) = (0u64, 0u64);
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] == 1 && y[j] == 0 {
                pairs += 1;
                doubled += if s[i] > s[j] {
                    2
                } else if s[i] == s[j] {
                    1
                } else {
                    0
                };
            }
        }
    }
    (pairs > 0).then(|| doubled as f64 / (2 * pairs) as f64)
}

fn auc_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = r.gen_range(1..=60);
        let levels = r.gen_range(1..=12);
        let y: Vec<u8> = (0..n).map(|_| r.gen_range(0..2)).collect();
        let s: Vec<f64> = (0..n).map(|_| r.gen_range(0..levels) as f64 / levels as f64).collect();
        if roc_auc(&y, &s) != pairwise_auc(&y, &s) {
            mismatches += 1;
        }
    }
    let t = start.elapsed();
    check(
        mismatches == 0 && t < Duration::from_secs(5),
        format!("{mismatches} mismatches in 200 instances, {t:.2?}"),
    )
}

// ------------------------------------------------------------- 2. TF-IDF

fn oracle_tfidf(texts: &[String], max_features: usize) -> Option<(Vec<String>, Vec<Vec<f64>>)> {
    let n = texts.len();
    let tokens: Vec<Vec<String>> = texts
        .iter()
        .map(|t| {
            t.to_lowercase()
                .split(' ')
                .filter(|w| w.len() >= 2)
                .map(str::to_owned)
                .collect()
        })
        .collect();
    let mut df: HashMap<&str, usize> = HashMap::new();
    let mut total: HashMap<&str, usize> = HashMap::new();
    for doc in &tokens {
        let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
        for w in &seen {
            *total.entry(w).or_default() += 1;
        }
        seen.sort();
        seen.dedup();
        for w in seen {
            *df.entry(w).or_default() += 1;
        }
    }
    let mut vocab: Vec<&str> = df
        .iter()
        .filter(|(_, &d)| d >= 2 && d as f64 <= 0.8 * n as f64)
        .map(|(&w, _)| w)
        .collect();
    if vocab.is_empty() {
        return None;
    }
    vocab.sort_by(|a, b| total[b].cmp(&total[a]).then(a.cmp(b)));
    vocab.truncate(max_features);
    vocab.sort();
    let idf: Vec<f64> = vocab
        .iter()
        .map(|w| ((1.0 + n as f64) / (1.0 + df[w] as f64)).ln() + 1.0)
        .collect();
    let rows = tokens
        .iter()
        .map(|doc| {
            let mut row: Vec<f64> = vocab
                .iter()
                .zip(&idf)
                .map(|(w, idf)| {
                    let tf = doc.iter().filter(|t| t == w).count() as f64;
                    if tf > 0.0 {
                        (1.0 + tf.ln()) * idf
                    } else {
                        0.0
                    }
                })
                .collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
            row
        })
        .collect();
    Some((vocab.into_iter().map(str::to_owned).collect(), rows))
}

fn tfidf_oracle() -> Outcome {
    let mut r = rng(2);
    let pool: Vec<String> = (0..30).map(|i| format!("t{}{}", (b'a' + (i % 26) as u8) as char, i)).collect();
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    for case in 0..20 {
        let n_docs = r.gen_range(2..=10);
        let n_terms = r.gen_range(1..=30);
        let texts: Vec<String> = (0..n_docs)
            .map(|_| {
                let len = r.gen_range(0..15);
                (0..len)
                    .map(|_| {
                        let w = &pool[r.gen_range(0..n_terms)];
                        if r.gen_bool(0.2) {
                            w.to_uppercase()
                        } else {
                            w.clone()
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        let max_features = if case % 2 == 0 { 2000 } else { r.gen_range(1..6) };
        let docs: Vec<ConcatenatedDoc> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| ConcatenatedDoc { id: i.to_string(), text: t.clone(), label: 0 })
            .collect();
        let cfg = VectorizerConfig { max_features, ..VectorizerConfig::word_default() };
        match (fit_word_tfidf(&docs, &cfg), oracle_tfidf(&texts, max_features)) {
            (Err(_), None) => {}
            (Ok(model), Some((vocab, rows))) => {
                if model.vocabulary != vocab {
                    problems.push(format!("case {case}: vocabulary differs"));
                    continue;
                }
                let got = transform_tfidf(&model, &docs).to_dense();
                for (g, o) in got.iter().zip(&rows) {
                    for (a, b) in g.iter().zip(o) {
                        worst = worst.max((*a as f64 - b).abs());
                    }
                }
            }
            _ => problems.push(format!("case {case}: fit and oracle disagree on emptiness")),
        }
    }
    check(
        problems.is_empty() && worst <= 1e-6,
        format!("max |Δ| = {worst:.2e} over 20 corpora{}", if problems.is_empty() { String::new() } else { format!("; {problems:?}") }),
    )
}

// -------------------------------------------------------------- 3. split

fn sigmoid(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

fn gain_term(g: f64, h: f64, l1: f64, l2: f64) -> f64 {
    let t = g.signum() * (g.abs() - l1).max(0.0);
    t * t / (h + l2)
}

fn exhaustive_root_gain(x: &[Vec<f32>], y: &[u8], w: &[f64], base: f64, l1: f64, l2: f64, mcs: usize) -> f64 {
    let p = sigmoid(base);
    let g: Vec<f64> = y.iter().zip(w).map(|(&t, &w)| w * (p - t as f64)).collect();
    let h: Vec<f64> = w.iter().map(|&w| w * p * (1.0 - p)).collect();
    let mut best = 0.0f64;
    for f in 0..x[0].len() {
        let mut vals: Vec<f32> = x.iter().map(|r| r[f]).collect();
        vals.sort_by(f32::total_cmp);
        vals.dedup();
        for &t in &vals[..vals.len() - 1] {
            let mut side = [(0.0, 0.0, 0usize); 2];
            for i in 0..y.len() {
                let s = &mut side[usize::from(x[i][f] > t)];
                s.0 += g[i];
                s.1 += h[i];
                s.2 += 1;
            }
            let [(gl, hl, nl), (gr, hr, nr)] = side;
            if nl < mcs || nr < mcs {
                continue;
            }
            let gain = 0.5 * (gain_term(gl, hl, l1, l2) + gain_term(gr, hr, l1, l2) - gain_term(gl + gr, hl + hr, l1, l2));
            best = best.max(gain);
        }
    }
    best
}

fn split_oracle() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let rows = r.gen_range(4..=16);
        let cols = r.gen_range(1..=4);
        let dense: Vec<f32> = (0..rows * cols)
            .map(|_| if r.gen_bool(0.4) { 0.0 } else { r.gen_range(-20i32..=20) as f32 / 4.0 })
            .collect();
        let mut y: Vec<u8> = (0..rows).map(|_| r.gen_range(0..2)).collect();
        y[0] = 0;
        y[1] = 1;
        let l1 = r.gen_range(0.0..0.5);
        let l2 = r.gen_range(0.001..3.0);
        let spw = r.gen_range(1.0..25.0);
        let mcs = r.gen_range(1..=3);
        let x = SparseMatrix::from_dense(rows, cols, &dense).unwrap();
        let cfg = TrainConfig {
            n_estimators: 1,
            learning_rate: 0.1,
            num_leaves: 2,
            max_depth: 1,
            min_child_samples: mcs,
            lambda_l1: l1,
            lambda_l2: l2,
            feature_fraction: 1.0,
            bagging_fraction: 1.0,
            bagging_freq: 0,
            scale_pos_weight: spw,
            early_stopping_patience: 0,
            max_bins: 255,
            seed: 0,
        };
        let model = train(&x, &y, &cfg, None).unwrap();
        let w: Vec<f64> = y.iter().map(|&v| if v == 1 { spw } else { 1.0 }).collect();
        let oracle = exhaustive_root_gain(&x.to_dense(), &y, &w, model.base_score, l1, l2, mcs);
        let got = match model.trees[0].nodes[0] {
            Node::Split { gain, .. } => gain,
            Node::Leaf { .. } => 0.0,
        };
        worst = worst.max((got - oracle).abs());
    }
    check(worst <= 1e-9, format!("max gain |Δ| = {worst:.2e} over 100 instances"))
}

// ----------------------------------------------------------- 4. gradient

fn gradient_check() -> Outcome {
    let mut r = rng(4);
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let y: u8 = r.gen_range(0..2);
        let w = r.gen_range(0.05..30.0);
        let s = r.gen_range(-8.0..8.0);
        let loss = |s: f64| weighted_log_loss(&[y], &[w], &[s]);
        let fd = (loss(s + eps) - loss(s - eps)) / (2.0 * eps);
        let (g, _) = gradients(&[y], &[w], &[s]);
        worst = worst.max((g[0] - fd).abs());
    }
    check(worst <= 1e-5, format!("max |g - fd| = {worst:.2e} over 1000 points"))
}

// -------------------------------------------------------- 5. determinism

fn vectorizer_opts() -> ExtractOptions {
    ExtractOptions {
        word: VectorizerConfig { max_features: 300, ..VectorizerConfig::word_default() },
        char: VectorizerConfig { max_features: 157, ..VectorizerConfig::char_default() },
        ..Default::default()
    }
}

fn desk_config(y: &[u8], seed: u64) -> TrainConfig {
    TrainConfig {
        scale_pos_weight: scale_pos_weight_from(y).unwrap(),
        seed,
        ..TrainConfig::desk()
    }
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn pipeline_once(dir: &Path, seed: u64) -> usize {
    let recs = generate_synthetic_corpus(2000, 0.046, 1.0, seed).unwrap();
    let corpus = dir.join("corpus.jsonl");
    fs::write(&corpus, write_corpus(&recs)).unwrap();
    let recs = load_corpus(&corpus).unwrap();
    let e = extract(&recs, &vectorizer_opts()).unwrap();
    let fmx = dir.join("features.fmx");
    save_matrix(&fmx, &e.matrix, &e.registry).unwrap();
    e.vectorizers.save(&dir.join("features.vectorizers.json")).unwrap();
    let (x, _) = load_matrix(&fmx).unwrap();
    let y = labels_of(&recs);
    let ids: Vec<String> = recs.iter().map(|r| r.id.clone()).collect();
    let plan = make_folds(&y, 5, seed).unwrap();
    let (cv, _) = train_to_dir(&x, &y, Some(&ids), &desk_config(&y, seed), &plan, &dir.join("run")).unwrap();
    let eval = evaluate_probs(&y, &cv.oof.probs, None);
    fs::write(dir.join("evaluation.json"), to_json_pretty(&eval)).unwrap();
    x.n_cols()
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let width = pipeline_once(a.path(), 7);
    pipeline_once(b.path(), 7);
    let t = start.elapsed();
    let fa = files_under(a.path());
    let fb = files_under(b.path());
    let rel = |d: &Path, f: &[PathBuf]| f.iter().map(|p| p.strip_prefix(d).unwrap().to_path_buf()).collect::<Vec<_>>();
    let same_names = rel(a.path(), &fa) == rel(b.path(), &fb);
    let differing: Vec<String> = fa
        .iter()
        .zip(&fb)
        .filter(|(p, q)| fs::read(p).unwrap() != fs::read(q).unwrap())
        .map(|(p, _)| p.strip_prefix(a.path()).unwrap().display().to_string())
        .collect();
    check(
        same_names && differing.is_empty() && width == 500 && t < Duration::from_secs(120),
        format!(
            "{} files, {} differ {differing:?}, width {width}, both runs {t:.1?}",
            fa.len(),
            differing.len()
        ),
    )
}

// ------------------------------------------------------- 6. planted signal

/// Runs with the default (tuned) training configuration.
fn planted_oof(strength: f64, seed: u64) -> f64 {
    let recs = generate_synthetic_corpus(5000, 0.046, strength, seed).unwrap();
    let e = extract(&recs, &vectorizer_opts()).unwrap();
    let y = labels_of(&recs);
    let plan = make_folds(&y, 5, seed).unwrap();
    let cfg = TrainConfig {
        scale_pos_weight: scale_pos_weight_from(&y).unwrap(),
        seed,
        ..TrainConfig::default()
    };
    cv_train(&e.matrix, &y, &cfg, &plan).unwrap().oof_auc
}

fn planted_signal() -> Outcome {
    let strong = planted_oof(1.0, 1);
    let null: Vec<f64> = (1..=5).map(|s| planted_oof(0.0, s)).collect();
    let ok = strong >= 0.95 && null.iter().all(|a| (0.45..=0.55).contains(a));
    let shown: Vec<String> = null.iter().map(|a| format!("{a:.4}")).collect();
    check(ok, format!("strength 1: {strong:.4}; strength 0, seeds 1-5: [{}]", shown.join(", ")))
}

// ------------------------------------------------------ 7. stratification

fn stratification() -> Outcome {
    let mut r = rng(7);
    let mut bad = Vec::new();
    for case in 0..50 {
        let k = r.gen_range(2..=10);
        let n = r.gen_range(4 * k..3000);
        let rate = r.gen_range(0.01..0.6);
        let mut y: Vec<u8> = (0..n).map(|_| u8::from(r.gen_bool(rate))).collect();
        for i in 0..k {
            y[i] = 1;
            y[n - 1 - i] = 0;
        }
        y.shuffle(&mut r);
        let plan = make_folds(&y, k, case).unwrap();
        let mut size = vec![0usize; k];
        let mut pos = vec![0usize; k];
        for (i, &f) in plan.fold_of.iter().enumerate() {
            size[f] += 1;
            pos[f] += y[i] as usize;
        }
        let spread = |v: &[usize]| v.iter().max().unwrap() - v.iter().min().unwrap();
        if spread(&size) > 1 || spread(&pos) > 1 {
            bad.push(case);
        }
    }
    check(bad.is_empty(), format!("{} of 50 label vectors unbalanced {bad:?}", bad.len()))
}

// ---------------------------------------------------------- 8. threshold

fn f1_at(y: &[u8], p: &[f64], t: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (&l, &q) in y.iter().zip(p) {
        match (l, q >= t) {
            (1, true) => tp += 1.0,
            (0, true) => fp += 1.0,
            (1, false) => fn_ += 1.0,
            _ => {}
        }
    }
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}

fn threshold_optimizer() -> Outcome {
    let mut r = rng(8);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let n = r.gen_range(10..300);
        let mut y: Vec<u8> = (0..n).map(|_| u8::from(r.gen_bool(0.2))).collect();
        y[0] = 1;
        let round = r.gen_bool(0.5);
        let p: Vec<f64> = y
            .iter()
            .map(|&l| {
                let v: f64 = (r.gen_range(0.0..1.0) + 0.3 * l as f64).min(1.0);
                if round {
                    (v * 50.0).round() / 50.0
                } else {
                    v
                }
            })
            .collect();
        let grid_best = (0..=10_000).map(|i| f1_at(&y, &p, i as f64 * 1e-4)).fold(0.0, f64::max);
        let (t, _) = optimize_threshold(&y, &p, ThresholdMetric::F1);
        worst = worst.min(f1_at(&y, &p, t) - grid_best);
    }
    check(worst >= -1e-9, format!("min (F1 at returned threshold - grid best) = {worst:.2e}"))
}

// -------------------------------------------------------------- 9. top-K

fn topk_identity() -> Outcome {
    let recs = generate_synthetic_corpus(800, 0.046, 0.8, 9).unwrap();
    let opts = ExtractOptions {
        word: VectorizerConfig { max_features: 60, ..VectorizerConfig::word_default() },
        char: VectorizerConfig { max_features: 40, ..VectorizerConfig::char_default() },
        ..Default::default()
    };
    let e = extract(&recs, &opts).unwrap();
    let y = labels_of(&recs);
    let plan = make_folds(&y, 5, 9).unwrap();
    let cfg = TrainConfig { n_estimators: 60, ..desk_config(&y, 9) };
    let width = e.matrix.n_cols();
    let baseline = cv_train(&e.matrix, &y, &cfg, &plan).unwrap();
    let out = topk_experiment(&e.matrix, &y, &[width], &cfg, &plan, &baseline).unwrap();
    let full = &out.runs[0];
    let bit_exact = full.oof.probs.iter().map(|p| p.to_bits()).eq(baseline.oof.probs.iter().map(|p| p.to_bits()))
        && full.per_fold_auc == baseline.per_fold_auc
        && full.models.iter().zip(&baseline.models).all(|(a, b)| a.to_json() == b.to_json());

    let mut gain = vec![0.0; width];
    for m in &baseline.models {
        gain.iter_mut().zip(&m.feature_gain).for_each(|(g, v)| *g += v / baseline.models.len() as f64);
    }
    let ranking = rank_features(&gain);
    let ks = [1, 5, 10, 25, 50, width];
    let sets: Vec<Vec<usize>> = ks.iter().map(|&k| select_topk(&ranking, k).unwrap()).collect();
    let nested = sets.windows(2).all(|w| w[0].iter().all(|c| w[1].binary_search(c).is_ok()))
        && sets.iter().zip(&ks).all(|(s, &k)| s.len() == k);
    check(bit_exact && nested, format!("k = width ({width}) bit-exact: {bit_exact}; nested over {ks:?}: {nested}"))
}

// ---------------------------------------------------- 11. format interop

/// FMX1 bytes written the way an external exporter would, from a dense block.
fn foreign_fmx(rows: &[Vec<f32>]) -> Vec<u8> {
    let n_cols = rows.first().map_or(0, Vec::len);
    let mut row_ptr = vec![0u64];
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for r in rows {
        for (j, &v) in r.iter().enumerate() {
            if v != 0.0 {
                cols.push(j as u32);
                vals.push(v);
            }
        }
        row_ptr.push(cols.len() as u64);
    }
    let mut b = b"FMX1".to_vec();
    b.extend(1u32.to_le_bytes());
    b.extend((rows.len() as u64).to_le_bytes());
    b.extend((n_cols as u64).to_le_bytes());
    b.extend((cols.len() as u64).to_le_bytes());
    row_ptr.iter().for_each(|p| b.extend(p.to_le_bytes()));
    cols.iter().for_each(|c| b.extend(c.to_le_bytes()));
    vals.iter().for_each(|v| b.extend(v.to_le_bytes()));
    b
}

fn format_interop() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let recs = generate_synthetic_corpus(120, 0.1, 1.0, 11).unwrap();
    let mut r = rng(11);
    let d = 24;
    let rows: Vec<Vec<f32>> = (0..recs.len())
        .map(|_| (0..d).map(|_| if r.gen_bool(0.1) { 0.0 } else { r.gen_range(-1.0f32..1.0) }).collect())
        .collect();
    let path = dir.path().join("emb.fmx");
    fs::write(&path, foreign_fmx(&rows)).unwrap();
    let entries: Vec<String> = (0..d)
        .map(|j| format!(r#"{{"column": {j}, "name": "emb_{j}", "category": "embedding"}}"#))
        .collect();
    fs::write(
        dir.path().join("emb.registry.json"),
        format!(r#"{{"schema_version": 1, "n_cols": {d}, "entries": [{}]}}"#, entries.join(", ")),
    )
    .unwrap();
    let opts = ExtractOptions { embeddings: Some(path), ..vectorizer_opts() };
    let e = match extract(&recs, &opts) {
        Ok(e) => e,
        Err(err) => return Outcome::Fail(format!("load failed: {err}")),
    };
    let cols = e.registry.columns_of(Category::Embedding);
    let block = e.matrix.select_columns(&cols).unwrap().to_dense();
    let values_match = block == rows;
    check(
        e.registry.width(Category::Embedding) == d && e.matrix.n_rows() == recs.len() && values_match,
        format!(
            "embedding width {} (expected {d}), rows {} (expected {}), values identical: {values_match}",
            e.registry.width(Category::Embedding),
            e.matrix.n_rows(),
            recs.len()
        ),
    )
}

// ------------------------------------------------- 12-15. CT-DEB features

struct Ctdeb {
    x: SparseMatrix,
    y: Vec<u8>,
    registry: dosescreen::FeatureRegistry,
    x_test: SparseMatrix,
    y_test: Vec<u8>,
}

fn load_ctdeb() -> Option<Result<Ctdeb, String>> {
    let dir = PathBuf::from(std::env::var_os("DOSESCREEN_CTDEB_DIR")?);
    let load = || -> Result<Ctdeb, String> {
        let (x, registry) = load_matrix(dir.join("train.fmx")).map_err(|e| e.to_string())?;
        let (x_test, _) = load_matrix(dir.join("test.fmx")).map_err(|e| e.to_string())?;
        let y = labels_of(&load_corpus(dir.join("train.jsonl")).map_err(|e| e.to_string())?);
        let y_test = labels_of(&load_corpus(dir.join("test.jsonl")).map_err(|e| e.to_string())?);
        if y.len() != x.n_rows() || y_test.len() != x_test.n_rows() {
            return Err("row counts differ between matrices and corpora".into());
        }
        Ok(Ctdeb { x, y, registry, x_test, y_test })
    };
    Some(load())
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

fn ctdeb_criteria(data: &Ctdeb) -> Vec<(&'static str, Outcome)> {
    let spw = scale_pos_weight_from(&data.y).unwrap();
    let cfg = TrainConfig { scale_pos_weight: spw, ..TrainConfig::default() };
    let plan = make_folds(&data.y, 5, 42).unwrap();
    let cv = cv_train(&data.x, &data.y, &cfg, &plan).unwrap();
    let c12 = check(
        within(cv.mean_auc, 0.8833, 0.015) && within(cv.oof_auc, 0.8794, 0.015),
        format!("spw {spw:.2}, mean fold AUC {:.4} (0.8833), OOF AUC {:.4} (0.8794)", cv.mean_auc, cv.oof_auc),
    );

    let probs = ensemble_predict(&cv.models, &data.x_test).unwrap();
    let test_auc = roc_auc(&data.y_test, &probs).unwrap_or(f64::NAN);
    let sweep = threshold_sweep(&data.y_test, &probs, &[0.3744, 0.20, 0.15]);
    let recalls: Vec<f64> = sweep.iter().map(|r| r.recall).collect();
    let c13 = check(
        within(test_auc, 0.8725, 0.015)
            && recalls.iter().zip([0.261, 0.490, 0.603]).all(|(&r, t)| within(r, t, 0.05)),
        format!("test AUC {test_auc:.4} (0.8725), recall at 0.3744/0.20/0.15 = {recalls:.3?}"),
    );

    let imp = aggregate_importance(&cv.models, &data.registry).unwrap();
    let pct = |c: Category| imp.categories.iter().find(|i| i.category == c).map_or(0.0, |i| i.percent);
    let ordered = pct(Category::Word) + pct(Category::Char) > pct(Category::Embedding)
        && pct(Category::Embedding) > pct(Category::Medical)
        && pct(Category::Medical) > pct(Category::TransformerScore);
    let drop = [Category::Embedding, Category::Medical, Category::TransformerScore];
    let abl = run_ablation(&data.x, &data.y, &data.registry, &drop, &cfg, &plan).unwrap();
    let delta = |c: Category| abl.iter().find(|r| r.dropped == Some(c)).map_or(f64::NAN, |r| r.delta_pct);
    let signs = delta(Category::Embedding) >= 1.5
        && delta(Category::Medical).abs() <= 0.7
        && delta(Category::TransformerScore).abs() <= 0.7;
    let c14 = check(
        ordered && signs,
        format!(
            "importance % word {:.1} char {:.1} emb {:.1} med {:.1} score {:.1}; Δ% emb {:.2} med {:.2} score {:.2}",
            pct(Category::Word),
            pct(Category::Char),
            pct(Category::Embedding),
            pct(Category::Medical),
            pct(Category::TransformerScore),
            delta(Category::Embedding),
            delta(Category::Medical),
            delta(Category::TransformerScore)
        ),
    );

    let topk = topk_experiment(&data.x, &data.y, &[10, 500, 1000], &cfg, &plan, &cv).unwrap();
    let auc_at = |k: usize| topk.rows.iter().find(|r| r.k == k).unwrap().mean_auc;
    let c15 = check(
        auc_at(500).max(auc_at(1000)) >= cv.mean_auc && auc_at(10) <= 0.98 * cv.mean_auc,
        format!(
            "baseline {:.4}, k=10 {:.4}, k=500 {:.4}, k=1000 {:.4}",
            cv.mean_auc,
            auc_at(10),
            auc_at(500),
            auc_at(1000)
        ),
    );
    vec![
        ("12 dataset fold and OOF AUC", c12),
        ("13 dataset test AUC and operating points", c13),
        ("14 dataset importance ordering and ablation signs", c14),
        ("15 dataset top-K curve shape", c15),
    ]
}

#[test]
fn acceptance() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 AUC equals pairwise oracle", auc_oracle()),
        ("2 TF-IDF equals brute-force oracle", tfidf_oracle()),
        ("3 root split equals exhaustive oracle", split_oracle()),
        ("4 gradient matches finite differences", gradient_check()),
        ("5 pipeline re-run is byte-identical", determinism()),
        ("6 planted signal end to end", planted_signal()),
        ("7 stratified folds balanced", stratification()),
        ("8 threshold optimizer vs 1e-4 grid", threshold_optimizer()),
        ("9 top-K identity and nesting", topk_identity()),
        (
            "10 chunk pooling arithmetic",
            Outcome::Skipped("belongs to the Python exporter, not part of this workspace".into()),
        ),
        ("11 external FMX1 block loads", format_interop()),
    ];
    match load_ctdeb() {
        None => {
            for name in [
                "12 dataset fold and OOF AUC",
                "13 dataset test AUC and operating points",
                "14 dataset importance ordering and ablation signs",
                "15 dataset top-K curve shape",
            ] {
                results.push((name, Outcome::Skipped("DOSESCREEN_CTDEB_DIR not set".into())));
            }
        }
        Some(Err(e)) => results.push(("12-15 dataset criteria", Outcome::Fail(format!("could not load data: {e}")))),
        Some(Ok(data)) => results.extend(ctdeb_criteria(&data)),
    }

    let mut out = std::io::stdout().lock();
    writeln!(out).unwrap();
    let mut failed = Vec::new();
    for (name, outcome) in &results {
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed.push(*name);
                ("FAIL", d)
            }
            Outcome::Skipped(d) => ("SKIPPED", d),
        };
        writeln!(out, "{tag:<7} {name}: {detail}").unwrap();
    }
    drop(out);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
