//! Word and character TF-IDF.
//!
//! Weights are `(1 + ln tf) · idf` with the smoothed
//! `idf = ln((1 + N) / (1 + df)) + 1`, then each row is scaled to unit L2
//! norm. Vocabulary columns are assigned in lexicographic term order.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SparseMatrix, VectorizeError};
use crate::corpus::ConcatenatedDoc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorizerKind {
    WordTfidf,
    CharTfidf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorizerConfig {
    pub ngram_lo: usize,
    pub ngram_hi: usize,
    pub max_features: usize,
    /// Absolute document-frequency floor.
    pub min_df: usize,
    /// Terms with `df > max_df_fraction · N` are dropped.
    pub max_df_fraction: f64,
    pub sublinear_tf: bool,
    pub l2_normalize: bool,
    /// Word tokens shorter than this are discarded (ignored for char n-grams).
    #[serde(default = "default_min_token_len")]
    pub min_token_len: usize,
}

fn default_min_token_len() -> usize {
    2
}

impl VectorizerConfig {
    pub fn word_default() -> Self {
        VectorizerConfig {
            ngram_lo: 1,
            ngram_hi: 1,
            max_features: 2000,
            min_df: 2,
            max_df_fraction: 0.8,
            sublinear_tf: true,
            l2_normalize: true,
            min_token_len: 2,
        }
    }

    pub fn char_default() -> Self {
        VectorizerConfig {
            ngram_lo: 3,
            ngram_hi: 7,
            max_features: 1000,
            min_df: 2,
            max_df_fraction: 1.0,
            sublinear_tf: true,
            l2_normalize: true,
            min_token_len: 1,
        }
    }

    fn validate(&self) -> Result<(), VectorizeError> {
        if self.ngram_lo == 0 || self.ngram_lo > self.ngram_hi {
            return Err(VectorizeError::Config(format!(
                "invalid n-gram range {}..={}",
                self.ngram_lo, self.ngram_hi
            )));
        }
        if self.max_features == 0 {
            return Err(VectorizeError::Config("max_features must be positive".into()));
        }
        if !(self.max_df_fraction > 0.0 && self.max_df_fraction <= 1.0) {
            return Err(VectorizeError::Config(format!(
                "max_df_fraction must be in (0, 1], got {}",
                self.max_df_fraction
            )));
        }
        Ok(())
    }
}

/// A fitted vectorizer. Immutable after fitting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorizerModel {
    pub kind: VectorizerKind,
    pub config: VectorizerConfig,
    /// Terms in column order (lexicographic).
    pub vocabulary: Vec<String>,
    pub idf: Vec<f64>,
    /// Document frequency of each term in the fitting corpus.
    pub df: Vec<usize>,
    pub n_docs: usize,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl PartialEq for VectorizerModel {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.config == other.config
            && self.vocabulary == other.vocabulary
            && self.idf == other.idf
            && self.df == other.df
            && self.n_docs == other.n_docs
    }
}

impl VectorizerModel {
    fn rebuild_index(&mut self) {
        self.index = self
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        if self.index.is_empty() && !self.vocabulary.is_empty() {
            return self.vocabulary.iter().position(|t| t == term);
        }
        self.index.get(term).map(|&c| c as usize)
    }

    /// Restore the lookup index after deserialization.
    pub fn ready(mut self) -> Self {
        self.rebuild_index();
        self
    }

    /// Registry names for the columns, e.g. `word:dose` or `char:dos`.
    pub fn feature_names(&self) -> Vec<String> {
        let prefix = match self.kind {
            VectorizerKind::WordTfidf => "word",
            VectorizerKind::CharTfidf => "char",
        };
        self.vocabulary
            .iter()
            .map(|t| format!("{prefix}:{t}"))
            .collect()
    }
}

/// Lowercase alphanumeric word tokens.
pub fn word_tokens(text: &str, min_len: usize) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && t.chars().count() >= min_len)
        .map(str::to_owned)
        .collect()
}

fn count_terms(text: &str, kind: VectorizerKind, config: &VectorizerConfig) -> HashMap<String, u32> {
    let mut counts: HashMap<String, u32> = HashMap::new();
    match kind {
        VectorizerKind::WordTfidf => {
            let tokens = word_tokens(text, config.min_token_len);
            for n in config.ngram_lo..=config.ngram_hi {
                for w in tokens.windows(n) {
                    *counts.entry(w.join(" ")).or_default() += 1;
                }
            }
        }
        VectorizerKind::CharTfidf => {
            let lower = text.to_lowercase();
            let mut bounds: Vec<usize> = lower.char_indices().map(|(i, _)| i).collect();
            bounds.push(lower.len());
            let n_chars = bounds.len() - 1;
            let mut local: HashMap<&str, u32> = HashMap::new();
            for n in config.ngram_lo..=config.ngram_hi {
                if n > n_chars {
                    break;
                }
                for start in 0..=(n_chars - n) {
                    *local.entry(&lower[bounds[start]..bounds[start + n]]).or_default() += 1;
                }
            }
            counts = local.into_iter().map(|(k, v)| (k.to_owned(), v)).collect();
        }
    }
    counts
}

fn fit(
    docs: &[ConcatenatedDoc],
    kind: VectorizerKind,
    config: &VectorizerConfig,
) -> Result<VectorizerModel, VectorizeError> {
    config.validate()?;
    if docs.is_empty() {
        return Err(VectorizeError::EmptyCorpus);
    }
    let n = docs.len();
    let per_doc: Vec<HashMap<String, u32>> = docs
        .par_iter()
        .map(|d| count_terms(&d.text, kind, config))
        .collect();

    // term -> (df, total count)
    let mut stats: HashMap<String, (usize, u64)> = HashMap::new();
    for counts in per_doc {
        for (term, tf) in counts {
            let e = stats.entry(term).or_default();
            e.0 += 1;
            e.1 += tf as u64;
        }
    }
    let max_df = config.max_df_fraction * n as f64;
    let mut kept: Vec<(String, usize, u64)> = stats
        .into_iter()
        .filter(|(_, (df, _))| *df >= config.min_df && (*df as f64) <= max_df)
        .map(|(t, (df, total))| (t, df, total))
        .collect();
    if kept.is_empty() {
        return Err(VectorizeError::EmptyVocabulary);
    }
    if kept.len() > config.max_features {
        kept.sort_unstable_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
        kept.truncate(config.max_features);
    }
    kept.sort_unstable_by(|a, b| a.0.cmp(&b.0));

    let idf = kept
        .iter()
        .map(|(_, df, _)| ((1.0 + n as f64) / (1.0 + *df as f64)).ln() + 1.0)
        .collect();
    let df = kept.iter().map(|(_, df, _)| *df).collect();
    let vocabulary = kept.into_iter().map(|(t, _, _)| t).collect();
    Ok(VectorizerModel {
        kind,
        config: config.clone(),
        vocabulary,
        idf,
        df,
        n_docs: n,
        index: HashMap::new(),
    }
    .ready())
}

/// Fit word unigram TF-IDF. Needs at least two documents.
pub fn fit_word_tfidf(
    docs: &[ConcatenatedDoc],
    config: &VectorizerConfig,
) -> Result<VectorizerModel, VectorizeError> {
    if docs.len() < 2 {
        return Err(VectorizeError::EmptyCorpus);
    }
    fit(docs, VectorizerKind::WordTfidf, config)
}

/// Fit character n-gram TF-IDF over the lowercased raw text.
pub fn fit_char_tfidf(
    docs: &[ConcatenatedDoc],
    config: &VectorizerConfig,
) -> Result<VectorizerModel, VectorizeError> {
    if docs.len() < 2 {
        return Err(VectorizeError::EmptyCorpus);
    }
    fit(docs, VectorizerKind::CharTfidf, config)
}

fn transform_one(model: &VectorizerModel, text: &str) -> Vec<(u32, f32)> {
    let counts = count_terms(text, model.kind, &model.config);
    let mut row: Vec<(u32, f64)> = counts
        .iter()
        .filter_map(|(term, &tf)| {
            let col = model.column(term)?;
            let tf = tf as f64;
            let w = if model.config.sublinear_tf { 1.0 + tf.ln() } else { tf };
            Some((col as u32, w * model.idf[col]))
        })
        .collect();
    row.sort_unstable_by_key(|&(c, _)| c);
    if model.config.l2_normalize {
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut row {
                e.1 /= norm;
            }
        }
    }
    row.into_iter().map(|(c, v)| (c, v as f32)).collect()
}

/// One row per document; terms outside the vocabulary are ignored.
pub fn transform_tfidf(model: &VectorizerModel, docs: &[ConcatenatedDoc]) -> SparseMatrix {
    let rows: Vec<Vec<(u32, f32)>> = docs
        .par_iter()
        .map(|d| transform_one(model, &d.text))
        .collect();
    SparseMatrix::from_rows(rows, model.len()).expect("transform rows are well formed")
}
