//! The 43 handcrafted medical-pattern features.
//!
//! Layout, in column order: 5 dose-unit flags, 2 dose-calculation flags,
//! 6 route flags, 5 frequency flags, 6 dose-concept flags, 5 special-population
//! flags, 1 error-keyword flag, 4 counts, 4 text statistics and 5 study-metadata
//! passthroughs. Flag and count expressions live in
//! `resources/pattern_bank.json`, which is the single source of truth; the
//! statistics are defined in code and listed in the bank by name only.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{ConcatenatedDoc, NarrativeRecord};

const BANK_JSON: &str = include_str!("../resources/pattern_bank.json");

pub const N_FEATURES: usize = 43;
pub const N_FLAGS: usize = 30;
pub const N_COUNTS: usize = 4;
pub const N_STATS: usize = 4;
pub const N_METADATA: usize = 5;

/// Feature names in column order.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "has_mg_dose",
    "has_ml_dose",
    "has_mcg_dose",
    "has_iu_dose",
    "has_unit_dose",
    "has_weight_based",
    "has_bsa_based",
    "has_iv",
    "has_oral",
    "has_sc",
    "has_im",
    "has_topical",
    "has_inhaled",
    "has_qd",
    "has_bid",
    "has_tid",
    "has_qid",
    "has_prn",
    "has_max_dose",
    "has_titration",
    "has_loading_dose",
    "has_maintenance",
    "has_adjustment",
    "has_contraindication",
    "has_pediatric",
    "has_geriatric",
    "has_pregnancy",
    "has_renal",
    "has_hepatic",
    "has_error_keyword",
    "dose_count",
    "percentage_count",
    "decimal_count",
    "range_count",
    "text_length",
    "word_count",
    "sentence_count",
    "avg_word_length",
    "num_trials",
    "num_conditions",
    "enrollment_count",
    "phase_encoded",
    "study_type_encoded",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Flag,
    Count,
    Stat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternEntry {
    pub name: String,
    pub kind: PatternKind,
    pub pattern: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PatternBankFile {
    version: u32,
    features: Vec<PatternEntry>,
}

static BANK: LazyLock<PatternBankFile> =
    LazyLock::new(|| serde_json::from_str(BANK_JSON).expect("bundled pattern bank is valid"));

static COMPILED: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    BANK.features
        .iter()
        .filter(|e| e.kind != PatternKind::Stat)
        .map(|e| Regex::new(&e.pattern).unwrap_or_else(|err| panic!("{}: {err}", e.name)))
        .collect()
});

/// The pattern bank: one entry per non-metadata feature (flags, counts and
/// statistic definitions), in column order.
pub fn pattern_bank() -> Vec<(String, String)> {
    BANK.features
        .iter()
        .map(|e| (e.name.clone(), e.pattern.clone()))
        .collect()
}

pub fn pattern_bank_entries() -> &'static [PatternEntry] {
    &BANK.features
}

pub fn pattern_bank_version() -> u32 {
    BANK.version
}

/// The raw bank file, for sharing bit-exactly with other implementations.
pub fn pattern_bank_json() -> &'static str {
    BANK_JSON
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedPatternVector {
    pub values: [f64; N_FEATURES],
}

impl MedPatternVector {
    pub fn names() -> &'static [&'static str; N_FEATURES] {
        &FEATURE_NAMES
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values[i])
    }

    pub fn flags(&self) -> &[f64] {
        &self.values[..N_FLAGS]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextStats {
    pub text_length: usize,
    pub word_count: usize,
    pub sentence_count: usize,
    pub avg_word_length: f64,
}

/// Character, word and sentence statistics on the raw text.
///
/// Words are maximal runs of alphanumeric characters. A sentence terminator
/// is a run of `.`, `!` or `?` followed by whitespace or the end of the text.
pub fn text_stats(text: &str) -> TextStats {
    let mut text_length = 0;
    let mut word_count = 0;
    let mut sentence_count = 0;
    let mut alphabetic = 0usize;
    let mut in_word = false;
    let mut in_terminator = false;
    for c in text.chars() {
        text_length += 1;
        if c.is_alphabetic() {
            alphabetic += 1;
        }
        if c.is_alphanumeric() {
            if !in_word {
                word_count += 1;
            }
            in_word = true;
        } else {
            in_word = false;
        }
        if matches!(c, '.' | '!' | '?') {
            in_terminator = true;
        } else {
            if in_terminator && c.is_whitespace() {
                sentence_count += 1;
            }
            in_terminator = false;
        }
    }
    if in_terminator {
        sentence_count += 1;
    }
    TextStats {
        text_length,
        word_count,
        sentence_count,
        avg_word_length: if word_count == 0 {
            0.0
        } else {
            alphabetic as f64 / word_count as f64
        },
    }
}

/// Compute the 43 features for one document. Study metadata comes from the
/// record and defaults to zero when absent.
pub fn extract_medical_patterns(doc: &ConcatenatedDoc, record: &NarrativeRecord) -> MedPatternVector {
    let mut values = [0.0; N_FEATURES];
    let text = doc.text.as_str();
    let regexes = &*COMPILED;
    for (i, re) in regexes.iter().take(N_FLAGS).enumerate() {
        values[i] = if re.is_match(text) { 1.0 } else { 0.0 };
    }
    for (i, re) in regexes.iter().enumerate().skip(N_FLAGS) {
        values[i] = re.find_iter(text).count() as f64;
    }
    let stats = text_stats(text);
    let base = N_FLAGS + N_COUNTS;
    values[base] = stats.text_length as f64;
    values[base + 1] = stats.word_count as f64;
    values[base + 2] = stats.sentence_count as f64;
    values[base + 3] = stats.avg_word_length;

    let meta = base + N_STATS;
    values[meta] = record.num_trials.unwrap_or(0) as f64;
    values[meta + 1] = record.num_conditions.unwrap_or(0) as f64;
    values[meta + 2] = record.enrollment_count.unwrap_or(0) as f64;
    values[meta + 3] = record.phase_encoded.unwrap_or(0) as f64;
    values[meta + 4] = record.study_type_encoded.unwrap_or(0) as f64;
    MedPatternVector { values }
}

/// Row-major dense block, one row per document.
pub fn extract_all(docs: &[ConcatenatedDoc], records: &[NarrativeRecord]) -> Vec<MedPatternVector> {
    use rayon::prelude::*;
    assert_eq!(docs.len(), records.len());
    docs.par_iter()
        .zip(records.par_iter())
        .map(|(d, r)| extract_medical_patterns(d, r))
        .collect()
}
