//! Trial-record ingest and document construction.
//!
//! Records arrive as JSONL, one object per line, with the nine narrative
//! fields under their camelCase registry names. [`concatenate_fields`] joins
//! the present, non-blank fields into the single document every text feature
//! extractor consumes.

mod synth;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use synth::{generate_synthetic_corpus, PhraseBank, SynthConfig};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: label must be 0 or 1, got {label}")]
    BadLabel { line: usize, label: i64 },
    #[error("corpus is empty")]
    Empty,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// One trial sample.
///
/// `None` means the field was absent (or null) in the source; `Some("")` is
/// kept as given so the two stay distinguishable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
pub struct NarrativeRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brief_summary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detailed_description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_pdf_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm_descriptions: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervention_descriptions: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervention_names: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditions: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditions_keywords: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location_details: Option<String>,
    pub label: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_conditions: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enrollment_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_encoded: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study_type_encoded: Option<u8>,
}

/// Names of the nine narrative fields, in concatenation order.
pub const TEXT_FIELDS: [&str; 9] = [
    "briefSummary",
    "detailedDescription",
    "protocolPdfText",
    "armDescriptions",
    "interventionDescriptions",
    "interventionNames",
    "conditions",
    "conditionsKeywords",
    "locationDetails",
];

impl NarrativeRecord {
    /// The nine narrative fields in concatenation order.
    pub fn text_fields(&self) -> [Option<&str>; 9] {
        [
            self.brief_summary.as_deref(),
            self.detailed_description.as_deref(),
            self.protocol_pdf_text.as_deref(),
            self.arm_descriptions.as_deref(),
            self.intervention_descriptions.as_deref(),
            self.intervention_names.as_deref(),
            self.conditions.as_deref(),
            self.conditions_keywords.as_deref(),
            self.location_details.as_deref(),
        ]
    }

    pub fn text_fields_mut(&mut self) -> [&mut Option<String>; 9] {
        [
            &mut self.brief_summary,
            &mut self.detailed_description,
            &mut self.protocol_pdf_text,
            &mut self.arm_descriptions,
            &mut self.intervention_descriptions,
            &mut self.intervention_names,
            &mut self.conditions,
            &mut self.conditions_keywords,
            &mut self.location_details,
        ]
    }
}

/// One document per sample: the joined narrative text plus its label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcatenatedDoc {
    pub id: String,
    pub text: String,
    pub label: u8,
}

// Wire shape used only while parsing, so the label can be range-checked with
// the line number before it becomes a `u8`.
#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawRecord {
    id: String,
    #[serde(default)]
    brief_summary: Option<String>,
    #[serde(default)]
    detailed_description: Option<String>,
    #[serde(default)]
    protocol_pdf_text: Option<String>,
    #[serde(default)]
    arm_descriptions: Option<String>,
    #[serde(default)]
    intervention_descriptions: Option<String>,
    #[serde(default)]
    intervention_names: Option<String>,
    #[serde(default)]
    conditions: Option<String>,
    #[serde(default)]
    conditions_keywords: Option<String>,
    #[serde(default)]
    location_details: Option<String>,
    label: i64,
    #[serde(default)]
    num_trials: Option<u64>,
    #[serde(default)]
    num_conditions: Option<u64>,
    #[serde(default)]
    enrollment_count: Option<u64>,
    #[serde(default)]
    phase_encoded: Option<u8>,
    #[serde(default)]
    study_type_encoded: Option<u8>,
}

/// Parse one JSONL line (1-based `line` is only used for error messages).
pub fn parse_record(text: &str, line: usize) -> Result<NarrativeRecord, CorpusError> {
    let raw: RawRecord = serde_json::from_str(text).map_err(|e| CorpusError::Parse {
        line,
        message: e.to_string(),
    })?;
    if raw.label != 0 && raw.label != 1 {
        return Err(CorpusError::BadLabel {
            line,
            label: raw.label,
        });
    }
    if raw.id.is_empty() {
        return Err(CorpusError::Parse {
            line,
            message: "id must be non-empty".into(),
        });
    }
    if let Some(p) = raw.phase_encoded {
        if p > 4 {
            return Err(CorpusError::Parse {
                line,
                message: format!("phaseEncoded must be in 0..=4, got {p}"),
            });
        }
    }
    if let Some(s) = raw.study_type_encoded {
        if s > 2 {
            return Err(CorpusError::Parse {
                line,
                message: format!("studyTypeEncoded must be in 0..=2, got {s}"),
            });
        }
    }
    Ok(NarrativeRecord {
        id: raw.id,
        brief_summary: raw.brief_summary,
        detailed_description: raw.detailed_description,
        protocol_pdf_text: raw.protocol_pdf_text,
        arm_descriptions: raw.arm_descriptions,
        intervention_descriptions: raw.intervention_descriptions,
        intervention_names: raw.intervention_names,
        conditions: raw.conditions,
        conditions_keywords: raw.conditions_keywords,
        location_details: raw.location_details,
        label: raw.label as u8,
        num_trials: raw.num_trials,
        num_conditions: raw.num_conditions,
        enrollment_count: raw.enrollment_count,
        phase_encoded: raw.phase_encoded,
        study_type_encoded: raw.study_type_encoded,
    })
}

/// Parse JSONL records from any reader. Blank lines are skipped.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<NarrativeRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record(&line, line_no)?;
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: record.id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Load a JSONL corpus; records come back in file order.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<NarrativeRecord>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_corpus(BufReader::new(file))
}

/// Serialize records as JSONL (one object per line, trailing newline).
pub fn write_corpus(records: &[NarrativeRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Join the present, non-blank narrative fields with single spaces.
pub fn concatenate_fields(record: &NarrativeRecord) -> ConcatenatedDoc {
    let mut text = String::new();
    for field in record.text_fields().into_iter().flatten() {
        if field.trim().is_empty() {
            continue;
        }
        if !text.is_empty() {
            text.push(' ');
        }
        text.push_str(field);
    }
    ConcatenatedDoc {
        id: record.id.clone(),
        text,
        label: record.label,
    }
}

pub fn concatenate_all(records: &[NarrativeRecord]) -> Vec<ConcatenatedDoc> {
    use rayon::prelude::*;
    records.par_iter().map(concatenate_fields).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthQuantiles {
    pub min: usize,
    pub p25: usize,
    pub median: usize,
    pub p75: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    pub positive_rate: f64,
    pub n_empty: usize,
    pub n_at_least_200_chars: usize,
    /// Lengths are counted in Unicode scalar values.
    pub length: LengthQuantiles,
}

/// Nearest-rank quantile of an ascending slice: the value at rank ceil(q·n).
pub fn nearest_rank(sorted: &[usize], q: f64) -> usize {
    assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub fn corpus_stats(docs: &[ConcatenatedDoc]) -> Result<CorpusStats, CorpusError> {
    if docs.is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut lengths: Vec<usize> = docs.iter().map(|d| d.text.chars().count()).collect();
    lengths.sort_unstable();
    let n_positive = docs.iter().filter(|d| d.label == 1).count();
    Ok(CorpusStats {
        n_docs: docs.len(),
        n_positive,
        n_negative: docs.len() - n_positive,
        positive_rate: n_positive as f64 / docs.len() as f64,
        n_empty: lengths.iter().filter(|&&l| l == 0).count(),
        n_at_least_200_chars: lengths.iter().filter(|&&l| l >= 200).count(),
        length: LengthQuantiles {
            min: lengths[0],
            p25: nearest_rank(&lengths, 0.25),
            median: nearest_rank(&lengths, 0.5),
            p75: nearest_rank(&lengths, 0.75),
            max: lengths[lengths.len() - 1],
        },
    })
}
