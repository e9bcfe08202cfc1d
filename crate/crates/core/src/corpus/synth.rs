//! Deterministic synthetic corpora for desk-scale runs.
//!
//! Text is assembled from the versioned phrase bank in
//! `resources/synth_phrases.json`. Positives carry a dosing-deviation phrase
//! with probability `signal_strength`; every other record carries a compliant
//! phrase drawn the same way, so at strength 0 the label is independent of
//! the text.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, NarrativeRecord};
use crate::util::seeded_rng;

const BANK_JSON: &str = include_str!("../../resources/synth_phrases.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhraseBank {
    pub version: u32,
    pub drugs: Vec<String>,
    pub conditions: Vec<String>,
    pub units: Vec<String>,
    pub routes: Vec<String>,
    pub frequencies: Vec<String>,
    pub cities: Vec<String>,
    pub summary_templates: Vec<String>,
    pub filler_sentences: Vec<String>,
    pub arm_templates: Vec<String>,
    pub intervention_templates: Vec<String>,
    pub location_templates: Vec<String>,
    pub keyword_templates: Vec<String>,
    pub compliant_phrases: Vec<String>,
    pub deviation_phrases: Vec<String>,
}

impl PhraseBank {
    /// The bank shipped with the crate.
    pub fn builtin() -> Self {
        serde_json::from_str(BANK_JSON).expect("bundled phrase bank is valid JSON")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub positive_rate: f64,
    pub signal_strength: f64,
    pub seed: u64,
}

struct Slots<'a> {
    drug: &'a str,
    condition: &'a str,
    unit: &'a str,
    route: &'a str,
    freq: &'a str,
    city: &'a str,
    dose: u32,
}

fn fill<R: Rng>(template: &str, slots: &Slots<'_>, rng: &mut R) -> String {
    let mut out = String::with_capacity(template.len() + 32);
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let end = start + rest[start..].find('}').expect("unterminated slot");
        match &rest[start + 1..end] {
            "drug" => out.push_str(slots.drug),
            "condition" => out.push_str(slots.condition),
            "unit" => out.push_str(slots.unit),
            "route" => out.push_str(slots.route),
            "freq" => out.push_str(slots.freq),
            "city" => out.push_str(slots.city),
            "dose" => out.push_str(&slots.dose.to_string()),
            "dose2" => out.push_str(&(slots.dose * rng.gen_range(2..=10)).to_string()),
            "n" => out.push_str(&rng.gen_range(2..=52).to_string()),
            other => panic!("unknown slot {{{other}}}"),
        }
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    out
}

fn pick<'a, R: Rng>(items: &'a [String], rng: &mut R) -> &'a str {
    items.choose(rng).expect("phrase list is non-empty")
}

fn sentences<R: Rng>(bank: &PhraseBank, slots: &Slots<'_>, count: usize, rng: &mut R) -> String {
    (0..count)
        .map(|_| {
            let t = pick(&bank.filler_sentences, rng);
            fill(t, slots, rng)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn make_record<R: Rng>(
    bank: &PhraseBank,
    index: usize,
    label: u8,
    deviant: bool,
    rng: &mut R,
) -> NarrativeRecord {
    let slots = Slots {
        drug: pick(&bank.drugs, rng),
        condition: pick(&bank.conditions, rng),
        unit: pick(&bank.units, rng),
        route: pick(&bank.routes, rng),
        freq: pick(&bank.frequencies, rng),
        city: pick(&bank.cities, rng),
        dose: [5, 10, 20, 25, 40, 50, 75, 100, 150, 200, 250, 400, 500][rng.gen_range(0..13)],
    };
    let maybe = |p: f64, rng: &mut R| rng.gen_bool(p);

    let brief = fill(pick(&bank.summary_templates, rng), &slots, rng);
    let detailed = if maybe(0.62, rng) {
        let k = rng.gen_range(3..=8);
        Some(sentences(bank, &slots, k, rng))
    } else {
        None
    };
    let protocol = if maybe(0.42, rng) {
        let k = rng.gen_range(6..=15);
        Some(sentences(bank, &slots, k, rng))
    } else {
        None
    };
    let arms = if maybe(0.99, rng) {
        let k = rng.gen_range(1..=2);
        Some(
            (0..k)
                .map(|_| fill(pick(&bank.arm_templates, rng), &slots, rng))
                .collect::<Vec<_>>()
                .join(" "),
        )
    } else {
        None
    };
    let signal = if deviant {
        pick(&bank.deviation_phrases, rng)
    } else {
        pick(&bank.compliant_phrases, rng)
    };
    let intervention = format!(
        "{} {}",
        fill(pick(&bank.intervention_templates, rng), &slots, rng),
        fill(signal, &slots, rng)
    );
    let keywords = if maybe(0.64, rng) {
        Some(fill(pick(&bank.keyword_templates, rng), &slots, rng))
    } else {
        None
    };
    let locations = if maybe(0.94, rng) {
        let k = rng.gen_range(1..=3);
        Some(
            (0..k)
                .map(|_| {
                    let city = pick(&bank.cities, rng);
                    let s = Slots { city, ..slots };
                    fill(pick(&bank.location_templates, rng), &s, rng)
                })
                .collect::<Vec<_>>()
                .join("; "),
        )
    } else {
        None
    };

    NarrativeRecord {
        id: format!("syn-{index:06}"),
        brief_summary: Some(brief),
        detailed_description: detailed,
        protocol_pdf_text: protocol,
        arm_descriptions: arms,
        intervention_descriptions: Some(intervention),
        intervention_names: Some(format!("Drug: {}", slots.drug)),
        conditions: Some(slots.condition.to_string()),
        conditions_keywords: keywords,
        location_details: locations,
        label,
        num_trials: Some(1),
        num_conditions: Some(rng.gen_range(1..=4)),
        enrollment_count: Some(rng.gen_range(20..=2000)),
        phase_encoded: Some(rng.gen_range(1..=4)),
        study_type_encoded: Some(rng.gen_range(1..=2)),
    }
}

/// Generate `n` records with exactly `floor(n · positive_rate)` positives.
///
/// Output depends only on the arguments and the bundled phrase bank.
pub fn generate_synthetic_corpus(
    n: usize,
    positive_rate: f64,
    signal_strength: f64,
    seed: u64,
) -> Result<Vec<NarrativeRecord>, CorpusError> {
    generate_with_bank(&PhraseBank::builtin(), n, positive_rate, signal_strength, seed)
}

pub(crate) fn generate_with_bank(
    bank: &PhraseBank,
    n: usize,
    positive_rate: f64,
    signal_strength: f64,
    seed: u64,
) -> Result<Vec<NarrativeRecord>, CorpusError> {
    if n < 10 {
        return Err(CorpusError::InvalidArgument(format!("n must be >= 10, got {n}")));
    }
    if !(positive_rate > 0.0 && positive_rate < 1.0) {
        return Err(CorpusError::InvalidArgument(format!(
            "positive_rate must be in (0, 1), got {positive_rate}"
        )));
    }
    if !(0.0..=1.0).contains(&signal_strength) {
        return Err(CorpusError::InvalidArgument(format!(
            "signal_strength must be in [0, 1], got {signal_strength}"
        )));
    }
    let n_pos = (n as f64 * positive_rate).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(seed, 0));
    let mut labels = vec![0u8; n];
    for &i in &order[..n_pos] {
        labels[i] = 1;
    }
    Ok((0..n)
        .map(|i| {
            let mut rng = seeded_rng(seed, i as u64 + 1);
            // Draw the signal coin for every record so the stream layout does
            // not depend on the label.
            let coin = rng.gen_bool(signal_strength);
            let deviant = labels[i] == 1 && coin;
            make_record(bank, i, labels[i], deviant, &mut rng)
        })
        .collect())
}
