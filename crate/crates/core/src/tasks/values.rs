//! Per-sentence quantities and rule-based labels.

use serde::{Deserialize, Serialize};

use crate::datamodel::{Resources, SentenceRecord, Tense};

/// Options affecting raw task values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueOptions {
    /// Divide DP, OOV and DCC counts by sentence length.
    pub length_normalize_counts: bool,
}

const CONTENT_PREFIXES: [&str; 4] = ["NN", "VB", "JJ", "RB"];

pub fn is_content_tag(tag: &str) -> bool {
    CONTENT_PREFIXES.iter().any(|p| tag.starts_with(p))
}

/// Lower-cases and strips leading/trailing punctuation.
pub fn normalize_token(token: &str) -> String {
    token
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

/// Mean characters per token divided by the token count.
pub fn word_len(r: &SentenceRecord) -> f64 {
    let n = r.len() as f64;
    let chars: usize = r.tokens.iter().map(|t| t.chars().count()).sum();
    chars as f64 / n / n
}

pub fn lexical_density(pos: &[String]) -> f64 {
    pos.iter().filter(|t| is_content_tag(t)).count() as f64 / pos.len() as f64
}

pub fn polysemy(senses: &[u32]) -> f64 {
    senses.iter().map(|&s| s as f64).sum()
}

/// Tokens missing from the common-word list. Pure punctuation is ignored.
pub fn oov_count(tokens: &[String], common: &std::collections::HashSet<String>) -> f64 {
    tokens
        .iter()
        .map(|t| normalize_token(t))
        .filter(|t| !t.is_empty() && !common.contains(t))
        .count() as f64
}

/// Connector occurrences, preferring the longest match at each position.
/// `connectors` must be sorted longest first.
pub fn connector_count(tokens: &[String], connectors: &[Vec<String>]) -> f64 {
    let words: Vec<String> = tokens.iter().map(|t| normalize_token(t)).collect();
    let mut i = 0;
    let mut count = 0;
    while i < words.len() {
        let hit = connectors
            .iter()
            .find(|c| i + c.len() <= words.len() && words[i..i + c.len()] == c[..]);
        match hit {
            Some(c) => {
                count += 1;
                i += c.len();
            }
            None => i += 1,
        }
    }
    count as f64
}

/// Scalar value for a binned task, or `None` when its inputs are missing.
pub fn raw_value(
    task: super::TaskName,
    r: &SentenceRecord,
    resources: &Resources,
    opts: ValueOptions,
) -> Option<f64> {
    use super::TaskName::*;
    let n = r.len() as f64;
    let per_len = |v: f64| {
        if opts.length_normalize_counts {
            v / n
        } else {
            v
        }
    };
    match task {
        WordLen => Some(word_len(r)),
        LD => r.pos.as_deref().map(lexical_density),
        DP => r.sense_counts.as_deref().map(|s| per_len(polysemy(s))),
        OOV => resources
            .common_words
            .as_ref()
            .map(|c| per_len(oov_count(&r.tokens, c))),
        CNC => match (r.annotations.complex_nominals, r.annotations.clauses) {
            (Some(cn), Some(cl)) if cl > 0 => Some(cn as f64 / cl as f64),
            _ => None,
        },
        SenLen => Some(n),
        DCC => resources
            .connectors
            .as_ref()
            .map(|c| per_len(connector_count(&r.tokens, c))),
        POS | BShift | Tense | SubjNum | ObjNum => None,
    }
}

/// Annotated tense, else the POS heuristic.
pub fn tense_label(r: &SentenceRecord) -> Option<Tense> {
    if let Some(t) = r.annotations.tense {
        return Some(t);
    }
    let pos = r.pos.as_ref()?;
    let modal_at = pos.iter().zip(&r.tokens).position(|(tag, tok)| {
        tag == "MD" && matches!(tok.to_lowercase().as_str(), "will" | "shall")
    });
    if let Some(m) = modal_at {
        if pos[m + 1..].iter().any(|t| t == "VB") {
            return Some(Tense::Future);
        }
    }
    if pos
        .iter()
        .any(|t| matches!(t.as_str(), "VBP" | "VBZ" | "VBG"))
    {
        return Some(Tense::Present);
    }
    if pos.iter().any(|t| matches!(t.as_str(), "VBD" | "VBN")) {
        return Some(Tense::Past);
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NumberTarget {
    Subject,
    Object,
}

/// `Some(false)` singular, `Some(true)` plural.
pub fn number_label(r: &SentenceRecord, target: NumberTarget) -> Option<bool> {
    let idx = match target {
        NumberTarget::Subject => r.annotations.subject_index,
        NumberTarget::Object => r.annotations.object_index,
    }?;
    match r.pos.as_ref()?.get(idx)?.as_str() {
        "NN" | "NNP" => Some(false),
        "NNS" | "NNPS" => Some(true),
        _ => None,
    }
}
