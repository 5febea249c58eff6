use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-class scores for labels appearing in predictions or golds.
pub fn class_scores(
    predictions: &[usize],
    golds: &[usize],
    vocabulary: &[String],
) -> Result<Vec<ClassScores>> {
    if predictions.len() != golds.len() {
        return Err(Error::Invalid(format!(
            "{} predictions for {} golds",
            predictions.len(),
            golds.len()
        )));
    }
    if golds.is_empty() {
        return Err(Error::Invalid("macro-F1 of an empty set".into()));
    }
    let k = vocabulary.len();
    let mut tp = vec![0usize; k];
    let mut pred = vec![0usize; k];
    let mut gold = vec![0usize; k];
    for (&p, &g) in predictions.iter().zip(golds) {
        if p >= k || g >= k {
            return Err(Error::Invalid(format!(
                "label id outside vocabulary of {k}"
            )));
        }
        pred[p] += 1;
        gold[g] += 1;
        if p == g {
            tp[p] += 1;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok((0..k)
        .filter(|&c| pred[c] + gold[c] > 0)
        .map(|c| {
            let precision = ratio(tp[c], pred[c]);
            let recall = ratio(tp[c], gold[c]);
            let f1 = ratio(2 * tp[c], pred[c] + gold[c]);
            ClassScores {
                label: vocabulary[c].clone(),
                precision,
                recall,
                f1,
                support: gold[c],
            }
        })
        .collect())
}

/// Unweighted mean of per-class F1 over classes present in either list.
pub fn macro_f1(predictions: &[usize], golds: &[usize], vocabulary: &[String]) -> Result<f64> {
    let scores = class_scores(predictions, golds, vocabulary)?;
    Ok(scores.iter().map(|s| s.f1).sum::<f64>() / scores.len() as f64)
}
