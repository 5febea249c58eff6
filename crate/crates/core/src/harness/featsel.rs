use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::cv::{run_cv, stream, Classifier, FoldData};
use crate::datamodel::Corpus;
use crate::error::{Error, Result};
use crate::numerics::seed::label_tag;
use crate::selection::{
    aggregate, mutual_information, rf_importance, rfe_rank, top_k, ImportanceScores, Method,
};
use crate::tasks::{LabeledDataset, TaskTargets};

/// Scores from a baseline method fitted on every usable sentence.
/// Normalization is fitted on the same set. Attention scores come from
/// cross-validation instead and are rejected here.
pub fn selection_scores(
    config: &ExperimentConfig,
    corpus: &Corpus,
    targets: &TaskTargets,
    method: Method,
) -> Result<ImportanceScores> {
    let folds = super::cv::assign_folds(config, targets)?;
    let fit = targets
        .sentences
        .iter()
        .map(|&r| corpus.records[r].id.as_str())
        .collect();
    let normalized = corpus.normalize(&fit, config.norm)?;
    // no item sits in fold k, so every item is labelled as training data
    let dataset = LabeledDataset::build(
        targets,
        &normalized,
        config.signal_type,
        corpus.n_max(),
        &folds,
        folds.k,
    )?;
    let data = aggregate(
        &dataset.items,
        dataset.num_labels(),
        config.aggregation,
        None,
    )?;
    let (task, signal) = (config.task, config.signal_type);
    match method {
        Method::Mi => mutual_information(&data, config.selection.mi_bins, task, signal),
        Method::Rfe => rfe_rank(&data, &config.selection.logistic, task, signal),
        Method::Rf => Ok(rf_importance(
            &data,
            &config.selection.forest,
            stream(config, &[label_tag("rf")]),
            task,
            signal,
        )),
        Method::Attention => Err(Error::Invalid(
            "attention scores come from a cross-validated run".into(),
        )),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatselCell {
    pub method: Method,
    pub k: usize,
    pub classifier: Classifier,
    /// Selected schema indices, best first.
    pub features: Vec<usize>,
    pub mean_f1: f64,
}

/// Mean macro-F1 for every method × k × classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatselGrid {
    pub cells: Vec<FeatselCell>,
}

impl FeatselGrid {
    pub fn get(&self, method: Method, k: usize, classifier: Classifier) -> Option<&FeatselCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.k == k && c.classifier == classifier)
    }
}

pub const FEATSEL_CLASSIFIERS: [Classifier; 2] = [Classifier::Linear, Classifier::Recurrent];

/// Feeds each method's top-k features to each classifier under the usual
/// cross-validation. Identical feature sets are trained once.
pub fn featsel_compare(
    config: &ExperimentConfig,
    folds: &[FoldData],
    scores: &[ImportanceScores],
    classifiers: &[Classifier],
) -> Result<FeatselGrid> {
    let d = config.signal_type.dim();
    let mut plan = Vec::new();
    for s in scores {
        if s.len() != d {
            return Err(Error::Invalid(format!(
                "{} scores cover {} of {d} features",
                s.method,
                s.len()
            )));
        }
        for &k in &config.k_sweep {
            if k == 0 || k > d {
                return Err(Error::Invalid(format!("k = {k} outside 1..={d}")));
            }
            let features = top_k(s, k)?;
            let mut key = features.clone();
            key.sort_unstable();
            for &c in classifiers {
                plan.push((s.method, k, c, features.clone(), key.clone()));
            }
        }
    }
    let unique: BTreeSet<(Vec<usize>, Classifier)> =
        plan.iter().map(|p| (p.4.clone(), p.2)).collect();
    let memo: BTreeMap<(Vec<usize>, Classifier), f64> = unique
        .into_par_iter()
        .map(|(key, c)| Ok((run_cv(config, folds, c, &key)?.mean_f1(), key, c)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .map(|(f1, key, c)| ((key, c), f1))
        .collect();
    let cells = plan
        .into_iter()
        .map(|(method, k, classifier, features, key)| FeatselCell {
            mean_f1: memo[&(key, classifier)],
            method,
            k,
            classifier,
            features,
        })
        .collect();
    Ok(FeatselGrid { cells })
}
