use std::collections::HashSet;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::metrics::{class_scores, ClassScores};
use crate::datamodel::{split_fingerprint, Corpus, FoldAssignment};
use crate::error::{Error, Result};
use crate::model::{
    class_weights, predict_all, train, BridgeModel, HeadKind, LossKind, ModelDims, Sample,
};
use crate::numerics::seed::{derive_seed, label_tag};
use crate::selection::{aggregate, normalize_scores, ImportanceScores, LogisticModel, Method};
use crate::tasks::{LabeledDataset, LabeledItem, TaskKind, TaskTargets};

/// Which model is trained on each fold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    /// Full network with feature-level attention.
    Attentive,
    /// Bi-LSTM and head without attention.
    Recurrent,
    /// Logistic regression on aggregated vectors.
    Linear,
}

impl Classifier {
    pub fn as_str(self) -> &'static str {
        match self {
            Classifier::Attentive => "attentive",
            Classifier::Recurrent => "recurrent",
            Classifier::Linear => "linear",
        }
    }
}

pub(crate) fn stream(config: &ExperimentConfig, path: &[u64]) -> u64 {
    derive_seed(config.seed, path)
}

/// Fold assignment over the task's sentences.
pub fn assign_folds(config: &ExperimentConfig, targets: &TaskTargets) -> Result<FoldAssignment> {
    targets.make_folds(config.k_folds, stream(config, &[label_tag("folds")]))
}

/// One fold's inputs, normalized on its training sentences.
#[derive(Clone, Debug)]
pub struct FoldData {
    pub fold: usize,
    pub dataset: LabeledDataset,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub norm_fingerprint: String,
}

impl FoldData {
    pub fn items(&self, idx: &[usize]) -> Vec<&LabeledItem> {
        idx.iter().map(|&i| &self.dataset.items[i]).collect()
    }

    /// Reason to exclude this fold from averages, if any.
    pub fn flag(&self) -> Option<String> {
        if self.dataset.kind == TaskKind::Sequence {
            return None;
        }
        let train_counts = self.dataset.label_counts(
            self.train
                .iter()
                .chain(&self.val)
                .map(|&i| &self.dataset.items[i]),
        );
        let test_counts = self
            .dataset
            .label_counts(self.test.iter().map(|&i| &self.dataset.items[i]));
        for (c, name) in self.dataset.vocabulary.iter().enumerate() {
            if train_counts[c] == 0 {
                return Some(format!("class {name} absent from training folds"));
            }
            if test_counts[c] == 0 {
                return Some(format!("class {name} absent from test fold"));
            }
        }
        None
    }
}

/// Normalizes on the training sentences of fold `f`, labels the items and
/// carves a validation split out of the training sentences.
pub fn prepare_fold(
    config: &ExperimentConfig,
    corpus: &Corpus,
    targets: &TaskTargets,
    folds: &FoldAssignment,
    f: usize,
) -> Result<FoldData> {
    let train_records: Vec<usize> = targets
        .sentences
        .iter()
        .enumerate()
        .filter(|(p, _)| folds.fold_of(*p) != f)
        .map(|(_, &r)| r)
        .collect();
    let fit: HashSet<&str> = train_records
        .iter()
        .map(|&r| corpus.records[r].id.as_str())
        .collect();
    let normalized = corpus.normalize(&fit, config.norm)?;
    let fingerprint = normalized
        .norm
        .as_ref()
        .map(|n| n.fingerprint.clone())
        .unwrap_or_default();
    if fingerprint != split_fingerprint(fit.iter().copied()) {
        return Err(Error::Invalid(format!(
            "fold {f}: normalization fitted on the wrong split"
        )));
    }
    let dataset = LabeledDataset::build(
        targets,
        &normalized,
        config.signal_type,
        corpus.n_max(),
        folds,
        f,
    )?;

    let mut shuffled = train_records.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(stream(
        config,
        &[f as u64, label_tag("val")],
    )));
    let n_val = if shuffled.len() >= 10 {
        (config.val_fraction * shuffled.len() as f64).round() as usize
    } else {
        0
    };
    let val_records: HashSet<usize> = shuffled[..n_val].iter().copied().collect();

    let (mut train_idx, mut val_idx, mut test_idx) = (Vec::new(), Vec::new(), Vec::new());
    for (i, it) in dataset.items.iter().enumerate() {
        if it.fold == f {
            if fit.contains(it.sentence_id.as_str()) {
                return Err(Error::Invalid(format!(
                    "fold {f}: test sentence {} inside the normalization split",
                    it.sentence_id
                )));
            }
            test_idx.push(i);
        } else if val_records.contains(&it.record) {
            val_idx.push(i);
        } else {
            train_idx.push(i);
        }
    }
    Ok(FoldData {
        fold: f,
        dataset,
        train: train_idx,
        val: val_idx,
        test: test_idx,
        norm_fingerprint: fingerprint,
    })
}

pub fn prepare_folds(
    config: &ExperimentConfig,
    corpus: &Corpus,
    targets: &TaskTargets,
) -> Result<Vec<FoldData>> {
    config.validate()?;
    let folds = assign_folds(config, targets)?;
    (0..config.k_folds)
        .into_par_iter()
        .map(|f| prepare_fold(config, corpus, targets, &folds, f))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub macro_f1: f64,
    pub classes: Vec<ClassScores>,
    /// Mean attention over the fold's test items.
    pub mean_alpha: Option<Vec<f64>>,
    pub best_epoch: usize,
    pub flagged: Option<String>,
    pub n_train: usize,
    pub n_test: usize,
}

/// Trains one classifier per fold and collects test metrics.
#[derive(Clone, Debug)]
pub struct CvOutcome {
    pub classifier: Classifier,
    pub features: Vec<usize>,
    pub folds: Vec<FoldResult>,
    /// Trained networks per fold (none for the linear classifier).
    pub models: Vec<Option<BridgeModel>>,
    pub attention: Option<ImportanceScores>,
}

impl CvOutcome {
    /// Mean macro-F1 over unflagged folds, or over all if every fold is flagged.
    pub fn mean_f1(&self) -> f64 {
        mean_unflagged(&self.folds, |r| r.macro_f1)
    }
}

pub(crate) fn mean_unflagged(folds: &[FoldResult], value: impl Fn(&FoldResult) -> f64) -> f64 {
    let kept: Vec<f64> = folds
        .iter()
        .filter(|r| r.flagged.is_none())
        .map(&value)
        .collect();
    if kept.is_empty() {
        return folds.iter().map(value).sum::<f64>() / folds.len() as f64;
    }
    kept.iter().sum::<f64>() / kept.len() as f64
}

fn subset(item: &LabeledItem, features: &[usize], all: bool) -> LabeledItem {
    if all {
        return item.clone();
    }
    LabeledItem {
        matrix: item.matrix.select_features(features),
        ..item.clone()
    }
}

/// Per-item loss weights: class weights under focal loss, else 1.
fn sample_weights(config: &ExperimentConfig, fd: &FoldData, items: &[LabeledItem]) -> Vec<f64> {
    if config.model.loss != LossKind::Focal || fd.dataset.kind == TaskKind::Sequence {
        return vec![1.0; items.len()];
    }
    let counts = fd
        .dataset
        .label_counts(fd.train.iter().map(|&i| &fd.dataset.items[i]));
    let w = class_weights(&counts);
    items
        .iter()
        .map(|it| it.label.class().map_or(1.0, |c| w[c]))
        .collect()
}

/// Trains and evaluates one fold. `features` are schema indices.
pub fn fit_fold(
    config: &ExperimentConfig,
    fd: &FoldData,
    classifier: Classifier,
    features: &[usize],
) -> Result<(FoldResult, Option<BridgeModel>)> {
    let d_all = config.signal_type.dim();
    let all = features.len() == d_all && features.iter().enumerate().all(|(i, &j)| i == j);
    let pick = |idx: &[usize]| -> Vec<LabeledItem> {
        idx.iter()
            .map(|&i| subset(&fd.dataset.items[i], features, all))
            .collect()
    };
    let (train_items, val_items, test_items) = (pick(&fd.train), pick(&fd.val), pick(&fd.test));
    let vocab = &fd.dataset.vocabulary;
    let k = vocab.len();
    let flagged = fd.flag();
    if let Some(reason) = &flagged {
        warn!(
            "{} fold {}: {reason}; excluded from averages",
            config.task, fd.fold
        );
    }

    let (pred, gold, model, best_epoch, mean_alpha) = match classifier {
        Classifier::Linear => {
            let fit_items: Vec<&LabeledItem> = train_items.iter().chain(&val_items).collect();
            let train_data = aggregate(fit_items, k, config.aggregation, None)?;
            let lr = LogisticModel::fit(&train_data, &config.selection.logistic)?;
            let test_data = aggregate(&test_items, k, config.aggregation, None)?;
            (lr.predict(&test_data.x), test_data.y, None, 0, None)
        }
        Classifier::Attentive | Classifier::Recurrent => {
            let mut mc = config.model.clone();
            mc.use_attention = classifier == Classifier::Attentive;
            mc.seed = stream(config, &[fd.fold as u64, label_tag("model")]);
            let dims = ModelDims {
                d: features.len(),
                n_max: fd.dataset.items[0].matrix.n_max(),
                num_labels: k,
                head: HeadKind::for_kind(fd.dataset.kind),
            };
            let mut model = BridgeModel::new(mc, dims)?;
            let tw = sample_weights(config, fd, &train_items);
            let vw = sample_weights(config, fd, &val_items);
            let report = {
                let (ts, vs) = (samples(&train_items, &tw), samples(&val_items, &vw));
                train(
                    &mut model,
                    &ts,
                    &vs,
                    vocab,
                    &config.train,
                    stream(config, &[fd.fold as u64, label_tag("train")]),
                )?
            };
            let ones = vec![1.0; test_items.len()];
            let test_samples = samples(&test_items, &ones);
            let (pred, gold) = predict_all(&model, &test_samples)?;
            let mean_alpha = if classifier == Classifier::Attentive {
                Some(mean_attention(&model, &test_items)?)
            } else {
                None
            };
            (pred, gold, Some(model), report.best_epoch, mean_alpha)
        }
    };
    let classes = class_scores(&pred, &gold, vocab)?;
    let macro_f1 = classes.iter().map(|c| c.f1).sum::<f64>() / classes.len() as f64;
    Ok((
        FoldResult {
            fold: fd.fold,
            macro_f1,
            classes,
            mean_alpha,
            best_epoch,
            flagged,
            n_train: train_items.len() + val_items.len(),
            n_test: test_items.len(),
        },
        model,
    ))
}

fn samples<'a>(items: &'a [LabeledItem], w: &[f64]) -> Vec<Sample<'a>> {
    items
        .iter()
        .zip(w)
        .map(|(it, &weight)| Sample {
            x: &it.matrix,
            y: &it.label,
            weight,
        })
        .collect()
}

fn mean_attention(model: &BridgeModel, items: &[LabeledItem]) -> Result<Vec<f64>> {
    let d = model.dims.d;
    let mut sum = vec![0.0; d];
    for it in items {
        let alpha = model.attention(&it.matrix)?.expect("attentive model");
        for (s, a) in sum.iter_mut().zip(alpha) {
            *s += a;
        }
    }
    Ok(sum.into_iter().map(|s| s / items.len() as f64).collect())
}

/// Cross-validates `classifier` on the given feature subset.
pub fn run_cv(
    config: &ExperimentConfig,
    folds: &[FoldData],
    classifier: Classifier,
    features: &[usize],
) -> Result<CvOutcome> {
    let fitted: Vec<(FoldResult, Option<BridgeModel>)> = folds
        .par_iter()
        .map(|fd| fit_fold(config, fd, classifier, features))
        .collect::<Result<_>>()?;
    let (results, models): (Vec<FoldResult>, Vec<Option<BridgeModel>>) = fitted.into_iter().unzip();

    let attention = if classifier == Classifier::Attentive {
        // weight each fold's mean by its test size to average over all test items
        let d = features.len();
        let mut sum = vec![0.0; d];
        let mut n = 0usize;
        for r in &results {
            for (s, a) in sum
                .iter_mut()
                .zip(r.mean_alpha.as_ref().expect("attentive"))
            {
                *s += a * r.n_test as f64;
            }
            n += r.n_test;
        }
        let mut values: Vec<f64> = sum.into_iter().map(|s| s / n as f64).collect();
        normalize_scores(&mut values);
        Some(ImportanceScores {
            method: Method::Attention,
            task: config.task,
            signal_type: config.signal_type,
            feature_names: crate::selection::feature_names(config.signal_type, d),
            values,
            is_rank: false,
            normalized: true,
        })
    } else {
        None
    };
    Ok(CvOutcome {
        classifier,
        features: features.to_vec(),
        folds: results,
        models,
        attention,
    })
}

/// Convenience: all features, attentive network.
pub fn run_attentive(config: &ExperimentConfig, folds: &[FoldData]) -> Result<CvOutcome> {
    let all: Vec<usize> = (0..config.signal_type.dim()).collect();
    run_cv(config, folds, Classifier::Attentive, &all)
}
