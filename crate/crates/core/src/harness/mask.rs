use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::cv::{fit_fold, mean_unflagged, CvOutcome, FoldData, FoldResult};
use super::metrics::macro_f1;
use crate::error::{Error, Result};
use crate::model::{predict_all, BridgeModel, Sample};
use crate::selection::ImportanceScores;
use crate::tasks::LabeledItem;

/// F1 after masking each feature in turn, most attended first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskReport {
    pub order: Vec<usize>,
    pub feature_names: Vec<String>,
    pub masked_f1: Vec<f64>,
    pub baseline_f1: f64,
    pub retrained: bool,
}

impl MaskReport {
    /// `baseline - masked` per entry of `order`.
    pub fn drops(&self) -> Vec<f64> {
        self.masked_f1
            .iter()
            .map(|f| self.baseline_f1 - f)
            .collect()
    }

    /// Drop caused by masking schema feature `j`.
    pub fn drop_of(&self, j: usize) -> Option<f64> {
        let pos = self.order.iter().position(|&o| o == j)?;
        Some(self.baseline_f1 - self.masked_f1[pos])
    }
}

fn masked(items: &[&LabeledItem], j: usize) -> Vec<LabeledItem> {
    items
        .iter()
        .map(|it| {
            let mut it = (*it).clone();
            it.matrix.mask_feature(j);
            it
        })
        .collect()
}

fn frozen_f1(model: &BridgeModel, fd: &FoldData, j: usize) -> Result<f64> {
    let test = masked(&fd.items(&fd.test), j);
    let samples: Vec<Sample> = test
        .iter()
        .map(|it| Sample {
            x: &it.matrix,
            y: &it.label,
            weight: 1.0,
        })
        .collect();
    let (pred, gold) = predict_all(model, &samples)?;
    macro_f1(&pred, &gold, &fd.dataset.vocabulary)
}

/// Zeroes one feature at a time (the training mean after normalization)
/// and re-scores the test folds. With `config.mask_retrain` every fold is
/// retrained on masked data; otherwise the models in `outcome` are reused.
pub fn mask_eval(
    config: &ExperimentConfig,
    folds: &[FoldData],
    outcome: &CvOutcome,
    scores: &ImportanceScores,
) -> Result<MaskReport> {
    let d = config.signal_type.dim();
    if scores.len() != d || outcome.features.len() != d {
        return Err(Error::Invalid(
            "masking needs models and scores over all features".into(),
        ));
    }
    let order = scores.ranking();
    let baseline_f1 = outcome.mean_f1();
    let all: Vec<usize> = (0..d).collect();

    let masked_f1: Vec<f64> = order
        .par_iter()
        .map(|&j| -> Result<f64> {
            let per_fold: Vec<FoldResult> = folds
                .iter()
                .zip(&outcome.folds)
                .zip(&outcome.models)
                .map(|((fd, base), model)| -> Result<FoldResult> {
                    let f1 = if config.mask_retrain {
                        let mut fd = fd.clone();
                        fd.dataset
                            .items
                            .iter_mut()
                            .for_each(|it| it.matrix.mask_feature(j));
                        fit_fold(config, &fd, outcome.classifier, &all)?.0.macro_f1
                    } else {
                        let model = model.as_ref().ok_or_else(|| {
                            Error::Invalid("frozen masking needs trained networks".into())
                        })?;
                        frozen_f1(model, fd, j)?
                    };
                    Ok(FoldResult {
                        macro_f1: f1,
                        ..base.clone()
                    })
                })
                .collect::<Result<_>>()?;
            Ok(mean_unflagged(&per_fold, |r| r.macro_f1))
        })
        .collect::<Result<_>>()?;

    Ok(MaskReport {
        feature_names: order
            .iter()
            .map(|&j| scores.feature_names[j].clone())
            .collect(),
        order,
        masked_f1,
        baseline_f1,
        retrained: config.mask_retrain,
    })
}
