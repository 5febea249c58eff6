use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::BridgeModel;
use crate::datamodel::SignalMatrix;
use crate::error::Result;
use crate::harness::macro_f1;
use crate::numerics::{Adam, AdamConfig, Gradients};
use crate::tasks::Label;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    /// Sentences whose gradients are averaged per optimizer step.
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 50,
            patience: 10,
            batch_size: 32,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub x: &'a SignalMatrix,
    pub y: &'a Label,
    /// Loss weight of the gold class.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub best_val_f1: f64,
    pub epochs_run: usize,
    pub final_train_loss: f64,
}

/// Inverse class frequencies renormalized to mean 1 over present classes.
/// Absent classes get weight 1.
pub fn class_weights(counts: &[usize]) -> Vec<f64> {
    let present: Vec<f64> = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| 1.0 / c as f64)
        .collect();
    if present.is_empty() {
        return vec![1.0; counts.len()];
    }
    let mean = present.iter().sum::<f64>() / present.len() as f64;
    counts
        .iter()
        .map(|&c| if c > 0 { 1.0 / c as f64 / mean } else { 1.0 })
        .collect()
}

/// Flattened predictions and golds over `samples`.
pub fn predict_all(model: &BridgeModel, samples: &[Sample]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    for s in samples {
        pred.extend(model.predict(s.x)?.labels);
        gold.extend_from_slice(s.y.as_slice());
    }
    Ok((pred, gold))
}

pub fn evaluate_f1(model: &BridgeModel, samples: &[Sample], vocabulary: &[String]) -> Result<f64> {
    let (p, g) = predict_all(model, samples)?;
    macro_f1(&p, &g, vocabulary)
}

/// Mini-batch Adam with early stopping on validation macro-F1. The best
/// epoch's parameters are left in `model`.
pub fn train(
    model: &mut BridgeModel,
    train: &[Sample],
    val: &[Sample],
    vocabulary: &[String],
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adam = Adam::new(config.adam, &model.params)?;
    let mut grads = Gradients::zeros_like(&model.params);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let batch = config.batch_size.max(1);

    let mut best_params = model.params.clone();
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut epochs_run = 0;
    let mut last_loss = f64::NAN;

    for epoch in 1..=config.max_epochs {
        epochs_run = epoch;
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            grads.reset();
            for &i in chunk {
                let s = &train[i];
                total += model.loss_and_grad(s.x, s.y, s.weight, &mut grads)?;
            }
            grads.scale(1.0 / chunk.len() as f64);
            adam.step(&mut model.params, &mut grads)?;
        }
        last_loss = total / train.len().max(1) as f64;

        let f1 = if val.is_empty() {
            evaluate_f1(model, train, vocabulary)?
        } else {
            evaluate_f1(model, val, vocabulary)?
        };
        debug!("epoch {epoch}: loss {last_loss:.4}, val F1 {f1:.4}");
        if f1 > best_f1 {
            best_f1 = f1;
            best_epoch = epoch;
            best_params = model.params.clone();
        } else if epoch - best_epoch >= config.patience {
            break;
        }
    }
    model.params = best_params;
    Ok(TrainReport {
        best_epoch,
        best_val_f1: best_f1,
        epochs_run,
        final_train_loss: last_loss,
    })
}
