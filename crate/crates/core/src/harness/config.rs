use serde::{Deserialize, Serialize};

use crate::datamodel::{NormMethod, SignalType};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, TrainConfig};
use crate::selection::{Aggregation, Method, SelectionConfig};
use crate::tasks::{TaskName, ValueOptions};

/// Everything that determines one experiment besides the input files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: TaskName,
    pub signal_type: SignalType,
    pub k_folds: usize,
    pub seed: u64,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub norm: NormMethod,
    /// Share of training sentences held out for early stopping.
    pub val_fraction: f64,
    pub masking: bool,
    /// Retrain with the feature zeroed instead of re-evaluating frozen models.
    pub mask_retrain: bool,
    pub featsel_methods: Vec<Method>,
    pub k_sweep: Vec<usize>,
    pub aggregation: Aggregation,
    pub values: ValueOptions,
    pub selection: SelectionConfig,
}

impl ExperimentConfig {
    pub fn new(task: TaskName, signal_type: SignalType, seed: u64) -> Self {
        Self {
            task,
            signal_type,
            k_folds: 5,
            seed,
            model: ModelConfig::for_task(task, signal_type, seed),
            train: TrainConfig::default(),
            norm: NormMethod::ZScore,
            val_fraction: 0.1,
            masking: true,
            mask_retrain: false,
            featsel_methods: Method::ALL.to_vec(),
            k_sweep: (1..=signal_type.dim()).collect(),
            aggregation: Aggregation::Mean,
            values: ValueOptions::default(),
            selection: SelectionConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_folds < 2 {
            return Err(Error::Invalid(format!(
                "k-folds must be >= 2, got {}",
                self.k_folds
            )));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Invalid(format!(
                "validation fraction {} outside [0, 1)",
                self.val_fraction
            )));
        }
        let d = self.signal_type.dim();
        if let Some(&k) = self.k_sweep.iter().find(|&&k| k == 0 || k > d) {
            return Err(Error::Invalid(format!("k = {k} outside 1..={d}")));
        }
        if self.model.signal_type != self.signal_type || self.model.task != self.task {
            return Err(Error::Invalid(
                "model config does not match task/signal".into(),
            ));
        }
        Ok(())
    }
}
