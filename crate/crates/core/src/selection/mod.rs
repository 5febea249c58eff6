//! Traditional feature-selection baselines on aggregated vectors.

mod aggregate;
mod forest;
mod logistic;
mod mi;
mod scores;

pub use aggregate::{aggregate, AggregatedDataset, Aggregation};
pub use forest::{Forest, ForestConfig, Tree};
pub use logistic::{rfe_ranks, LogisticConfig, LogisticModel};
pub use mi::{equal_frequency_bins, mutual_information_raw, plug_in_mi};
pub use scores::{normalize_scores, top_k, write_scores_csv, ImportanceScores, Method};

use serde::{Deserialize, Serialize};

use crate::datamodel::SignalType;
use crate::error::Result;
use crate::tasks::TaskName;

/// Method settings shared by the three baselines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub mi_bins: usize,
    pub logistic: LogisticConfig,
    pub forest: ForestConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            mi_bins: 10,
            logistic: LogisticConfig::default(),
            forest: ForestConfig::default(),
        }
    }
}

/// Schema names, or positional names for a reduced feature set.
pub fn feature_names(signal: SignalType, d: usize) -> Vec<String> {
    let schema = signal.schema();
    if schema.dim() == d {
        schema.feature_names.iter().map(|s| s.to_string()).collect()
    } else {
        (0..d).map(|i| format!("f{i}")).collect()
    }
}

fn wrap(
    method: Method,
    task: TaskName,
    signal: SignalType,
    values: Vec<f64>,
    is_rank: bool,
) -> ImportanceScores {
    ImportanceScores {
        method,
        task,
        signal_type: signal,
        feature_names: feature_names(signal, values.len()),
        values,
        is_rank,
        normalized: !is_rank,
    }
}

pub fn mutual_information(
    data: &AggregatedDataset,
    bins: usize,
    task: TaskName,
    signal: SignalType,
) -> Result<ImportanceScores> {
    let mut v = mutual_information_raw(data, bins)?;
    normalize_scores(&mut v);
    Ok(wrap(Method::Mi, task, signal, v, false))
}

pub fn rfe_rank(
    data: &AggregatedDataset,
    config: &LogisticConfig,
    task: TaskName,
    signal: SignalType,
) -> Result<ImportanceScores> {
    Ok(wrap(
        Method::Rfe,
        task,
        signal,
        rfe_ranks(data, config)?,
        true,
    ))
}

pub fn rf_importance(
    data: &AggregatedDataset,
    config: &ForestConfig,
    seed: u64,
    task: TaskName,
    signal: SignalType,
) -> ImportanceScores {
    let forest = Forest::fit(data, config, seed);
    wrap(Method::Rf, task, signal, forest.importances(), false)
}
