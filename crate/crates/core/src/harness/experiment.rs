use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::cv::{
    prepare_folds, run_attentive, stream, Classifier, CvOutcome, FoldData, FoldResult,
};
use super::mask::{mask_eval, MaskReport};
use super::report;
use crate::datamodel::{Corpus, Resources};
use crate::error::{Error, Result};
use crate::numerics::seed::label_tag;
use crate::selection::ImportanceScores;
use crate::tasks::{build_targets, TargetOptions, TaskTargets};

/// Everything produced by one attentive cross-validation run.
#[derive(Clone, Debug)]
pub struct TaskRun {
    pub config: ExperimentConfig,
    pub targets: TaskTargets,
    pub folds: Vec<FoldData>,
    pub outcome: CvOutcome,
    pub attention: ImportanceScores,
    pub mask: Option<MaskReport>,
}

impl TaskRun {
    pub fn norm_fingerprints(&self) -> Vec<String> {
        self.folds
            .iter()
            .map(|f| f.norm_fingerprint.clone())
            .collect()
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            config: self.config.clone(),
            sentences: self.targets.num_sentences(),
            skipped: self.targets.skipped,
            classifier: self.outcome.classifier,
            mean_f1: self.outcome.mean_f1(),
            folds: self.outcome.folds.clone(),
            attention: self.attention.clone(),
            mask: self.mask.clone(),
            norm_fingerprints: self.norm_fingerprints(),
        }
    }
}

/// The serializable results of a [`TaskRun`], enough to re-render its CSVs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub sentences: usize,
    pub skipped: usize,
    pub classifier: Classifier,
    pub mean_f1: f64,
    pub folds: Vec<FoldResult>,
    pub attention: ImportanceScores,
    pub mask: Option<MaskReport>,
    pub norm_fingerprints: Vec<String>,
}

pub const SUMMARY_FILE: &str = "results.json";

impl RunSummary {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(SUMMARY_FILE);
        let body = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(SUMMARY_FILE);
        let body = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&body)?)
    }

    /// Writes the per-run CSVs into `dir` and returns their file names.
    pub fn write_reports(&self, dir: &Path) -> Result<Vec<String>> {
        let (task, signal) = (self.config.task, self.config.signal_type);
        let mut files = vec!["attention.csv", "fold_metrics.csv", "class_metrics.csv"];
        crate::selection::write_scores_csv(
            std::slice::from_ref(&self.attention),
            &dir.join(files[0]),
        )?;
        report::write_fold_metrics(
            task,
            signal,
            self.classifier,
            &self.folds,
            &dir.join(files[1]),
        )?;
        report::write_class_metrics(&self.folds, &dir.join(files[2]))?;
        if let Some(m) = &self.mask {
            files.push("mask_curve.csv");
            report::write_mask_curve(m, &dir.join("mask_curve.csv"))?;
        }
        Ok(files.into_iter().map(String::from).collect())
    }
}

pub fn task_targets(
    config: &ExperimentConfig,
    corpus: &Corpus,
    resources: &Resources,
) -> Result<TaskTargets> {
    let opts = TargetOptions {
        values: config.values,
        seed: stream(config, &[label_tag("targets")]),
    };
    build_targets(config.task, corpus, resources, opts)
}

/// Targets, folds, attentive training and (optionally) masking.
pub fn run_task(
    config: &ExperimentConfig,
    corpus: &Corpus,
    resources: &Resources,
) -> Result<TaskRun> {
    config.validate()?;
    let targets = task_targets(config, corpus, resources)?;
    let folds = prepare_folds(config, corpus, &targets)?;
    let outcome = run_attentive(config, &folds)?;
    let attention = outcome.attention.clone().expect("attentive run");
    let mask = if config.masking {
        Some(mask_eval(config, &folds, &outcome, &attention)?)
    } else {
        None
    };
    Ok(TaskRun {
        config: config.clone(),
        targets,
        folds,
        outcome,
        attention,
        mask,
    })
}
