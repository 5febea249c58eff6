//! Cross-validation, masking and feature-selection experiments.
mod config;
mod cv;
mod experiment;
mod featsel;
mod mask;
mod metrics;
pub mod report;

pub use config::ExperimentConfig;
pub use cv::{
    assign_folds, fit_fold, prepare_fold, prepare_folds, run_attentive, run_cv, Classifier,
    CvOutcome, FoldData, FoldResult,
};
pub use experiment::{run_task, task_targets, RunSummary, TaskRun, SUMMARY_FILE};
pub use featsel::{
    featsel_compare, selection_scores, FeatselCell, FeatselGrid, FEATSEL_CLASSIFIERS,
};
pub use mask::{mask_eval, MaskReport};
pub use metrics::{class_scores, macro_f1, ClassScores};
