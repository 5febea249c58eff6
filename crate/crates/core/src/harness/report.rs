//! CSV writers for run outputs. Rows are emitted in a fixed order so the
//! files are byte-identical across runs with the same inputs.
use std::path::Path;

use serde::Serialize;

use super::cv::{Classifier, FoldResult};
use super::featsel::FeatselGrid;
use super::mask::MaskReport;
use crate::datamodel::SignalType;
use crate::error::{Error, Result};
use crate::selection::{ImportanceScores, Method};
use crate::tasks::TaskName;

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Feature × task grid of attention scores for one signal type.
/// Columns follow the canonical task order.
pub fn write_attention_grid(
    signal: SignalType,
    scores: &[ImportanceScores],
    path: &Path,
) -> Result<()> {
    let mut cols: Vec<&ImportanceScores> = scores
        .iter()
        .filter(|s| s.signal_type == signal && s.method == Method::Attention)
        .collect();
    cols.sort_by_key(|s| TaskName::ALL.iter().position(|&t| t == s.task));
    let d = signal.dim();
    if let Some(bad) = cols.iter().find(|s| s.len() != d) {
        return Err(Error::Invalid(format!(
            "{} attention has {} entries, expected {d}",
            bad.task,
            bad.len()
        )));
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["feature".to_string()];
    header.extend(cols.iter().map(|s| s.task.as_str().to_string()));
    w.write_record(&header)?;
    for (j, name) in signal.schema().feature_names.iter().enumerate() {
        let mut row = vec![name.to_string()];
        row.extend(cols.iter().map(|s| s.values[j].to_string()));
        w.write_record(&row)?;
    }
    finish(w, path)
}

#[derive(Serialize)]
struct FoldRow<'a> {
    task: &'a str,
    signal_type: &'a str,
    classifier: &'a str,
    fold: usize,
    macro_f1: f64,
    best_epoch: usize,
    n_train: usize,
    n_test: usize,
    flagged: &'a str,
}

pub fn write_fold_metrics(
    task: TaskName,
    signal: SignalType,
    classifier: Classifier,
    folds: &[FoldResult],
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut folds: Vec<&FoldResult> = folds.iter().collect();
    folds.sort_by_key(|f| f.fold);
    for f in folds {
        w.serialize(FoldRow {
            task: task.as_str(),
            signal_type: signal.as_str(),
            classifier: classifier.as_str(),
            fold: f.fold,
            macro_f1: f.macro_f1,
            best_epoch: f.best_epoch,
            n_train: f.n_train,
            n_test: f.n_test,
            flagged: f.flagged.as_deref().unwrap_or(""),
        })?;
    }
    finish(w, path)
}

#[derive(Serialize)]
struct ClassRow<'a> {
    fold: usize,
    label: &'a str,
    precision: f64,
    recall: f64,
    f1: f64,
    support: usize,
}

pub fn write_class_metrics(folds: &[FoldResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut folds: Vec<&FoldResult> = folds.iter().collect();
    folds.sort_by_key(|f| f.fold);
    for f in folds {
        for c in &f.classes {
            w.serialize(ClassRow {
                fold: f.fold,
                label: &c.label,
                precision: c.precision,
                recall: c.recall,
                f1: c.f1,
                support: c.support,
            })?;
        }
    }
    finish(w, path)
}

#[derive(Serialize)]
struct MaskRow<'a> {
    rank: usize,
    feature: &'a str,
    masked_f1: f64,
    f1_drop: f64,
    baseline_f1: f64,
}

/// Doubles as a plot series: x = rank, y = masked F1.
pub fn write_mask_curve(report: &MaskReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (i, (name, &f1)) in report
        .feature_names
        .iter()
        .zip(&report.masked_f1)
        .enumerate()
    {
        w.serialize(MaskRow {
            rank: i + 1,
            feature: name,
            masked_f1: f1,
            f1_drop: report.baseline_f1 - f1,
            baseline_f1: report.baseline_f1,
        })?;
    }
    finish(w, path)
}

/// Side-by-side method comparison: one row per feature, a score column and
/// a rank column per method.
pub fn write_method_comparison(scores: &[ImportanceScores], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let Some(first) = scores.first() else {
        return finish(w, path);
    };
    if scores
        .iter()
        .any(|s| s.feature_names != first.feature_names)
    {
        return Err(Error::Invalid(
            "method scores use different feature schemas".into(),
        ));
    }
    let mut header = vec!["feature".to_string()];
    for s in scores {
        header.push(format!(
            "{}_{}",
            s.method,
            if s.is_rank { "rank" } else { "score" }
        ));
        header.push(format!("{}_position", s.method));
    }
    w.write_record(&header)?;
    let positions: Vec<Vec<usize>> = scores
        .iter()
        .map(|s| {
            let mut pos = vec![0; s.len()];
            for (p, j) in s.ranking().into_iter().enumerate() {
                pos[j] = p + 1;
            }
            pos
        })
        .collect();
    for (j, name) in first.feature_names.iter().enumerate() {
        let mut row = vec![name.clone()];
        for (s, pos) in scores.iter().zip(&positions) {
            row.push(s.values[j].to_string());
            row.push(pos[j].to_string());
        }
        w.write_record(&row)?;
    }
    finish(w, path)
}

#[derive(Serialize)]
struct GridRow<'a> {
    method: &'a str,
    k: usize,
    classifier: &'a str,
    mean_f1: f64,
    features: String,
}

pub fn write_featsel_grid(grid: &FeatselGrid, names: &[String], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for c in &grid.cells {
        w.serialize(GridRow {
            method: c.method.as_str(),
            k: c.k,
            classifier: c.classifier.as_str(),
            mean_f1: c.mean_f1,
            features: c
                .features
                .iter()
                .map(|&j| names[j].as_str())
                .collect::<Vec<_>>()
                .join(";"),
        })?;
    }
    finish(w, path)
}

/// Plot series for one classifier: x = k, one y column per method.
pub fn write_featsel_series(grid: &FeatselGrid, classifier: Classifier, path: &Path) -> Result<()> {
    let mut methods: Vec<Method> = grid.cells.iter().map(|c| c.method).collect();
    methods.dedup();
    methods.sort();
    methods.dedup();
    let mut ks: Vec<usize> = grid.cells.iter().map(|c| c.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["k".to_string()];
    header.extend(methods.iter().map(|m| m.as_str().to_string()));
    w.write_record(&header)?;
    for k in ks {
        let mut row = vec![k.to_string()];
        for &m in &methods {
            row.push(
                grid.get(m, k, classifier)
                    .map_or(String::new(), |c| c.mean_f1.to_string()),
            );
        }
        w.write_record(&row)?;
    }
    finish(w, path)
}
