use std::path::Path;

use serde::Deserialize;

use cogbridge::datamodel::{NormMethod, SignalType};
use cogbridge::harness::ExperimentConfig;
use cogbridge::model::LossKind;
use cogbridge::selection::{Aggregation, Method};
use cogbridge::tasks::TaskName;

use crate::failure::{CliResult, Failure};
use crate::options::{AggregationArg, ExperimentArgs, LossArg, NormArg};

/// Keys accepted in the `--config` TOML file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub k_folds: Option<usize>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub batch_size: Option<usize>,
    pub hidden: Option<usize>,
    pub lr: Option<f64>,
    pub clip_norm: Option<f64>,
    pub use_encoder: Option<bool>,
    pub loss: Option<LossKind>,
    pub focal_gamma: Option<f64>,
    pub val_fraction: Option<f64>,
    pub norm: Option<NormMethod>,
    pub aggregation: Option<Aggregation>,
    pub masking: Option<bool>,
    pub mask_retrain: Option<bool>,
    pub methods: Option<Vec<Method>>,
    pub k_sweep: Option<Vec<usize>>,
    pub length_normalize_counts: Option<bool>,
    pub mi_bins: Option<usize>,
    pub trees: Option<usize>,
    pub min_leaf: Option<usize>,
    pub max_features: Option<usize>,
    pub l2: Option<f64>,
    pub lr_max_iter: Option<usize>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Defaults, then the config file, then flags.
pub fn experiment_config(
    task: TaskName,
    signal: SignalType,
    args: &ExperimentArgs,
    file: &FileConfig,
) -> CliResult<ExperimentConfig> {
    let mut c = ExperimentConfig::new(task, signal, args.seed);
    set(&mut c.k_folds, file.k_folds);
    set(&mut c.train.max_epochs, file.max_epochs);
    set(&mut c.train.patience, file.patience);
    set(&mut c.train.batch_size, file.batch_size);
    set(&mut c.model.hidden, file.hidden);
    set(&mut c.train.adam.lr, file.lr);
    if file.clip_norm.is_some() {
        c.train.adam.clip_norm = file.clip_norm;
    }
    set(&mut c.model.use_encoder, file.use_encoder);
    set(&mut c.model.loss, file.loss);
    set(&mut c.model.focal_gamma, file.focal_gamma);
    set(&mut c.val_fraction, file.val_fraction);
    set(&mut c.norm, file.norm);
    set(&mut c.aggregation, file.aggregation);
    set(&mut c.masking, file.masking);
    set(&mut c.mask_retrain, file.mask_retrain);
    set(&mut c.featsel_methods, file.methods.clone());
    set(&mut c.k_sweep, file.k_sweep.clone());
    set(
        &mut c.values.length_normalize_counts,
        file.length_normalize_counts,
    );
    set(&mut c.selection.mi_bins, file.mi_bins);
    set(&mut c.selection.forest.trees, file.trees);
    set(&mut c.selection.forest.min_leaf, file.min_leaf);
    if file.max_features.is_some() {
        c.selection.forest.max_features = file.max_features;
    }
    set(&mut c.selection.logistic.l2, file.l2);
    set(&mut c.selection.logistic.max_iter, file.lr_max_iter);

    set(&mut c.k_folds, args.k_folds);
    set(&mut c.train.max_epochs, args.max_epochs);
    set(&mut c.train.patience, args.patience);
    set(&mut c.train.batch_size, args.batch_size);
    set(&mut c.model.hidden, args.hidden);
    set(&mut c.train.adam.lr, args.lr);
    if args.no_encoder {
        c.model.use_encoder = false;
    }
    set(
        &mut c.model.loss,
        args.loss.map(|l| match l {
            LossArg::CrossEntropy => LossKind::CrossEntropy,
            LossArg::Focal => LossKind::Focal,
        }),
    );
    set(&mut c.model.focal_gamma, args.focal_gamma);
    set(&mut c.val_fraction, args.val_fraction);
    set(
        &mut c.norm,
        args.norm.map(|n| match n {
            NormArg::ZScore => NormMethod::ZScore,
            NormArg::MinMax => NormMethod::MinMax,
        }),
    );
    set(
        &mut c.aggregation,
        args.aggregation.map(|a| match a {
            AggregationArg::Mean => Aggregation::Mean,
            AggregationArg::Max => Aggregation::Max,
        }),
    );
    if args.length_normalize_counts {
        c.values.length_normalize_counts = true;
    }
    c.validate()?;
    Ok(c)
}

pub fn parse_tasks(names: &[String]) -> CliResult<Vec<TaskName>> {
    if names.iter().any(|n| n.eq_ignore_ascii_case("all")) {
        return Ok(TaskName::ALL.to_vec());
    }
    let mut out = Vec::new();
    for n in names {
        let t: TaskName = n.parse()?;
        if !out.contains(&t) {
            out.push(t);
        }
    }
    Ok(out)
}

pub fn parse_signals(names: &[String]) -> CliResult<Vec<SignalType>> {
    if names.iter().any(|n| n.eq_ignore_ascii_case("all")) {
        return Ok(vec![SignalType::Eye, SignalType::Eeg]);
    }
    let mut out = Vec::new();
    for n in names {
        let s: SignalType = n.parse()?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    Ok(out)
}

pub fn parse_methods(names: &[String]) -> CliResult<Vec<Method>> {
    if names.iter().any(|n| n.eq_ignore_ascii_case("all")) {
        return Ok(Method::ALL.to_vec());
    }
    let mut out = Vec::new();
    for n in names {
        let m: Method = n.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

/// `1,3,5`, `1-17` or a mix of both.
pub fn parse_k_sweep(text: &str) -> CliResult<Vec<usize>> {
    let bad = || Failure::input(format!("cannot parse k list `{text}`"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_lists() {
        assert_eq!(parse_k_sweep("1-3,5").unwrap(), vec![1, 2, 3, 5]);
        assert!(parse_k_sweep("3-1").is_err());
        assert!(parse_k_sweep("x").is_err());
    }

    #[test]
    fn all_expands() {
        assert_eq!(parse_tasks(&["all".into()]).unwrap().len(), 12);
        assert_eq!(
            parse_signals(&["eye".into(), "EEG".into()]).unwrap().len(),
            2
        );
        assert_eq!(
            parse_methods(&["mi".into(), "rf".into()]).unwrap(),
            vec![Method::Mi, Method::Rf]
        );
        assert_eq!(parse_methods(&["lasso".into()]).unwrap_err().code, 2);
    }

    #[test]
    fn file_keys_are_checked() {
        assert!(toml::from_str::<FileConfig>("k_folds = 3\nloss = \"focal\"").is_ok());
        assert!(toml::from_str::<FileConfig>("kfolds = 3").is_err());
    }
}
