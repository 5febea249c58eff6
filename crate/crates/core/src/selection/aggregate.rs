use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::Tensor2;
use crate::tasks::{Label, LabeledItem};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Max,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(Aggregation::Mean),
            "max" => Ok(Aggregation::Max),
            _ => Err(Error::Invalid(format!(
                "unknown aggregation `{s}` (mean or max)"
            ))),
        }
    }
}

/// One fixed-length vector per example.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregatedDataset {
    pub x: Tensor2,
    pub y: Vec<usize>,
    pub num_classes: usize,
}

impl AggregatedDataset {
    pub fn new(x: Tensor2, y: Vec<usize>, num_classes: usize) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::Invalid(format!(
                "{} rows for {} labels",
                x.rows(),
                y.len()
            )));
        }
        if !x.is_finite() {
            return Err(Error::Invalid(
                "aggregated features contain non-finite values".into(),
            ));
        }
        if let Some(bad) = y.iter().find(|&&c| c >= num_classes) {
            return Err(Error::Invalid(format!(
                "label {bad} outside {num_classes} classes"
            )));
        }
        Ok(Self { x, y, num_classes })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn select_features(&self, cols: &[usize]) -> AggregatedDataset {
        AggregatedDataset {
            x: self.x.select_cols(cols),
            y: self.y.clone(),
            num_classes: self.num_classes,
        }
    }
}

/// Sentence vectors (mean or max over true-length rows) for class labels;
/// one row per token for tag sequences.
pub fn aggregate<'a>(
    items: impl IntoIterator<Item = &'a LabeledItem>,
    num_classes: usize,
    how: Aggregation,
    features: Option<&[usize]>,
) -> Result<AggregatedDataset> {
    let mut data = Vec::new();
    let mut y = Vec::new();
    let mut d = None;
    for it in items {
        let m = &it.matrix;
        let cols: Vec<usize> = match features {
            Some(f) => f.to_vec(),
            None => (0..m.dim()).collect(),
        };
        d = Some(cols.len());
        match &it.label {
            Label::Class(c) => {
                for &j in &cols {
                    let column = (0..m.len).map(|r| m.h.get(r, j));
                    let v = match how {
                        Aggregation::Mean => column.sum::<f64>() / m.len as f64,
                        Aggregation::Max => column.fold(f64::NEG_INFINITY, f64::max),
                    };
                    data.push(v);
                }
                y.push(*c);
            }
            Label::Sequence(tags) => {
                for (r, &tag) in tags.iter().enumerate() {
                    data.extend(cols.iter().map(|&j| m.h.get(r, j)));
                    y.push(tag);
                }
            }
        }
    }
    let d = d.unwrap_or(0);
    AggregatedDataset::new(Tensor2::from_vec(y.len(), d, data)?, y, num_classes)
}
