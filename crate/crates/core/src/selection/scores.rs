use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datamodel::SignalType;
use crate::error::{Error, Result};
use crate::tasks::TaskName;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Attention,
    Mi,
    Rfe,
    Rf,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Attention, Method::Mi, Method::Rfe, Method::Rf];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Attention => "attention",
            Method::Mi => "mi",
            Method::Rfe => "rfe",
            Method::Rf => "rf",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "unknown feature-selection method `{s}` (expected attention, mi, rfe or rf)"
                ))
            })
    }
}

/// Per-feature importance from one method, in schema order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceScores {
    pub method: Method,
    pub task: TaskName,
    pub signal_type: SignalType,
    pub feature_names: Vec<String>,
    /// Scores (higher is better), or ranks 1..d when `is_rank`.
    pub values: Vec<f64>,
    pub is_rank: bool,
    pub normalized: bool,
}

impl ImportanceScores {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values oriented so that larger is better.
    pub fn merit(&self) -> Vec<f64> {
        if self.is_rank {
            self.values.iter().map(|r| -r).collect()
        } else {
            self.values.clone()
        }
    }

    /// Feature indices from best to worst; ties keep schema order.
    pub fn ranking(&self) -> Vec<usize> {
        let merit = self.merit();
        let mut idx: Vec<usize> = (0..merit.len()).collect();
        idx.sort_by(|&a, &b| merit[b].total_cmp(&merit[a]).then(a.cmp(&b)));
        idx
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_scores_csv(std::slice::from_ref(self), path)
    }
}

/// The `k` best features, listed best first.
pub fn top_k(scores: &ImportanceScores, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > scores.len() {
        return Err(Error::Invalid(format!(
            "k = {k} outside 1..={} features",
            scores.len()
        )));
    }
    let mut r = scores.ranking();
    r.truncate(k);
    Ok(r)
}

/// Rescales non-negative scores to sum 1; all-zero input becomes uniform.
pub fn normalize_scores(values: &mut [f64]) {
    let total: f64 = values.iter().sum();
    if total > 0.0 {
        values.iter_mut().for_each(|v| *v /= total);
    } else {
        let u = 1.0 / values.len() as f64;
        values.iter_mut().for_each(|v| *v = u);
    }
}

#[derive(Serialize)]
struct ScoreRow<'a> {
    method: &'a str,
    task: &'a str,
    signal_type: &'a str,
    feature: &'a str,
    score_or_rank: f64,
}

pub fn write_scores_csv(all: &[ImportanceScores], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in all {
        for (name, &v) in s.feature_names.iter().zip(&s.values) {
            w.serialize(ScoreRow {
                method: s.method.as_str(),
                task: s.task.as_str(),
                signal_type: s.signal_type.as_str(),
                feature: name,
                score_or_rank: v,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(values: Vec<f64>, is_rank: bool) -> ImportanceScores {
        ImportanceScores {
            method: Method::Mi,
            task: TaskName::LD,
            signal_type: SignalType::Eeg,
            feature_names: (0..values.len()).map(|i| format!("f{i}")).collect(),
            values,
            is_rank,
            normalized: false,
        }
    }

    #[test]
    fn top_k_rules() {
        let s = scores(vec![0.1, 0.4, 0.4, 0.1], false);
        assert_eq!(top_k(&s, 1).unwrap(), vec![1]);
        assert_eq!(top_k(&s, 4).unwrap(), vec![1, 2, 0, 3]);
        assert!(top_k(&s, 5).is_err());
        assert!(top_k(&s, 0).is_err());
        let r = scores(vec![3.0, 1.0, 2.0], true);
        assert_eq!(top_k(&r, 2).unwrap(), vec![1, 2]);
    }

    #[test]
    fn normalization() {
        let mut v = vec![1.0, 3.0];
        normalize_scores(&mut v);
        assert_eq!(v, vec![0.25, 0.75]);
        let mut z = vec![0.0; 4];
        normalize_scores(&mut z);
        assert_eq!(z, vec![0.25; 4]);
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("lasso".parse::<Method>().is_err());
    }
}
