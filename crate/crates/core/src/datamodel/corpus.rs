use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::schema::SignalType;
use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use crate::numerics::Tensor2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tense {
    Present,
    Past,
    Future,
}

impl Tense {
    pub fn as_str(self) -> &'static str {
        match self {
            Tense::Present => "present",
            Tense::Past => "past",
            Tense::Future => "future",
        }
    }
}

/// Sentence-level annotations produced by external tools.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Annotations {
    pub complex_nominals: Option<u32>,
    pub clauses: Option<u32>,
    pub subject_index: Option<usize>,
    pub object_index: Option<usize>,
    pub tense: Option<Tense>,
}

/// One sentence with its per-token signals and annotations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    pub tokens: Vec<String>,
    /// `n × 17`, skipped words carry zeros.
    pub eye: Tensor2,
    /// `n × 8`.
    pub eeg: Tensor2,
    pub pos: Option<Vec<String>>,
    pub sense_counts: Option<Vec<u32>>,
    pub annotations: Annotations,
}

impl SentenceRecord {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn signals(&self, signal: SignalType) -> &Tensor2 {
        match signal {
            SignalType::Eye => &self.eye,
            SignalType::Eeg => &self.eeg,
        }
    }

    fn signals_mut(&mut self, signal: SignalType) -> &mut Tensor2 {
        match signal {
            SignalType::Eye => &mut self.eye,
            SignalType::Eeg => &mut self.eeg,
        }
    }

    /// Checks the per-token structures against the token count.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::sentence(&self.id, "sentence has no tokens"));
        }
        for signal in SignalType::ALL {
            let m = self.signals(signal);
            if m.shape() != (n, signal.dim()) {
                return Err(Error::sentence(
                    &self.id,
                    format!(
                        "{signal} signals are {}x{}, expected {n}x{}",
                        m.rows(),
                        m.cols(),
                        signal.dim()
                    ),
                ));
            }
            if !m.is_finite() {
                return Err(Error::sentence(
                    &self.id,
                    format!("non-finite {signal} signal"),
                ));
            }
        }
        if let Some(pos) = &self.pos {
            if pos.len() != n {
                return Err(Error::sentence(
                    &self.id,
                    format!("{} POS tags for {n} tokens", pos.len()),
                ));
            }
        }
        if let Some(senses) = &self.sense_counts {
            if senses.len() != n {
                return Err(Error::sentence(
                    &self.id,
                    format!("{} sense counts for {n} tokens", senses.len()),
                ));
            }
        }
        for (field, idx) in [
            ("subject_index", self.annotations.subject_index),
            ("object_index", self.annotations.object_index),
        ] {
            if let Some(i) = idx {
                if i >= n {
                    return Err(Error::sentence(
                        &self.id,
                        format!("{field} {i} out of range for {n} tokens"),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    /// Per-feature z-score with population standard deviation.
    #[default]
    ZScore,
    /// Per-feature rescaling to `[0, 1]`.
    MinMax,
}

impl FromStr for NormMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zscore" | "z-score" => Ok(NormMethod::ZScore),
            "minmax" | "min-max" => Ok(NormMethod::MinMax),
            other => Err(Error::Invalid(format!("unknown normalization `{other}`"))),
        }
    }
}

impl fmt::Display for NormMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormMethod::ZScore => "zscore",
            NormMethod::MinMax => "minmax",
        })
    }
}

/// `x ↦ (x - center) / scale` per feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl FeatureStats {
    fn fit(method: NormMethod, matrices: &[&Tensor2], dim: usize) -> Self {
        let mut center = vec![0.0; dim];
        let mut scale = vec![1.0; dim];
        for j in 0..dim {
            let column = || {
                matrices
                    .iter()
                    .flat_map(|m| (0..m.rows()).map(move |r| m.get(r, j)))
            };
            match method {
                NormMethod::ZScore => {
                    let (sum, count) = column().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
                    let mean = sum / count as f64;
                    let var = column().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
                    let std = var.sqrt();
                    center[j] = mean;
                    scale[j] = if std > 1e-12 { std } else { 1.0 };
                }
                NormMethod::MinMax => {
                    let (lo, hi) = column()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                            (lo.min(v), hi.max(v))
                        });
                    center[j] = lo;
                    scale[j] = if hi - lo > 1e-12 { hi - lo } else { 1.0 };
                }
            }
        }
        Self { center, scale }
    }

    fn apply(&self, m: &mut Tensor2) {
        for r in 0..m.rows() {
            for (j, v) in m.row_mut(r).iter_mut().enumerate() {
                *v = (*v - self.center[j]) / self.scale[j];
            }
        }
    }
}

/// Statistics used to normalise a corpus, tagged with the split they were
/// fitted on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub method: NormMethod,
    pub eye: FeatureStats,
    pub eeg: FeatureStats,
    pub fit_size: usize,
    pub fingerprint: String,
}

impl NormStats {
    pub fn for_signal(&self, signal: SignalType) -> &FeatureStats {
        match signal {
            SignalType::Eye => &self.eye,
            SignalType::Eeg => &self.eeg,
        }
    }
}

/// Order-independent digest of a set of sentence ids.
pub fn split_fingerprint<'a>(ids: impl IntoIterator<Item = &'a str>) -> String {
    let sorted: BTreeSet<&str> = ids.into_iter().collect();
    let joined = sorted.into_iter().collect::<Vec<_>>().join("\n");
    sha256_hex(joined.as_bytes())
}

/// An immutable collection of sentence records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub records: Vec<SentenceRecord>,
    pub norm: Option<NormStats>,
}

impl Corpus {
    pub fn new(records: Vec<SentenceRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            r.validate()?;
            if !seen.insert(r.id.as_str()) {
                return Err(Error::sentence(&r.id, "duplicate sentence id"));
            }
        }
        Ok(Self {
            records,
            norm: None,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Longest sentence; fixes the padded height of every signal matrix.
    pub fn n_max(&self) -> usize {
        self.records
            .iter()
            .map(SentenceRecord::len)
            .max()
            .unwrap_or(0)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.id.as_str())
    }

    /// Returns a copy normalised with statistics fitted on the `fit` ids only.
    pub fn normalize(&self, fit: &HashSet<&str>, method: NormMethod) -> Result<Corpus> {
        let fit_records: Vec<&SentenceRecord> = self
            .records
            .iter()
            .filter(|r| fit.contains(r.id.as_str()))
            .collect();
        if fit_records.is_empty() {
            return Err(Error::Invalid("normalization fit split is empty".into()));
        }
        let stats_for = |signal: SignalType| {
            let ms: Vec<&Tensor2> = fit_records.iter().map(|r| r.signals(signal)).collect();
            FeatureStats::fit(method, &ms, signal.dim())
        };
        let stats = NormStats {
            method,
            eye: stats_for(SignalType::Eye),
            eeg: stats_for(SignalType::Eeg),
            fit_size: fit_records.len(),
            fingerprint: split_fingerprint(fit_records.iter().map(|r| r.id.as_str())),
        };
        let mut records = self.records.clone();
        for r in &mut records {
            for signal in SignalType::ALL {
                stats.for_signal(signal).apply(r.signals_mut(signal));
            }
        }
        Ok(Corpus {
            records,
            norm: Some(stats),
        })
    }
}

/// One sentence's signal rows zero-padded to a fixed height.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalMatrix {
    pub h: Tensor2,
    pub len: usize,
    pub signal_type: SignalType,
}

impl SignalMatrix {
    pub fn n_max(&self) -> usize {
        self.h.rows()
    }

    pub fn dim(&self) -> usize {
        self.h.cols()
    }

    /// The `len × d` unpadded rows.
    pub fn rows(&self) -> Tensor2 {
        self.h.slice_rows(0, self.len)
    }

    /// Zeroes feature `j` in every row.
    pub fn mask_feature(&mut self, j: usize) {
        for r in 0..self.h.rows() {
            self.h.set(r, j, 0.0);
        }
    }

    /// Keeps only the listed feature columns.
    pub fn select_features(&self, cols: &[usize]) -> SignalMatrix {
        SignalMatrix {
            h: self.h.select_cols(cols),
            len: self.len,
            signal_type: self.signal_type,
        }
    }
}

/// Copies rows `0..n` of the record's signals and zero-fills up to `n_max`.
pub fn pad(record: &SentenceRecord, n_max: usize, signal: SignalType) -> Result<SignalMatrix> {
    let n = record.len();
    if n > n_max {
        return Err(Error::sentence(
            &record.id,
            format!("length {n} exceeds padded height {n_max}"),
        ));
    }
    let src = record.signals(signal);
    let d = signal.dim();
    let mut h = Tensor2::zeros(n_max, d);
    h.data_mut()[..n * d].copy_from_slice(src.data());
    Ok(SignalMatrix {
        h,
        len: n,
        signal_type: signal,
    })
}
