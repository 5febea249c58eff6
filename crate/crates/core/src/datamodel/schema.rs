use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Eye-tracking feature columns, grouped EARLY, LATE, CONTEXT.
pub const EYE_FEATURES: [&str; 17] = [
    "FFD", "FPD", "NFIX", "FP", "MFD", "TFD", "NR", "RRP", "TRD", "w-2FP", "w-1FP", "w+1FP",
    "w+2FP", "w-2FD", "w-1FD", "w+1FD", "w+2FD",
];

/// EEG band-power columns, theta1 through gamma2.
pub const EEG_FEATURES: [&str; 8] = ["t1", "t2", "a1", "a2", "b1", "b2", "g1", "g2"];

pub const EYE_DIM: usize = EYE_FEATURES.len();
pub const EEG_DIM: usize = EEG_FEATURES.len();

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalType {
    Eye,
    Eeg,
}

impl SignalType {
    pub const ALL: [SignalType; 2] = [SignalType::Eye, SignalType::Eeg];

    pub fn schema(self) -> SignalSchema {
        SignalSchema {
            signal_type: self,
            feature_names: match self {
                SignalType::Eye => &EYE_FEATURES,
                SignalType::Eeg => &EEG_FEATURES,
            },
        }
    }

    pub fn dim(self) -> usize {
        self.schema().dim()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SignalType::Eye => "eye",
            SignalType::Eeg => "eeg",
        }
    }

    /// Signal type whose schema has `d` features.
    pub fn from_dim(d: usize) -> Option<Self> {
        match d {
            EYE_DIM => Some(SignalType::Eye),
            EEG_DIM => Some(SignalType::Eeg),
            _ => None,
        }
    }
}

impl fmt::Display for SignalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "eye" => Ok(SignalType::Eye),
            "eeg" => Ok(SignalType::Eeg),
            other => Err(Error::Invalid(format!(
                "unknown signal type `{other}` (expected eye or eeg)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignalSchema {
    pub signal_type: SignalType,
    pub feature_names: &'static [&'static str],
}

impl SignalSchema {
    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| *n == name)
    }
}
