use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The twelve bridging tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskName {
    LD,
    WordLen,
    DP,
    OOV,
    CNC,
    SenLen,
    POS,
    BShift,
    Tense,
    SubjNum,
    ObjNum,
    DCC,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    ThreeClass,
    Binary,
    Sequence,
}

/// Inputs a task reads beyond the tokens and signals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Requirement {
    Pos,
    SenseCounts,
    ComplexNominals,
    Clauses,
    SubjectIndex,
    ObjectIndex,
    /// Tense annotation, or POS tags for the fallback rule.
    TenseOrPos,
    CommonWords,
    Connectors,
}

impl Requirement {
    pub fn field(self) -> &'static str {
        match self {
            Requirement::Pos => "pos",
            Requirement::SenseCounts => "sense_counts",
            Requirement::ComplexNominals => "complex_nominals",
            Requirement::Clauses => "clauses",
            Requirement::SubjectIndex => "subject_index",
            Requirement::ObjectIndex => "object_index",
            Requirement::TenseOrPos => "tense (or pos)",
            Requirement::CommonWords => "common-word list",
            Requirement::Connectors => "connector list",
        }
    }
}

impl TaskName {
    pub const ALL: [TaskName; 12] = [
        TaskName::LD,
        TaskName::WordLen,
        TaskName::DP,
        TaskName::OOV,
        TaskName::CNC,
        TaskName::SenLen,
        TaskName::POS,
        TaskName::BShift,
        TaskName::Tense,
        TaskName::SubjNum,
        TaskName::ObjNum,
        TaskName::DCC,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskName::LD => "LD",
            TaskName::WordLen => "WordLen",
            TaskName::DP => "DP",
            TaskName::OOV => "OOV",
            TaskName::CNC => "CNC",
            TaskName::SenLen => "SenLen",
            TaskName::POS => "POS",
            TaskName::BShift => "BShift",
            TaskName::Tense => "Tense",
            TaskName::SubjNum => "SubjNum",
            TaskName::ObjNum => "ObjNum",
            TaskName::DCC => "DCC",
        }
    }

    /// Kind before looking at data. Tense may drop to binary.
    pub fn kind(self) -> TaskKind {
        match self {
            TaskName::POS => TaskKind::Sequence,
            TaskName::BShift | TaskName::SubjNum | TaskName::ObjNum => TaskKind::Binary,
            _ => TaskKind::ThreeClass,
        }
    }

    pub fn requirements(self) -> &'static [Requirement] {
        use Requirement::*;
        match self {
            TaskName::LD | TaskName::POS => &[Pos],
            TaskName::WordLen | TaskName::SenLen | TaskName::BShift => &[],
            TaskName::DP => &[SenseCounts],
            TaskName::OOV => &[CommonWords],
            TaskName::CNC => &[ComplexNominals, Clauses],
            TaskName::Tense => &[TenseOrPos],
            TaskName::SubjNum => &[SubjectIndex, Pos],
            TaskName::ObjNum => &[ObjectIndex, Pos],
            TaskName::DCC => &[Connectors],
        }
    }

    /// Tasks trained with focal loss by default.
    pub fn imbalanced(self) -> bool {
        matches!(self, TaskName::Tense | TaskName::SubjNum | TaskName::ObjNum)
    }
}

impl fmt::Display for TaskName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        TaskName::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let names: Vec<&str> = TaskName::ALL.iter().map(|t| t.as_str()).collect();
                Error::Invalid(format!(
                    "unknown task `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_and_parsing() {
        assert_eq!(TaskName::POS.kind(), TaskKind::Sequence);
        assert_eq!(TaskName::BShift.kind(), TaskKind::Binary);
        assert_eq!(TaskName::LD.kind(), TaskKind::ThreeClass);
        assert_eq!("wordlen".parse::<TaskName>().unwrap(), TaskName::WordLen);
        assert!("Nope".parse::<TaskName>().is_err());
        for t in TaskName::ALL {
            assert_eq!(t.as_str().parse::<TaskName>().unwrap(), t);
        }
    }
}
