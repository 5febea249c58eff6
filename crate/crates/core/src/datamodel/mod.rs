//! Corpus representation, file ingestion, normalization, padding and folds.

mod corpus;
mod folds;
mod io;
mod schema;

pub use corpus::{
    pad, split_fingerprint, Annotations, Corpus, FeatureStats, NormMethod, NormStats,
    SentenceRecord, SignalMatrix, Tense,
};
pub use folds::{make_folds, FoldAssignment};
pub use io::{
    annotation_row, load_corpus, read_annotations, signals_header, write_annotations,
    write_signals, AnnotationRow, Resources,
};
pub use schema::{SignalSchema, SignalType, EEG_DIM, EEG_FEATURES, EYE_DIM, EYE_FEATURES};

#[cfg(test)]
pub(crate) use corpus::fixtures;
