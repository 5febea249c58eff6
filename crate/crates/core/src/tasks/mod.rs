//! Label construction for the twelve bridging tasks.

mod binning;
mod dataset;
mod spec;
mod values;

pub use binning::{Bin3, BIN_LABELS};
pub use dataset::{
    build_targets, Label, LabeledDataset, LabeledItem, Labeling, RawTarget, ResolvedLabels,
    TargetItem, TargetOptions, TaskTargets, OTHER_TAG,
};
pub use spec::{Requirement, TaskKind, TaskName};
pub use values::{
    connector_count, is_content_tag, lexical_density, normalize_token, number_label, oov_count,
    raw_value, tense_label, word_len, NumberTarget, ValueOptions,
};
