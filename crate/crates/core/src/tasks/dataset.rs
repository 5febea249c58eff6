use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::binning::{Bin3, BIN_LABELS};
use super::spec::{Requirement, TaskKind, TaskName};
use super::values::{number_label, raw_value, tense_label, NumberTarget, ValueOptions};
use crate::datamodel::{
    make_folds, pad, Corpus, FoldAssignment, Resources, SignalMatrix, SignalType, Tense,
};
use crate::error::{Error, Result};

pub const OTHER_TAG: &str = "OTHER";

/// Task target before any fold-dependent fitting.
#[derive(Clone, Debug, PartialEq)]
pub enum RawTarget {
    Value(f64),
    Class(usize),
    Tags(Vec<String>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetItem {
    /// Index into the corpus records.
    pub record: usize,
    pub target: RawTarget,
    /// For shifted BShift items, the first of the two swapped rows.
    pub swap: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Labeling {
    /// Tertiles fitted per training split.
    Binned,
    /// Fixed label names.
    Fixed(Vec<String>),
    /// Tag vocabulary built per training split.
    TagVocab,
}

/// All usable items of one task with their unresolved targets.
#[derive(Clone, Debug)]
pub struct TaskTargets {
    pub task: TaskName,
    pub kind: TaskKind,
    pub labeling: Labeling,
    pub items: Vec<TargetItem>,
    /// Distinct record indices in first-appearance order; folds are drawn
    /// over these so paired items share a fold.
    pub sentences: Vec<usize>,
    pub skipped: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TargetOptions {
    pub values: ValueOptions,
    /// Seed for BShift swap positions.
    pub seed: u64,
}

fn missing_resource(task: TaskName, resources: &Resources) -> Option<Requirement> {
    task.requirements().iter().copied().find(|r| match r {
        Requirement::CommonWords => resources.common_words.is_none(),
        Requirement::Connectors => resources.connectors.is_none(),
        _ => false,
    })
}

fn requirement_list(task: TaskName) -> String {
    task.requirements()
        .iter()
        .map(|r| r.field())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Collects targets for `task`. Records lacking the needed annotations are
/// skipped and counted.
pub fn build_targets(
    task: TaskName,
    corpus: &Corpus,
    resources: &Resources,
    opts: TargetOptions,
) -> Result<TaskTargets> {
    if let Some(req) = missing_resource(task, resources) {
        return Err(Error::task(task, format!("requires the {}", req.field())));
    }
    let mut items = Vec::new();
    let mut skipped = 0;
    let mut labeling = Labeling::Binned;
    match task {
        TaskName::POS => {
            labeling = Labeling::TagVocab;
            for (i, r) in corpus.records.iter().enumerate() {
                match &r.pos {
                    Some(p) => items.push(TargetItem {
                        record: i,
                        target: RawTarget::Tags(p.clone()),
                        swap: None,
                    }),
                    None => skipped += 1,
                }
            }
        }
        TaskName::BShift => {
            labeling = Labeling::Fixed(vec!["original".into(), "shifted".into()]);
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            for (i, r) in corpus.records.iter().enumerate() {
                if r.len() < 2 {
                    skipped += 1;
                    continue;
                }
                let swap = rng.random_range(0..r.len() - 1);
                items.push(TargetItem {
                    record: i,
                    target: RawTarget::Class(0),
                    swap: None,
                });
                items.push(TargetItem {
                    record: i,
                    target: RawTarget::Class(1),
                    swap: Some(swap),
                });
            }
        }
        TaskName::Tense => {
            let mut found = Vec::new();
            for (i, r) in corpus.records.iter().enumerate() {
                match tense_label(r) {
                    Some(t) => found.push((i, t)),
                    None => skipped += 1,
                }
            }
            let mut names = vec!["present".to_string(), "past".to_string()];
            if found.iter().any(|(_, t)| *t == Tense::Future) {
                names.push("future".into());
            }
            for (i, t) in found {
                let class = match t {
                    Tense::Present => 0,
                    Tense::Past => 1,
                    Tense::Future => 2,
                };
                items.push(TargetItem {
                    record: i,
                    target: RawTarget::Class(class),
                    swap: None,
                });
            }
            labeling = Labeling::Fixed(names);
        }
        TaskName::SubjNum | TaskName::ObjNum => {
            let target = if task == TaskName::SubjNum {
                NumberTarget::Subject
            } else {
                NumberTarget::Object
            };
            labeling = Labeling::Fixed(vec!["singular".into(), "plural".into()]);
            for (i, r) in corpus.records.iter().enumerate() {
                match number_label(r, target) {
                    Some(plural) => items.push(TargetItem {
                        record: i,
                        target: RawTarget::Class(plural as usize),
                        swap: None,
                    }),
                    None => skipped += 1,
                }
            }
        }
        _ => {
            for (i, r) in corpus.records.iter().enumerate() {
                match raw_value(task, r, resources, opts.values) {
                    Some(v) => items.push(TargetItem {
                        record: i,
                        target: RawTarget::Value(v),
                        swap: None,
                    }),
                    None => skipped += 1,
                }
            }
        }
    }
    if items.is_empty() {
        return Err(Error::task(
            task,
            format!("no usable sentences; requires {}", requirement_list(task)),
        ));
    }
    if skipped > 0 {
        warn!(
            "{task}: skipped {skipped} sentences lacking {}",
            requirement_list(task)
        );
    }
    let kind = match &labeling {
        Labeling::Fixed(names) if names.len() == 2 => TaskKind::Binary,
        _ => task.kind(),
    };
    let mut sentences = Vec::new();
    for it in &items {
        if sentences.last() != Some(&it.record) {
            sentences.push(it.record);
        }
    }
    Ok(TaskTargets {
        task,
        kind,
        labeling,
        items,
        sentences,
        skipped,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Class(usize),
    Sequence(Vec<usize>),
}

impl Label {
    pub fn class(&self) -> Option<usize> {
        match self {
            Label::Class(c) => Some(*c),
            Label::Sequence(_) => None,
        }
    }

    /// Token labels, or the single sentence label.
    pub fn as_slice(&self) -> &[usize] {
        match self {
            Label::Class(c) => std::slice::from_ref(c),
            Label::Sequence(s) => s,
        }
    }
}

/// Labels of every item under one fold's training split.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedLabels {
    pub labels: Vec<Label>,
    pub vocabulary: Vec<String>,
    pub thresholds: Option<Bin3>,
}

impl TaskTargets {
    pub fn num_sentences(&self) -> usize {
        self.sentences.len()
    }

    /// Folds over the distinct sentences.
    pub fn make_folds(&self, k: usize, seed: u64) -> Result<FoldAssignment> {
        make_folds(self.sentences.len(), k, seed)
    }

    /// Fold id of every item.
    pub fn item_folds(&self, folds: &FoldAssignment) -> Vec<usize> {
        let pos: HashMap<usize, usize> = self
            .sentences
            .iter()
            .enumerate()
            .map(|(p, &r)| (r, p))
            .collect();
        self.items
            .iter()
            .map(|it| folds.fold_of(pos[&it.record]))
            .collect()
    }

    /// Resolves labels with binning thresholds or tag vocabulary fitted on
    /// the items where `is_train` holds.
    pub fn resolve(&self, is_train: &[bool]) -> Result<ResolvedLabels> {
        debug_assert_eq!(is_train.len(), self.items.len());
        match &self.labeling {
            Labeling::Fixed(names) => Ok(ResolvedLabels {
                labels: self
                    .items
                    .iter()
                    .map(|it| match it.target {
                        RawTarget::Class(c) => Label::Class(c),
                        _ => unreachable!("fixed labeling holds classes"),
                    })
                    .collect(),
                vocabulary: names.clone(),
                thresholds: None,
            }),
            Labeling::Binned => {
                let values: Vec<f64> = self
                    .items
                    .iter()
                    .map(|it| match it.target {
                        RawTarget::Value(v) => v,
                        _ => unreachable!("binned labeling holds values"),
                    })
                    .collect();
                let train: Vec<f64> = values
                    .iter()
                    .zip(is_train)
                    .filter(|(_, &t)| t)
                    .map(|(&v, _)| v)
                    .collect();
                let bins = Bin3::fit(&train).ok_or_else(|| {
                    Error::task(
                        self.task,
                        "fewer than 3 distinct values in the training split",
                    )
                })?;
                Ok(ResolvedLabels {
                    labels: values
                        .iter()
                        .map(|&v| Label::Class(bins.assign(v)))
                        .collect(),
                    vocabulary: BIN_LABELS.iter().map(|s| s.to_string()).collect(),
                    thresholds: Some(bins),
                })
            }
            Labeling::TagVocab => {
                let mut seen = BTreeSet::new();
                for (it, &t) in self.items.iter().zip(is_train) {
                    if let (true, RawTarget::Tags(tags)) = (t, &it.target) {
                        seen.extend(tags.iter().cloned());
                    }
                }
                let mut vocabulary: Vec<String> = seen.into_iter().collect();
                let index: HashMap<&str, usize> = vocabulary
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.as_str(), i))
                    .collect();
                let other = vocabulary.len();
                let labels = self
                    .items
                    .iter()
                    .map(|it| match &it.target {
                        RawTarget::Tags(tags) => Label::Sequence(
                            tags.iter()
                                .map(|t| index.get(t.as_str()).copied().unwrap_or(other))
                                .collect(),
                        ),
                        _ => unreachable!("tag labeling holds tags"),
                    })
                    .collect();
                vocabulary.push(OTHER_TAG.to_string());
                Ok(ResolvedLabels {
                    labels,
                    vocabulary,
                    thresholds: None,
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledItem {
    pub sentence_id: String,
    pub record: usize,
    pub matrix: SignalMatrix,
    pub label: Label,
    pub fold: usize,
    pub swap: Option<usize>,
}

/// Items of one task and signal type, labeled for one held-out fold.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub task: TaskName,
    pub kind: TaskKind,
    pub signal_type: SignalType,
    pub vocabulary: Vec<String>,
    pub test_fold: usize,
    pub items: Vec<LabeledItem>,
}

#[derive(Serialize)]
struct DatasetLine<'a> {
    sentence_id: &'a str,
    task: &'a str,
    signal_type: SignalType,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label_sequence: Option<Vec<&'a str>>,
    fold: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    bshift_swap_index: Option<usize>,
}

impl LabeledDataset {
    /// Labels every item against the training folds of `test_fold` and
    /// pads its signals from `corpus`, which should already be normalized
    /// on that training split.
    pub fn build(
        targets: &TaskTargets,
        corpus: &Corpus,
        signal: SignalType,
        n_max: usize,
        folds: &FoldAssignment,
        test_fold: usize,
    ) -> Result<LabeledDataset> {
        let item_folds = targets.item_folds(folds);
        let is_train: Vec<bool> = item_folds.iter().map(|&f| f != test_fold).collect();
        let resolved = targets.resolve(&is_train)?;
        let mut items = Vec::with_capacity(targets.items.len());
        for ((it, label), fold) in targets.items.iter().zip(resolved.labels).zip(item_folds) {
            let record = &corpus.records[it.record];
            let mut matrix = pad(record, n_max, signal)?;
            if let Some(s) = it.swap {
                matrix.h.swap_rows(s, s + 1);
            }
            items.push(LabeledItem {
                sentence_id: record.id.clone(),
                record: it.record,
                matrix,
                label,
                fold,
                swap: it.swap,
            });
        }
        Ok(LabeledDataset {
            task: targets.task,
            kind: targets.kind,
            signal_type: signal,
            vocabulary: resolved.vocabulary,
            test_fold,
            items,
        })
    }

    pub fn num_labels(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn train(&self) -> impl Iterator<Item = &LabeledItem> {
        self.items
            .iter()
            .filter(move |it| it.fold != self.test_fold)
    }

    pub fn test(&self) -> impl Iterator<Item = &LabeledItem> {
        self.items
            .iter()
            .filter(move |it| it.fold == self.test_fold)
    }

    /// Items per label (token-level for sequence tasks).
    pub fn label_counts<'a>(&self, items: impl Iterator<Item = &'a LabeledItem>) -> Vec<usize> {
        let mut c = vec![0; self.vocabulary.len()];
        for it in items {
            for &l in it.label.as_slice() {
                c[l] += 1;
            }
        }
        c
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for it in &self.items {
            let (label, label_sequence) = match &it.label {
                Label::Class(c) => (Some(self.vocabulary[*c].as_str()), None),
                Label::Sequence(s) => (
                    None,
                    Some(s.iter().map(|&c| self.vocabulary[c].as_str()).collect()),
                ),
            };
            let line = DatasetLine {
                sentence_id: &it.sentence_id,
                task: self.task.as_str(),
                signal_type: self.signal_type,
                label,
                label_sequence,
                fold: it.fold,
                bshift_swap_index: it.swap,
            };
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl()?.as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::fixtures::record;

    fn corpus(lengths: &[usize]) -> Corpus {
        Corpus::new(
            lengths
                .iter()
                .enumerate()
                .map(|(i, &n)| record(&format!("s{i}"), n, i as f64))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn bshift_balanced_with_one_transposition() {
        let c = corpus(&[2, 3, 4, 5, 6, 2, 3, 7, 8, 9]);
        let t = build_targets(
            TaskName::BShift,
            &c,
            &Resources::default(),
            TargetOptions::default(),
        )
        .unwrap();
        assert_eq!(t.items.len(), 20);
        assert_eq!(t.sentences.len(), 10);
        let folds = t.make_folds(5, 1).unwrap();
        let ds = LabeledDataset::build(&t, &c, SignalType::Eye, c.n_max(), &folds, 0).unwrap();
        let counts = ds.label_counts(ds.items.iter());
        assert_eq!(counts, vec![10, 10]);
        for pair in ds.items.chunks(2) {
            let (orig, shifted) = (&pair[0], &pair[1]);
            assert_eq!(orig.fold, shifted.fold);
            let differing: Vec<usize> = (0..orig.matrix.n_max())
                .filter(|&r| orig.matrix.h.row(r) != shifted.matrix.h.row(r))
                .collect();
            let s = shifted.swap.unwrap();
            assert_eq!(differing, vec![s, s + 1]);
            if orig.matrix.len == 2 {
                assert_eq!(s, 0);
            }
        }
    }

    #[test]
    fn single_token_sentences_skipped_for_bshift() {
        let c = corpus(&[1, 3]);
        let t = build_targets(
            TaskName::BShift,
            &c,
            &Resources::default(),
            TargetOptions::default(),
        )
        .unwrap();
        assert_eq!((t.items.len(), t.skipped), (2, 1));
    }

    #[test]
    fn pos_vocabulary_from_training_only() {
        let mut c = corpus(&[3, 3, 3]);
        c.records[0].pos = Some(vec!["DT".into(), "NN".into(), "VBD".into()]);
        c.records[1].pos = Some(vec!["DT".into(), "NN".into(), "NN".into()]);
        c.records[2].pos = Some(vec!["UH".into(), "NN".into(), "DT".into()]);
        let t = build_targets(
            TaskName::POS,
            &c,
            &Resources::default(),
            TargetOptions::default(),
        )
        .unwrap();
        let r = t.resolve(&[true, true, false]).unwrap();
        assert_eq!(r.vocabulary, vec!["DT", "NN", "VBD", "OTHER"]);
        assert_eq!(r.labels[2], Label::Sequence(vec![3, 1, 0]));
        assert_eq!(r.labels[0].as_slice().len(), 3);
    }

    #[test]
    fn number_balance_matches_recount() {
        let tags = ["NN", "NNS", "NNP", "NNPS", "VB"];
        let mut c = corpus(&[5; 40]);
        let mut expected = [0usize; 2];
        for (i, r) in c.records.iter_mut().enumerate() {
            let p: Vec<String> = (0..5)
                .map(|j| tags[(i * 7 + j * 3) % 5].to_string())
                .collect();
            let idx = (i * 3) % 5;
            match p[idx].as_str() {
                "NN" | "NNP" => expected[0] += 1,
                "NNS" | "NNPS" => expected[1] += 1,
                _ => {}
            }
            r.pos = Some(p);
            r.annotations.subject_index = Some(idx);
        }
        let t = build_targets(
            TaskName::SubjNum,
            &c,
            &Resources::default(),
            TargetOptions::default(),
        )
        .unwrap();
        let r = t.resolve(&vec![true; t.items.len()]).unwrap();
        let mut got = [0usize; 2];
        for l in &r.labels {
            got[l.class().unwrap()] += 1;
        }
        assert_eq!(got, expected);
        assert_eq!(t.skipped, 40 - expected[0] - expected[1]);
    }

    #[test]
    fn tense_falls_back_to_two_classes() {
        let mut c = corpus(&[2, 2, 2]);
        for (r, tag) in c.records.iter_mut().zip(["VBD", "VBZ", "NN"]) {
            r.pos = Some(vec!["PRP".into(), tag.into()]);
        }
        let t = build_targets(
            TaskName::Tense,
            &c,
            &Resources::default(),
            TargetOptions::default(),
        )
        .unwrap();
        assert_eq!(t.kind, TaskKind::Binary);
        assert_eq!(t.items.len(), 2);
        assert_eq!(t.skipped, 1);
        assert_eq!(t.items[0].target, RawTarget::Class(1));
    }

    #[test]
    fn missing_resource_names_requirement() {
        let c = corpus(&[2]);
        let err = build_targets(
            TaskName::OOV,
            &c,
            &Resources::default(),
            TargetOptions::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("common-word"));
        let err = build_targets(
            TaskName::DP,
            &c,
            &Resources::default(),
            TargetOptions::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("sense_counts"));
    }

    #[test]
    fn binned_thresholds_use_training_split_and_serialize() {
        let c = corpus(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
        let t = build_targets(
            TaskName::SenLen,
            &c,
            &Resources::default(),
            TargetOptions::default(),
        )
        .unwrap();
        let folds = t.make_folds(2, 9).unwrap();
        let ds = LabeledDataset::build(&t, &c, SignalType::Eeg, 10, &folds, 1).unwrap();
        let train: Vec<f64> = ds.train().map(|it| it.matrix.len as f64).collect();
        let bins = Bin3::fit(&train).unwrap();
        for it in &ds.items {
            assert_eq!(it.label, Label::Class(bins.assign(it.matrix.len as f64)));
        }
        let text = ds.to_jsonl().unwrap();
        assert_eq!(text.lines().count(), 10);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["task"], "SenLen");
        assert_eq!(first["signal_type"], "eeg");
        assert!(first.get("bshift_swap_index").is_none());
    }
}
