//! Synthetic corpora with one planted informative feature.

use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::datamodel::{
    write_annotations, write_signals, Annotations, Corpus, SentenceRecord, SignalType, Tense,
};
use crate::error::{Error, Result};
use crate::numerics::seed::derive_seed;
use crate::numerics::Tensor2;
use crate::tasks::{TaskKind, TaskName};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlantMode {
    /// Feature `j` is shifted by `(c - (C-1)/2) * effect` at every token.
    MeanShift,
    /// Feature `j` follows a zero-mean linear ramp across the sentence whose
    /// slope sign depends on the class, so sentence means are uninformative.
    Ordered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    /// 17 plants into eye-tracking signals, 8 into EEG.
    pub d: usize,
    pub planted: usize,
    pub effect: f64,
    pub noise: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub m: usize,
    pub kind: TaskKind,
    pub mode: PlantMode,
    /// Weight of a per-token noise term shared by all features.
    pub shared_noise: f64,
    pub seed: u64,
}

impl PlantSpec {
    pub fn new(d: usize, planted: usize, effect: f64, m: usize, seed: u64) -> Self {
        Self {
            d,
            planted,
            effect,
            noise: 1.0,
            min_len: 6,
            max_len: 14,
            m,
            kind: TaskKind::ThreeClass,
            mode: PlantMode::MeanShift,
            shared_noise: 0.0,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn signal_type(&self) -> Result<SignalType> {
        SignalType::from_dim(self.d)
            .ok_or_else(|| Error::Invalid(format!("d must be 17 or 8, got {}", self.d)))
    }

    pub fn num_classes(&self) -> usize {
        match self.kind {
            TaskKind::ThreeClass => 3,
            TaskKind::Binary | TaskKind::Sequence => 2,
        }
    }

    /// Task whose labels carry the planted signal once the corpus is
    /// written and re-read: tense for sentence kinds, POS for sequences.
    pub fn task(&self) -> TaskName {
        match self.kind {
            TaskKind::Sequence => TaskName::POS,
            _ => TaskName::Tense,
        }
    }

    fn validate(&self) -> Result<()> {
        self.signal_type()?;
        if self.planted >= self.d {
            return Err(Error::Invalid(format!(
                "planted feature {} outside 0..{}",
                self.planted, self.d
            )));
        }
        if !(self.effect >= 0.0) || !(self.noise > 0.0) || !(self.shared_noise >= 0.0) {
            return Err(Error::Invalid(
                "effect and noise must be non-negative, noise > 0".into(),
            ));
        }
        if self.m < 30 {
            return Err(Error::Invalid(format!(
                "synthetic corpora need m >= 30, got {}",
                self.m
            )));
        }
        if self.min_len < 2 || self.min_len > self.max_len {
            return Err(Error::Invalid(format!(
                "sentence length range {}..={} invalid",
                self.min_len, self.max_len
            )));
        }
        Ok(())
    }
}

/// A generated corpus with its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Synthetic {
    pub spec: PlantSpec,
    pub corpus: Corpus,
    /// Sentence class of every record.
    pub classes: Vec<usize>,
}

const WORDS: [&str; 24] = [
    "the",
    "a",
    "cat",
    "dog",
    "river",
    "city",
    "walked",
    "saw",
    "quickly",
    "old",
    "house",
    "because",
    "however",
    "and",
    "of",
    "in",
    "green",
    "ideas",
    "sleep",
    "furiously",
    "music",
    "letter",
    "therefore",
    "garden",
];
const COMMON: [&str; 12] = [
    "the", "a", "cat", "dog", "city", "walked", "saw", "old", "house", "and", "of", "in",
];
const CONNECTORS: [&str; 4] = ["because", "however", "therefore", "as a result"];
const NOISE_TAGS: [&str; 8] = ["DT", "NN", "NNS", "VBZ", "VBD", "JJ", "RB", "IN"];
const SEQ_TAGS: [&str; 2] = ["NN", "VB"];

fn tense_of(class: usize) -> Tense {
    [Tense::Present, Tense::Past, Tense::Future][class]
}

/// Draws a corpus; identical specs give identical corpora.
pub fn generate(spec: &PlantSpec) -> Result<Synthetic> {
    spec.validate()?;
    let planted_signal = spec.signal_type()?;
    let classes_n = spec.num_classes();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[0x5eed]));
    let mut records = Vec::with_capacity(spec.m);
    let mut classes = Vec::with_capacity(spec.m);
    let centre = (classes_n as f64 - 1.0) / 2.0;
    for s in 0..spec.m {
        let n = rng.random_range(spec.min_len..=spec.max_len);
        let class = rng.random_range(0..classes_n);
        let mut signals = Vec::with_capacity(2);
        let mut seq_tags = Vec::new();
        for signal in SignalType::ALL {
            let d = signal.dim();
            let mut m = Tensor2::zeros(n, d);
            for t in 0..n {
                let shared: f64 = rng.sample::<f64, _>(StandardNormal) * spec.shared_noise;
                for j in 0..d {
                    let z: f64 = rng.sample(StandardNormal);
                    m.set(t, j, spec.noise * z + shared);
                }
            }
            if signal == planted_signal {
                let j = spec.planted;
                for t in 0..n {
                    let shift = match (spec.kind, spec.mode) {
                        (TaskKind::Sequence, _) => {
                            let y = rng.random_range(0..2usize);
                            seq_tags.push(SEQ_TAGS[y].to_string());
                            (y as f64 - 0.5) * spec.effect
                        }
                        (_, PlantMode::MeanShift) => (class as f64 - centre) * spec.effect,
                        (_, PlantMode::Ordered) => {
                            let pos = 2.0 * t as f64 / (n - 1) as f64 - 1.0;
                            (class as f64 - centre) * spec.effect * pos
                        }
                    };
                    m.set(t, j, m.get(t, j) + shift);
                }
            }
            signals.push(m);
        }
        let eeg = signals.pop().unwrap();
        let eye = signals.pop().unwrap();

        let tokens: Vec<String> = (0..n)
            .map(|_| WORDS.choose(&mut rng).unwrap().to_string())
            .collect();
        let pos: Vec<String> = if spec.kind == TaskKind::Sequence {
            seq_tags
        } else {
            (0..n)
                .map(|_| NOISE_TAGS.choose(&mut rng).unwrap().to_string())
                .collect()
        };
        let nominal: Vec<usize> = (0..n).filter(|&i| pos[i].starts_with("NN")).collect();
        let subject_index = nominal.first().copied();
        let object_index = nominal.get(1).copied();
        let sense_counts: Vec<u32> = (0..n).map(|_| rng.random_range(1..=6u32)).collect();
        let annotations = Annotations {
            complex_nominals: Some(rng.random_range(0..=4)),
            clauses: Some(rng.random_range(1..=3)),
            subject_index,
            object_index,
            tense: Some(tense_of(class)),
        };
        records.push(SentenceRecord {
            id: format!("syn{s:05}"),
            tokens,
            eye,
            eeg,
            pos: Some(pos),
            sense_counts: Some(sense_counts),
            annotations,
        });
        classes.push(class);
    }
    Ok(Synthetic {
        spec: spec.clone(),
        corpus: Corpus::new(records)?,
        classes,
    })
}

/// Writes `signals.tsv`, `annotations.jsonl`, `common_words.txt` and
/// `connectors.txt` into `dir`.
pub fn write_files(synthetic: &Synthetic, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_signals(&synthetic.corpus, &dir.join("signals.tsv"))?;
    write_annotations(&synthetic.corpus, &dir.join("annotations.jsonl"))?;
    let list = |items: &[&str]| items.iter().map(|w| format!("{w}\n")).collect::<String>();
    for (name, body) in [
        ("common_words.txt", list(&COMMON)),
        ("connectors.txt", list(&CONNECTORS)),
    ] {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

/// Resources matching the generated vocabulary.
pub fn resources() -> crate::datamodel::Resources {
    crate::datamodel::Resources::default()
        .with_common_words(COMMON)
        .with_connectors(CONNECTORS)
}

/// Index of the best score; ties go to the lower index.
pub fn top1(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Fraction of `repetitions` fresh seeds for which `method` scores the
/// planted feature highest. `method` returns one score per feature, higher
/// meaning more important.
pub fn recovery_rate(
    spec: &PlantSpec,
    repetitions: usize,
    method: impl Fn(&Synthetic) -> Result<Vec<f64>>,
) -> Result<f64> {
    if repetitions == 0 {
        return Err(Error::Invalid(
            "recovery rate needs at least one repetition".into(),
        ));
    }
    let mut hits = 0;
    for rep in 0..repetitions {
        let s = generate(&spec.with_seed(derive_seed(spec.seed, &[rep as u64])))?;
        if top1(&method(&s)?) == spec.planted {
            hits += 1;
        }
    }
    Ok(hits as f64 / repetitions as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class_means(s: &Synthetic, j: usize) -> Vec<f64> {
        let mut sum = vec![0.0; s.spec.num_classes()];
        let mut cnt = vec![0usize; s.spec.num_classes()];
        for (r, &c) in s.corpus.records.iter().zip(&s.classes) {
            let m = r.signals(s.spec.signal_type().unwrap());
            sum[c] += m.column(j).iter().sum::<f64>() / r.len() as f64;
            cnt[c] += 1;
        }
        sum.iter().zip(&cnt).map(|(s, &c)| s / c as f64).collect()
    }

    #[test]
    fn mean_shift_recount() {
        let s = generate(&PlantSpec::new(17, 4, 2.0, 600, 7)).unwrap();
        let m = class_means(&s, 4);
        assert!((m[2] - m[0] - 4.0).abs() < 0.3, "{m:?}");
        let other = class_means(&s, 5);
        assert!((other[2] - other[0]).abs() < 0.3, "{other:?}");
    }

    #[test]
    fn ordered_plant_has_flat_sentence_means() {
        let mut spec = PlantSpec::new(8, 2, 2.0, 300, 3);
        spec.mode = PlantMode::Ordered;
        let s = generate(&spec).unwrap();
        let m = class_means(&s, 2);
        assert!((m[2] - m[0]).abs() < 0.3, "{m:?}");
    }

    #[test]
    fn deterministic_and_valid() {
        let spec = PlantSpec::new(8, 1, 1.0, 40, 11);
        let a = generate(&spec).unwrap();
        assert_eq!(a, generate(&spec).unwrap());
        assert_ne!(a.corpus, generate(&spec.with_seed(12)).unwrap().corpus);
        for r in &a.corpus.records {
            r.validate().unwrap();
        }
    }

    #[test]
    fn sequence_tags_follow_sign() {
        let mut spec = PlantSpec::new(8, 0, 4.0, 60, 2);
        spec.kind = TaskKind::Sequence;
        let s = generate(&spec).unwrap();
        let mut agree = 0;
        let mut total = 0;
        for r in &s.corpus.records {
            for (t, tag) in r.pos.as_ref().unwrap().iter().enumerate() {
                let positive = r.eeg.get(t, 0) > 0.0;
                agree += (positive == (tag == "VB")) as usize;
                total += 1;
            }
        }
        assert!(agree as f64 / total as f64 > 0.9);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate(&PlantSpec::new(10, 0, 1.0, 100, 0)).is_err());
        assert!(generate(&PlantSpec::new(8, 8, 1.0, 100, 0)).is_err());
        assert!(generate(&PlantSpec::new(8, 0, 1.0, 10, 0)).is_err());
    }

    #[test]
    fn files_reload() {
        let dir = tempfile::tempdir().unwrap();
        let s = generate(&PlantSpec::new(17, 3, 2.0, 30, 1)).unwrap();
        write_files(&s, dir.path()).unwrap();
        let c = crate::datamodel::load_corpus(
            &dir.path().join("signals.tsv"),
            &dir.path().join("annotations.jsonl"),
        )
        .unwrap();
        assert_eq!(c, s.corpus);
        let r = crate::datamodel::Resources::load(
            Some(&dir.path().join("common_words.txt")),
            Some(&dir.path().join("connectors.txt")),
        )
        .unwrap();
        assert_eq!(r, resources());
    }

    #[test]
    fn null_effect_top1_spread() {
        let spec = PlantSpec::new(8, 3, 0.0, 60, 5);
        let rate = recovery_rate(&spec, 3, |s| {
            Ok(class_means(s, 0).iter().map(|_| 0.0).collect())
        })
        .unwrap();
        // all-tied scores resolve to feature 0, never the planted 3
        assert_eq!(rate, 0.0);
    }
}
