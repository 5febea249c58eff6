use std::path::Path;

use serde::{Deserialize, Serialize};

use cogbridge::datamodel::{load_corpus, Corpus, Resources};

use crate::failure::{CliResult, Failure};
use crate::manifest::write_atomic;

pub const ARCHIVE_FILE: &str = "corpus.json";
pub const ARCHIVE_VERSION: u32 = 1;

/// A validated corpus with its word lists, as written by `ingest`.
#[derive(Debug, Serialize, Deserialize)]
pub struct CorpusArchive {
    pub version: u32,
    pub corpus: Corpus,
    /// Sorted.
    pub common_words: Option<Vec<String>>,
    pub connectors: Option<Vec<String>>,
}

impl CorpusArchive {
    pub fn new(corpus: Corpus, resources: &Resources) -> Self {
        let common_words = resources.common_words.as_ref().map(|w| {
            let mut w: Vec<String> = w.iter().cloned().collect();
            w.sort();
            w
        });
        let connectors = resources
            .connectors
            .as_ref()
            .map(|c| c.iter().map(|words| words.join(" ")).collect());
        Self {
            version: ARCHIVE_VERSION,
            corpus,
            common_words,
            connectors,
        }
    }

    pub fn resources(&self) -> Resources {
        let mut r = Resources::default();
        if let Some(w) = &self.common_words {
            r = r.with_common_words(w);
        }
        if let Some(c) = &self.connectors {
            r = r.with_connectors(c);
        }
        r
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        serde_json::to_vec(self).map_err(|e| Failure::internal(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        let mut a: CorpusArchive = serde_json::from_slice(&bytes).map_err(|e| {
            Failure::input(format!("{}: not a corpus archive: {e}", path.display()))
        })?;
        if a.version != ARCHIVE_VERSION {
            return Err(Failure::input(format!(
                "{}: archive version {} not supported",
                path.display(),
                a.version
            )));
        }
        a.corpus = Corpus::new(a.corpus.records)?;
        Ok(a)
    }
}

fn optional(dir: &Path, name: &str) -> Option<std::path::PathBuf> {
    let p = dir.join(name);
    p.is_file().then_some(p)
}

/// Loads `--corpus`: an archive file, an ingest directory, or a directory
/// with signals.tsv and annotations.jsonl (plus optional word lists).
/// Returns the corpus, its resources and the files read.
pub fn open_corpus(path: &Path) -> CliResult<(Corpus, Resources, Vec<std::path::PathBuf>)> {
    if path.is_file() {
        let a = CorpusArchive::load(path)?;
        let r = a.resources();
        return Ok((a.corpus, r, vec![path.to_path_buf()]));
    }
    if !path.is_dir() {
        return Err(Failure::input(format!(
            "corpus {} does not exist",
            path.display()
        )));
    }
    if let Some(p) = optional(path, ARCHIVE_FILE) {
        return open_corpus(&p);
    }
    let signals = path.join("signals.tsv");
    let annotations = path.join("annotations.jsonl");
    if !signals.is_file() || !annotations.is_file() {
        return Err(Failure::input(format!(
            "{} holds neither {ARCHIVE_FILE} nor signals.tsv + annotations.jsonl",
            path.display()
        )));
    }
    let corpus = load_corpus(&signals, &annotations)?;
    let words = optional(path, "common_words.txt");
    let connectors = optional(path, "connectors.txt");
    let resources = Resources::load(words.as_deref(), connectors.as_deref())?;
    let mut read = vec![signals, annotations];
    read.extend(words);
    read.extend(connectors);
    Ok((corpus, resources, read))
}
