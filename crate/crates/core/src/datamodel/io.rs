//! Tab-separated signal files, JSON-lines annotation files and plain
//! word-list resources.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::corpus::{Annotations, Corpus, SentenceRecord, Tense};
use super::schema::{SignalType, EEG_FEATURES, EYE_FEATURES};
use crate::error::{Error, Result};
use crate::numerics::Tensor2;

const KEY_COLUMNS: [&str; 3] = ["sentence_id", "token_index", "token"];

/// Header line of a signals file, without the trailing newline.
pub fn signals_header() -> String {
    KEY_COLUMNS
        .iter()
        .chain(EYE_FEATURES.iter())
        .chain(EEG_FEATURES.iter())
        .copied()
        .collect::<Vec<_>>()
        .join("\t")
}

/// One JSON-lines annotation object.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub sentence_id: String,
    #[serde(default)]
    pub pos: Option<Vec<String>>,
    #[serde(default)]
    pub sense_counts: Option<Vec<u32>>,
    #[serde(default)]
    pub complex_nominals: Option<u32>,
    #[serde(default)]
    pub clauses: Option<u32>,
    #[serde(default)]
    pub subject_index: Option<usize>,
    #[serde(default)]
    pub object_index: Option<usize>,
    #[serde(default)]
    pub tense: Option<Tense>,
}

struct TokenRow {
    line: usize,
    index: usize,
    token: String,
    eye: [f64; 17],
    eeg: [f64; 8],
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Column position of every expected field in the header.
struct Layout {
    key: [usize; 3],
    eye: [usize; 17],
    eeg: [usize; 8],
    width: usize,
}

fn layout(path: &Path, header: &str) -> Result<Layout> {
    let cols: Vec<&str> = header.trim_end_matches(['\r', '\n']).split('\t').collect();
    let known: HashSet<&str> = KEY_COLUMNS
        .iter()
        .chain(EYE_FEATURES.iter())
        .chain(EEG_FEATURES.iter())
        .copied()
        .collect();
    if let Some(unknown) = cols.iter().find(|c| !known.contains(*c)) {
        return Err(parse_err(path, 1, format!("unknown column `{unknown}`")));
    }
    let find = |name: &str| -> Result<usize> {
        let hits: Vec<usize> = cols
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == name)
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [i] => Ok(*i),
            [] => Err(parse_err(path, 1, format!("missing column `{name}`"))),
            _ => Err(parse_err(path, 1, format!("duplicate column `{name}`"))),
        }
    };
    let mut key = [0; 3];
    for (k, name) in KEY_COLUMNS.iter().enumerate() {
        key[k] = find(name)?;
    }
    let mut eye = [0; 17];
    for (k, name) in EYE_FEATURES.iter().enumerate() {
        eye[k] = find(name)?;
    }
    let mut eeg = [0; 8];
    for (k, name) in EEG_FEATURES.iter().enumerate() {
        eeg[k] = find(name)?;
    }
    Ok(Layout {
        key,
        eye,
        eeg,
        width: cols.len(),
    })
}

fn parse_value(path: &Path, line: usize, column: &str, raw: &str) -> Result<f64> {
    let raw = raw.trim();
    // Unfixated words are exported with empty cells; they count as zero.
    if raw.is_empty() {
        return Ok(0.0);
    }
    let v: f64 = raw.parse().map_err(|_| {
        parse_err(
            path,
            line,
            format!("column `{column}`: cannot parse `{raw}`"),
        )
    })?;
    if !v.is_finite() {
        return Err(parse_err(
            path,
            line,
            format!("column `{column}`: non-finite value"),
        ));
    }
    Ok(v)
}

/// Reads a signals file into `(sentence id, token rows)` in file order.
fn read_signals(path: &Path) -> Result<Vec<(String, Vec<TokenRow>)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| Error::io(path, e))?,
        None => return Err(parse_err(path, 1, "empty signals file")),
    };
    let layout = layout(path, header.trim_start_matches('\u{feff}'))?;

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<TokenRow>> = HashMap::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != layout.width {
            return Err(parse_err(
                path,
                lineno,
                format!("{} cells, header has {}", cells.len(), layout.width),
            ));
        }
        let sid = cells[layout.key[0]].to_string();
        let index: usize = cells[layout.key[1]].trim().parse().map_err(|_| {
            parse_err(
                path,
                lineno,
                format!("bad token_index `{}`", cells[layout.key[1]]),
            )
        })?;
        let mut eye = [0.0; 17];
        for (k, &c) in layout.eye.iter().enumerate() {
            eye[k] = parse_value(path, lineno, EYE_FEATURES[k], cells[c])?;
        }
        let mut eeg = [0.0; 8];
        for (k, &c) in layout.eeg.iter().enumerate() {
            eeg[k] = parse_value(path, lineno, EEG_FEATURES[k], cells[c])?;
        }
        let row = TokenRow {
            line: lineno,
            index,
            token: cells[layout.key[2]].to_string(),
            eye,
            eeg,
        };
        match groups.get_mut(&sid) {
            Some(g) => g.push(row),
            None => {
                order.push(sid.clone());
                groups.insert(sid, vec![row]);
            }
        }
    }
    let mut out = Vec::with_capacity(order.len());
    for sid in order {
        let mut rows = groups.remove(&sid).unwrap();
        rows.sort_by_key(|r| r.index);
        for (expected, r) in rows.iter().enumerate() {
            if r.index != expected {
                return Err(parse_err(
                    path,
                    r.line,
                    format!(
                        "sentence `{sid}`: token_index {} where {expected} expected",
                        r.index
                    ),
                ));
            }
        }
        out.push((sid, rows));
    }
    Ok(out)
}

/// Reads a JSON-lines annotation file, returning the rows with their line
/// numbers.
pub fn read_annotations(path: &Path) -> Result<Vec<(usize, AnnotationRow)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: AnnotationRow = serde_json::from_str(&line)
            .map_err(|e| parse_err(path, i + 1, format!("invalid annotation: {e}")))?;
        out.push((i + 1, row));
    }
    Ok(out)
}

/// Loads and cross-checks a signals file against its annotations.
pub fn load_corpus(signals_path: &Path, annotations_path: &Path) -> Result<Corpus> {
    let sentences = read_signals(signals_path)?;
    let mut annotations: HashMap<String, (usize, AnnotationRow)> = HashMap::new();
    for (line, row) in read_annotations(annotations_path)? {
        if annotations.contains_key(&row.sentence_id) {
            return Err(parse_err(
                annotations_path,
                line,
                format!("duplicate annotation for sentence `{}`", row.sentence_id),
            ));
        }
        annotations.insert(row.sentence_id.clone(), (line, row));
    }

    let mut records = Vec::with_capacity(sentences.len());
    for (sid, rows) in sentences {
        let Some((line, ann)) = annotations.remove(&sid) else {
            return Err(Error::sentence(&sid, "no annotation row"));
        };
        let n = rows.len();
        let count_err = |what: &str, got: usize| {
            parse_err(
                annotations_path,
                line,
                format!("sentence `{sid}`: {got} {what} for {n} tokens"),
            )
        };
        if let Some(pos) = &ann.pos {
            if pos.len() != n {
                return Err(count_err("POS tags", pos.len()));
            }
        }
        if let Some(s) = &ann.sense_counts {
            if s.len() != n {
                return Err(count_err("sense counts", s.len()));
            }
        }
        let eye = Tensor2::from_vec(n, 17, rows.iter().flat_map(|r| r.eye).collect())?;
        let eeg = Tensor2::from_vec(n, 8, rows.iter().flat_map(|r| r.eeg).collect())?;
        let record = SentenceRecord {
            id: sid,
            tokens: rows.into_iter().map(|r| r.token).collect(),
            eye,
            eeg,
            pos: ann.pos,
            sense_counts: ann.sense_counts,
            annotations: Annotations {
                complex_nominals: ann.complex_nominals,
                clauses: ann.clauses,
                subject_index: ann.subject_index,
                object_index: ann.object_index,
                tense: ann.tense,
            },
        };
        record.validate().map_err(|e| match e {
            Error::Sentence { sentence, message } => parse_err(
                annotations_path,
                line,
                format!("sentence `{sentence}`: {message}"),
            ),
            other => other,
        })?;
        records.push(record);
    }
    if let Some(extra) = annotations.keys().min() {
        return Err(Error::sentence(
            extra.clone(),
            "annotation without signal rows",
        ));
    }
    Corpus::new(records)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Writes the corpus signals in the ingestible tab-separated layout.
pub fn write_signals(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut out = signals_header();
    out.push('\n');
    for r in &corpus.records {
        for (t, token) in r.tokens.iter().enumerate() {
            out.push_str(&format!("{}\t{t}\t{token}", r.id));
            for signal in SignalType::ALL {
                for v in r.signals(signal).row(t) {
                    out.push('\t');
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
    }
    write_file(path, &out)
}

pub fn annotation_row(r: &SentenceRecord) -> AnnotationRow {
    AnnotationRow {
        sentence_id: r.id.clone(),
        pos: r.pos.clone(),
        sense_counts: r.sense_counts.clone(),
        complex_nominals: r.annotations.complex_nominals,
        clauses: r.annotations.clauses,
        subject_index: r.annotations.subject_index,
        object_index: r.annotations.object_index,
        tense: r.annotations.tense,
    }
}

pub fn write_annotations(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut out = String::new();
    for r in &corpus.records {
        out.push_str(&serde_json::to_string(&annotation_row(r))?);
        out.push('\n');
    }
    write_file(path, &out)
}

/// Word lists used by the vocabulary and discourse tasks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Resources {
    /// Lower-cased common words.
    pub common_words: Option<HashSet<String>>,
    /// Lower-cased connectors split into words, longest first.
    pub connectors: Option<Vec<Vec<String>>>,
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

impl Resources {
    pub fn with_common_words<I: IntoIterator<Item = S>, S: AsRef<str>>(mut self, words: I) -> Self {
        self.common_words = Some(
            words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .collect(),
        );
        self
    }

    pub fn with_connectors<I: IntoIterator<Item = S>, S: AsRef<str>>(mut self, items: I) -> Self {
        let mut list: Vec<Vec<String>> = items
            .into_iter()
            .map(|c| {
                c.as_ref()
                    .split_whitespace()
                    .map(str::to_lowercase)
                    .collect::<Vec<_>>()
            })
            .filter(|c| !c.is_empty())
            .collect();
        list.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        list.dedup();
        self.connectors = Some(list);
        self
    }

    pub fn load(common_words: Option<&Path>, connectors: Option<&Path>) -> Result<Self> {
        let mut r = Resources::default();
        if let Some(p) = common_words {
            r = r.with_common_words(read_lines(p)?);
        }
        if let Some(p) = connectors {
            r = r.with_connectors(read_lines(p)?);
        }
        Ok(r)
    }
}
