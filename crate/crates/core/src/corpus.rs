//! Documents, topic hierarchies, embedding files and the TF-IDF fallback
//! vectorizer.
//!
//! File formats (all UTF-8):
//!
//! * embeddings JSONL: `{"id": "...", "topic": "...", "vector": [..]}` per line
//! * text JSONL: `{"id": "...", "topic": "...", "text": "..."}` per line
//! * hierarchy JSON: one object mapping `"child_topic": "parent_topic"`
//! * stopwords: plain text, one word per line

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub topic: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<f64>>,
}

/// Maps each child topic to its direct parent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TopicHierarchy {
    parent_of: BTreeMap<String, String>,
}

impl TopicHierarchy {
    /// Build a hierarchy, rejecting parent cycles.
    pub fn new(parent_of: BTreeMap<String, String>) -> Result<Self> {
        for start in parent_of.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = start.as_str();
            while let Some(p) = parent_of.get(cur) {
                if !seen.insert(cur) {
                    return Err(Error::InvalidData(format!(
                        "topic hierarchy has a cycle through {start:?}"
                    )));
                }
                cur = p;
            }
        }
        Ok(Self { parent_of })
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(c, p)| (c.to_string(), p.to_string()))
                .collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let map: BTreeMap<String, String> = serde_json::from_reader(BufReader::new(file))?;
        Self::new(map)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &self.parent_of)?;
        Ok(())
    }

    /// Direct parent of `topic`.
    pub fn parent(&self, topic: &str) -> Result<&str> {
        self.parent_of
            .get(topic)
            .map(String::as_str)
            .ok_or_else(|| Error::MissingTopic(topic.to_string()))
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.parent_of.keys().map(String::as_str)
    }

    /// Every topic used by the dataset must have a parent entry.
    pub fn check_covers(&self, dataset: &EmbeddedDataset) -> Result<()> {
        for t in &dataset.topics {
            self.parent(t)?;
        }
        Ok(())
    }
}

/// Free-function form of [`TopicHierarchy::parent`].
pub fn parent<'a>(h: &'a TopicHierarchy, topic: &str) -> Result<&'a str> {
    h.parent(topic)
}

/// N documents embedded as rows of an N×D matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedDataset {
    pub matrix: DenseMatrix,
    pub ids: Vec<String>,
    pub topics: Vec<String>,
}

#[derive(Serialize)]
struct EmbeddingRecordRef<'a> {
    id: &'a str,
    topic: &'a str,
    vector: &'a [f64],
}

#[derive(Deserialize)]
struct EmbeddingRecord {
    id: String,
    topic: String,
    vector: Vec<f64>,
}

impl EmbeddedDataset {
    pub fn new(matrix: DenseMatrix, ids: Vec<String>, topics: Vec<String>) -> Result<Self> {
        if ids.len() != matrix.rows() || topics.len() != matrix.rows() {
            return Err(Error::InvalidArgument(format!(
                "{} rows but {} ids and {} topics",
                matrix.rows(),
                ids.len(),
                topics.len()
            )));
        }
        Ok(Self {
            matrix,
            ids,
            topics,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            matrix: self.matrix.select_rows(rows),
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            topics: rows.iter().map(|&i| self.topics[i].clone()).collect(),
        }
    }

    /// Build from documents that all carry a vector.
    pub fn from_documents(docs: &[Document]) -> Result<Self> {
        let mut rows = Vec::with_capacity(docs.len());
        for d in docs {
            match &d.vector {
                Some(v) => rows.push(v.as_slice()),
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "document {:?} has no vector",
                        d.id
                    )))
                }
            }
        }
        let matrix = DenseMatrix::from_rows(&rows)?;
        Self::new(
            matrix,
            docs.iter().map(|d| d.id.clone()).collect(),
            docs.iter().map(|d| d.topic.clone()).collect(),
        )
    }
}

fn read_jsonl<T, F>(path: &Path, mut f: F) -> Result<()>
where
    T: for<'de> Deserialize<'de>,
    F: FnMut(usize, T) -> Result<()>,
{
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut record = 0;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        record += 1;
        let value: T = serde_json::from_str(&line).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            record: format!("#{record}"),
            message: e.to_string(),
        })?;
        f(record, value)?;
    }
    Ok(())
}

/// Read an embeddings JSONL file. Rows keep file order; extra fields are ignored.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddedDataset> {
    let path = path.as_ref();
    let mut ids = Vec::new();
    let mut topics = Vec::new();
    let mut values = Vec::new();
    let mut dim = None;
    let mut seen = HashSet::new();
    read_jsonl(path, |record, r: EmbeddingRecord| {
        let schema = |message: String| Error::Schema {
            path: path.to_path_buf(),
            record: format!("#{record} (id {:?})", r.id),
            message,
        };
        let d = *dim.get_or_insert(r.vector.len());
        if r.vector.len() != d {
            return Err(schema(format!(
                "vector has length {}, expected {d}",
                r.vector.len()
            )));
        }
        if r.vector.iter().any(|v| !v.is_finite()) {
            return Err(schema("vector has non-finite entries".into()));
        }
        if !seen.insert(r.id.clone()) {
            return Err(schema("duplicate id".into()));
        }
        values.extend_from_slice(&r.vector);
        ids.push(r.id);
        topics.push(r.topic);
        Ok(())
    })?;
    let dim = dim.ok_or_else(|| Error::Schema {
        path: path.to_path_buf(),
        record: "-".into(),
        message: "file contains no records".into(),
    })?;
    let matrix = DenseMatrix::new(ids.len(), dim, values)?;
    EmbeddedDataset::new(matrix, ids, topics)
}

pub fn save_embeddings(path: impl AsRef<Path>, dataset: &EmbeddedDataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for i in 0..dataset.len() {
        let rec = EmbeddingRecordRef {
            id: &dataset.ids[i],
            topic: &dataset.topics[i],
            vector: dataset.matrix.row(i),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a JSONL file of documents (text and/or vector per record).
pub fn load_documents(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    read_jsonl(path, |record, d: Document| {
        let schema = |message: &str| Error::Schema {
            path: path.to_path_buf(),
            record: format!("#{record} (id {:?})", d.id),
            message: message.to_string(),
        };
        if d.text.is_none() && d.vector.is_none() {
            return Err(schema("record has neither text nor vector"));
        }
        if d.vector.iter().flatten().any(|v| !v.is_finite()) {
            return Err(schema("vector has non-finite entries"));
        }
        if !seen.insert(d.id.clone()) {
            return Err(schema("duplicate id"));
        }
        docs.push(d);
        Ok(())
    })?;
    Ok(docs)
}

const DEFAULT_STOPWORDS: &str = include_str!("stopwords_en.txt");

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(
            words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        )
    }

    /// Bundled English list.
    pub fn english() -> Self {
        Self::new(DEFAULT_STOPWORDS.lines())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(text.lines()))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lowercase, split on anything that is not alphanumeric, drop stopwords.
pub fn preprocess_text(raw: &str, stopwords: &StopWords) -> Vec<String> {
    raw.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !stopwords.contains(t))
        .map(str::to_string)
        .collect()
}

/// Fitted TF-IDF vocabulary: raw term counts times `ln(N / df) + 1`, rows
/// L2-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    pub vocabulary: Vec<String>,
    pub idf: Vec<f64>,
    stopwords: StopWords,
    index: HashMap<String, usize>,
}

impl TfidfModel {
    /// Keep the `vocab_size` tokens with the highest document frequency
    /// (ties in lexicographic order).
    pub fn fit(docs: &[Document], vocab_size: usize, stopwords: &StopWords) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::InvalidArgument("empty corpus".into()));
        }
        if vocab_size == 0 {
            return Err(Error::InvalidArgument("vocab_size must be positive".into()));
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for d in docs {
            let tokens: BTreeSet<String> = preprocess_text(doc_text(d)?, stopwords)
                .into_iter()
                .collect();
            for t in tokens {
                *df.entry(t).or_default() += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(vocab_size);
        let n = docs.len() as f64;
        let idf = ranked
            .iter()
            .map(|(_, df)| (n / *df as f64).ln() + 1.0)
            .collect();
        let vocabulary: Vec<String> = ranked.into_iter().map(|(t, _)| t).collect();
        let index = vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Self {
            vocabulary,
            idf,
            stopwords: stopwords.clone(),
            index,
        })
    }

    pub fn transform(&self, docs: &[Document]) -> Result<EmbeddedDataset> {
        let dim = self.vocabulary.len();
        let mut values = vec![0.0; docs.len() * dim];
        for (r, d) in docs.iter().enumerate() {
            let row = &mut values[r * dim..(r + 1) * dim];
            for t in preprocess_text(doc_text(d)?, &self.stopwords) {
                if let Some(&j) = self.index.get(&t) {
                    row[j] += 1.0;
                }
            }
            row.iter_mut().zip(&self.idf).for_each(|(v, w)| *v *= w);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        EmbeddedDataset::new(
            DenseMatrix::new(docs.len(), dim, values)?,
            docs.iter().map(|d| d.id.clone()).collect(),
            docs.iter().map(|d| d.topic.clone()).collect(),
        )
    }
}

fn doc_text(d: &Document) -> Result<&str> {
    d.text
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("document {:?} has no text", d.id)))
}

/// Fit and apply TF-IDF on the same corpus.
pub fn tfidf_vectorize(
    docs: &[Document],
    vocab_size: usize,
    stopwords: &StopWords,
) -> Result<EmbeddedDataset> {
    TfidfModel::fit(docs, vocab_size, stopwords)?.transform(docs)
}
