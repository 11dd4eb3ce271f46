//! Textual anomaly contamination: build evaluation/training splits made of
//! one inlier topic plus a controlled fraction of independent or contextual
//! anomalies.
//!
//! With `P` the direct-parent map and `ζ` the inlier topic:
//! * inliers: rows whose topic is `ζ`
//! * contextual anomalies: topic `≠ ζ` and `P(topic) = P(ζ)`
//! * independent anomalies: `P(topic) ≠ P(ζ)`

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddedDataset, TopicHierarchy};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnomalyMode {
    Independent,
    Contextual,
}

impl fmt::Display for AnomalyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnomalyMode::Independent => "independent",
            AnomalyMode::Contextual => "contextual",
        })
    }
}

impl FromStr for AnomalyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(AnomalyMode::Independent),
            "contextual" => Ok(AnomalyMode::Contextual),
            other => Err(Error::InvalidArgument(format!(
                "unknown anomaly mode {other:?} (expected independent or contextual)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub inlier_topic: String,
    pub split_size: usize,
    pub contamination_rate: f64,
    pub mode: AnomalyMode,
    pub seed: u64,
    /// Draw anomalies and inliers uniformly at random. When false, take them
    /// in corpus order (the final shuffle still applies).
    #[serde(default = "default_true")]
    pub sample: bool,
}

fn default_true() -> bool {
    true
}

impl ContaminationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.split_size == 0 {
            return Err(Error::InvalidArgument("split size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.contamination_rate) {
            return Err(Error::InvalidArgument(format!(
                "contamination rate must lie in [0, 1), got {}",
                self.contamination_rate
            )));
        }
        Ok(())
    }

    /// Number of anomalies `⌊l·ν⌋`.
    pub fn anomaly_count(&self) -> usize {
        anomaly_count(self.split_size, self.contamination_rate)
    }
}

/// `⌊l·ν⌋`, tolerant of the product landing a few ulps under an integer.
pub fn anomaly_count(split_size: usize, rate: f64) -> usize {
    (split_size as f64 * rate + 1e-9).floor() as usize
}

/// Row indices of a dataset split by their relation to the inlier topic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    pub inliers: Vec<usize>,
    pub contextual: Vec<usize>,
    pub independent: Vec<usize>,
}

impl Partition {
    pub fn anomalies(&self, mode: AnomalyMode) -> &[usize] {
        match mode {
            AnomalyMode::Independent => &self.independent,
            AnomalyMode::Contextual => &self.contextual,
        }
    }
}

pub fn partition_anomalies(
    data: &EmbeddedDataset,
    h: &TopicHierarchy,
    inlier_topic: &str,
) -> Result<Partition> {
    let inlier_parent = h.parent(inlier_topic)?;
    let mut part = Partition::default();
    for (i, topic) in data.topics.iter().enumerate() {
        if topic == inlier_topic {
            part.inliers.push(i);
        } else if h.parent(topic)? == inlier_parent {
            part.contextual.push(i);
        } else {
            part.independent.push(i);
        }
    }
    Ok(part)
}

/// Largest split size for which `contaminate` has enough rows of both kinds.
pub fn max_split_size(part: &Partition, mode: AnomalyMode, rate: f64) -> usize {
    let anomalies = part.anomalies(mode).len();
    let inliers = part.inliers.len();
    let mut l = inliers + anomalies;
    while l > 0 {
        let c = anomaly_count(l, rate);
        if c <= anomalies && l - c <= inliers {
            break;
        }
        l -= 1;
    }
    l
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContaminatedSplit {
    pub dataset: EmbeddedDataset,
    pub anomaly_flags: Vec<bool>,
    pub anomaly_count: usize,
    /// Row of the source dataset each split row was taken from.
    pub source_rows: Vec<usize>,
    pub spec: ContaminationSpec,
}

pub fn contaminate(
    data: &EmbeddedDataset,
    h: &TopicHierarchy,
    spec: &ContaminationSpec,
) -> Result<ContaminatedSplit> {
    spec.validate()?;
    if spec.split_size > data.len() {
        return Err(Error::InvalidArgument(format!(
            "split size {} exceeds corpus size {}",
            spec.split_size,
            data.len()
        )));
    }
    let part = partition_anomalies(data, h, &spec.inlier_topic)?;
    let c = spec.anomaly_count();
    let pool = part.anomalies(spec.mode);
    if pool.len() < c {
        return Err(Error::Capacity {
            pool: "anomalies",
            needed: c,
            available: pool.len(),
        });
    }
    let n_inliers = spec.split_size - c;
    if part.inliers.len() < n_inliers {
        return Err(Error::Capacity {
            pool: "inliers",
            needed: n_inliers,
            available: part.inliers.len(),
        });
    }

    let mut rng = rng_from_seed(spec.seed);
    let mut chosen: Vec<(usize, bool)> = Vec::with_capacity(spec.split_size);
    if spec.sample {
        let picks = index::sample(&mut rng, pool.len(), c);
        chosen.extend(picks.iter().map(|p| (pool[p], true)));
        let picks = index::sample(&mut rng, part.inliers.len(), n_inliers);
        chosen.extend(picks.iter().map(|p| (part.inliers[p], false)));
    } else {
        chosen.extend(pool[..c].iter().map(|&r| (r, true)));
        chosen.extend(part.inliers[..n_inliers].iter().map(|&r| (r, false)));
    }
    chosen.shuffle(&mut rng);

    let source_rows: Vec<usize> = chosen.iter().map(|c| c.0).collect();
    Ok(ContaminatedSplit {
        dataset: data.select(&source_rows),
        anomaly_flags: chosen.iter().map(|c| c.1).collect(),
        anomaly_count: c,
        source_rows,
        spec: spec.clone(),
    })
}

#[derive(Serialize, Deserialize)]
struct SplitRecord {
    id: String,
    topic: String,
    anomaly: u8,
    vector: Vec<f64>,
}

/// Sidecar written next to a split file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub spec: ContaminationSpec,
    pub anomaly_count: usize,
    pub rows: usize,
}

pub fn manifest_path(split_path: &Path) -> PathBuf {
    let mut name = split_path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

impl ContaminatedSplit {
    /// Write the split as JSONL plus `<path>.manifest.json`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for i in 0..self.dataset.len() {
            let rec = SplitRecord {
                id: self.dataset.ids[i].clone(),
                topic: self.dataset.topics[i].clone(),
                anomaly: u8::from(self.anomaly_flags[i]),
                vector: self.dataset.matrix.row(i).to_vec(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        let manifest = SplitManifest {
            spec: self.spec.clone(),
            anomaly_count: self.anomaly_count,
            rows: self.dataset.len(),
        };
        let mpath = manifest_path(path);
        let file = File::create(&mpath).map_err(|e| Error::io(&mpath, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &manifest)?;
        Ok(())
    }
}

/// Rows of a labelled split file: dataset plus per-row anomaly flags.
pub fn load_labelled(path: impl AsRef<Path>) -> Result<(EmbeddedDataset, Vec<bool>)> {
    #[derive(Deserialize)]
    struct Rec {
        id: String,
        topic: String,
        #[serde(default)]
        anomaly: u8,
        vector: Vec<f64>,
    }
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut ids = Vec::new();
    let mut topics = Vec::new();
    let mut flags = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: Rec = serde_json::from_str(&line).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            record: format!("#{}", n + 1),
            message: e.to_string(),
        })?;
        if r.anomaly > 1 {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                record: format!("#{} (id {:?})", n + 1, r.id),
                message: "anomaly must be 0 or 1".into(),
            });
        }
        if rows
            .first()
            .is_some_and(|f: &Vec<f64>| f.len() != r.vector.len())
        {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                record: format!("#{} (id {:?})", n + 1, r.id),
                message: "ragged vector length".into(),
            });
        }
        flags.push(r.anomaly == 1);
        ids.push(r.id);
        topics.push(r.topic);
        rows.push(r.vector);
    }
    let ds = EmbeddedDataset::new(DenseMatrix::from_rows(&rows)?, ids, topics)?;
    Ok((ds, flags))
}
