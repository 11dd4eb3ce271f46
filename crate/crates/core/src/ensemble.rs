//! Ensembles of independently seeded, independently pruned detectors.
//!
//! Each member's reconstruction errors are standardized with statistics of
//! its own training-split scores, then the members are fused by taking the
//! per-observation median.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rlae::{self, RlaeConfig, RlaeModel};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub members: usize,
    pub base: RlaeConfig,
    pub master_seed: u64,
}

impl EnsembleConfig {
    pub fn new(base: RlaeConfig) -> Self {
        Self {
            members: 20,
            base,
            master_seed: 0,
        }
    }

    /// Configuration of member `i`: the base template with a derived seed.
    pub fn member_config(&self, i: usize) -> RlaeConfig {
        RlaeConfig {
            seed: derive_seed(self.master_seed, "member", i as u64),
            ..self.base.clone()
        }
    }
}

/// Mean and unbiased standard deviation of a member's training scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    pub mean: f64,
    pub std: f64,
}

impl ScoreStats {
    pub fn from_scores(scores: &[f64]) -> Self {
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let var = if scores.len() > 1 {
            scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std: var.sqrt(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.std > 0.0 && self.std.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RosaeModel {
    pub config: EnsembleConfig,
    pub members: Vec<RlaeModel>,
    pub norm_stats: Vec<ScoreStats>,
}

/// `(s − mean) / std`; fails on a zero-variance member.
pub fn standardize(scores: &[f64], stats: &ScoreStats) -> Result<Vec<f64>> {
    if stats.is_degenerate() {
        return Err(Error::DegenerateDetector);
    }
    Ok(scores
        .iter()
        .map(|s| (s - stats.mean) / stats.std)
        .collect())
}

/// Median of each column of an `m × n` score matrix given as `m` rows. With an
/// even number of rows the two central values are averaged.
pub fn aggregate(scores: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = scores.len();
    if m == 0 {
        return Err(Error::InvalidArgument(
            "no member scores to aggregate".into(),
        ));
    }
    let n = scores[0].len();
    if scores.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument(
            "member score vectors differ in length".into(),
        ));
    }
    let mut column = vec![0.0; m];
    Ok((0..n)
        .map(|j| {
            for (c, row) in column.iter_mut().zip(scores) {
                *c = row[j];
            }
            column.sort_by(f64::total_cmp);
            if m % 2 == 1 {
                column[m / 2]
            } else {
                0.5 * (column[m / 2 - 1] + column[m / 2])
            }
        })
        .collect())
}

/// Train every member (in parallel on the current rayon pool) and record the
/// standardization statistics of its training scores.
pub fn fit_ensemble(data: &DenseMatrix, cfg: &EnsembleConfig) -> Result<RosaeModel> {
    if cfg.members == 0 {
        return Err(Error::InvalidArgument(
            "ensemble needs at least one member".into(),
        ));
    }
    cfg.base.validate()?;
    let fitted = (0..cfg.members)
        .into_par_iter()
        .map(|i| {
            let model = rlae::train(data, &cfg.member_config(i))?;
            let stats = ScoreStats::from_scores(&model.score(data)?);
            Ok((model, stats))
        })
        .collect::<Result<Vec<_>>>()?;
    let (members, norm_stats) = fitted.into_iter().unzip();
    Ok(RosaeModel {
        config: cfg.clone(),
        members,
        norm_stats,
    })
}

impl RosaeModel {
    /// Raw reconstruction errors, one vector per member.
    pub fn member_scores(&self, data: &DenseMatrix) -> Result<Vec<Vec<f64>>> {
        self.members.par_iter().map(|m| m.score(data)).collect()
    }

    /// Standardized median score per row; higher is more anomalous.
    pub fn decision_scores(&self, data: &DenseMatrix) -> Result<Vec<f64>> {
        decision_scores(self, data)
    }

    /// The ensemble made of the first `m` members. Member `i` does not depend
    /// on the ensemble size, so this equals fitting with `members = m`.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.members.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot keep {m} of {} members",
                self.members.len()
            )));
        }
        Ok(Self {
            config: EnsembleConfig {
                members: m,
                ..self.config.clone()
            },
            members: self.members[..m].to_vec(),
            norm_stats: self.norm_stats[..m].to_vec(),
        })
    }

    /// Write `manifest.json` plus one `member_XXX.json` per member into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = Vec::with_capacity(self.members.len());
        for (i, m) in self.members.iter().enumerate() {
            let name = format!("member_{i:03}.json");
            m.save(dir.join(&name))?;
            files.push(name);
        }
        let manifest = Manifest {
            format_version: rlae::MODEL_FORMAT_VERSION,
            members: self.members.len(),
            master_seed: self.config.master_seed,
            base: self.config.base.clone(),
            norm_stats: self.norm_stats.clone(),
            member_files: files,
        };
        let path = dir.join(MANIFEST);
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(f), &manifest)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST);
        let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_reader(BufReader::new(f))?;
        if manifest.members != manifest.member_files.len()
            || manifest.members != manifest.norm_stats.len()
        {
            return Err(Error::InvalidData(
                "ensemble manifest member counts disagree".into(),
            ));
        }
        let members = manifest
            .member_files
            .iter()
            .map(|name| RlaeModel::load(dir.join(name)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: EnsembleConfig {
                members: manifest.members,
                base: manifest.base,
                master_seed: manifest.master_seed,
            },
            members,
            norm_stats: manifest.norm_stats,
        })
    }
}

const MANIFEST: &str = "manifest.json";

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    members: usize,
    master_seed: u64,
    base: RlaeConfig,
    norm_stats: Vec<ScoreStats>,
    member_files: Vec<String>,
}

pub fn decision_scores(model: &RosaeModel, data: &DenseMatrix) -> Result<Vec<f64>> {
    let raw = model.member_scores(data)?;
    let standardized = raw
        .iter()
        .zip(&model.norm_stats)
        .enumerate()
        .map(|(i, (scores, stats))| match standardize(scores, stats) {
            Err(Error::DegenerateDetector) => {
                log::warn!("ensemble member {i} has zero score variance; contributing zeros");
                Ok(vec![0.0; scores.len()])
            }
            other => other,
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(&standardized)
}
