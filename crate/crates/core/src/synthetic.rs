//! Synthetic hierarchical corpora: Gaussian topic clusters whose centres are
//! placed so that sibling topics (same parent) are close and topics under
//! different parents are far apart.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddedDataset, TopicHierarchy};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::seed::{derive_seed, rng_from_seed};

/// Three topics in two parent groups: `alpha` and `beta` share parent
/// `group_a`, `gamma` sits under `group_b`.
///
/// Each topic is an isotropic Gaussian with radius `sigma`, i.e. per-coordinate
/// standard deviation `sigma / sqrt(dim)`. Centres lie along orthogonal random
/// directions: `beta` at `sibling_separation · sigma` from `alpha`, `gamma` at
/// `parent_separation · sigma` from `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalGaussian {
    pub dim: usize,
    pub per_topic_train: usize,
    pub per_topic_test: usize,
    pub sigma: f64,
    pub sibling_separation: f64,
    pub parent_separation: f64,
    /// Distance of the `alpha` centre from the origin, in units of `sigma`.
    pub offset: f64,
    pub seed: u64,
}

impl Default for HierarchicalGaussian {
    fn default() -> Self {
        Self {
            dim: 20,
            per_topic_train: 400,
            per_topic_test: 400,
            sigma: 1.0,
            sibling_separation: 4.0,
            parent_separation: 10.0,
            offset: 10.0,
            seed: 0,
        }
    }
}

pub const TOPICS: [(&str, &str); 3] = [
    ("alpha", "group_a"),
    ("beta", "group_a"),
    ("gamma", "group_b"),
];

/// Train split, test split and hierarchy of a synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub train: EmbeddedDataset,
    pub test: EmbeddedDataset,
    pub hierarchy: TopicHierarchy,
}

fn unit_directions<R: Rng>(dim: usize, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    while out.len() < count {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for u in &out {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            out.push(v);
        }
    }
    out
}

impl HierarchicalGaussian {
    pub fn centres(&self) -> Vec<Vec<f64>> {
        let mut rng = rng_from_seed(derive_seed(self.seed, "centres", 0));
        let dirs = unit_directions(self.dim, 3, &mut rng);
        let at = |steps: &[(usize, f64)]| -> Vec<f64> {
            (0..self.dim)
                .map(|j| {
                    steps
                        .iter()
                        .map(|&(d, dist)| dirs[d][j] * dist * self.sigma)
                        .sum()
                })
                .collect()
        };
        vec![
            at(&[(2, self.offset)]),
            at(&[(2, self.offset), (0, self.sibling_separation)]),
            at(&[(2, self.offset), (1, self.parent_separation)]),
        ]
    }

    fn sample_split(&self, label: &str, per_topic: usize) -> Result<EmbeddedDataset> {
        let mut rng = rng_from_seed(derive_seed(self.seed, label, 0));
        let centres = self.centres();
        let scale = self.sigma / (self.dim as f64).sqrt();
        let mut values = Vec::with_capacity(3 * per_topic * self.dim);
        let mut ids = Vec::new();
        let mut topics = Vec::new();
        for i in 0..per_topic {
            for (t, (topic, _)) in TOPICS.iter().enumerate() {
                for c in &centres[t] {
                    values.push(c + scale * rng.sample::<f64, _>(StandardNormal));
                }
                ids.push(format!("{label}-{topic}-{i}"));
                topics.push(topic.to_string());
            }
        }
        EmbeddedDataset::new(DenseMatrix::new(ids.len(), self.dim, values)?, ids, topics)
    }

    pub fn generate(&self) -> Result<SyntheticCorpus> {
        if self.dim < 2 {
            return Err(Error::InvalidArgument("dim must be at least 2".into()));
        }
        Ok(SyntheticCorpus {
            train: self.sample_split("train", self.per_topic_train)?,
            test: self.sample_split("test", self.per_topic_test)?,
            hierarchy: TopicHierarchy::from_pairs(TOPICS)?,
        })
    }
}
