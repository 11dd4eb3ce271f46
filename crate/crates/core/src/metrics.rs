//! Ranking metrics for anomaly scores and summary statistics over runs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores and ground-truth labels (`true` = anomaly) for a set of documents.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub ids: Vec<String>,
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct ReportRow {
    id: String,
    score: f64,
    label: u8,
}

impl ScoreReport {
    pub fn new(ids: Vec<String>, scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if ids.len() != scores.len() || labels.len() != scores.len() {
            return Err(Error::InvalidArgument(format!(
                "report lengths differ: {} ids, {} scores, {} labels",
                ids.len(),
                scores.len(),
                labels.len()
            )));
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::InvalidData("score is NaN".into()));
        }
        Ok(Self {
            ids,
            scores,
            labels,
        })
    }

    /// Unnamed report, ids are row numbers.
    pub fn from_scores(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        Self::new(
            (0..scores.len()).map(|i| i.to_string()).collect(),
            scores,
            labels,
        )
    }

    /// CSV with header `id,score,label`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        for i in 0..self.ids.len() {
            w.serialize(ReportRow {
                id: self.ids[i].clone(),
                score: self.scores[i],
                label: u8::from(self.labels[i]),
            })?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path.as_ref())?;
        let (mut ids, mut scores, mut labels) = (Vec::new(), Vec::new(), Vec::new());
        for row in r.deserialize() {
            let row: ReportRow = row?;
            if row.label > 1 {
                return Err(Error::InvalidData(format!(
                    "label of {:?} must be 0 or 1",
                    row.id
                )));
            }
            ids.push(row.id);
            scores.push(row.score);
            labels.push(row.label == 1);
        }
        Self::new(ids, scores, labels)
    }

    pub fn auc(&self) -> Result<f64> {
        roc_auc(&self.scores, &self.labels)
    }

    pub fn average_precision(&self) -> Result<f64> {
        average_precision(&self.scores, &self.labels)
    }
}

/// Indices sorted by descending score.
fn descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// Consecutive runs of equal scores in a descending ordering, as
/// `(positives, negatives)` per tie group.
fn tie_groups(scores: &[f64], labels: &[bool]) -> Vec<(usize, usize)> {
    let order = descending(scores);
    let mut groups = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut pos, mut neg) = (0, 0);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                pos += 1;
            } else {
                neg += 1;
            }
            i += 1;
        }
        groups.push((pos, neg));
    }
    groups
}

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidData("score is NaN".into()));
    }
    Ok(())
}

/// Area under the ROC curve in Mann–Whitney form: the fraction of
/// (anomaly, inlier) pairs ranked correctly, ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "ROC-AUC needs at least one anomaly and one inlier".into(),
        ));
    }
    // each positive beats every negative ranked strictly below it and ties
    // with the negatives in its own group
    let mut negatives_below = 0u128;
    let mut twice_correct = 0u128;
    for (pos, neg) in tie_groups(scores, labels).into_iter().rev() {
        let (pos, neg) = (pos as u128, neg as u128);
        twice_correct += 2 * pos * negatives_below + pos * neg;
        negatives_below += neg;
    }
    Ok(twice_correct as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// Step-wise average precision `Σ (R_n − R_{n−1}) P_n` over descending score
/// thresholds; tied scores form a single threshold.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return Err(Error::UndefinedMetric(
            "average precision needs at least one anomaly".into(),
        ));
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut weighted = 0.0;
    for (pos, neg) in tie_groups(scores, labels) {
        tp += pos;
        fp += neg;
        if pos > 0 {
            weighted += pos as f64 * (tp as f64 / (tp + fp) as f64);
        }
    }
    Ok(weighted / n_pos as f64)
}

/// Order statistics of a list of per-run values. Quartiles use linear
/// interpolation between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("no values to summarize".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean,
            std,
            min: sorted[0],
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        })
    }
}
