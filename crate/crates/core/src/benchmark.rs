//! Repeated contaminate → fit → score → evaluate runs, and hyperparameter
//! sweeps built on them.
//!
//! Run `r` draws its training split, test split and ensemble from seeds derived
//! from the benchmark seed with labels `"train"`, `"test"` and `"model"`, so a
//! run is reproducible on its own and independent of how many runs there are.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddedDataset, TopicHierarchy};
use crate::ensemble::{fit_ensemble, EnsembleConfig};
use crate::error::{Error, Result};
use crate::metrics::{average_precision, roc_auc, Summary};
use crate::seed::derive_seed;
use crate::tac::{
    contaminate, max_split_size, partition_anomalies, AnomalyMode, ContaminatedSplit,
    ContaminationSpec,
};

/// Source corpora for a benchmark. Training splits are drawn from `train`,
/// evaluation splits from `test`.
#[derive(Debug, Clone)]
pub struct BenchmarkData {
    pub train: EmbeddedDataset,
    pub test: EmbeddedDataset,
    pub hierarchy: TopicHierarchy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub inlier_topic: String,
    pub mode: AnomalyMode,
    pub contamination_rate: f64,
    /// `None` takes the largest feasible size for the training corpus.
    pub train_split_size: Option<usize>,
    /// `None` takes the largest feasible size for the test corpus.
    pub test_split_size: Option<usize>,
    pub sample: bool,
    pub runs: usize,
    pub seed: u64,
}

impl BenchmarkSpec {
    pub fn new(inlier_topic: impl Into<String>, mode: AnomalyMode) -> Self {
        Self {
            inlier_topic: inlier_topic.into(),
            mode,
            contamination_rate: 0.1,
            train_split_size: None,
            test_split_size: None,
            sample: true,
            runs: 10,
            seed: 0,
        }
    }

    fn split_spec(
        &self,
        data: &EmbeddedDataset,
        h: &TopicHierarchy,
        size: Option<usize>,
        seed: u64,
    ) -> Result<ContaminationSpec> {
        let split_size = match size {
            Some(l) => l,
            None => {
                let part = partition_anomalies(data, h, &self.inlier_topic)?;
                max_split_size(&part, self.mode, self.contamination_rate)
            }
        };
        Ok(ContaminationSpec {
            inlier_topic: self.inlier_topic.clone(),
            split_size,
            contamination_rate: self.contamination_rate,
            mode: self.mode,
            seed,
            sample: self.sample,
        })
    }

    /// Training and test splits of run `run`.
    pub fn splits(
        &self,
        data: &BenchmarkData,
        run: usize,
    ) -> Result<(ContaminatedSplit, ContaminatedSplit)> {
        let r = run as u64;
        let h = &data.hierarchy;
        let train_spec = self.split_spec(
            &data.train,
            h,
            self.train_split_size,
            derive_seed(self.seed, "train", r),
        )?;
        let test_spec = self.split_spec(
            &data.test,
            h,
            self.test_split_size,
            derive_seed(self.seed, "test", r),
        )?;
        Ok((
            contaminate(&data.train, h, &train_spec)?,
            contaminate(&data.test, h, &test_spec)?,
        ))
    }

    pub fn model_seed(&self, run: usize) -> u64 {
        derive_seed(self.seed, "model", run as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub train_rows: usize,
    pub train_anomalies: usize,
    pub test_rows: usize,
    pub test_anomalies: usize,
    pub auc: f64,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub auc_runs: Vec<f64>,
    pub ap_runs: Vec<f64>,
    pub auc: Summary,
    pub ap: Summary,
    pub runs: Vec<RunRecord>,
}

impl BenchmarkResult {
    fn from_records(runs: Vec<RunRecord>) -> Result<Self> {
        let auc_runs: Vec<f64> = runs.iter().map(|r| r.auc).collect();
        let ap_runs: Vec<f64> = runs.iter().map(|r| r.ap).collect();
        Ok(Self {
            auc: Summary::of(&auc_runs)?,
            ap: Summary::of(&ap_runs)?,
            auc_runs,
            ap_runs,
            runs,
        })
    }
}

/// Fit one ensemble of `max(member_counts)` members per run and evaluate each
/// requested prefix size on the same splits. Returns one result per count.
fn evaluate_prefixes(
    data: &BenchmarkData,
    spec: &BenchmarkSpec,
    ensemble: &EnsembleConfig,
    member_counts: &[usize],
) -> Result<Vec<BenchmarkResult>> {
    if spec.runs == 0 {
        return Err(Error::InvalidArgument("runs must be positive".into()));
    }
    let largest = member_counts.iter().copied().max().unwrap_or(0);
    if largest == 0 || member_counts.contains(&0) {
        return Err(Error::InvalidArgument(
            "member counts must be positive".into(),
        ));
    }
    if ensemble.base.input_dim != data.train.dim() || data.train.dim() != data.test.dim() {
        return Err(Error::InvalidArgument(format!(
            "detector input_dim {} does not match corpus dimensions {} / {}",
            ensemble.base.input_dim,
            data.train.dim(),
            data.test.dim()
        )));
    }

    let per_run = (0..spec.runs)
        .into_par_iter()
        .map(|run| {
            let (train, test) = spec.splits(data, run)?;
            let cfg = EnsembleConfig {
                members: largest,
                base: ensemble.base.clone(),
                master_seed: spec.model_seed(run),
            };
            let model = fit_ensemble(&train.dataset.matrix, &cfg)?;
            member_counts
                .iter()
                .map(|&m| {
                    let scores = model.truncated(m)?.decision_scores(&test.dataset.matrix)?;
                    Ok(RunRecord {
                        run,
                        train_rows: train.dataset.len(),
                        train_anomalies: train.anomaly_count,
                        test_rows: test.dataset.len(),
                        test_anomalies: test.anomaly_count,
                        auc: roc_auc(&scores, &test.anomaly_flags)?,
                        ap: average_precision(&scores, &test.anomaly_flags)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    (0..member_counts.len())
        .map(|c| BenchmarkResult::from_records(per_run.iter().map(|r| r[c].clone()).collect()))
        .collect()
}

/// Run the full pipeline `spec.runs` times; `ensemble.master_seed` is replaced
/// by the per-run model seed.
pub fn run_benchmark(
    data: &BenchmarkData,
    spec: &BenchmarkSpec,
    ensemble: &EnsembleConfig,
) -> Result<BenchmarkResult> {
    let mut out = evaluate_prefixes(data, spec, ensemble, &[ensemble.members])?;
    Ok(out.remove(0))
}

/// Values to try for each hyperparameter. An empty axis keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub members: Vec<usize>,
    pub k_neighbours: Vec<usize>,
    pub rsr_dim: Vec<usize>,
    /// Number of encoder hidden layers; widths are 128, 64, 32, ...
    pub hidden_layers: Vec<usize>,
    pub lambda3: Vec<f64>,
}

pub fn hidden_widths(layers: usize) -> Vec<usize> {
    (0..layers).map(|i| (128usize >> i).max(1)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub members: usize,
    pub k_neighbours: usize,
    pub rsr_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub lambda3: f64,
    pub result: BenchmarkResult,
}

fn axis<T: Clone>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

/// Every combination of the grid, in row-major order of
/// (k, rsr_dim, hidden layers, lambda3, members). Ensembles of different sizes
/// share their leading members, so each other combination is trained once per
/// run at the largest member count.
pub fn run_sweep(
    data: &BenchmarkData,
    spec: &BenchmarkSpec,
    ensemble: &EnsembleConfig,
    grid: &SweepGrid,
) -> Result<Vec<SweepCell>> {
    let base = &ensemble.base;
    let members = axis(&grid.members, ensemble.members);
    let hidden: Vec<Vec<usize>> = if grid.hidden_layers.is_empty() {
        vec![base.encoder_hidden.clone()]
    } else {
        grid.hidden_layers
            .iter()
            .map(|&n| hidden_widths(n))
            .collect()
    };
    let mut cells = Vec::new();
    for &k in &axis(&grid.k_neighbours, base.k_neighbours) {
        for &d in &axis(&grid.rsr_dim, base.rsr_dim) {
            for widths in &hidden {
                for &l3 in &axis(&grid.lambda3, base.lambda3) {
                    let cfg = EnsembleConfig {
                        base: crate::rlae::RlaeConfig {
                            k_neighbours: k,
                            rsr_dim: d,
                            encoder_hidden: widths.clone(),
                            lambda3: l3,
                            ..base.clone()
                        },
                        ..ensemble.clone()
                    };
                    cfg.base.validate()?;
                    log::info!("sweep: k={k} d={d} hidden={widths:?} lambda3={l3}");
                    let results = evaluate_prefixes(data, spec, &cfg, &members)?;
                    for (&m, result) in members.iter().zip(results) {
                        cells.push(SweepCell {
                            members: m,
                            k_neighbours: k,
                            rsr_dim: d,
                            encoder_hidden: widths.clone(),
                            lambda3: l3,
                            result,
                        });
                    }
                }
            }
        }
    }
    Ok(cells)
}
