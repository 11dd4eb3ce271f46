//! Flat pipeline configuration shared by every subcommand.
//!
//! Resolution order: built-in defaults, then the `--config` JSON file, then
//! flags given on the command line (or through their environment fallback).
//! Each flag has the same name as the field it sets.

use std::fs;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use rosae::benchmark::{BenchmarkSpec, SweepGrid};
use rosae::ensemble::EnsembleConfig;
use rosae::rlae::RlaeConfig;
use rosae::seed::derive_seed;
use rosae::tac::{AnomalyMode, ContaminationSpec};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub test_input: Option<PathBuf>,
    pub hierarchy: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub vocab_size: usize,

    pub inlier: Option<String>,
    pub mode: AnomalyMode,
    pub nu: f64,
    pub size: Option<usize>,
    pub test_size: Option<usize>,
    pub sample: bool,
    pub seed: u64,

    pub members: usize,
    pub encoder_hidden: Vec<usize>,
    pub enc_out_dim: usize,
    pub latent_dim: usize,
    pub k: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub epochs: usize,
    pub batch_size: Option<usize>,
    pub lr: f64,
    pub prune_min: f64,
    pub prune_max: f64,
    pub lle_reg: f64,

    pub runs: usize,
    pub grid_members: Vec<usize>,
    pub grid_k: Vec<usize>,
    pub grid_latent: Vec<usize>,
    pub grid_hidden: Vec<usize>,
    pub grid_lambda3: Vec<f64>,

    pub jobs: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let rlae = RlaeConfig::new(0);
        Self {
            input: None,
            test_input: None,
            hierarchy: None,
            model: None,
            output: None,
            stopwords: None,
            vocab_size: 10_000,
            inlier: None,
            mode: AnomalyMode::Contextual,
            nu: 0.1,
            size: None,
            test_size: None,
            sample: true,
            seed: 0,
            members: 20,
            encoder_hidden: rlae.encoder_hidden,
            enc_out_dim: rlae.enc_out_dim,
            latent_dim: rlae.rsr_dim,
            k: rlae.k_neighbours,
            lambda1: rlae.lambda1,
            lambda2: rlae.lambda2,
            lambda3: rlae.lambda3,
            epochs: rlae.epochs,
            batch_size: rlae.batch_size,
            lr: rlae.learning_rate,
            prune_min: rlae.prune_prob_range[0],
            prune_max: rlae.prune_prob_range[1],
            lle_reg: rlae.lle_reg,
            runs: 10,
            grid_members: Vec::new(),
            grid_k: Vec::new(),
            grid_latent: Vec::new(),
            grid_hidden: Vec::new(),
            grid_lambda3: Vec::new(),
            jobs: None,
        }
    }
}

impl PipelineConfig {
    /// Defaults overlaid with `file` (if any), then with every key of `flags`
    /// whose value came from the command line or the environment.
    pub fn resolve(
        file: Option<&Path>,
        flags: &impl Serialize,
        matches: &ArgMatches,
    ) -> Result<Self, Failure> {
        let base = match file {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                serde_json::from_str::<PipelineConfig>(&text)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
            }
            None => PipelineConfig::default(),
        };
        let mut merged = match serde_json::to_value(base) {
            Ok(Value::Object(m)) => m,
            _ => unreachable!("config serializes to an object"),
        };
        let Ok(Value::Object(given)) = serde_json::to_value(flags) else {
            unreachable!("flags serialize to an object")
        };
        overlay(&mut merged, given, matches);
        serde_json::from_value(Value::Object(merged)).map_err(|e| Failure::Config(e.to_string()))
    }

    /// The configuration embedded in artifacts: everything except where the
    /// artifact itself is written and how many threads produced it.
    pub fn provenance(&self) -> Self {
        Self {
            output: None,
            jobs: None,
            ..self.clone()
        }
    }

    pub fn require_path(&self, value: &Option<PathBuf>, flag: &str) -> Result<PathBuf, Failure> {
        value.clone().ok_or_else(|| {
            Failure::Usage(format!(
                "missing --{flag} (or `{}` in the config file)",
                flag.replace('-', "_")
            ))
        })
    }

    pub fn require_inlier(&self) -> Result<String, Failure> {
        self.inlier.clone().ok_or_else(|| {
            Failure::Usage("missing --inlier (or `inlier` in the config file)".into())
        })
    }

    pub fn rlae_config(&self, input_dim: usize) -> RlaeConfig {
        RlaeConfig {
            input_dim,
            encoder_hidden: self.encoder_hidden.clone(),
            enc_out_dim: self.enc_out_dim,
            rsr_dim: self.latent_dim,
            k_neighbours: self.k,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            lambda3: self.lambda3,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            prune_prob_range: [self.prune_min, self.prune_max],
            lle_reg: self.lle_reg,
            seed: 0,
        }
    }

    /// Ensemble for a single `train` invocation.
    pub fn ensemble_config(&self, input_dim: usize) -> EnsembleConfig {
        EnsembleConfig {
            members: self.members,
            base: self.rlae_config(input_dim),
            master_seed: derive_seed(self.seed, "model", 0),
        }
    }

    pub fn contamination_spec(&self, inlier: String, split_size: usize) -> ContaminationSpec {
        ContaminationSpec {
            inlier_topic: inlier,
            split_size,
            contamination_rate: self.nu,
            mode: self.mode,
            seed: derive_seed(self.seed, "tac", 0),
            sample: self.sample,
        }
    }

    pub fn benchmark_spec(&self, inlier: String) -> BenchmarkSpec {
        BenchmarkSpec {
            inlier_topic: inlier,
            mode: self.mode,
            contamination_rate: self.nu,
            train_split_size: self.size,
            test_split_size: self.test_size,
            sample: self.sample,
            runs: self.runs,
            seed: self.seed,
        }
    }

    pub fn sweep_grid(&self) -> SweepGrid {
        SweepGrid {
            members: self.grid_members.clone(),
            k_neighbours: self.grid_k.clone(),
            rsr_dim: self.grid_latent.clone(),
            hidden_layers: self.grid_hidden.clone(),
            lambda3: self.grid_lambda3.clone(),
        }
    }
}

fn overlay(merged: &mut Map<String, Value>, given: Map<String, Value>, matches: &ArgMatches) {
    for (key, value) in given {
        let explicit = matches!(
            matches.value_source(&key),
            Some(ValueSource::CommandLine | ValueSource::EnvVariable)
        );
        if explicit {
            merged.insert(key, value);
        }
    }
}
