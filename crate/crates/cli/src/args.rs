use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

use rosae::tac::AnomalyMode;

use crate::config::PipelineConfig;

fn d() -> PipelineConfig {
    PipelineConfig::default()
}

#[derive(Debug, Parser)]
#[command(
    name = "rosae",
    version,
    about = "Contextual anomaly detection with ensembles of pruned autoencoders",
    after_help = "Flags override values from --config; exit status is 2 on usage errors and 1 on data or configuration errors."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a contaminated split from a topic-labelled corpus
    Tac(TacCmd),
    /// Fit an ensemble on an embeddings or split file and save it
    Train(TrainCmd),
    /// Score a split with a saved ensemble and write a report CSV
    Score(ScoreCmd),
    /// Compute ROC-AUC and average precision from a report CSV
    Eval(EvalCmd),
    /// Repeated contaminate/fit/score/evaluate runs with summary statistics
    Bench(BenchCmd),
    /// Benchmark every combination of a hyperparameter grid
    Sweep(SweepCmd),
    /// Write a synthetic three-topic corpus (train.jsonl, test.jsonl, hierarchy.json)
    Synth(SynthCmd),
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// JSON config file; flags given on the command line take precedence
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Worker threads [default: available parallelism]
    #[arg(long, env = "ROSAE_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct CorpusOpts {
    /// Topic hierarchy JSON (topic -> parent)
    #[arg(long)]
    pub hierarchy: Option<PathBuf>,
    /// Vocabulary size when the corpus has text instead of vectors
    #[arg(long, default_value_t = d().vocab_size)]
    pub vocab_size: usize,
    /// Stopword list, one word per line [default: built-in English list]
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ContaminationOpts {
    /// Inlier topic
    #[arg(long)]
    pub inlier: Option<String>,
    /// Anomaly mode: independent or contextual
    #[arg(long, default_value_t = d().mode)]
    pub mode: AnomalyMode,
    /// Contamination rate
    #[arg(long, default_value_t = d().nu)]
    pub nu: f64,
    /// Split size [default: largest size the corpus supports]
    #[arg(long)]
    pub size: Option<usize>,
    /// Take anomalies and inliers in corpus order instead of sampling [default: sample]
    #[arg(long = "no-sample", action = ArgAction::SetFalse)]
    pub sample: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct DetectorOpts {
    /// Detectors in the ensemble
    #[arg(long, default_value_t = d().members)]
    pub members: usize,
    /// Encoder hidden widths, comma separated; the decoder mirrors them
    #[arg(long, value_delimiter = ',', default_values_t = d().encoder_hidden)]
    pub encoder_hidden: Vec<usize>,
    /// Encoder output dimension
    #[arg(long, default_value_t = d().enc_out_dim)]
    pub enc_out_dim: usize,
    /// Latent (RSR) dimension
    #[arg(long, default_value_t = d().latent_dim)]
    pub latent_dim: usize,
    /// Nearest neighbours for the local term
    #[arg(long, default_value_t = d().k)]
    pub k: usize,
    /// Weight of the projection term
    #[arg(long, default_value_t = d().lambda1)]
    pub lambda1: f64,
    /// Weight of the orthogonality term
    #[arg(long, default_value_t = d().lambda2)]
    pub lambda2: f64,
    /// Weight of the local neighbourhood term
    #[arg(long, default_value_t = d().lambda3)]
    pub lambda3: f64,
    /// Training epochs per detector
    #[arg(long, default_value_t = d().epochs)]
    pub epochs: usize,
    /// Mini-batch size [default: min(128, rows)]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam learning rate
    #[arg(long, default_value_t = d().lr)]
    pub lr: f64,
    /// Lower bound of the per-detector pruning probability
    #[arg(long, default_value_t = d().prune_min)]
    pub prune_min: f64,
    /// Upper bound of the per-detector pruning probability
    #[arg(long, default_value_t = d().prune_max)]
    pub prune_max: f64,
    /// Relative regularization of the neighbour weight systems
    #[arg(long, default_value_t = d().lle_reg)]
    pub lle_reg: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct TacCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub global: Global,
    /// Corpus JSONL (id, topic and vector or text per line)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Split JSONL to write; a manifest and config are written next to it
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusOpts,
    #[command(flatten)]
    #[serde(flatten)]
    pub contamination: ContaminationOpts,
    #[arg(long, default_value_t = d().seed)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub global: Global,
    /// Embeddings or split JSONL to train on (labels are ignored)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Directory to write the ensemble into
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub detector: DetectorOpts,
    #[arg(long, default_value_t = d().seed)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub global: Global,
    /// Ensemble directory written by `train`
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Embeddings or split JSONL to score; rows without a label count as inliers
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Report CSV to write
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub global: Global,
    /// Report CSV (id,score,label)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Metrics JSON to write [default: standard output]
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchOpts {
    /// Training corpus JSONL
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Test corpus JSONL [default: the training corpus]
    #[arg(long)]
    pub test_input: Option<PathBuf>,
    /// Result JSON to write [default: standard output]
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusOpts,
    #[command(flatten)]
    #[serde(flatten)]
    pub contamination: ContaminationOpts,
    /// Test split size [default: largest size the test corpus supports]
    #[arg(long)]
    pub test_size: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub detector: DetectorOpts,
    /// Independent runs
    #[arg(long, default_value_t = d().runs)]
    pub runs: usize,
    /// Base seed; splits and models of each run derive from it
    #[arg(long, default_value_t = d().seed)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub global: Global,
    #[command(flatten)]
    #[serde(flatten)]
    pub bench: BenchOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub global: Global,
    #[command(flatten)]
    #[serde(flatten)]
    pub bench: BenchOpts,
    /// Ensemble sizes to try, comma separated [default: --members]
    #[arg(long, value_delimiter = ',')]
    pub grid_members: Vec<usize>,
    /// Neighbour counts to try [default: --k]
    #[arg(long, value_delimiter = ',')]
    pub grid_k: Vec<usize>,
    /// Latent dimensions to try [default: --latent-dim]
    #[arg(long, value_delimiter = ',')]
    pub grid_latent: Vec<usize>,
    /// Hidden layer counts to try, widths 128, 64, 32, ... [default: --encoder-hidden]
    #[arg(long, value_delimiter = ',')]
    pub grid_hidden: Vec<usize>,
    /// Local term weights to try [default: --lambda3]
    #[arg(long, value_delimiter = ',')]
    pub grid_lambda3: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthCmd {
    #[command(flatten)]
    #[serde(flatten)]
    pub global: Global,
    /// Directory to write the corpus into
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = d().seed)]
    pub seed: u64,
}
