mod args;
mod config;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches};
use serde::Serialize;

use rosae::benchmark::{run_benchmark, run_sweep, BenchmarkData};
use rosae::corpus::{
    load_documents, save_embeddings, Document, EmbeddedDataset, StopWords, TfidfModel,
    TopicHierarchy,
};
use rosae::ensemble::{fit_ensemble, RosaeModel};
use rosae::metrics::ScoreReport;
use rosae::synthetic::HierarchicalGaussian;
use rosae::tac::{contaminate, load_labelled, max_split_size, partition_anomalies};

use args::{Cli, Command, Global};
use config::PipelineConfig;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] rosae::Error),
}

impl Failure {
    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage-error",
            Failure::Config(_) => "config-error",
            Failure::Data(e) => e.kind(),
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn io_failure(path: &Path, source: io::Error) -> Failure {
    Failure::Data(rosae::Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(f) = run(std::env::args_os()) {
        let report = serde_json::json!({ "error": f.kind(), "message": f.to_string() });
        eprintln!("{report}");
        std::process::exit(f.exit_code());
    }
}

fn run(argv: impl IntoIterator<Item = OsString>) -> Result<(), Failure> {
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp
            | ErrorKind::DisplayVersion
            | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => e.exit(),
            _ => return Err(Failure::Usage(e.to_string().trim_end().to_string())),
        },
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| Failure::Usage(e.to_string()))?;
    let (_, sub) = matches.subcommand().expect("a subcommand is required");
    match &cli.command {
        Command::Tac(c) => tac(&resolve(&c.global, c, sub)?),
        Command::Train(c) => train(&resolve(&c.global, c, sub)?),
        Command::Score(c) => score(&resolve(&c.global, c, sub)?),
        Command::Eval(c) => eval(&resolve(&c.global, c, sub)?),
        Command::Bench(c) => bench(&resolve(&c.global, c, sub)?),
        Command::Sweep(c) => sweep(&resolve(&c.global, c, sub)?),
        Command::Synth(c) => synth(&resolve(&c.global, c, sub)?),
    }
}

fn resolve(
    global: &Global,
    flags: &impl Serialize,
    matches: &clap::ArgMatches,
) -> Result<PipelineConfig, Failure> {
    let cfg = PipelineConfig::resolve(global.config.as_deref(), flags, matches)?;
    init_pool(cfg.jobs)?;
    Ok(cfg)
}

fn init_pool(jobs: Option<usize>) -> Result<(), Failure> {
    match jobs {
        Some(0) => Err(Failure::Usage("--jobs must be at least 1".into())),
        Some(n) => {
            // only fails if a pool already exists, which is harmless
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
            Ok(())
        }
        None => Ok(()),
    }
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

/// Pretty JSON plus a trailing newline, to `path` or standard output.
fn write_json(path: Option<&Path>, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(rosae::Error::from)?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| io_failure(Path::new("<stdout>"), e)),
    }
}

fn load_hierarchy(cfg: &PipelineConfig) -> Result<TopicHierarchy, Failure> {
    let path = cfg.require_path(&cfg.hierarchy, "hierarchy")?;
    Ok(TopicHierarchy::load(path)?)
}

/// Load the corpus (and optional test corpus). Records with vectors are used
/// as is; records with only text are vectorized with TF-IDF fitted on the
/// first corpus.
fn load_corpora(
    cfg: &PipelineConfig,
    train: &Path,
    test: Option<&Path>,
) -> Result<(EmbeddedDataset, Option<EmbeddedDataset>), Failure> {
    let docs = load_documents(train)?;
    let test_docs = test.map(load_documents).transpose()?;
    let has_vectors = |d: &[Document]| d.iter().all(|d| d.vector.is_some());
    if has_vectors(&docs) {
        let test = match test_docs {
            Some(t) if has_vectors(&t) => Some(EmbeddedDataset::from_documents(&t)?),
            Some(_) => {
                return Err(rosae::Error::InvalidData(
                    "test corpus lacks vectors but the training corpus has them".into(),
                )
                .into())
            }
            None => None,
        };
        return Ok((EmbeddedDataset::from_documents(&docs)?, test));
    }
    if docs.iter().any(|d| d.text.is_none()) {
        return Err(rosae::Error::InvalidData(
            "every record needs a vector, or every record needs text".into(),
        )
        .into());
    }
    let stopwords = match &cfg.stopwords {
        Some(p) => StopWords::load(p)?,
        None => StopWords::english(),
    };
    let model = TfidfModel::fit(&docs, cfg.vocab_size, &stopwords)?;
    let test = test_docs.map(|t| model.transform(&t)).transpose()?;
    Ok((model.transform(&docs)?, test))
}

fn tac(cfg: &PipelineConfig) -> Result<(), Failure> {
    let input = cfg.require_path(&cfg.input, "input")?;
    let output = cfg.require_path(&cfg.output, "output")?;
    let inlier = cfg.require_inlier()?;
    let h = load_hierarchy(cfg)?;
    let (data, _) = load_corpora(cfg, &input, None)?;
    h.check_covers(&data)?;
    let size = match cfg.size {
        Some(l) => l,
        None => {
            let part = partition_anomalies(&data, &h, &inlier)?;
            max_split_size(&part, cfg.mode, cfg.nu)
        }
    };
    let split = contaminate(&data, &h, &cfg.contamination_spec(inlier, size))?;
    split.save(&output)?;
    write_json(Some(&sidecar(&output, ".config.json")), &cfg.provenance())?;
    write_json(
        None,
        &serde_json::json!({ "rows": split.dataset.len(), "anomalies": split.anomaly_count }),
    )
}

fn train(cfg: &PipelineConfig) -> Result<(), Failure> {
    let input = cfg.require_path(&cfg.input, "input")?;
    let dir = cfg.require_path(&cfg.model, "model")?;
    let (data, _) = load_labelled(&input)?;
    let model = fit_ensemble(&data.matrix, &cfg.ensemble_config(data.dim()))?;
    model.save(&dir)?;
    write_json(Some(&dir.join("config.json")), &cfg.provenance())
}

fn score(cfg: &PipelineConfig) -> Result<(), Failure> {
    let dir = cfg.require_path(&cfg.model, "model")?;
    let input = cfg.require_path(&cfg.input, "input")?;
    let output = cfg.require_path(&cfg.output, "output")?;
    let model = RosaeModel::load(&dir)?;
    let (data, labels) = load_labelled(&input)?;
    let scores = model.decision_scores(&data.matrix)?;
    let report = ScoreReport::new(data.ids, scores, labels)?;
    report.write_csv(&output)?;
    write_json(
        Some(&sidecar(&output, ".config.json")),
        &serde_json::json!({ "config": cfg.provenance(), "ensemble": model.config }),
    )
}

fn eval(cfg: &PipelineConfig) -> Result<(), Failure> {
    let input = cfg.require_path(&cfg.input, "input")?;
    let report = ScoreReport::read_csv(&input)?;
    let metrics = serde_json::json!({
        "auc": report.auc()?,
        "ap": report.average_precision()?,
        "rows": report.scores.len(),
        "anomalies": report.labels.iter().filter(|&&l| l).count(),
    });
    write_json(cfg.output.as_deref(), &metrics)
}

fn bench_data(cfg: &PipelineConfig) -> Result<BenchmarkData, Failure> {
    let input = cfg.require_path(&cfg.input, "input")?;
    let h = load_hierarchy(cfg)?;
    let (train, test) = load_corpora(cfg, &input, cfg.test_input.as_deref())?;
    let test = test.unwrap_or_else(|| train.clone());
    h.check_covers(&train)?;
    h.check_covers(&test)?;
    Ok(BenchmarkData {
        train,
        test,
        hierarchy: h,
    })
}

#[derive(Serialize)]
struct Provenanced<'a, T> {
    config: PipelineConfig,
    #[serde(flatten)]
    body: &'a T,
}

fn bench(cfg: &PipelineConfig) -> Result<(), Failure> {
    let data = bench_data(cfg)?;
    let spec = cfg.benchmark_spec(cfg.require_inlier()?);
    let result = run_benchmark(&data, &spec, &cfg.ensemble_config(data.train.dim()))?;
    write_json(
        cfg.output.as_deref(),
        &Provenanced {
            config: cfg.provenance(),
            body: &serde_json::json!({ "result": result }),
        },
    )
}

fn sweep(cfg: &PipelineConfig) -> Result<(), Failure> {
    let data = bench_data(cfg)?;
    let spec = cfg.benchmark_spec(cfg.require_inlier()?);
    let cells = run_sweep(
        &data,
        &spec,
        &cfg.ensemble_config(data.train.dim()),
        &cfg.sweep_grid(),
    )?;
    write_json(
        cfg.output.as_deref(),
        &Provenanced {
            config: cfg.provenance(),
            body: &serde_json::json!({ "cells": cells }),
        },
    )
}

fn synth(cfg: &PipelineConfig) -> Result<(), Failure> {
    let dir = cfg.require_path(&cfg.output, "output")?;
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    let generator = HierarchicalGaussian {
        seed: cfg.seed,
        ..Default::default()
    };
    let corpus = generator.generate()?;
    save_embeddings(dir.join("train.jsonl"), &corpus.train)?;
    save_embeddings(dir.join("test.jsonl"), &corpus.test)?;
    corpus.hierarchy.save(dir.join("hierarchy.json"))?;
    let path = dir.join("generator.json");
    let f = File::create(&path).map_err(|e| io_failure(&path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &generator).map_err(rosae::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<OsString> {
        std::iter::once("rosae")
            .chain(s.split_whitespace())
            .map(OsString::from)
            .collect()
    }

    #[test]
    fn help_lists_defaults() {
        let mut cmd = Cli::command();
        let help = cmd
            .find_subcommand_mut("bench")
            .unwrap()
            .render_long_help()
            .to_string();
        for needle in [
            "[default: 0.1]",
            "[default: 0.05]",
            "[default: 32]",
            "[default: 50]",
            "[default: 20]",
            "[default: 0.2]",
            "[default: 0.5]",
            "[default: contextual]",
        ] {
            assert!(help.contains(needle), "missing {needle} in\n{help}");
        }
    }

    #[test]
    fn every_flag_names_a_config_field() {
        let fields = match serde_json::to_value(PipelineConfig::default()).unwrap() {
            serde_json::Value::Object(m) => m,
            _ => unreachable!(),
        };
        for sub in Cli::command().get_subcommands() {
            for arg in sub.get_arguments() {
                let id = arg.get_id().as_str();
                if id == "help" || id == "config" {
                    continue;
                }
                assert!(
                    fields.contains_key(id),
                    "{} --{id} has no field",
                    sub.get_name()
                );
            }
        }
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.json");
        fs::write(&file, r#"{"nu": 0.3, "k": 7, "members": 4}"#).unwrap();
        let line = format!(
            "bench --config {} --k 9 --encoder-hidden 8,4",
            file.display()
        );
        let matches = Cli::command().try_get_matches_from(argv(&line)).unwrap();
        let cli = Cli::from_arg_matches(&matches).unwrap();
        let Command::Bench(c) = &cli.command else {
            panic!("wrong subcommand")
        };
        let (_, sub) = matches.subcommand().unwrap();
        let cfg = PipelineConfig::resolve(Some(&file), c, sub).unwrap();
        assert_eq!((cfg.nu, cfg.k, cfg.members), (0.3, 9, 4));
        assert_eq!(cfg.encoder_hidden, vec![8, 4]);
        assert_eq!(cfg.lambda3, 0.05);
    }

    #[test]
    fn usage_and_config_errors_map_to_exit_codes() {
        let e = run(argv("tac --nu notanumber")).unwrap_err();
        assert_eq!((e.kind(), e.exit_code()), ("usage-error", 2));
        let e = run(argv("eval")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.json");
        fs::write(&file, r#"{"bogus": 1}"#).unwrap();
        let e = run(argv(&format!("eval --config {}", file.display()))).unwrap_err();
        assert_eq!((e.kind(), e.exit_code()), ("config-error", 1));
    }
}
