//! RoSAE: ensembles of robust subspace local recovery autoencoders for
//! textual anomaly detection, with the corpus contamination procedure used to
//! build independent and contextual anomaly benchmarks.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: dense matrices, exact k-NN search, locally linear weights
//! * [`corpus`]: documents, topic hierarchies, embedding files, TF-IDF
//! * [`tac`]: contaminated split construction
//! * [`rlae`]: a single pruned autoencoder detector
//! * [`ensemble`]: the standardized-median ensemble of detectors
//! * [`metrics`]: ROC-AUC, average precision and score reports
//! * [`benchmark`]: multi-run contaminate/fit/score/evaluate pipelines
//! * [`synthetic`]: hierarchical Gaussian corpora for testing

pub mod benchmark;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod rlae;
pub mod seed;
pub mod synthetic;
pub mod tac;

pub use error::{Error, Result};
