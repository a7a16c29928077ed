//! Command implementations behind the `pgmtext` binary: experiment
//! configuration, prepared-artifact management, and the
//! prepare/train/evaluate/benchmark/report pipeline.

pub mod artifacts;
pub mod commands;
pub mod config;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("path not found: {0}")]
    MissingPath(PathBuf),
    #[error("vocabulary hash mismatch: model was trained on {expected}, artifacts have {found}")]
    VocabHashMismatch { expected: String, found: String },
    #[error("artifact error: {0}")]
    Artifact(String),
    #[error(transparent)]
    Corpus(#[from] pgmtext::corpus::CorpusError),
    #[error(transparent)]
    Text(#[from] pgmtext::textprep::TextError),
    #[error(transparent)]
    BayesNet(#[from] pgmtext::bayesnet::BayesNetError),
    #[error(transparent)]
    Hmm(#[from] pgmtext::hmm::HmmError),
    #[error(transparent)]
    Baseline(#[from] pgmtext::baselines::BaselineError),
    #[error(transparent)]
    Eval(#[from] pgmtext::eval::EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Config and missing-input problems exit with 2, runtime failures
    /// with 1.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::MissingPath(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
