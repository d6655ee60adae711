//! End-to-end runs and hyperparameter sweeps.

mod config;
mod pipeline;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{
    parse_values, Config, InputConfig, LabelConfig, MetricsConfig, PolicySpec, RangeSpec, TranslatorConfig,
    CONFIG_VERSION,
};
pub use pipeline::{
    read_sentence_file, run_pipeline, sort_rows, sweep, write_scatter_csv, write_sweep_csv, RunOutcome, RunReport,
    SweepOutcome, SweepRow, Workspace,
};

use crate::iclp::IclpError;
use crate::simulator::SimError;
use crate::subword::SubwordError;
use crate::translator::TranslateError;
use crate::treebank::TreebankError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("configuration: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Treebank(#[from] TreebankError),
    #[error(transparent)]
    Iclp(#[from] IclpError),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Subword(#[from] SubwordError),
    #[error("reference for sentence {sentence_id}: {source}")]
    Reference {
        sentence_id: String,
        source: TranslateError,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
