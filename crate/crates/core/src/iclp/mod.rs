//! Incremental constituent label prediction.
//!
//! A predictor maps a word prefix `w_1..w_i` to the label of the constituent
//! that starts at `w_i` (one-word look-ahead). Three sources are provided:
//! the gold-tree [`Oracle`], the averaged perceptron [`IclpModel`], and
//! externally produced predictions loaded through [`load_external_predictions`].

mod eval;
mod features;
mod model;

use std::collections::HashMap;

use thiserror::Error;

use crate::treebank::ParseTree;

pub use eval::{
    evaluate, load_external_predictions, read_external_predictions, write_predictions, EvalReport,
    ExternalPredictions, LabelScore, PredictionRecord,
};
pub use features::{FeatureSpec, FeatureTemplate};
pub use model::{train, train_with, IclpModel, TrainMeta, TrainOptions, TrainReport};

#[derive(Debug, Error)]
pub enum IclpError {
    #[error("prefix must contain at least one word")]
    EmptyPrefix,
    #[error("training requires at least one instance")]
    NoInstances,
    #[error("prefix is not a prefix of the oracle sentence")]
    NotOraclePrefix,
    #[error("cannot evaluate an empty prediction set")]
    EmptyEvaluation,
    #[error("record {sentence_id}:{index} has no gold label")]
    MissingGold { sentence_id: String, index: usize },
    #[error("predictions line {line}: {message}")]
    PredictionFormat { line: usize, message: String },
    #[error("model line {line}: {message}")]
    ModelFormat { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered label set with dense ids starting at 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelInventory {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelInventory {
    /// Sorted, de-duplicated inventory.
    pub fn from_labels<I, L>(labels: I) -> Self
    where
        I: IntoIterator<Item = L>,
        L: AsRef<str>,
    {
        let mut sorted: Vec<String> = labels.into_iter().map(|l| l.as_ref().to_owned()).collect();
        sorted.sort();
        sorted.dedup();
        let mut inv = Self::default();
        for label in sorted {
            inv.intern(&label);
        }
        inv
    }

    /// Id of `label`, appending it if unseen.
    pub fn intern(&mut self, label: &str) -> usize {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Anything that labels a prefix. Implementations must depend on the prefix only.
pub trait LabelPredictor {
    fn predict(&self, prefix: &[String]) -> Result<&str, IclpError>;

    /// Labels `c_1..c_n` for a whole sentence, one prefix at a time.
    fn label_sentence(&self, words: &[String]) -> Result<Vec<String>, IclpError> {
        (1..=words.len())
            .map(|i| self.predict(&words[..i]).map(str::to_owned))
            .collect()
    }
}

/// Reads labels off the gold tree.
#[derive(Debug, Clone, Copy)]
pub struct Oracle<'a> {
    tree: &'a ParseTree,
}

impl<'a> Oracle<'a> {
    pub fn new(tree: &'a ParseTree) -> Self {
        Self { tree }
    }
}

impl LabelPredictor for Oracle<'_> {
    fn predict(&self, prefix: &[String]) -> Result<&str, IclpError> {
        if prefix.is_empty() {
            return Err(IclpError::EmptyPrefix);
        }
        if !self.tree.words().starts_with(prefix) {
            return Err(IclpError::NotOraclePrefix);
        }
        self.tree
            .next_constituent_label(prefix.len())
            .ok_or(IclpError::NotOraclePrefix)
    }
}
