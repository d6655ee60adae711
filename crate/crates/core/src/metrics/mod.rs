//! Latency, quality and segmentation statistics.

mod bleu;
mod distribution;
mod latency;

use thiserror::Error;

pub use bleu::{corpus_bleu, length_ratio, units, BleuOptions, QualityReport, Smoothing, Tokenization};
pub use distribution::{segment_length_distribution, segment_lengths, write_histogram_csv, LengthUnit};
pub use latency::{
    average_lagging, expand_to_characters, latency_report, session_lagging, LatencyReport, TargetUnit,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("source is empty; latency is undefined")]
    EmptySource,
    #[error("target is empty; latency is undefined")]
    EmptyTarget,
    #[error("read counts never reach the source length")]
    SourceNeverFinished,
    #[error("read counts must be non-decreasing and bounded by the source length")]
    InvalidSchedule,
    #[error("session failed")]
    FailedSession,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("{hypotheses} hypotheses but {references} references")]
    CountMismatch { hypotheses: usize, references: usize },
    #[error("reference side has zero length")]
    ZeroReferenceLength,
}
