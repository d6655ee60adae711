//! Chunk segmentation for simultaneous translation.
//!
//! Source sentences are split into chunks at predicted constituent
//! boundaries, each chunk is translated with all earlier output forced as a
//! prefix, and the resulting sessions are scored for quality and latency.
//!
//! ```
//! use chunkseg::segmenter::segment_rule_based;
//! use chunkseg::treebank::parse_bracketed;
//!
//! let bank = parse_bracketed("(S (NP (PRP I)) (VP (VBD bought) (NP (DT a) (NN pen))) (. .))").unwrap();
//! let tree = &bank.trees[0];
//! let labels = tree.next_constituent_labels();
//! assert_eq!(labels, ["NP", "VP", "NP", "NN", "."]);
//!
//! let boundary_labels = ["S", "VP"].iter().map(|s| s.to_string()).collect();
//! let seg = segment_rule_based(tree.words(), &labels, &boundary_labels, 1).unwrap();
//! assert_eq!(seg.boundaries(), [1, 5]);
//! ```
//!
//! Numeric code is generic over [`scalar::Scalar`]; the aliases below fix
//! it to `f64`, and [`Rational`] gives exact arithmetic where needed.

pub mod harness;
pub mod iclp;
pub mod metrics;
pub mod scalar;
pub mod segmenter;
pub mod simulator;
pub mod subword;
pub mod synth;
pub mod translator;
pub mod treebank;

use thiserror::Error;

pub use scalar::{Rational, Real, Scalar};

pub type Model = iclp::IclpModel<f64>;
pub type EvalReport = iclp::EvalReport<f64>;
pub type Quality = metrics::QualityReport<f64>;
pub type Latency = metrics::LatencyReport<f64>;

/// Any error the library can return.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Treebank(#[from] treebank::TreebankError),
    #[error(transparent)]
    Iclp(#[from] iclp::IclpError),
    #[error(transparent)]
    Segment(#[from] segmenter::SegmentError),
    #[error(transparent)]
    Translate(#[from] translator::TranslateError),
    #[error(transparent)]
    Sim(#[from] simulator::SimError),
    #[error(transparent)]
    Metric(#[from] metrics::MetricError),
    #[error(transparent)]
    Subword(#[from] subword::SubwordError),
    #[error(transparent)]
    Harness(#[from] harness::HarnessError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
