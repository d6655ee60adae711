//! Corpus BLEU with a single reference per sentence.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Tokenization {
    #[default]
    Word,
    /// Non-whitespace characters of the joined tokens.
    Character,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothing {
    #[default]
    None,
    /// Replace a zero match count by this value.
    Floor(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BleuOptions {
    pub max_n: usize,
    pub tokenization: Tokenization,
    pub smoothing: Smoothing,
}

impl Default for BleuOptions {
    fn default() -> Self {
        Self {
            max_n: 4,
            tokenization: Tokenization::Word,
            smoothing: Smoothing::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport<S> {
    /// 0..=100.
    pub bleu: S,
    pub precisions: Vec<S>,
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
    pub brevity_penalty: S,
    pub hypothesis_len: usize,
    pub reference_len: usize,
    pub length_ratio: S,
}

/// Splits tokens into evaluation units.
pub fn units<T: AsRef<str>>(tokens: &[T], tokenization: Tokenization) -> Vec<String> {
    match tokenization {
        Tokenization::Word => tokens.iter().map(|t| t.as_ref().to_owned()).collect(),
        Tokenization::Character => tokens
            .iter()
            .flat_map(|t| t.as_ref().chars())
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
    }
}

fn ngram_counts(units: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in units.windows(n) {
        *counts.entry(gram).or_default() += 1;
    }
    counts
}

fn check_corpus<H, R>(hyps: &[H], refs: &[R]) -> Result<(), MetricError> {
    if hyps.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    if hyps.len() != refs.len() {
        return Err(MetricError::CountMismatch {
            hypotheses: hyps.len(),
            references: refs.len(),
        });
    }
    Ok(())
}

pub fn corpus_bleu<S: Real, T: AsRef<str>>(
    hypotheses: &[Vec<T>],
    references: &[Vec<T>],
    opts: &BleuOptions,
) -> Result<QualityReport<S>, MetricError> {
    check_corpus(hypotheses, references)?;
    let max_n = opts.max_n.max(1);
    let mut matches = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let mut hyp_len = 0;
    let mut ref_len = 0;
    for (hyp, rf) in hypotheses.iter().zip(references) {
        let hyp = units(hyp, opts.tokenization);
        let rf = units(rf, opts.tokenization);
        hyp_len += hyp.len();
        ref_len += rf.len();
        for n in 1..=max_n {
            let ref_counts = ngram_counts(&rf, n);
            for (gram, count) in ngram_counts(&hyp, n) {
                matches[n - 1] += count.min(ref_counts.get(gram).copied().unwrap_or(0));
                totals[n - 1] += count;
            }
        }
    }

    let precisions: Vec<S> = matches
        .iter()
        .zip(&totals)
        .map(|(&m, &t)| {
            if t == 0 {
                S::zero()
            } else if m == 0 {
                match opts.smoothing {
                    Smoothing::None => S::zero(),
                    Smoothing::Floor(eps) => S::from(eps).unwrap_or_else(S::zero) / S::from_count(t),
                }
            } else {
                S::from_count(m) / S::from_count(t)
            }
        })
        .collect();

    let brevity_penalty = if hyp_len == 0 {
        S::zero()
    } else if hyp_len < ref_len {
        (S::one() - S::from_count(ref_len) / S::from_count(hyp_len)).exp()
    } else {
        S::one()
    };

    let bleu = if precisions.iter().any(|p| *p <= S::zero()) {
        S::zero()
    } else {
        let mean_log = precisions.iter().map(|p| p.ln()).fold(S::zero(), |a, b| a + b) / S::from_count(max_n);
        S::from_count(100) * brevity_penalty * mean_log.exp()
    };

    Ok(QualityReport {
        bleu,
        precisions,
        matches,
        totals,
        brevity_penalty,
        hypothesis_len: hyp_len,
        reference_len: ref_len,
        length_ratio: if ref_len == 0 {
            S::zero()
        } else {
            S::from_count(hyp_len) / S::from_count(ref_len)
        },
    })
}

/// Total hypothesis units over total reference units.
pub fn length_ratio<S: Scalar, T: AsRef<str>>(
    hypotheses: &[Vec<T>],
    references: &[Vec<T>],
    tokenization: Tokenization,
) -> Result<S, MetricError> {
    check_corpus(hypotheses, references)?;
    let count = |side: &[Vec<T>]| -> usize { side.iter().map(|s| units(s, tokenization).len()).sum() };
    let (h, r) = (count(hypotheses), count(references));
    if r == 0 {
        return Err(MetricError::ZeroReferenceLength);
    }
    Ok(S::from_count(h) / S::from_count(r))
}
