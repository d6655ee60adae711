//! Chunk segmentation policies.
//!
//! The rule-based policy places a boundary before a word whose
//! next-constituent label is a boundary label (by default `S` or `VP`),
//! unless the previous word's label is also a boundary label or the chunk
//! so far is shorter than the minimum length. Fixed-size and wait-k
//! baselines are provided alongside.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmentError {
    #[error("{words} words but {labels} labels")]
    LengthMismatch { words: usize, labels: usize },
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("boundaries must be strictly increasing and end at {len}")]
    InvalidBoundaries { len: usize },
}

/// Unit counted by the fixed-size policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Word,
    Subword,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Word => "word",
            Unit::Subword => "subword",
        })
    }
}

impl std::str::FromStr for Unit {
    type Err = SegmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "word" => Ok(Unit::Word),
            "subword" => Ok(Unit::Subword),
            other => Err(SegmentError::InvalidPolicy(format!("unknown unit {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyConfig {
    WaitK {
        k: usize,
    },
    FixedSize {
        f: usize,
        unit: Unit,
    },
    RuleBased {
        boundary_labels: BTreeSet<String>,
        min_len: usize,
    },
}

impl PolicyConfig {
    pub fn wait_k(k: usize) -> Result<Self, SegmentError> {
        let p = Self::WaitK { k };
        p.validate()?;
        Ok(p)
    }

    pub fn fixed(f: usize, unit: Unit) -> Result<Self, SegmentError> {
        let p = Self::FixedSize { f, unit };
        p.validate()?;
        Ok(p)
    }

    pub fn rule_based<I, L>(labels: I, min_len: usize) -> Result<Self, SegmentError>
    where
        I: IntoIterator<Item = L>,
        L: Into<String>,
    {
        let p = Self::RuleBased {
            boundary_labels: labels.into_iter().map(Into::into).collect(),
            min_len,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SegmentError> {
        let bad = |m: &str| Err(SegmentError::InvalidPolicy(m.to_owned()));
        match self {
            Self::WaitK { k } if *k == 0 => bad("k must be at least 1"),
            Self::FixedSize { f, .. } if *f == 0 => bad("f must be at least 1"),
            Self::RuleBased { min_len, .. } if *min_len == 0 => bad("minimum length must be at least 1"),
            Self::RuleBased { boundary_labels, .. } if boundary_labels.is_empty() => {
                bad("boundary label set is empty")
            }
            _ => Ok(()),
        }
    }

    /// Series name, e.g. `waitk`, `fixed-subword`, `rule-S+VP`.
    pub fn name(&self) -> String {
        match self {
            Self::WaitK { .. } => "waitk".into(),
            Self::FixedSize { unit, .. } => format!("fixed-{unit}"),
            Self::RuleBased { boundary_labels, .. } => {
                let labels: Vec<&str> = boundary_labels.iter().map(String::as_str).collect();
                format!("rule-{}", labels.join("+"))
            }
        }
    }

    /// The latency knob: k, f or m.
    pub fn hyperparameter(&self) -> usize {
        match self {
            Self::WaitK { k } => *k,
            Self::FixedSize { f, .. } => *f,
            Self::RuleBased { min_len, .. } => *min_len,
        }
    }

    /// Same policy with a different latency knob.
    pub fn with_hyperparameter(&self, value: usize) -> Result<Self, SegmentError> {
        let p = match self {
            Self::WaitK { .. } => Self::WaitK { k: value },
            Self::FixedSize { unit, .. } => Self::FixedSize { f: value, unit: *unit },
            Self::RuleBased { boundary_labels, .. } => Self::RuleBased {
                boundary_labels: boundary_labels.clone(),
                min_len: value,
            },
        };
        p.validate()?;
        Ok(p)
    }
}

/// Boundaries `b_1 < b_2 < ... < b_last = n`: a boundary `b` closes a chunk after token `b` (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Segmentation {
    boundaries: Vec<usize>,
}

impl Segmentation {
    pub fn new(boundaries: Vec<usize>, len: usize) -> Result<Self, SegmentError> {
        let increasing = boundaries.windows(2).all(|w| w[0] < w[1]);
        let ends = match boundaries.last() {
            Some(&last) => last == len && boundaries[0] > 0,
            None => len == 0,
        };
        if increasing && ends {
            Ok(Self { boundaries })
        } else {
            Err(SegmentError::InvalidBoundaries { len })
        }
    }

    /// One chunk covering the whole sentence.
    pub fn whole(len: usize) -> Self {
        Self {
            boundaries: if len == 0 { vec![] } else { vec![len] },
        }
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Boundaries excluding the sentence-final one.
    pub fn inner_boundaries(&self) -> &[usize] {
        let n = self.boundaries.len().saturating_sub(1);
        &self.boundaries[..n]
    }

    pub fn len(&self) -> usize {
        self.boundaries.last().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }

    /// 0-based half-open token ranges.
    pub fn chunks(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.boundaries
            .iter()
            .map(|&b| {
                let r = start..b;
                start = b;
                r
            })
            .collect()
    }

    pub fn chunk_lengths(&self) -> Vec<usize> {
        self.chunks().into_iter().map(|r| r.len()).collect()
    }

    pub fn split<'t, T>(&self, tokens: &'t [T]) -> Vec<&'t [T]> {
        self.chunks().into_iter().map(|r| &tokens[r]).collect()
    }
}

/// Applies the three segmentation rules to per-word labels `c_1..c_n`.
///
/// Scanning `i = 2..=n`, a boundary goes after `w_{i-1}` iff `c_i` is a
/// boundary label, `c_{i-1}` is not, and the open chunk holds at least
/// `min_len` words. The sentence end always closes the last chunk.
pub fn segment_rule_based<W, L>(
    words: &[W],
    labels: &[L],
    boundary_labels: &BTreeSet<String>,
    min_len: usize,
) -> Result<Segmentation, SegmentError>
where
    L: AsRef<str>,
{
    if words.len() != labels.len() {
        return Err(SegmentError::LengthMismatch {
            words: words.len(),
            labels: labels.len(),
        });
    }
    let n = words.len();
    let is_boundary = |i: usize| boundary_labels.contains(labels[i - 1].as_ref());
    let mut boundaries = Vec::new();
    let mut last = 0;
    for i in 2..=n {
        if is_boundary(i) && !is_boundary(i - 1) && (i - 1) - last >= min_len {
            boundaries.push(i - 1);
            last = i - 1;
        }
    }
    if n > 0 {
        boundaries.push(n);
    }
    Ok(Segmentation { boundaries })
}

/// A boundary after every `f` tokens; the final chunk may be shorter.
pub fn segment_fixed(len: usize, f: usize) -> Segmentation {
    assert!(f >= 1, "fixed segment size must be at least 1");
    let mut boundaries: Vec<usize> = (1..).map(|j| j * f).take_while(|&b| b < len).collect();
    if len > 0 {
        boundaries.push(len);
    }
    Segmentation { boundaries }
}

/// Wait-k read counts: `g(t) = min(k + t - 1, |X|)` for `t = 1..=target_len`.
pub fn waitk_schedule(k: usize, source_len: usize, target_len: usize) -> Vec<usize> {
    assert!(k >= 1, "k must be at least 1");
    (1..=target_len).map(|t| (k + t - 1).min(source_len)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Read,
    Write,
}

/// The read/write sequence behind [`waitk_schedule`].
pub fn waitk_actions(k: usize, source_len: usize, target_len: usize) -> Vec<Action> {
    let mut actions = Vec::new();
    let mut read = 0;
    for g in waitk_schedule(k, source_len, target_len) {
        while read < g {
            actions.push(Action::Read);
            read += 1;
        }
        actions.push(Action::Write);
    }
    actions.extend(std::iter::repeat_n(Action::Read, source_len - read));
    actions
}

/// Wait-k viewed as a source segmentation: the first chunk holds `k`
/// words and every later word is its own chunk.
pub fn waitk_segmentation(k: usize, len: usize) -> Segmentation {
    assert!(k >= 1, "k must be at least 1");
    Segmentation {
        boundaries: (k.min(len)..=len).filter(|&b| b > 0).collect(),
    }
}
