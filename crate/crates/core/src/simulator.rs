//! Streaming translation sessions.
//!
//! Chunk sessions translate the source prefix at each chunk boundary with
//! all earlier output forced as a prefix. Wait-k sessions write one token
//! per read after an initial wait of `k` words. Every emitted token records
//! `g(t)`, the number of source words read when it was written.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segmenter::{segment_fixed, segment_rule_based, PolicyConfig, SegmentError, Segmentation, Unit};
use crate::subword::{apply_bpe, MergeTable};
use crate::translator::Translator;

pub const SESSION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("rule-based segmentation needs per-word labels")]
    MissingLabels,
    #[error("subword fixed-size segmentation needs a merge table")]
    MissingMergeTable,
    #[error("policy {0} is not a chunk policy")]
    NotChunkPolicy(String),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error("session log line {line}: {message}")]
    LogFormat { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A tokenized source sentence with optional next-constituent labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub words: Vec<String>,
    pub labels: Option<Vec<String>>,
}

impl Sentence {
    pub fn new(id: impl Into<String>, words: Vec<String>) -> Self {
        Self {
            id: id.into(),
            words,
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }
}

/// Half-open token range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkSpan {
    pub source: Span,
    pub target: Span,
}

/// Replayable record of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionLog {
    pub schema: u32,
    pub sentence_id: String,
    pub source_tokens: Vec<String>,
    pub target_tokens: Vec<String>,
    pub g: Vec<usize>,
    pub chunk_spans: Vec<ChunkSpan>,
    pub policy: PolicyConfig,
    /// Extra reads taken because the translator had nothing to write (wait-k).
    #[serde(default)]
    pub forced_reads: usize,
    #[serde(default)]
    pub failure: Option<String>,
}

impl SessionLog {
    fn start(sentence: &Sentence, policy: &PolicyConfig) -> Self {
        Self {
            schema: SESSION_SCHEMA_VERSION,
            sentence_id: sentence.id.clone(),
            source_tokens: sentence.words.clone(),
            target_tokens: Vec::new(),
            g: Vec::new(),
            chunk_spans: Vec::new(),
            policy: policy.clone(),
            forced_reads: 0,
            failure: None,
        }
    }

    /// A session that could not run at all.
    pub fn failed(sentence: &Sentence, policy: &PolicyConfig, reason: impl Into<String>) -> Self {
        let mut log = Self::start(sentence, policy);
        log.failure = Some(reason.into());
        log
    }

    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }

    /// Source end positions of all chunks but the last.
    pub fn inner_boundaries(&self) -> Vec<usize> {
        let n = self.chunk_spans.len().saturating_sub(1);
        self.chunk_spans[..n].iter().map(|c| c.source.end).collect()
    }

    fn emit(&mut self, source: Span, tokens: Vec<String>, g: usize) {
        let start = self.target_tokens.len();
        self.g.extend(std::iter::repeat_n(g, tokens.len()));
        self.target_tokens.extend(tokens);
        self.chunk_spans.push(ChunkSpan {
            source,
            target: Span {
                start,
                end: self.target_tokens.len(),
            },
        });
    }
}

pub fn write_session_logs<W: Write>(mut out: W, logs: &[SessionLog]) -> Result<(), SimError> {
    for log in logs {
        let line = serde_json::to_string(log).map_err(|e| SimError::LogFormat {
            line: 0,
            message: e.to_string(),
        })?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_session_logs<R: BufRead>(input: R) -> Result<Vec<SessionLog>, SimError> {
    let mut logs = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| SimError::LogFormat { line: n + 1, message };
        let log: SessionLog = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if log.schema != SESSION_SCHEMA_VERSION {
            return Err(bad(format!("unsupported schema version {}", log.schema)));
        }
        logs.push(log);
    }
    Ok(logs)
}

/// How `g` is charged for a non-final chunk ending at word `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    /// The boundary is known once word `b` is read: `g = b`.
    Immediate,
    /// The boundary is only known after reading `w_{b+1}`: `g = b + 1`.
    LookAhead,
}

/// Source segmentation a chunk policy produces for one sentence, in words.
pub fn chunk_segmentation(
    sentence: &Sentence,
    policy: &PolicyConfig,
    subwords: Option<&MergeTable>,
) -> Result<(Segmentation, Trigger), SimError> {
    let n = sentence.words.len();
    match policy {
        PolicyConfig::RuleBased {
            boundary_labels,
            min_len,
        } => {
            let labels = sentence.labels.as_ref().ok_or(SimError::MissingLabels)?;
            let seg = segment_rule_based(&sentence.words, labels, boundary_labels, *min_len)?;
            Ok((seg, Trigger::LookAhead))
        }
        PolicyConfig::FixedSize { f, unit: Unit::Word } => Ok((segment_fixed(n, *f), Trigger::Immediate)),
        PolicyConfig::FixedSize { f, unit: Unit::Subword } => {
            let table = subwords.ok_or(SimError::MissingMergeTable)?;
            let pieces = apply_bpe(table, &sentence.words);
            // Subword boundaries inside a word wait for the word to finish.
            let mut completed = 0;
            let mut word_end_after = Vec::with_capacity(pieces.len());
            for piece in &pieces {
                word_end_after.push(completed + 1);
                if piece.end_of_word {
                    completed += 1;
                }
            }
            let mut boundaries: Vec<usize> = segment_fixed(pieces.len(), *f)
                .boundaries()
                .iter()
                .map(|&j| word_end_after[j - 1])
                .collect();
            boundaries.dedup();
            Ok((Segmentation::new(boundaries, n)?, Trigger::Immediate))
        }
        PolicyConfig::WaitK { .. } => Err(SimError::NotChunkPolicy(policy.name())),
    }
}

/// Translates chunk by chunk with forced prefixes.
///
/// The final chunk is translated with the full source and `g = |X|`.
/// Translator errors end the session and are recorded in `failure`.
pub fn run_segmented_session<T: Translator + ?Sized>(
    sentence: &Sentence,
    policy: &PolicyConfig,
    segmentation: &Segmentation,
    trigger: Trigger,
    translator: &T,
) -> SessionLog {
    let mut log = SessionLog::start(sentence, policy);
    let n = sentence.words.len();
    for chunk in segmentation.chunks() {
        let end = chunk.end;
        let g = if end == n {
            n
        } else {
            match trigger {
                Trigger::Immediate => end,
                Trigger::LookAhead => end + 1,
            }
        };
        match translator.translate(&sentence.words[..end], &log.target_tokens) {
            Ok(continuation) => log.emit(
                Span {
                    start: chunk.start,
                    end,
                },
                continuation,
                g,
            ),
            Err(e) => {
                log.failure = Some(e.to_string());
                break;
            }
        }
    }
    log
}

/// Runs a rule-based or fixed-size policy over one sentence.
pub fn run_chunk_session<T: Translator + ?Sized>(
    sentence: &Sentence,
    policy: &PolicyConfig,
    subwords: Option<&MergeTable>,
    translator: &T,
) -> Result<SessionLog, SimError> {
    let (seg, trigger) = chunk_segmentation(sentence, policy, subwords)?;
    Ok(run_segmented_session(sentence, policy, &seg, trigger, translator))
}

/// Test-time wait-k: read `k` words, then alternate one write with one read.
///
/// Each write asks for a continuation of the current source prefix and
/// keeps only its first token. An empty continuation before the source is
/// exhausted triggers another read instead. Once all words are read the
/// remaining continuation is written in one go.
pub fn run_waitk_session<T: Translator + ?Sized>(sentence: &Sentence, k: usize, translator: &T) -> SessionLog {
    let policy = PolicyConfig::WaitK { k };
    let mut log = SessionLog::start(sentence, &policy);
    let words = &sentence.words;
    let n = words.len();
    if n == 0 {
        return log;
    }
    let mut read = k.max(1).min(n);
    let mut chunk_start = 0;
    loop {
        let continuation = match translator.translate(&words[..read], &log.target_tokens) {
            Ok(c) => c,
            Err(e) => {
                log.failure = Some(e.to_string());
                break;
            }
        };
        let source = Span {
            start: chunk_start,
            end: read,
        };
        if read == n {
            log.emit(source, continuation, n);
            break;
        }
        match continuation.into_iter().next() {
            Some(token) => {
                log.emit(source, vec![token], read);
                chunk_start = read;
            }
            None => log.forced_reads += 1,
        }
        read += 1;
    }
    log
}

/// Dispatches on the policy kind.
pub fn run_session<T: Translator + ?Sized>(
    sentence: &Sentence,
    policy: &PolicyConfig,
    subwords: Option<&MergeTable>,
    translator: &T,
) -> Result<SessionLog, SimError> {
    match policy {
        PolicyConfig::WaitK { k } => Ok(run_waitk_session(sentence, *k, translator)),
        _ => run_chunk_session(sentence, policy, subwords, translator),
    }
}
