use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::scalar::Scalar;
use crate::simulator::SessionLog;

/// Unit in which target length is counted for latency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TargetUnit {
    #[default]
    Word,
    /// Every character of a target token is a unit inheriting the token's `g`.
    Character,
}

/// Average Lagging.
///
/// With `gamma = |Y| / |X|` and `tau` the first step at which the whole
/// source has been read,
/// `AL = (1/tau) * sum_{t=1..tau} (g(t) - (t-1)/gamma)`.
/// Entries of `g` after `tau` are never looked at.
pub fn average_lagging<S: Scalar>(g: &[usize], source_len: usize, target_len: usize) -> Result<S, MetricError> {
    if source_len == 0 {
        return Err(MetricError::EmptySource);
    }
    if target_len == 0 || g.is_empty() {
        return Err(MetricError::EmptyTarget);
    }
    let tau = g
        .iter()
        .position(|&read| read >= source_len)
        .ok_or(MetricError::SourceNeverFinished)?
        + 1;
    if g[..tau].windows(2).any(|w| w[0] > w[1]) || g[tau - 1] != source_len {
        return Err(MetricError::InvalidSchedule);
    }
    let x = S::from_count(source_len);
    let y = S::from_count(target_len);
    let mut sum = S::zero();
    for (t, &read) in g[..tau].iter().enumerate() {
        // (t-1)/gamma == (t-1) * |X| / |Y| with 1-based t.
        sum = sum + S::from_count(read) - S::from_count(t) * x.clone() / y.clone();
    }
    Ok(sum / S::from_count(tau))
}

/// Repeats each token's `g` once per character.
pub fn expand_to_characters<T: AsRef<str>>(tokens: &[T], g: &[usize]) -> Vec<usize> {
    tokens
        .iter()
        .zip(g)
        .flat_map(|(tok, &read)| {
            let chars = tok.as_ref().chars().filter(|c| !c.is_whitespace()).count();
            std::iter::repeat_n(read, chars)
        })
        .collect()
}

/// AL of one session in the requested target unit.
pub fn session_lagging<S: Scalar>(log: &SessionLog, unit: TargetUnit) -> Result<S, MetricError> {
    if !log.is_ok() {
        return Err(MetricError::FailedSession);
    }
    let source_len = log.source_tokens.len();
    match unit {
        TargetUnit::Word => average_lagging(&log.g, source_len, log.target_tokens.len()),
        TargetUnit::Character => {
            let g = expand_to_characters(&log.target_tokens, &log.g);
            average_lagging(&g, source_len, g.len())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyReport<S> {
    pub unit: TargetUnit,
    /// `(sentence_id, AL)`; `None` for excluded sentences.
    pub per_sentence: Vec<(String, Option<S>)>,
    /// Mean over non-excluded sentences.
    pub corpus: Option<S>,
    pub excluded: usize,
}

pub fn latency_report<S: Scalar>(logs: &[SessionLog], unit: TargetUnit) -> LatencyReport<S> {
    let mut per_sentence = Vec::with_capacity(logs.len());
    let mut sum = S::zero();
    let mut counted = 0;
    for log in logs {
        let al = session_lagging::<S>(log, unit).ok();
        if let Some(v) = &al {
            sum = sum + v.clone();
            counted += 1;
        }
        per_sentence.push((log.sentence_id.clone(), al));
    }
    LatencyReport {
        unit,
        per_sentence,
        corpus: (counted > 0).then(|| sum / S::from_count(counted)),
        excluded: logs.len() - counted,
    }
}
