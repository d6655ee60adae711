use std::collections::BTreeMap;
use std::io::Write;

use crate::simulator::SessionLog;
use crate::subword::{apply_bpe, subwords_per_word, MergeTable};

#[derive(Debug, Clone, Copy)]
pub enum LengthUnit<'a> {
    Word,
    Subword(&'a MergeTable),
}

/// Source length of each reported segment of one session. A chunk whose
/// translation is empty is folded into the following chunk; trailing empty
/// chunks are reported as one segment so no source word is dropped.
pub fn segment_lengths(log: &SessionLog, unit: LengthUnit<'_>) -> Vec<usize> {
    let word_sizes: Vec<usize> = match unit {
        LengthUnit::Word => vec![1; log.source_tokens.len()],
        LengthUnit::Subword(table) => subwords_per_word(&apply_bpe(table, &log.source_tokens)),
    };
    let mut out = Vec::new();
    let mut pending = 0;
    for chunk in &log.chunk_spans {
        pending += word_sizes[chunk.source.start..chunk.source.end].iter().sum::<usize>();
        if !chunk.target.is_empty() {
            out.push(pending);
            pending = 0;
        }
    }
    if pending > 0 {
        out.push(pending);
    }
    out
}

/// Histogram `length -> count` over all successful sessions.
pub fn segment_length_distribution(logs: &[SessionLog], unit: LengthUnit<'_>) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for log in logs.iter().filter(|l| l.is_ok()) {
        for len in segment_lengths(log, unit) {
            *hist.entry(len).or_default() += 1;
        }
    }
    hist
}

pub fn write_histogram_csv<W: Write>(out: W, hist: &BTreeMap<usize, usize>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["length", "count"])?;
    for (len, count) in hist {
        w.write_record([len.to_string(), count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmenter::{PolicyConfig, Unit};
    use crate::simulator::{ChunkSpan, Span, SESSION_SCHEMA_VERSION};

    fn log_with(chunks: &[(usize, usize)]) -> SessionLog {
        let n = chunks.last().unwrap().0;
        let mut spans = Vec::new();
        let mut start = 0;
        let mut t = 0;
        for &(end, out) in chunks {
            spans.push(ChunkSpan {
                source: Span { start, end },
                target: Span { start: t, end: t + out },
            });
            start = end;
            t += out;
        }
        SessionLog {
            schema: SESSION_SCHEMA_VERSION,
            sentence_id: "s".into(),
            source_tokens: (0..n).map(|i| format!("w{i}")).collect(),
            target_tokens: (0..t).map(|i| format!("t{i}")).collect(),
            g: vec![n; t],
            chunk_spans: spans,
            policy: PolicyConfig::fixed(1, Unit::Word).unwrap(),
            forced_reads: 0,
            failure: None,
        }
    }

    #[test]
    fn empty_output_chunk_is_concatenated() {
        let log = log_with(&[(3, 0), (8, 2)]);
        assert_eq!(segment_lengths(&log, LengthUnit::Word), vec![8]);
        let hist = segment_length_distribution(&[log], LengthUnit::Word);
        assert_eq!(hist, BTreeMap::from([(8, 1)]));
    }

    #[test]
    fn trailing_empty_chunks_are_kept() {
        let log = log_with(&[(2, 1), (4, 0)]);
        assert_eq!(segment_lengths(&log, LengthUnit::Word), vec![2, 2]);
    }

    #[test]
    fn fixed_sixteen_over_twenty_words() {
        let logs = vec![log_with(&[(16, 3), (20, 1)]), log_with(&[(16, 2), (20, 2)])];
        let hist = segment_length_distribution(&logs, LengthUnit::Word);
        assert_eq!(hist, BTreeMap::from([(4, 2), (16, 2)]));
    }

    #[test]
    fn subword_lengths() {
        let mut log = log_with(&[(1, 1), (2, 1)]);
        log.source_tokens = vec!["ab".into(), "c".into()];
        let table = MergeTable::default();
        assert_eq!(segment_lengths(&log, LengthUnit::Subword(&table)), vec![2, 1]);
    }

    #[test]
    fn failed_sessions_are_skipped_and_csv() {
        let mut bad = log_with(&[(2, 1)]);
        bad.failure = Some("x".into());
        let hist = segment_length_distribution(&[bad, log_with(&[(2, 1)])], LengthUnit::Word);
        let mut buf = Vec::new();
        write_histogram_csv(&mut buf, &hist).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "length,count\n2,1\n");
    }
}
