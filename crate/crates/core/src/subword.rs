//! Byte-pair encoding with an end-of-word suffix marker.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use thiserror::Error;

/// Appended to the final symbol of every word.
pub const END_OF_WORD: &str = "</w>";

#[derive(Debug, Error)]
pub enum SubwordError {
    #[error("cannot learn merges from an empty corpus")]
    EmptyCorpus,
    #[error("merges line {line}: expected two space-separated symbols")]
    Format { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered merge list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeTable {
    merges: Vec<(String, String)>,
    ranks: HashMap<(String, String), usize>,
    requested: usize,
}

impl MergeTable {
    pub fn from_merges(merges: Vec<(String, String)>) -> Self {
        let requested = merges.len();
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, pair) in merges.iter().enumerate() {
            ranks.entry(pair.clone()).or_insert(rank);
        }
        Self {
            merges,
            ranks,
            requested,
        }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    /// Merge count asked for at learning time (may exceed `merges().len()`).
    pub fn requested(&self) -> usize {
        self.requested
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    /// Segments one word into marked symbols (`["p", "e", "n</w>"]` with no merges).
    pub fn segment_word(&self, word: &str) -> Vec<String> {
        let mut symbols = initial_symbols(word);
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied())
                .min();
            let Some(rank) = best else { break };
            let (left, right) = &self.merges[rank];
            symbols = merge_pair(&symbols, left, right);
        }
        symbols
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (a, b) in &self.merges {
            writeln!(out, "{a} {b}")?;
        }
        Ok(())
    }

    /// Reads a merges file; `#version` headers and blank lines are ignored.
    pub fn read_from<R: BufRead>(input: R) -> Result<Self, SubwordError> {
        let mut merges = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with("#version") {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                    merges.push((a.to_owned(), b.to_owned()))
                }
                _ => return Err(SubwordError::Format { line: n + 1 }),
            }
        }
        Ok(Self::from_merges(merges))
    }
}

fn initial_symbols(word: &str) -> Vec<String> {
    let mut symbols: Vec<String> = word.chars().map(String::from).collect();
    if let Some(last) = symbols.last_mut() {
        last.push_str(END_OF_WORD);
    }
    symbols
}

fn merge_pair(symbols: &[String], left: &str, right: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == left && symbols[i + 1] == right {
            out.push(format!("{left}{right}"));
            i += 2;
        } else {
            out.push(symbols[i].clone());
            i += 1;
        }
    }
    out
}

/// Learns up to `num_merges` merges. Each round merges the most frequent
/// adjacent pair; ties go to the lexicographically smallest pair.
pub fn learn_bpe<T: AsRef<str>>(corpus: &[T], num_merges: usize) -> Result<MergeTable, SubwordError> {
    let mut freqs: BTreeMap<&str, usize> = BTreeMap::new();
    for word in corpus {
        let word = word.as_ref();
        if !word.is_empty() {
            *freqs.entry(word).or_default() += 1;
        }
    }
    if freqs.is_empty() {
        return Err(SubwordError::EmptyCorpus);
    }
    let mut vocab: Vec<(Vec<String>, usize)> = freqs
        .into_iter()
        .map(|(w, f)| (initial_symbols(w), f))
        .collect();

    let mut merges = Vec::with_capacity(num_merges);
    for _ in 0..num_merges {
        let mut pairs: HashMap<(&str, &str), usize> = HashMap::new();
        for (symbols, f) in &vocab {
            for w in symbols.windows(2) {
                *pairs.entry((&w[0], &w[1])).or_default() += f;
            }
        }
        let best = pairs
            .into_iter()
            .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)))
            .map(|((a, b), _)| (a.to_owned(), b.to_owned()));
        let Some((left, right)) = best else { break };
        for (symbols, _) in vocab.iter_mut() {
            *symbols = merge_pair(symbols, &left, &right);
        }
        merges.push((left, right));
    }
    let mut table = MergeTable::from_merges(merges);
    table.requested = num_merges;
    Ok(table)
}

/// A subword unit; `end_of_word` marks the final piece of a word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subword {
    pub text: String,
    pub end_of_word: bool,
}

impl Subword {
    /// Text with the end-of-word marker restored.
    pub fn marked(&self) -> String {
        if self.end_of_word {
            format!("{}{END_OF_WORD}", self.text)
        } else {
            self.text.clone()
        }
    }
}

pub fn apply_bpe<T: AsRef<str>>(table: &MergeTable, words: &[T]) -> Vec<Subword> {
    let mut out = Vec::new();
    for word in words {
        for symbol in table.segment_word(word.as_ref()) {
            match symbol.strip_suffix(END_OF_WORD) {
                Some(text) => out.push(Subword {
                    text: text.to_owned(),
                    end_of_word: true,
                }),
                None => out.push(Subword {
                    text: symbol,
                    end_of_word: false,
                }),
            }
        }
    }
    out
}

/// Rebuilds words by concatenating subwords up to each end-of-word flag.
pub fn join_subwords(subwords: &[Subword]) -> Vec<String> {
    let mut words = Vec::new();
    let mut current = String::new();
    for sw in subwords {
        current.push_str(&sw.text);
        if sw.end_of_word {
            words.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

/// Number of subwords in each word, in order.
pub fn subwords_per_word(subwords: &[Subword]) -> Vec<usize> {
    let mut counts = Vec::new();
    let mut run = 0;
    for sw in subwords {
        run += 1;
        if sw.end_of_word {
            counts.push(run);
            run = 0;
        }
    }
    counts
}

/// Completed words among the first `j` subwords, i.e. how far a word-level
/// consumer such as the ICLP predictor can have looked.
pub fn words_completed(subwords: &[Subword], j: usize) -> usize {
    subwords[..j.min(subwords.len())]
        .iter()
        .filter(|s| s.end_of_word)
        .count()
}
