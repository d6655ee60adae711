//! Deterministic head-final toy translator.
//!
//! Each source word has a gloss and a category. The full translation moves
//! verbs after all other content words and punctuation to the end, which
//! turns `I bought a pen .` into `watashi wa pen wo katta .`. Under forced
//! decoding the committed prefix is matched back to source words and only
//! the glosses of unmatched words are produced.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use super::{TranslateError, Translator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Verb,
    Other,
    Punct,
}

impl Category {
    fn as_str(self) -> &'static str {
        match self {
            Category::Verb => "verb",
            Category::Other => "other",
            Category::Punct => "punct",
        }
    }

    fn rank(self) -> u8 {
        match self {
            Category::Other => 0,
            Category::Verb => 1,
            Category::Punct => 2,
        }
    }
}

impl std::str::FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "verb" => Ok(Category::Verb),
            "other" => Ok(Category::Other),
            "punct" => Ok(Category::Punct),
            _ => Err(format!("unknown category {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlossEntry {
    /// Target tokens; may be empty (articles, complementizers).
    pub gloss: Vec<String>,
    pub category: Category,
}

/// Source word to gloss. TSV file: `word  category  space-joined gloss`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GlossDictionary {
    entries: HashMap<String, GlossEntry>,
}

impl GlossDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: impl Into<String>, category: Category, gloss: &[&str]) {
        self.entries.insert(
            word.into(),
            GlossEntry {
                gloss: gloss.iter().map(|g| (*g).to_owned()).collect(),
                category,
            },
        );
    }

    pub fn get(&self, word: &str) -> Option<&GlossEntry> {
        self.entries.get(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, TranslateError> {
        let mut dict = Self::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| TranslateError::Dictionary { line: n + 1, message };
            let fields: Vec<&str> = line.split('\t').collect();
            if !(2..=3).contains(&fields.len()) || fields[0].is_empty() {
                return Err(bad("expected `word<TAB>category<TAB>gloss`".into()));
            }
            let category = fields[1].parse().map_err(bad)?;
            let gloss = fields
                .get(2)
                .map(|g| g.split_whitespace().map(str::to_owned).collect())
                .unwrap_or_default();
            dict.entries
                .insert(fields[0].to_owned(), GlossEntry { gloss, category });
        }
        Ok(dict)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TranslateError> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }

    /// Writes entries sorted by word.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut words: Vec<&String> = self.entries.keys().collect();
        words.sort();
        for w in words {
            let e = &self.entries[w];
            writeln!(out, "{w}\t{}\t{}", e.category.as_str(), e.gloss.join(" "))?;
        }
        Ok(())
    }
}

/// How a forced prefix was explained, and what follows it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixAnalysis {
    /// Source index of each forced-prefix token.
    pub prefix_sources: Vec<usize>,
    /// Source words fully accounted for by the prefix (including empty glosses).
    pub consumed: Vec<bool>,
    pub continuation: Vec<String>,
    /// Source index of each continuation token.
    pub continuation_sources: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SovToyTranslator {
    dict: GlossDictionary,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Open,
    Partial(usize),
    Done,
}

impl SovToyTranslator {
    pub fn new(dict: GlossDictionary) -> Self {
        Self { dict }
    }

    pub fn dictionary(&self) -> &GlossDictionary {
        &self.dict
    }

    /// Source indices in target order: content words, then verbs, then punctuation.
    fn ideal_order<'d>(&'d self, source: &[String]) -> Result<Vec<(usize, &'d GlossEntry)>, TranslateError> {
        let mut items = source
            .iter()
            .enumerate()
            .map(|(i, w)| {
                self.dict
                    .get(w)
                    .map(|e| (i, e))
                    .ok_or_else(|| TranslateError::UnknownWord(w.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        items.sort_by_key(|(i, e)| (e.category.rank(), *i));
        Ok(items)
    }

    /// Matches `forced_prefix` against the source words' glosses and
    /// derives the continuation.
    ///
    /// Matching is greedy left to right: at each step the longest gloss of
    /// an unmatched word that equals the next prefix tokens is taken, with
    /// ties going to the word earliest in target order. A prefix that ends
    /// inside a gloss completes that gloss first. Empty-gloss words count as
    /// consumed once every earlier non-verb source word is.
    pub fn analyze(&self, source: &[String], forced_prefix: &[String]) -> Result<PrefixAnalysis, TranslateError> {
        let items = self.ideal_order(source)?;
        let mut state = vec![State::Open; items.len()];
        let mut prefix_sources = Vec::with_capacity(forced_prefix.len());

        // Position in `items` by source index, for the free-consumption rule.
        let mut by_source = vec![0; source.len()];
        for (slot, (src, _)) in items.iter().enumerate() {
            by_source[*src] = slot;
        }
        let free_consume = |state: &mut Vec<State>| {
            let mut blocked = false;
            for &slot in &by_source {
                let entry = items[slot].1;
                if entry.gloss.is_empty() && state[slot] == State::Open && !blocked {
                    state[slot] = State::Done;
                }
                if entry.category != Category::Verb && state[slot] != State::Done {
                    blocked = true;
                }
            }
        };

        let mut pos = 0;
        while pos < forced_prefix.len() {
            free_consume(&mut state);
            let rest = &forced_prefix[pos..];
            let mut best: Option<(usize, usize)> = None;
            for (slot, (_, entry)) in items.iter().enumerate() {
                let len = entry.gloss.len();
                if state[slot] != State::Open || len == 0 || !rest.starts_with(&entry.gloss) {
                    continue;
                }
                if best.is_none_or(|(_, l)| len > l) {
                    best = Some((slot, len));
                }
            }
            if let Some((slot, len)) = best {
                state[slot] = State::Done;
                prefix_sources.extend(std::iter::repeat_n(items[slot].0, len));
                pos += len;
                continue;
            }
            let partial = items.iter().enumerate().find(|(slot, (_, e))| {
                state[*slot] == State::Open && e.gloss.len() > rest.len() && e.gloss.starts_with(rest)
            });
            match partial {
                Some((slot, (src, _))) => {
                    state[slot] = State::Partial(rest.len());
                    prefix_sources.extend(std::iter::repeat_n(*src, rest.len()));
                    pos = forced_prefix.len();
                }
                None => return Err(TranslateError::AmbiguousPrefix { position: pos }),
            }
        }
        free_consume(&mut state);

        let mut continuation = Vec::new();
        let mut continuation_sources = Vec::new();
        if let Some(slot) = state.iter().position(|s| matches!(s, State::Partial(_))) {
            let State::Partial(done) = state[slot] else { unreachable!() };
            let (src, entry) = items[slot];
            continuation.extend(entry.gloss[done..].iter().cloned());
            continuation_sources.extend(std::iter::repeat_n(src, entry.gloss.len() - done));
        }
        for (slot, (src, entry)) in items.iter().enumerate() {
            if state[slot] == State::Open {
                continuation.extend(entry.gloss.iter().cloned());
                continuation_sources.extend(std::iter::repeat_n(*src, entry.gloss.len()));
            }
        }
        let mut consumed = vec![false; source.len()];
        for (slot, (src, _)) in items.iter().enumerate() {
            consumed[*src] = state[slot] == State::Done;
        }
        Ok(PrefixAnalysis {
            prefix_sources,
            consumed,
            continuation,
            continuation_sources,
        })
    }
}

impl Translator for SovToyTranslator {
    fn translate(&self, source: &[String], forced_prefix: &[String]) -> Result<Vec<String>, TranslateError> {
        self.analyze(source, forced_prefix).map(|a| a.continuation)
    }
}
