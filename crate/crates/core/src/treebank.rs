//! Bracketed constituency trees and next-constituent instances.
//!
//! Trees are read from Penn-Treebank style text. Labels are normalized to
//! their bare category (`NP-SBJ-1` becomes `NP`), empty elements under
//! `-NONE-` are pruned, and a wrapping unlabeled `( ... )` pair is removed.
//!
//! The *next constituent* at word `i` is the first node, in pre-order and
//! excluding the root, whose span starts at `w_i`. One sentence of `n`
//! words yields `n` prefix instances `(w_1..w_i, c_i)`.

use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

const NONE_LABEL: &str = "-NONE-";
const UNLABELED_ROOT: &str = "ROOT";

#[derive(Debug, Error)]
pub enum TreebankError {
    #[error("malformed tree at byte {offset}: {message}")]
    Malformed { offset: usize, message: String },
    #[error("instance file line {line}: {message}")]
    InstanceFormat { line: usize, message: String },
    #[error("dev fraction must lie in [0, 1], got {0}")]
    DevFraction(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A constituent. Terminals (POS nodes) carry a word; phrases carry children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseNode {
    label: String,
    kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum NodeKind {
    Word(String),
    Phrase(Vec<ParseNode>),
}

impl ParseNode {
    /// Preterminal `(label word)`.
    pub fn leaf(label: impl Into<String>, word: impl Into<String>) -> Self {
        let word = word.into();
        assert!(!word.is_empty(), "terminal word must be non-empty");
        Self {
            label: label.into(),
            kind: NodeKind::Word(word),
        }
    }

    /// Phrase over one or more children.
    ///
    /// Panics if `children` is empty.
    pub fn phrase(label: impl Into<String>, children: Vec<ParseNode>) -> Self {
        assert!(!children.is_empty(), "phrase must have at least one child");
        Self {
            label: label.into(),
            kind: NodeKind::Phrase(children),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn word(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::Word(w) => Some(w),
            NodeKind::Phrase(_) => None,
        }
    }

    pub fn children(&self) -> &[ParseNode] {
        match &self.kind {
            NodeKind::Word(_) => &[],
            NodeKind::Phrase(c) => c,
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.kind, NodeKind::Word(_))
    }

    fn collect_words<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.kind {
            NodeKind::Word(w) => out.push(w),
            NodeKind::Phrase(children) => children.iter().for_each(|c| c.collect_words(out)),
        }
    }

    fn leaf_count(&self) -> usize {
        match &self.kind {
            NodeKind::Word(_) => 1,
            NodeKind::Phrase(children) => children.iter().map(ParseNode::leaf_count).sum(),
        }
    }
}

impl fmt::Display for ParseNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NodeKind::Word(w) => write!(f, "({} {})", self.label, w),
            NodeKind::Phrase(children) => {
                write!(f, "({}", self.label)?;
                for child in children {
                    write!(f, " {child}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A node visited in pre-order together with its position.
#[derive(Debug, Clone, Copy)]
pub struct Visit<'a> {
    pub node: &'a ParseNode,
    /// 1-based index of the node's first terminal.
    pub leftmost: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    root: ParseNode,
    words: Vec<String>,
}

impl ParseTree {
    pub fn new(root: ParseNode) -> Self {
        let mut words = Vec::new();
        root.collect_words(&mut words);
        let words = words.into_iter().map(str::to_owned).collect();
        Self { root, words }
    }

    pub fn root(&self) -> &ParseNode {
        &self.root
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// All nodes in pre-order, root first.
    pub fn preorder(&self) -> Vec<Visit<'_>> {
        fn walk<'a>(node: &'a ParseNode, leftmost: usize, depth: usize, out: &mut Vec<Visit<'a>>) {
            out.push(Visit {
                node,
                leftmost,
                depth,
            });
            let mut next = leftmost;
            for child in node.children() {
                walk(child, next, depth + 1, out);
                next += child.leaf_count();
            }
        }
        let mut out = Vec::new();
        walk(&self.root, 1, 0, &mut out);
        out
    }

    /// Next-constituent label for every word: `labels[i - 1] = c_i`.
    pub fn next_constituent_labels(&self) -> Vec<&str> {
        let mut labels: Vec<Option<&str>> = vec![None; self.len()];
        for visit in self.preorder().into_iter().skip(1) {
            let slot = &mut labels[visit.leftmost - 1];
            if slot.is_none() {
                *slot = Some(visit.node.label());
            }
        }
        // Only a bare preterminal root leaves a slot empty.
        labels
            .into_iter()
            .map(|l| l.unwrap_or_else(|| self.root.label()))
            .collect()
    }

    /// `c_i` for a 1-based word index; `None` when out of range.
    pub fn next_constituent_label(&self, i: usize) -> Option<&str> {
        if i == 0 || i > self.len() {
            return None;
        }
        self.preorder()
            .into_iter()
            .skip(1)
            .find(|v| v.leftmost == i)
            .map(|v| v.node.label())
            .or_else(|| Some(self.root.label()))
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// Strips function tags and coindexation (`NP-SBJ=2` → `NP`).
/// Labels starting with `-` (`-NONE-`, `-LRB-`, `-RRB-`) are atomic.
pub fn normalize_label(raw: &str) -> &str {
    if raw.starts_with('-') {
        return raw;
    }
    match raw.find(['-', '=']) {
        Some(pos) if pos > 0 => &raw[..pos],
        _ => raw,
    }
}

/// Result of reading a bracketed file.
#[derive(Debug, Clone, Default)]
pub struct Treebank {
    pub trees: Vec<ParseTree>,
    /// Trees dropped because pruning removed every leaf.
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(text: &str) -> Vec<(usize, Tok<'_>)> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                out.push((i, Tok::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::Close));
                i += 1;
            }
            b if b.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !matches!(bytes[i], b'(' | b')')
                    && !bytes[i].is_ascii_whitespace()
                {
                    i += 1;
                }
                out.push((start, Tok::Atom(&text[start..i])));
            }
        }
    }
    out
}

struct Parser<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<(usize, Tok<'a>)> {
        self.toks.get(self.pos).copied()
    }

    fn malformed(&self, offset: usize, message: &str) -> TreebankError {
        TreebankError::Malformed {
            offset,
            message: message.to_owned(),
        }
    }

    fn offset_here(&self) -> usize {
        self.peek().map_or(self.end, |(o, _)| o)
    }

    /// Parses one bracketed node; the opening paren has been consumed.
    /// Returns `None` when the whole node is pruned.
    fn node(&mut self, open_at: usize) -> Result<Option<ParseNode>, TreebankError> {
        let label = match self.peek() {
            Some((_, Tok::Atom(a))) => {
                self.pos += 1;
                Some(a)
            }
            _ => None,
        };

        if let Some((off, Tok::Atom(word))) = self.peek() {
            self.pos += 1;
            match self.peek() {
                Some((_, Tok::Close)) => self.pos += 1,
                Some((o, _)) => return Err(self.malformed(o, "expected ')' after terminal")),
                None => return Err(self.malformed(self.end, "unclosed terminal")),
            }
            let Some(label) = label else {
                return Err(self.malformed(off, "terminal without a label"));
            };
            let label = normalize_label(label);
            if label == NONE_LABEL {
                return Ok(None);
            }
            return Ok(Some(ParseNode::leaf(label, word)));
        }

        let mut children = Vec::new();
        let mut saw_child = false;
        loop {
            match self.peek() {
                Some((o, Tok::Open)) => {
                    self.pos += 1;
                    saw_child = true;
                    if let Some(child) = self.node(o)? {
                        children.push(child);
                    }
                }
                Some((_, Tok::Close)) => {
                    self.pos += 1;
                    break;
                }
                Some((o, Tok::Atom(_))) => {
                    return Err(self.malformed(o, "bare token mixed with subtrees"))
                }
                None => return Err(self.malformed(self.end, "unbalanced '('")),
            }
        }
        if !saw_child {
            return Err(self.malformed(open_at, "empty constituent"));
        }
        let label = label.map(normalize_label);
        if label == Some(NONE_LABEL) || children.is_empty() {
            return Ok(None);
        }
        match label {
            Some(label) => Ok(Some(ParseNode::phrase(label, children))),
            None if children.len() == 1 => Ok(children.pop()),
            None => Ok(Some(ParseNode::phrase(UNLABELED_ROOT, children))),
        }
    }
}

/// Parses zero or more whitespace-separated bracketed trees.
pub fn parse_bracketed(text: &str) -> Result<Treebank, TreebankError> {
    let mut parser = Parser {
        toks: tokenize(text),
        pos: 0,
        end: text.len(),
    };
    let mut bank = Treebank::default();
    while let Some((off, tok)) = parser.peek() {
        match tok {
            Tok::Open => {
                parser.pos += 1;
                match parser.node(off)? {
                    Some(root) => bank.trees.push(ParseTree::new(root)),
                    None => bank.skipped += 1,
                }
            }
            Tok::Close => return Err(parser.malformed(off, "unbalanced ')'")),
            Tok::Atom(_) => return Err(parser.malformed(parser.offset_here(), "token outside a tree")),
        }
    }
    if bank.skipped > 0 {
        log::warn!("skipped {} tree(s) left empty after pruning", bank.skipped);
    }
    Ok(bank)
}

pub fn read_treebank(path: impl AsRef<std::path::Path>) -> Result<Treebank, TreebankError> {
    parse_bracketed(&std::fs::read_to_string(path)?)
}

/// Whether instance labels look one word past the prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Lookahead {
    /// `(w_1..w_i, c_i)`: the label of the constituent starting at the last read word.
    #[default]
    OneWord,
    /// `(w_1..w_{i-1}, c_i)`: the label must be guessed before `w_i` is seen.
    None,
}

/// A (prefix, next-constituent label) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixInstance {
    pub sentence_id: String,
    /// 1-based index of the word whose constituent label is `label`.
    pub index: usize,
    pub prefix: Vec<String>,
    pub label: String,
}

pub fn extract_instances(tree: &ParseTree, sentence_id: &str, lookahead: Lookahead) -> Vec<PrefixInstance> {
    let labels = tree.next_constituent_labels();
    labels
        .iter()
        .enumerate()
        .filter_map(|(k, label)| {
            let index = k + 1;
            let prefix_len = match lookahead {
                Lookahead::OneWord => index,
                Lookahead::None => index - 1,
            };
            (prefix_len > 0).then(|| PrefixInstance {
                sentence_id: sentence_id.to_owned(),
                index,
                prefix: tree.words()[..prefix_len].to_vec(),
                label: (*label).to_owned(),
            })
        })
        .collect()
}

/// Converts one-look-ahead instances to the no-look-ahead variant by
/// dropping the last prefix word; first-word instances disappear.
pub fn without_lookahead(instances: &[PrefixInstance]) -> Vec<PrefixInstance> {
    instances
        .iter()
        .filter(|inst| inst.prefix.len() > 1)
        .map(|inst| PrefixInstance {
            prefix: inst.prefix[..inst.prefix.len() - 1].to_vec(),
            ..inst.clone()
        })
        .collect()
}

/// TSV: `sentence_id  i  label  space-joined prefix`.
pub fn write_instances<W: Write>(mut out: W, instances: &[PrefixInstance]) -> std::io::Result<()> {
    for inst in instances {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            inst.sentence_id,
            inst.index,
            inst.label,
            inst.prefix.join(" ")
        )?;
    }
    Ok(())
}

/// Reads one-look-ahead instance TSV (prefix length must equal `i`).
pub fn read_instances<R: BufRead>(input: R) -> Result<Vec<PrefixInstance>, TreebankError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: &str| TreebankError::InstanceFormat {
            line: lineno,
            message: message.to_owned(),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(bad("expected 4 tab-separated fields"));
        }
        let index: usize = fields[1].parse().map_err(|_| bad("word index is not an integer"))?;
        if index == 0 {
            return Err(bad("word indices are 1-based"));
        }
        if fields[2].is_empty() {
            return Err(bad("empty label"));
        }
        let prefix: Vec<String> = fields[3].split_whitespace().map(str::to_owned).collect();
        if prefix.len() != index {
            return Err(bad("prefix length does not match word index"));
        }
        out.push(PrefixInstance {
            sentence_id: fields[0].to_owned(),
            index,
            prefix,
            label: fields[2].to_owned(),
        });
    }
    Ok(out)
}

/// Random sentence-level held-out split. Returns sorted `(train, dev)` indices.
pub fn split_dev(count: usize, dev_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), TreebankError> {
    if !(0.0..=1.0).contains(&dev_fraction) {
        return Err(TreebankError::DevFraction(dev_fraction));
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut dev_len = (dev_fraction * count as f64).round() as usize;
    if dev_fraction > 0.0 && count > 0 {
        dev_len = dev_len.max(1);
    }
    let dev_len = dev_len.min(count);
    let mut dev = order[..dev_len].to_vec();
    let mut train = order[dev_len..].to_vec();
    dev.sort_unstable();
    train.sort_unstable();
    Ok((train, dev))
}
