//! Fixtures, generators, property checks and brute-force oracles shared by
//! the integration suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use chunkseg::harness::{write_sweep_csv, MetricsConfig, RunOutcome, SweepRow, Workspace};
use chunkseg::segmenter::{segment_rule_based, PolicyConfig, Unit};
use chunkseg::simulator::{chunk_segmentation, run_session, SessionLog, Sentence};
use chunkseg::subword::{apply_bpe, join_subwords, learn_bpe};
use chunkseg::synth::{synth_corpus, synth_dictionary, SynthOptions};
use chunkseg::translator::{Category, GlossDictionary, SovToyTranslator, TranslateError, Translator};
use chunkseg::treebank::{parse_bracketed, ParseNode, ParseTree};

pub const SAVE_TIME_TREE: &str = "(S (NP (PRP You)) (VP (MD can) (VP (VB save) (NP (NN time)) \
    (PP (IN by) (S (VP (VBG doing) (NP (DT this))))))) (. .))";

pub const PEN_TREE: &str = "(S (NP-SBJ (PRP I)) (VP (VBD bought) (NP (DT a) (NN pen))) (. .))";

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

pub fn pen_dictionary() -> GlossDictionary {
    let mut d = GlossDictionary::new();
    d.insert("I", Category::Other, &["watashi", "wa"]);
    d.insert("bought", Category::Verb, &["katta"]);
    d.insert("a", Category::Other, &[]);
    d.insert("pen", Category::Other, &["pen", "wo"]);
    d.insert(".", Category::Punct, &["."]);
    d
}

pub fn labels_of(tree: &ParseTree) -> Vec<String> {
    tree.next_constituent_labels().into_iter().map(str::to_owned).collect()
}

/// One generated sentence with its gold labels.
pub fn synth_sentence(seed: u64) -> Sentence {
    let corpus = synth_corpus(&SynthOptions {
        sentences: 1,
        seed,
        max_depth: 2,
    });
    let bank = parse_bracketed(&corpus.bracketed).expect("generated trees parse");
    let tree = &bank.trees[0];
    Sentence::new(seed.to_string(), tree.words().to_vec()).with_labels(labels_of(tree))
}

pub fn synth_sentences(seed: u64, count: usize) -> Vec<Sentence> {
    let corpus = synth_corpus(&SynthOptions {
        sentences: count,
        seed,
        max_depth: 2,
    });
    parse_bracketed(&corpus.bracketed)
        .expect("generated trees parse")
        .trees
        .iter()
        .enumerate()
        .map(|(i, t)| Sentence::new((i + 1).to_string(), t.words().to_vec()).with_labels(labels_of(t)))
        .collect()
}

// ---------------------------------------------------------------- strategies

pub fn chunk_policy() -> impl Strategy<Value = PolicyConfig> {
    prop_oneof![
        (1usize..7).prop_map(|m| PolicyConfig::rule_based(["S", "VP"], m).unwrap()),
        (1usize..7).prop_map(|m| PolicyConfig::rule_based(["VP"], m).unwrap()),
        (1usize..9).prop_map(|f| PolicyConfig::fixed(f, Unit::Word).unwrap()),
    ]
}

pub fn any_policy() -> impl Strategy<Value = PolicyConfig> {
    prop_oneof![
        3 => chunk_policy(),
        1 => (1usize..9).prop_map(|k| PolicyConfig::wait_k(k).unwrap()),
    ]
}

pub fn label_sequence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(
        prop::sample::select(vec!["S", "VP", "NP", "PP", "NN", "SBAR", "."]).prop_map(str::to_owned),
        1..40,
    )
}

pub fn boundary_set() -> impl Strategy<Value = BTreeSet<String>> {
    prop::sample::subsequence(vec!["S", "VP", "NP", "SBAR"], 1..=4)
        .prop_map(|v| v.into_iter().map(str::to_owned).collect())
}

pub fn bpe_case() -> impl Strategy<Value = (Vec<String>, usize, Vec<String>)> {
    (
        prop::collection::vec("[a-e]{1,6}", 1..20),
        0usize..30,
        prop::collection::vec("[a-gé]{1,8}", 0..10),
    )
}

// ---------------------------------------------------------------- recording translator

/// Wraps a translator and records every forced prefix it is given.
pub struct Recording<T> {
    pub inner: T,
    pub prefixes: Mutex<Vec<Vec<String>>>,
}

impl<T> Recording<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            prefixes: Mutex::new(Vec::new()),
        }
    }
}

impl<T: Translator> Translator for Recording<T> {
    fn translate(&self, source: &[String], forced_prefix: &[String]) -> Result<Vec<String>, TranslateError> {
        self.prefixes.lock().unwrap().push(forced_prefix.to_vec());
        self.inner.translate(source, forced_prefix)
    }
}

pub fn toy() -> SovToyTranslator {
    SovToyTranslator::new(synth_dictionary())
}

pub fn session(sentence: &Sentence, policy: &PolicyConfig, translator: &dyn Translator) -> SessionLog {
    run_session(sentence, policy, None, translator).expect("chunk policies have labels")
}

// ---------------------------------------------------------------- property checks

/// Every forced prefix handed to the translator extends the previous one
/// and survives unchanged into the final output.
pub fn check_prefix_immutability(seed: u64, policy: &PolicyConfig) -> Result<(), TestCaseError> {
    let sentence = synth_sentence(seed);
    let rec = Recording::new(toy());
    let log = session(&sentence, policy, &rec);
    let prefixes = rec.prefixes.into_inner().unwrap();
    prop_assert!(!prefixes.is_empty());
    for pair in prefixes.windows(2) {
        prop_assert!(pair[1].starts_with(&pair[0]), "prefix rewritten: {:?} -> {:?}", pair[0], pair[1]);
    }
    for p in &prefixes {
        prop_assert!(log.target_tokens.starts_with(p));
    }
    Ok(())
}

/// `g` has one entry per target token, never decreases and stays in `1..=|X|`.
pub fn check_g_monotone_bounded(seed: u64, policy: &PolicyConfig) -> Result<(), TestCaseError> {
    let sentence = synth_sentence(seed);
    let log = session(&sentence, policy, &toy());
    let n = sentence.words.len();
    prop_assert_eq!(log.g.len(), log.target_tokens.len());
    prop_assert!(log.g.windows(2).all(|w| w[0] <= w[1]), "g not monotone: {:?}", log.g);
    prop_assert!(log.g.iter().all(|&g| (1..=n).contains(&g)), "g out of range: {:?}", log.g);
    Ok(())
}

/// Chunk source spans tile `0..|X|`, target spans tile `0..|Y|`, and chunk
/// ends match the policy's segmentation.
pub fn check_partition(seed: u64, policy: &PolicyConfig) -> Result<(), TestCaseError> {
    let sentence = synth_sentence(seed);
    let log = session(&sentence, policy, &toy());
    if !log.is_ok() {
        return Ok(());
    }
    let (mut s, mut t) = (0, 0);
    for c in &log.chunk_spans {
        prop_assert_eq!(c.source.start, s);
        prop_assert_eq!(c.target.start, t);
        prop_assert!(c.source.end >= c.source.start);
        s = c.source.end;
        t = c.target.end;
    }
    prop_assert_eq!(s, sentence.words.len());
    prop_assert_eq!(t, log.target_tokens.len());
    if !matches!(policy, PolicyConfig::WaitK { .. }) {
        let (seg, _) = chunk_segmentation(&sentence, policy, None).unwrap();
        let ends: Vec<usize> = log.chunk_spans.iter().map(|c| c.source.end).collect();
        prop_assert_eq!(ends.as_slice(), seg.boundaries());
    }
    Ok(())
}

/// Independent statement of the three segmentation rules.
pub fn rule_oracle(labels: &[String], boundary: &BTreeSet<String>, m: usize) -> Vec<usize> {
    let n = labels.len();
    let in_l = |k: usize| boundary.contains(&labels[k]);
    // Candidate boundary b sits between w_b and w_{b+1} (1-based), b in 1..n.
    let candidates: Vec<usize> = (1..n).filter(|&b| in_l(b) && !in_l(b - 1)).collect();
    let mut chosen = Vec::new();
    let mut last = 0;
    for b in candidates {
        if b - last >= m {
            chosen.push(b);
            last = b;
        }
    }
    if n > 0 {
        chosen.push(n);
    }
    chosen
}

/// No boundary between two boundary-label words, non-final chunks hold at
/// least `m` words, and the result agrees with [`rule_oracle`].
pub fn check_rule2(labels: &[String], boundary: &BTreeSet<String>, m: usize) -> Result<(), TestCaseError> {
    let seg = segment_rule_based(labels, labels, boundary, m).unwrap();
    let n = labels.len();
    for &b in seg.inner_boundaries() {
        prop_assert!(boundary.contains(&labels[b]), "c_{} not a boundary label", b + 1);
        prop_assert!(!boundary.contains(&labels[b - 1]), "adjacent boundary labels at {}", b);
    }
    let lens = seg.chunk_lengths();
    prop_assert!(lens[..lens.len() - 1].iter().all(|&l| l >= m));
    let expected = rule_oracle(labels, boundary, m);
    prop_assert_eq!(seg.boundaries(), expected.as_slice());
    prop_assert_eq!(*seg.boundaries().last().unwrap(), n);
    Ok(())
}

/// Boundary count never grows with `m`.
pub fn check_m_monotone(labels: &[String], boundary: &BTreeSet<String>) -> Result<(), TestCaseError> {
    let counts: Vec<usize> = (1..=labels.len() + 1)
        .map(|m| {
            segment_rule_based(labels, labels, boundary, m)
                .unwrap()
                .inner_boundaries()
                .len()
        })
        .collect();
    prop_assert!(counts.windows(2).all(|w| w[0] >= w[1]), "counts {:?}", counts);
    Ok(())
}

/// Concrete labels for which the boundary set at `m = 4` is not a subset of
/// the set at `m = 3`.
pub fn subset_counterexample() -> (Vec<String>, Vec<usize>, Vec<usize>) {
    let labels = toks("NP NP NP VP NP VP NP VP NP VP .");
    let l: BTreeSet<String> = ["VP".to_owned()].into();
    let at3 = segment_rule_based(&labels, &labels, &l, 3).unwrap();
    let at4 = segment_rule_based(&labels, &labels, &l, 4).unwrap();
    (labels, at3.inner_boundaries().to_vec(), at4.inner_boundaries().to_vec())
}

/// Subwords join back to the original words.
pub fn check_bpe_roundtrip(corpus: &[String], merges: usize, words: &[String]) -> Result<(), TestCaseError> {
    let table = learn_bpe(corpus, merges).unwrap();
    prop_assert!(table.len() <= merges);
    let pieces = apply_bpe(&table, words);
    prop_assert_eq!(join_subwords(&pieces), words.to_vec());
    prop_assert_eq!(pieces.iter().filter(|p| p.end_of_word).count(), words.len());
    Ok(())
}

pub fn sweep_rows(runs: &[RunOutcome]) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = runs.iter().map(RunOutcome::row).collect();
    chunkseg::harness::sort_rows(&mut rows);
    rows
}

pub fn csv_bytes(rows: &[SweepRow]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, rows).unwrap();
    buf
}

/// Two parallel sweeps and a sequential one give byte-identical CSVs.
pub fn check_sweep_determinism(seed: u64, policies: &[PolicyConfig]) -> Result<(), TestCaseError> {
    let build = || {
        Workspace::new(
            synth_sentences(seed, 3),
            None,
            Box::new(toy()),
            None,
            MetricsConfig::default(),
        )
        .unwrap()
    };
    let a = csv_bytes(&sweep_rows(&build().run_all(policies)));
    let b = csv_bytes(&sweep_rows(&build().run_all(policies)));
    let ws = build();
    let seq: Vec<RunOutcome> = policies.iter().map(|p| ws.run(p)).collect();
    let c = csv_bytes(&sweep_rows(&seq));
    prop_assert_eq!(&a, &b);
    prop_assert_eq!(&a, &c);
    Ok(())
}

/// Head-final reference order: content words, verbs, punctuation, each in
/// source order.
pub fn sov_oracle(dict: &GlossDictionary, words: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    for cat in [Category::Other, Category::Verb, Category::Punct] {
        for w in words {
            let e = dict.get(w).unwrap();
            if e.category == cat {
                out.extend(e.gloss.iter().cloned());
            }
        }
    }
    out
}

/// A successful session emits every source gloss exactly once.
pub fn check_sov_conservation(seed: u64, policy: &PolicyConfig) -> Result<(), TestCaseError> {
    let sentence = synth_sentence(seed);
    let dict = synth_dictionary();
    let full = toy().translate(&sentence.words, &[]).unwrap();
    prop_assert_eq!(&full, &sov_oracle(&dict, &sentence.words));
    let log = session(&sentence, policy, &toy());
    if log.is_ok() {
        let mut got = log.target_tokens.clone();
        let mut want = full;
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }
    Ok(())
}

// ---------------------------------------------------------------- oracles

fn ngrams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n).map(|i| tokens[i..i + n].to_vec()).collect()
}

fn occurrences(grams: &[Vec<String>], g: &[String]) -> usize {
    grams.iter().filter(|x| x.as_slice() == g).count()
}

/// Corpus BLEU by explicit enumeration, product form of the geometric mean.
pub fn bleu_oracle(hyps: &[Vec<String>], refs: &[Vec<String>]) -> f64 {
    let mut precision_product = 1.0;
    for n in 1..=4 {
        let (mut matched, mut total) = (0usize, 0usize);
        for (h, r) in hyps.iter().zip(refs) {
            let hg = ngrams(h, n);
            let rg = ngrams(r, n);
            let mut seen: Vec<Vec<String>> = Vec::new();
            for g in &hg {
                if seen.contains(g) {
                    continue;
                }
                seen.push(g.clone());
                matched += occurrences(&hg, g).min(occurrences(&rg, g));
            }
            total += hg.len();
        }
        if matched == 0 {
            return 0.0;
        }
        precision_product *= matched as f64 / total as f64;
    }
    let c: usize = hyps.iter().map(Vec::len).sum();
    let r: usize = refs.iter().map(Vec::len).sum();
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    100.0 * bp * precision_product.powf(0.25)
}

/// Merge learning over the expanded corpus (no frequency table), recounting
/// every pair from scratch each round.
pub fn bpe_oracle(corpus: &[&str], merges: usize) -> Vec<(String, String)> {
    let mut words: Vec<Vec<String>> = corpus
        .iter()
        .map(|w| {
            let chars: Vec<char> = w.chars().collect();
            chars
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i + 1 == chars.len() {
                        format!("{c}</w>")
                    } else {
                        c.to_string()
                    }
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for _ in 0..merges {
        let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
        for w in &words {
            for i in 0..w.len().saturating_sub(1) {
                *counts.entry((w[i].clone(), w[i + 1].clone())).or_default() += 1;
            }
        }
        let Some(max) = counts.values().copied().max() else { break };
        // BTreeMap iterates in key order, so the first hit is the smallest pair.
        let pair = counts.into_iter().find(|(_, c)| *c == max).unwrap().0;
        for w in words.iter_mut() {
            let mut merged = Vec::new();
            let mut i = 0;
            while i < w.len() {
                if i + 1 < w.len() && w[i] == pair.0 && w[i + 1] == pair.1 {
                    merged.push(format!("{}{}", pair.0, pair.1));
                    i += 2;
                } else {
                    merged.push(w[i].clone());
                    i += 1;
                }
            }
            *w = merged;
        }
        out.push(pair);
    }
    out
}

/// Next-constituent labels from explicit leftmost-leaf spans.
pub fn next_label_oracle(tree: &ParseTree) -> Vec<String> {
    fn walk(node: &ParseNode, next_leaf: &mut usize, depth: usize, out: &mut Vec<(usize, usize, String)>) {
        let start = *next_leaf + 1;
        out.push((depth, start, node.label().to_owned()));
        if node.is_terminal() {
            *next_leaf += 1;
        }
        for c in node.children() {
            walk(c, next_leaf, depth + 1, out);
        }
    }
    let mut visits = Vec::new();
    let mut leaf = 0;
    walk(tree.root(), &mut leaf, 0, &mut visits);
    (1..=tree.len())
        .map(|i| {
            visits
                .iter()
                .find(|(depth, start, _)| *depth > 0 && *start == i)
                .or_else(|| visits.first())
                .unwrap()
                .2
                .clone()
        })
        .collect()
}

/// Segment-length histogram recounted from joined chunk text.
pub fn histogram_oracle(logs: &[SessionLog]) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for log in logs.iter().filter(|l| l.is_ok()) {
        let mut pending = String::new();
        let flush = |text: &mut String, hist: &mut BTreeMap<usize, usize>| {
            let words = text.split_whitespace().count();
            if words > 0 {
                *hist.entry(words).or_insert(0) += 1;
            }
            text.clear();
        };
        for c in &log.chunk_spans {
            for w in &log.source_tokens[c.source.start..c.source.end] {
                pending.push(' ');
                pending.push_str(w);
            }
            if c.target.end > c.target.start {
                flush(&mut pending, &mut hist);
            }
        }
        flush(&mut pending, &mut hist);
    }
    hist
}

// ---------------------------------------------------------------- filler corpus

pub fn filler_dictionary() -> GlossDictionary {
    let mut d = GlossDictionary::new();
    d.insert("uh", Category::Other, &[]);
    d.insert("pen", Category::Other, &["pen", "wo"]);
    d.insert("tea", Category::Other, &["ocha"]);
    d.insert("book", Category::Other, &["hon"]);
    d.insert("bought", Category::Verb, &["katta"]);
    d.insert("saw", Category::Verb, &["mita"]);
    d.insert(".", Category::Punct, &["."]);
    d
}

/// Sentences whose lengths are not multiples of 16, some with 16-word runs
/// of a word that translates to nothing.
pub fn filler_corpus() -> Vec<Sentence> {
    const CONTENT: [&str; 5] = ["pen", "tea", "book", "bought", "saw"];
    const LENGTHS: [usize; 8] = [20, 35, 50, 17, 33, 18, 47, 23];
    LENGTHS
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let words = (0..n)
                .map(|j| {
                    let silent = (i == 0 && j < 16) || (i == 2 && (16..32).contains(&j)) || (j + i) % 4 == 0;
                    if j + 1 == n {
                        ".".to_owned()
                    } else if silent {
                        "uh".to_owned()
                    } else {
                        CONTENT[(j * 7 + i * 3) % 5].to_owned()
                    }
                })
                .collect();
            Sentence::new((i + 1).to_string(), words)
        })
        .collect()
}
