//! One PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as RunnerConfig, TestCaseError, TestRunner};

use chunkseg::iclp::{evaluate, train, LabelPredictor, Oracle, PredictionRecord};
use chunkseg::metrics::{
    average_lagging, corpus_bleu, segment_length_distribution, segment_lengths, session_lagging, BleuOptions,
    LengthUnit, TargetUnit,
};
use chunkseg::segmenter::{segment_rule_based, PolicyConfig, Unit};
use chunkseg::simulator::{run_session, run_waitk_session, Sentence};
use chunkseg::synth::{synth_corpus, SynthOptions};
use chunkseg::translator::{EchoTranslator, SovToyTranslator, Translator};
use chunkseg::treebank::{extract_instances, parse_bracketed, split_dev, Lookahead, ParseTree, PrefixInstance};
use chunkseg::{Model, Rational};

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)*));
        }
    };
}

fn render(words: &[String], boundaries: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut start = 0;
    for &b in boundaries {
        parts.push(words[start..b].join(" "));
        start = b;
    }
    parts.join(" / ")
}

fn save_time_tree() -> ParseTree {
    parse_bracketed(SAVE_TIME_TREE).unwrap().trees.remove(0)
}

fn s_vp() -> BTreeSet<String> {
    ["S".to_owned(), "VP".to_owned()].into()
}

fn c1_save_time() -> Outcome {
    let start = Instant::now();
    let tree = save_time_tree();
    let labels = labels_of(&tree);
    ensure!(
        labels == toks("NP VP VP NP PP S NP ."),
        "labels {labels:?}"
    );
    let seg = segment_rule_based(tree.words(), &labels, &s_vp(), 1).map_err(|e| e.to_string())?;
    let text = render(tree.words(), seg.boundaries());
    let elapsed = start.elapsed();
    ensure!(text == "You / can save time by / doing this .", "got {text:?}");
    ensure!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    Ok(format!("{text:?} in {elapsed:.1?}"))
}

fn c2_min_length() -> Outcome {
    let tree = save_time_tree();
    let labels = labels_of(&tree);
    let seg = segment_rule_based(tree.words(), &labels, &s_vp(), 2).map_err(|e| e.to_string())?;
    let text = render(tree.words(), seg.boundaries());
    ensure!(text == "You can save time by / doing this .", "got {text:?}");
    Ok(format!("{text:?}"))
}

fn c3_sov() -> Outcome {
    let toy = SovToyTranslator::new(pen_dictionary());
    let words = toks("I bought a pen .");
    let full = toy.translate(&words, &[]).map_err(|e| e.to_string())?.join(" ");
    let tree = parse_bracketed(PEN_TREE).unwrap().trees.remove(0);
    let sentence = Sentence::new("1", words.clone()).with_labels(labels_of(&tree));
    let policy = PolicyConfig::rule_based(["S", "VP"], 1).unwrap();
    let chunked = run_session(&sentence, &policy, None, &toy).map_err(|e| e.to_string())?;
    let waitk = run_waitk_session(&sentence, 2, &toy);

    let a = full == "watashi wa pen wo katta .";
    let b = chunked.target_tokens.join(" ") == full
        && chunked.chunk_spans.len() == 2
        && chunked.inner_boundaries() == [1]
        && chunked.g == [2, 2, 5, 5, 5, 5];
    let wait2 = waitk.target_tokens.join(" ");
    let c = wait2 == "watashi wa katta pen wo .";
    let detail = format!(
        "full {full:?} [{}]; chunked {:?} g={:?} [{}]; wait-2 {wait2:?} g={:?} [{}]",
        if a { "ok" } else { "mismatch" },
        chunked.target_tokens.join(" "),
        chunked.g,
        if b { "ok" } else { "mismatch" },
        waitk.g,
        if c { "ok" } else { "expected \"watashi wa katta pen wo .\"" },
    );
    ensure!(a && b && c, "{detail}");
    Ok(detail)
}

fn c4_al_closed_form() -> Outcome {
    let n = 10;
    let sentence = Sentence::new("1", (1..=n).map(|i| format!("w{i}")).collect());
    let mut worst: f64 = 0.0;
    for k in 1..=n {
        let log = run_waitk_session(&sentence, k, &EchoTranslator);
        ensure!(log.target_tokens.len() == n, "k={k}: |Y|={}", log.target_tokens.len());
        let al: f64 = session_lagging(&log, TargetUnit::Word).map_err(|e| e.to_string())?;
        worst = worst.max((al - k as f64).abs());
        ensure!((al - k as f64).abs() < 1e-9, "k={k}: AL={al}");
    }
    Ok(format!("k=1..{n}, max |AL-k| = {worst:e}"))
}

fn c5_al_example() -> Outcome {
    let exact: Rational = average_lagging(&[2, 2, 5, 5, 5, 5], 5, 6).map_err(|e| e.to_string())?;
    let float: f64 = average_lagging(&[2, 2, 5, 5, 5, 5], 5, 6).map_err(|e| e.to_string())?;
    ensure!(exact == Rational::new(13, 6), "exact {exact}");
    ensure!((float - 13.0 / 6.0).abs() < 1e-9, "float {float}");
    Ok(format!("AL = {exact} ({float:.12})"))
}

fn fixture_bank() -> Vec<ParseTree> {
    let corpus = synth_corpus(&SynthOptions {
        sentences: 400,
        seed: 7,
        max_depth: 2,
    });
    let mut trees = parse_bracketed(&corpus.bracketed).unwrap().trees;
    trees.push(save_time_tree());
    trees.push(parse_bracketed(PEN_TREE).unwrap().trees.remove(0));
    trees
}

fn c6_oracle_f1() -> Outcome {
    let trees = fixture_bank();
    let mut records = Vec::new();
    for (i, tree) in trees.iter().enumerate() {
        let predicted = Oracle::new(tree).label_sentence(tree.words()).map_err(|e| e.to_string())?;
        for (k, (p, g)) in predicted.into_iter().zip(labels_of(tree)).enumerate() {
            records.push(PredictionRecord {
                sentence_id: (i + 1).to_string(),
                index: k + 1,
                predicted: p,
                gold: Some(g),
            });
        }
    }
    let report = evaluate::<f64>(&records).map_err(|e| e.to_string())?;
    for s in &report.per_label {
        ensure!(
            s.precision == 1.0 && s.recall == 1.0 && s.f1 == 1.0,
            "{}: P={} R={} F1={}",
            s.label,
            s.precision,
            s.recall,
            s.f1
        );
    }
    Ok(format!("{} labels over {} positions", report.per_label.len(), report.total))
}

struct Split {
    train: Vec<PrefixInstance>,
    dev: Vec<PrefixInstance>,
}

fn fixture_split(lookahead: Lookahead) -> Split {
    let trees = fixture_bank();
    let (train_idx, dev_idx) = split_dev(trees.len(), 0.1, 3).unwrap();
    let collect = |idx: &[usize]| {
        idx.iter()
            .flat_map(|&i| extract_instances(&trees[i], &(i + 1).to_string(), lookahead))
            .collect::<Vec<_>>()
    };
    Split {
        train: collect(&train_idx),
        dev: collect(&dev_idx),
    }
}

fn dev_accuracy(model: &Model, dev: &[PrefixInstance]) -> Result<f64, String> {
    let records = dev
        .iter()
        .map(|inst| {
            Ok(PredictionRecord {
                sentence_id: inst.sentence_id.clone(),
                index: inst.index,
                predicted: model.predict(&inst.prefix).map_err(|e| e.to_string())?.to_owned(),
                gold: Some(inst.label.clone()),
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(evaluate::<f64>(&records).map_err(|e| e.to_string())?.accuracy)
}

fn majority_baseline(split: &Split) -> (String, f64) {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for inst in &split.train {
        *counts.entry(&inst.label).or_default() += 1;
    }
    let (label, _) = counts.iter().max_by_key(|(l, c)| (**c, std::cmp::Reverse(**l))).unwrap();
    let hits = split.dev.iter().filter(|i| i.label == *label).count();
    (label.to_string(), hits as f64 / split.dev.len() as f64)
}

fn c7_classifier() -> Outcome {
    let split = fixture_split(Lookahead::OneWord);
    ensure!(split.train.len() >= 1000, "only {} training instances", split.train.len());
    let (label, baseline) = majority_baseline(&split);
    let first: Model = train(&split.train, 5, 42).map_err(|e| e.to_string())?;
    let second: Model = train(&split.train, 5, 42).map_err(|e| e.to_string())?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    first.write_to(&mut a).unwrap();
    second.write_to(&mut b).unwrap();
    ensure!(first == second && a == b, "two runs with seed 42 differ");
    let acc = dev_accuracy(&first, &split.dev)?;
    ensure!(acc > baseline, "dev accuracy {acc:.4} <= baseline {baseline:.4}");
    Ok(format!(
        "{} train / {} dev instances; baseline ({label}) {baseline:.4}, dev accuracy {acc:.4}; {} model bytes identical",
        split.train.len(),
        split.dev.len(),
        a.len()
    ))
}

fn c8_no_lookahead() -> Outcome {
    let with = fixture_split(Lookahead::OneWord);
    let without = fixture_split(Lookahead::None);
    let m1: Model = train(&with.train, 5, 42).map_err(|e| e.to_string())?;
    let m0: Model = train(&without.train, 5, 42).map_err(|e| e.to_string())?;
    let a1 = dev_accuracy(&m1, &with.dev)?;
    let a0 = dev_accuracy(&m0, &without.dev)?;
    ensure!(a0 < a1, "no look-ahead {a0:.4} >= one look-ahead {a1:.4}");
    Ok(format!("one look-ahead {a1:.4} > no look-ahead {a0:.4}"))
}

fn c9_bleu() -> Outcome {
    let corpus = vec![toks("watashi wa pen wo katta ."), toks("kare wa hon wo yonda ."), toks("a b c d e f g")];
    let id: f64 = corpus_bleu(&corpus, &corpus, &BleuOptions::default()).map_err(|e| e.to_string())?.bleu;
    ensure!(id == 100.0, "identity BLEU {id}");
    let hyps = vec![
        toks("the cat sat on the mat"),
        toks("a dog ran in the park today"),
        toks("birds sing in the early morning"),
    ];
    let refs = vec![
        toks("the cat sat on a mat"),
        toks("the dog ran in the park"),
        toks("birds sing early in the morning ."),
    ];
    let got: f64 = corpus_bleu(&hyps, &refs, &BleuOptions::default()).map_err(|e| e.to_string())?.bleu;
    let want = bleu_oracle(&hyps, &refs);
    ensure!((got - want).abs() < 1e-6, "fixture {got} vs oracle {want}");
    Ok(format!("identity {id:.1}; fixture {got:.6} vs oracle {want:.6}"))
}

fn runner() -> TestRunner {
    TestRunner::new(RunnerConfig {
        cases: 1000,
        failure_persistence: None,
        ..RunnerConfig::default()
    })
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner().run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

/// Boundary set at `m + 1` contained in the set at `m`, for every `m`.
fn check_boundary_subsets(labels: &[String], boundary: &BTreeSet<String>) -> Result<(), TestCaseError> {
    let sets: Vec<BTreeSet<usize>> = (1..=labels.len() + 1)
        .map(|m| {
            segment_rule_based(labels, labels, boundary, m)
                .unwrap()
                .boundaries()
                .iter()
                .copied()
                .collect()
        })
        .collect();
    for (m, pair) in sets.windows(2).enumerate() {
        prop_assert!(
            pair[1].is_subset(&pair[0]),
            "m={} gives {:?}, m={} gives {:?}",
            m + 1,
            pair[0],
            m + 2,
            pair[1]
        );
    }
    Ok(())
}

fn c10_properties() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut record = |r: Result<(), String>| {
        if let Err(e) = r {
            failures.push(e);
        }
    };
    let session = || (any::<u64>(), any_policy());
    record(run_property("prefix immutability", session(), |(s, p)| {
        check_prefix_immutability(s, &p)
    }));
    record(run_property("g monotone and bounded", session(), |(s, p)| {
        check_g_monotone_bounded(s, &p)
    }));
    record(run_property("chunk partition", session(), |(s, p)| check_partition(s, &p)));
    record(run_property(
        "no adjacent boundary labels",
        (label_sequence(), boundary_set(), 1usize..8),
        |(l, b, m)| check_rule2(&l, &b, m),
    ));
    record(run_property(
        "boundary set nested in m",
        (label_sequence(), boundary_set()),
        |(l, b)| check_boundary_subsets(&l, &b),
    ));
    let count = run_property(
        "boundary count monotone in m",
        (label_sequence(), boundary_set()),
        |(l, b)| check_m_monotone(&l, &b),
    );
    let count_ok = count.is_ok();
    record(count);
    record(run_property("bpe round trip", bpe_case(), |(c, n, w)| {
        check_bpe_roundtrip(&c, n, &w)
    }));
    record(run_property(
        "sweep determinism",
        (any::<u64>(), prop::collection::vec(any_policy(), 1..4)),
        |(s, p)| check_sweep_determinism(s, &p),
    ));
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 60.0 {
        failures.push(format!("runtime {elapsed:?}"));
    }
    if failures.is_empty() {
        return Ok(format!("8 suites x 1000 cases in {elapsed:.1?}"));
    }
    let (labels, at3, at4) = subset_counterexample();
    Err(format!(
        "{} (count form {}; e.g. labels {} with L={{VP}}: m=3 -> {:?}, m=4 -> {:?}; {elapsed:.1?})",
        failures.join("; "),
        if count_ok { "holds" } else { "fails" },
        labels.join(" "),
        at3,
        at4
    ))
}

fn c11_histogram() -> Outcome {
    let sentences = filler_corpus();
    ensure!(sentences.iter().all(|s| s.words.len() % 16 != 0), "fixture has a multiple of 16");
    let toy = SovToyTranslator::new(filler_dictionary());
    let policy = PolicyConfig::fixed(16, Unit::Word).unwrap();
    let logs: Vec<_> = sentences
        .iter()
        .map(|s| run_session(s, &policy, None, &toy).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    ensure!(logs.iter().all(|l| l.is_ok()), "a session failed");
    let mut merged = 0;
    for log in &logs {
        let lens = segment_lengths(log, LengthUnit::Word);
        let (last, rest) = lens.split_last().unwrap();
        ensure!(rest.iter().all(|&l| l >= 16), "sentence {}: {lens:?}", log.sentence_id);
        ensure!(*last > 0, "sentence {}: empty final segment", log.sentence_id);
        merged += lens.iter().filter(|&&l| l > 16).count();
        ensure!(
            lens.iter().sum::<usize>() == log.source_tokens.len(),
            "sentence {}: lengths {lens:?} do not cover the source",
            log.sentence_id
        );
    }
    ensure!(merged > 0, "fixture never produced an empty-output chunk");
    let hist = segment_length_distribution(&logs, LengthUnit::Word);
    let oracle = histogram_oracle(&logs);
    ensure!(hist == oracle, "histogram {hist:?} vs recount {oracle:?}");
    let below: usize = hist.range(..16).map(|(_, c)| c).sum();
    Ok(format!("{hist:?}; {below} segments below 16, all final; {merged} concatenated"))
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("oracle labels and rule segmentation, m=1", c1_save_time),
        ("minimum chunk length, m=2", c2_min_length),
        ("head-final toy translation and schedules", c3_sov),
        ("wait-k lagging equals k", c4_al_closed_form),
        ("lagging worked example", c5_al_example),
        ("oracle predictor scores 1.0", c6_oracle_f1),
        ("classifier beats majority, deterministic", c7_classifier),
        ("look-ahead ablation", c8_no_lookahead),
        ("BLEU identity and brute-force agreement", c9_bleu),
        ("property suites", c10_properties),
        ("segment-length histogram, f=16", c11_histogram),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome.map(|d| one_line(&d)).map_err(|d| one_line(&d)) {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
