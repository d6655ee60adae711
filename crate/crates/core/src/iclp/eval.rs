use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use super::{IclpError, LabelInventory};
use crate::scalar::{ratio_or_zero, Scalar};

/// One predicted label, optionally paired with gold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionRecord {
    pub sentence_id: String,
    /// 1-based word index the label refers to.
    pub index: usize,
    pub predicted: String,
    pub gold: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelScore<S> {
    pub label: String,
    pub precision: S,
    pub recall: S,
    pub f1: S,
    pub true_positives: usize,
    /// Gold occurrences.
    pub support: usize,
    pub predicted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<S> {
    /// Sorted by label.
    pub per_label: Vec<LabelScore<S>>,
    pub accuracy: S,
    pub correct: usize,
    pub total: usize,
}

impl<S: Scalar> EvalReport<S> {
    pub fn label(&self, label: &str) -> Option<&LabelScore<S>> {
        self.per_label.iter().find(|s| s.label == label)
    }

    /// Recall pooled over all labels.
    pub fn micro_recall(&self) -> S {
        let tp: usize = self.per_label.iter().map(|s| s.true_positives).sum();
        let gold: usize = self.per_label.iter().map(|s| s.support).sum();
        ratio_or_zero(tp, gold)
    }

    /// Tab-separated table: label, precision, recall, F1, support.
    pub fn to_table(&self) -> String {
        let mut out = String::from("label\tprecision\trecall\tf1\tsupport\n");
        for s in &self.per_label {
            out.push_str(&format!(
                "{}\t{:.4}\t{:.4}\t{:.4}\t{}\n",
                s.label,
                s.precision.to_f64(),
                s.recall.to_f64(),
                s.f1.to_f64(),
                s.support
            ));
        }
        out.push_str(&format!(
            "accuracy\t{:.4}\t({}/{})\n",
            self.accuracy.to_f64(),
            self.correct,
            self.total
        ));
        out
    }
}

/// Per-label precision, recall and F1 plus overall accuracy. 0/0 is 0.
pub fn evaluate<S: Scalar>(records: &[PredictionRecord]) -> Result<EvalReport<S>, IclpError> {
    if records.is_empty() {
        return Err(IclpError::EmptyEvaluation);
    }
    #[derive(Default)]
    struct Counts {
        tp: usize,
        gold: usize,
        pred: usize,
    }
    let mut counts: BTreeMap<&str, Counts> = BTreeMap::new();
    let mut correct = 0;
    for r in records {
        let gold = r.gold.as_deref().ok_or_else(|| IclpError::MissingGold {
            sentence_id: r.sentence_id.clone(),
            index: r.index,
        })?;
        counts.entry(gold).or_default().gold += 1;
        counts.entry(&r.predicted).or_default().pred += 1;
        if gold == r.predicted {
            correct += 1;
            counts.entry(gold).or_default().tp += 1;
        }
    }
    let two = S::from_count(2);
    let per_label = counts
        .into_iter()
        .map(|(label, c)| {
            let precision: S = ratio_or_zero(c.tp, c.pred);
            let recall: S = ratio_or_zero(c.tp, c.gold);
            let denom = precision.clone() + recall.clone();
            let f1 = if denom == S::zero() {
                S::zero()
            } else {
                two.clone() * precision.clone() * recall.clone() / denom
            };
            LabelScore {
                label: label.to_owned(),
                precision,
                recall,
                f1,
                true_positives: c.tp,
                support: c.gold,
                predicted: c.pred,
            }
        })
        .collect();
    Ok(EvalReport {
        per_label,
        accuracy: ratio_or_zero(correct, records.len()),
        correct,
        total: records.len(),
    })
}

/// Predictions produced outside this crate, with the labels they mention.
#[derive(Debug, Clone, Default)]
pub struct ExternalPredictions {
    pub records: Vec<PredictionRecord>,
    pub inventory: LabelInventory,
}

impl ExternalPredictions {
    /// Predicted labels `c_1..c_n` for one sentence, if every index is present.
    pub fn sentence_labels(&self) -> HashMap<&str, Vec<&str>> {
        let mut by_sentence: HashMap<&str, BTreeMap<usize, &str>> = HashMap::new();
        for r in &self.records {
            by_sentence
                .entry(&r.sentence_id)
                .or_default()
                .insert(r.index, &r.predicted);
        }
        by_sentence
            .into_iter()
            .filter(|(_, m)| m.keys().copied().eq(1..=m.len()))
            .map(|(id, m)| (id, m.into_values().collect()))
            .collect()
    }
}

/// TSV rows `sentence_id  i  predicted [gold]`; `#` lines and blanks are skipped.
pub fn read_external_predictions<R: BufRead>(input: R) -> Result<ExternalPredictions, IclpError> {
    let mut out = ExternalPredictions::default();
    let mut seen = BTreeSet::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: &str| IclpError::PredictionFormat {
            line: lineno,
            message: message.to_owned(),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(bad("expected 3 or 4 tab-separated fields"));
        }
        let index: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| bad("word index is not an integer"))?;
        if index == 0 {
            return Err(bad("word indices are 1-based"));
        }
        let predicted = fields[2].trim();
        if predicted.is_empty() {
            return Err(bad("empty predicted label"));
        }
        let gold = match fields.get(3).map(|g| g.trim()) {
            Some("") => return Err(bad("empty gold label")),
            Some(g) => Some(g.to_owned()),
            None => None,
        };
        if !seen.insert((fields[0].to_owned(), index)) {
            return Err(bad("duplicate (sentence_id, i) pair"));
        }
        out.inventory.intern(predicted);
        if let Some(g) = &gold {
            out.inventory.intern(g);
        }
        out.records.push(PredictionRecord {
            sentence_id: fields[0].to_owned(),
            index,
            predicted: predicted.to_owned(),
            gold,
        });
    }
    Ok(out)
}

pub fn load_external_predictions(path: impl AsRef<Path>) -> Result<ExternalPredictions, IclpError> {
    let file = std::fs::File::open(path)?;
    read_external_predictions(std::io::BufReader::new(file))
}

pub fn write_predictions<W: Write>(mut out: W, records: &[PredictionRecord]) -> std::io::Result<()> {
    for r in records {
        match &r.gold {
            Some(g) => writeln!(out, "{}\t{}\t{}\t{}", r.sentence_id, r.index, r.predicted, g)?,
            None => writeln!(out, "{}\t{}\t{}", r.sentence_id, r.index, r.predicted)?,
        }
    }
    Ok(())
}
