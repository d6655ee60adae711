//! Averaged multiclass perceptron over sparse prefix features.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::features::FeatureSpec;
use super::{IclpError, LabelInventory, LabelPredictor};
use crate::scalar::Real;
use crate::treebank::PrefixInstance;

const MAGIC: &str = "chunkseg-iclp-model";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainMeta {
    pub epochs: usize,
    pub seed: u64,
    pub averaged: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub epochs: usize,
    pub seed: u64,
    pub averaged: bool,
    pub features: FeatureSpec,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 5,
            seed: 0,
            averaged: true,
            features: FeatureSpec::default(),
        }
    }
}

/// Training mistakes per epoch, before averaging.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrainReport {
    pub errors_per_epoch: Vec<usize>,
}

/// Linear next-constituent classifier. Weights are stored per feature as a
/// dense row over label ids.
#[derive(Debug, Clone, PartialEq)]
pub struct IclpModel<S> {
    inventory: LabelInventory,
    features: FeatureSpec,
    weights: HashMap<String, Vec<S>>,
    meta: TrainMeta,
}

impl<S: Real> IclpModel<S> {
    /// Model with no weights; every prediction is label id 0.
    pub fn zeros(inventory: LabelInventory, features: FeatureSpec) -> Self {
        Self {
            inventory,
            features,
            weights: HashMap::new(),
            meta: TrainMeta {
                epochs: 0,
                seed: 0,
                averaged: true,
            },
        }
    }

    pub fn inventory(&self) -> &LabelInventory {
        &self.inventory
    }

    pub fn feature_spec(&self) -> &FeatureSpec {
        &self.features
    }

    pub fn meta(&self) -> TrainMeta {
        self.meta
    }

    /// Weight of `feature` for `label`, zero if absent.
    pub fn weight(&self, feature: &str, label: &str) -> S {
        match (self.weights.get(feature), self.inventory.id(label)) {
            (Some(row), Some(id)) => row[id],
            _ => S::zero(),
        }
    }

    pub fn scores(&self, prefix: &[String]) -> Vec<S> {
        let mut scores = vec![S::zero(); self.inventory.len()];
        for feature in self.features.extract(prefix) {
            if let Some(row) = self.weights.get(&feature) {
                for (s, w) in scores.iter_mut().zip(row) {
                    *s = *s + *w;
                }
            }
        }
        scores
    }

    /// Argmax label id; ties go to the lowest id.
    pub fn predict_id(&self, prefix: &[String]) -> Result<usize, IclpError> {
        if prefix.is_empty() {
            return Err(IclpError::EmptyPrefix);
        }
        Ok(argmax(&self.scores(prefix)))
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut text = String::new();
        let _ = writeln!(text, "{MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(text, "labels {}", self.inventory.len());
        for label in self.inventory.labels() {
            let _ = writeln!(text, "{label}");
        }
        let _ = writeln!(text, "features {}", self.features);
        let _ = writeln!(
            text,
            "meta epochs={} seed={} averaged={}",
            self.meta.epochs, self.meta.seed, self.meta.averaged
        );
        let mut features: Vec<&String> = self.weights.keys().collect();
        features.sort();
        let mut lines = Vec::new();
        for id in 0..self.inventory.len() {
            for feature in &features {
                let w = self.weights[*feature][id];
                if w != S::zero() {
                    lines.push(format!("{id}\t{feature}\t{w}"));
                }
            }
        }
        let _ = writeln!(text, "weights {}", lines.len());
        for line in lines {
            let _ = writeln!(text, "{line}");
        }
        out.write_all(text.as_bytes())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, IclpError> {
        let mut lines = input.lines().enumerate().map(|(n, l)| (n + 1, l));
        let mut next = |what: &str| -> Result<(usize, String), IclpError> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n, l)),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(IclpError::ModelFormat {
                    line: 0,
                    message: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let bad = |line: usize, message: String| IclpError::ModelFormat { line, message };

        let (n, header) = next("header")?;
        if header != format!("{MAGIC} {FORMAT_VERSION}") {
            return Err(bad(n, format!("unsupported header {header:?}")));
        }
        let (n, line) = next("label count")?;
        let count: usize = line
            .strip_prefix("labels ")
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| bad(n, "expected `labels <count>`".into()))?;
        let mut inventory = LabelInventory::default();
        for _ in 0..count {
            let (n, label) = next("label")?;
            if label.is_empty() || inventory.id(&label).is_some() {
                return Err(bad(n, format!("invalid or duplicate label {label:?}")));
            }
            inventory.intern(&label);
        }
        let (n, line) = next("feature spec")?;
        let spec = line
            .strip_prefix("features ")
            .ok_or_else(|| bad(n, "expected `features ...`".into()))?;
        let features = FeatureSpec::parse(n, spec)?;

        let (n, line) = next("meta")?;
        let meta = parse_meta(&line).ok_or_else(|| bad(n, "malformed meta line".into()))?;

        let (n, line) = next("weight count")?;
        let count: usize = line
            .strip_prefix("weights ")
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| bad(n, "expected `weights <count>`".into()))?;
        let mut weights: HashMap<String, Vec<S>> = HashMap::new();
        for _ in 0..count {
            let (n, line) = next("weight")?;
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, feature, value] = fields[..] else {
                return Err(bad(n, "expected `label_id<TAB>feature<TAB>value`".into()));
            };
            let id: usize = id
                .parse()
                .ok()
                .filter(|&id| id < inventory.len())
                .ok_or_else(|| bad(n, format!("label id {id:?} out of range")))?;
            if !features.defines(feature) {
                return Err(bad(n, format!("feature {feature:?} not covered by the feature spec")));
            }
            let value: S = value
                .parse()
                .map_err(|_| bad(n, format!("bad weight {value:?}")))?;
            weights
                .entry(feature.to_owned())
                .or_insert_with(|| vec![S::zero(); inventory.len()])[id] = value;
        }
        Ok(Self {
            inventory,
            features,
            weights,
            meta,
        })
    }
}

impl<S: Real> LabelPredictor for IclpModel<S> {
    fn predict(&self, prefix: &[String]) -> Result<&str, IclpError> {
        let id = self.predict_id(prefix)?;
        Ok(self.inventory.label(id).expect("argmax id within inventory"))
    }
}

fn parse_meta(line: &str) -> Option<TrainMeta> {
    let rest = line.strip_prefix("meta ")?;
    let mut epochs = None;
    let mut seed = None;
    let mut averaged = None;
    for kv in rest.split_whitespace() {
        let (k, v) = kv.split_once('=')?;
        match k {
            "epochs" => epochs = v.parse().ok(),
            "seed" => seed = v.parse().ok(),
            "averaged" => averaged = v.parse().ok(),
            _ => return None,
        }
    }
    Some(TrainMeta {
        epochs: epochs?,
        seed: seed?,
        averaged: averaged?,
    })
}

fn argmax<S: Real>(scores: &[S]) -> usize {
    let mut best = 0;
    for (id, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = id;
        }
    }
    best
}

/// Trains with default features and averaging.
pub fn train<S: Real>(instances: &[PrefixInstance], epochs: usize, seed: u64) -> Result<IclpModel<S>, IclpError> {
    let opts = TrainOptions {
        epochs,
        seed,
        ..TrainOptions::default()
    };
    train_with(instances, &opts).map(|(model, _)| model)
}

/// Online multiclass perceptron. Instances are visited in a seeded shuffle
/// each epoch; a mistake adds the features to the gold row and subtracts
/// them from the predicted row. With averaging, the returned weights are the
/// mean of the weight vector over every instance step.
pub fn train_with<S: Real>(
    instances: &[PrefixInstance],
    opts: &TrainOptions,
) -> Result<(IclpModel<S>, TrainReport), IclpError> {
    if instances.is_empty() {
        return Err(IclpError::NoInstances);
    }
    if instances.iter().any(|i| i.prefix.is_empty()) {
        return Err(IclpError::EmptyPrefix);
    }
    let labels: BTreeSet<&str> = instances.iter().map(|i| i.label.as_str()).collect();
    let inventory = LabelInventory::from_labels(labels);
    let n_labels = inventory.len();

    let encoded: Vec<(Vec<String>, usize)> = instances
        .iter()
        .map(|inst| {
            let gold = inventory.id(&inst.label).expect("inventory built from instances");
            (opts.features.extract(&inst.prefix), gold)
        })
        .collect();

    let mut model = IclpModel::<S> {
        inventory,
        features: opts.features.clone(),
        weights: HashMap::new(),
        meta: TrainMeta {
            epochs: opts.epochs,
            seed: opts.seed,
            averaged: opts.averaged,
        },
    };
    // Step-weighted sum of updates: averaged = w - acc / steps.
    let mut acc: HashMap<String, Vec<S>> = HashMap::new();
    let mut step = S::one();
    let mut report = TrainReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..encoded.len()).collect();

    for _ in 0..opts.epochs {
        order.shuffle(&mut rng);
        let mut errors = 0;
        for &idx in &order {
            let (feats, gold) = &encoded[idx];
            let mut scores = vec![S::zero(); n_labels];
            for f in feats {
                if let Some(row) = model.weights.get(f) {
                    for (s, w) in scores.iter_mut().zip(row) {
                        *s = *s + *w;
                    }
                }
            }
            let guess = argmax(&scores);
            if guess != *gold {
                errors += 1;
                for f in feats {
                    let row = model
                        .weights
                        .entry(f.clone())
                        .or_insert_with(|| vec![S::zero(); n_labels]);
                    row[*gold] = row[*gold] + S::one();
                    row[guess] = row[guess] - S::one();
                    let row = acc
                        .entry(f.clone())
                        .or_insert_with(|| vec![S::zero(); n_labels]);
                    row[*gold] = row[*gold] + step;
                    row[guess] = row[guess] - step;
                }
            }
            step = step + S::one();
        }
        report.errors_per_epoch.push(errors);
    }

    if opts.averaged {
        for (f, row) in model.weights.iter_mut() {
            let acc_row = &acc[f];
            for (w, a) in row.iter_mut().zip(acc_row) {
                *w = *w - *a / step;
            }
        }
    }
    Ok((model, report))
}
