use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::metrics::{BleuOptions, Smoothing, TargetUnit, Tokenization};
use crate::segmenter::{PolicyConfig, Unit};

pub const CONFIG_VERSION: u32 = 1;

/// Pipeline and sweep configuration, read from TOML.
///
/// ```toml
/// version = 1
/// output_dir = "out"
///
/// [input]
/// treebank = "train.mrg"     # or: sentences = "src.txt"
/// dictionary = "gloss.tsv"   # required by the sov-toy translator
/// references = "ref.txt"     # optional; defaults to full-sentence output
/// merges = "bpe.merges"      # required by subword fixed-size policies
///
/// [labels]
/// source = "oracle"          # or "model" / "external" with `path`
///
/// [translator]
/// kind = "sov-toy"           # or "echo", or "external" with `program`, `args`
///
/// [metrics]
/// latency_unit = "word"      # or "character"
/// bleu_tokenization = "word" # or "character"
///
/// [policy]                   # used by a single run
/// kind = "rule-based"
/// value = 1
/// boundary_labels = ["S", "VP"]
///
/// [[sweep]]                  # one table per policy family
/// kind = "wait-k"
/// range = { start = 2, end = 30, step = 2 }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub input: InputConfig,
    #[serde(default)]
    pub labels: LabelConfig,
    #[serde(default)]
    pub translator: TranslatorConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub policy: Option<PolicySpec>,
    #[serde(default)]
    pub sweep: Vec<PolicySpec>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub treebank: Option<PathBuf>,
    /// One sentence per line, tokens separated by spaces, optionally prefixed by `id<TAB>`.
    pub sentences: Option<PathBuf>,
    /// One reference per line, aligned with the sentences.
    pub references: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub merges: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LabelConfig {
    #[default]
    Oracle,
    Model {
        path: PathBuf,
    },
    External {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TranslatorConfig {
    #[default]
    SovToy,
    Echo,
    External {
        program: String,
        #[serde(default)]
        args: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    pub latency_unit: TargetUnit,
    pub bleu_tokenization: Tokenization,
    pub max_n: usize,
    /// Floor for zero n-gram matches; unsmoothed when absent.
    pub smoothing_floor: Option<f64>,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            latency_unit: TargetUnit::Word,
            bleu_tokenization: Tokenization::Word,
            max_n: 4,
            smoothing_floor: None,
        }
    }
}

impl MetricsConfig {
    pub fn bleu_options(&self) -> BleuOptions {
        BleuOptions {
            max_n: self.max_n,
            tokenization: self.bleu_tokenization,
            smoothing: self.smoothing_floor.map_or(Smoothing::None, Smoothing::Floor),
        }
    }
}

/// Inclusive hyperparameter range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: usize,
    pub end: usize,
    #[serde(default = "one")]
    pub step: usize,
}

fn one() -> usize {
    1
}

impl RangeSpec {
    pub fn values(&self) -> Vec<usize> {
        if self.step == 0 || self.start > self.end {
            return Vec::new();
        }
        (self.start..=self.end).step_by(self.step).collect()
    }
}

/// A policy family and the hyperparameter values to run it with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    /// `wait-k`, `fixed` or `rule-based`.
    pub kind: String,
    #[serde(default)]
    pub value: Option<usize>,
    #[serde(default)]
    pub values: Option<Vec<usize>>,
    #[serde(default)]
    pub range: Option<RangeSpec>,
    #[serde(default)]
    pub boundary_labels: Option<Vec<String>>,
    #[serde(default)]
    pub unit: Option<Unit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    WaitK,
    Fixed,
    Rule,
}

fn parse_kind(kind: &str) -> Result<Kind, HarnessError> {
    match kind {
        "wait-k" | "waitk" => Ok(Kind::WaitK),
        "fixed" | "fixed-size" => Ok(Kind::Fixed),
        "rule" | "rule-based" => Ok(Kind::Rule),
        other => Err(HarnessError::Config(format!(
            "unknown policy {other:?} (expected wait-k, fixed or rule-based)"
        ))),
    }
}

impl PolicySpec {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            value: None,
            values: None,
            range: None,
            boundary_labels: None,
            unit: None,
        }
    }

    pub fn hyperparameters(&self) -> Vec<usize> {
        let mut out = Vec::new();
        out.extend(self.value);
        out.extend(self.values.iter().flatten().copied());
        out.extend(self.range.iter().flat_map(RangeSpec::values));
        out
    }

    pub fn is_rule_based(&self) -> bool {
        matches!(parse_kind(&self.kind), Ok(Kind::Rule))
    }

    pub fn uses_subwords(&self) -> bool {
        matches!(parse_kind(&self.kind), Ok(Kind::Fixed)) && self.unit == Some(Unit::Subword)
    }

    /// One policy per hyperparameter value, in the order given.
    pub fn policies(&self) -> Result<Vec<PolicyConfig>, HarnessError> {
        let kind = parse_kind(&self.kind)?;
        let values = self.hyperparameters();
        if values.is_empty() {
            return Err(HarnessError::Config(format!(
                "policy {:?} has an empty hyperparameter range",
                self.kind
            )));
        }
        let labels = self
            .boundary_labels
            .clone()
            .unwrap_or_else(|| vec!["S".into(), "VP".into()]);
        values
            .into_iter()
            .map(|v| {
                let p = match kind {
                    Kind::WaitK => PolicyConfig::wait_k(v),
                    Kind::Fixed => PolicyConfig::fixed(v, self.unit.unwrap_or_default()),
                    Kind::Rule => PolicyConfig::rule_based(labels.iter().cloned(), v),
                };
                p.map_err(|e| HarnessError::Config(e.to_string()))
            })
            .collect()
    }
}

/// Parses `a:b`, `a:b:step` (inclusive) or `a,b,c`.
pub fn parse_values(text: &str) -> Result<Vec<usize>, HarnessError> {
    let bad = || HarnessError::Config(format!("cannot parse range {text:?}"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let range = match parts.as_slice() {
            [a, b] => RangeSpec {
                start: num(a)?,
                end: num(b)?,
                step: 1,
            },
            [a, b, s] => RangeSpec {
                start: num(a)?,
                end: num(b)?,
                step: num(s)?,
            },
            _ => return Err(bad()),
        };
        range.values()
    } else {
        text.split(',').map(num).collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(HarnessError::Config(format!("range {text:?} is empty")));
    }
    Ok(values)
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads a config file; relative paths are taken from the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut config = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        let input = &mut self.input;
        for p in [
            &mut input.treebank,
            &mut input.sentences,
            &mut input.references,
            &mut input.dictionary,
            &mut input.merges,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        match &mut self.labels {
            LabelConfig::Model { path } | LabelConfig::External { path } => fix(path),
            LabelConfig::Oracle => {}
        }
    }

    /// Checks everything that can be checked without reading inputs.
    pub fn validate(&self, specs: &[PolicySpec]) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            ));
        }
        match (&self.input.treebank, &self.input.sentences) {
            (Some(_), Some(_)) => return bad("give either input.treebank or input.sentences, not both".into()),
            (None, None) => return bad("input.treebank or input.sentences is required".into()),
            _ => {}
        }
        if self.translator == TranslatorConfig::SovToy && self.input.dictionary.is_none() {
            return bad("the sov-toy translator needs input.dictionary".into());
        }
        if specs.is_empty() {
            return bad("no policy configured".into());
        }
        for spec in specs {
            spec.policies()?;
            if spec.is_rule_based() && self.labels == LabelConfig::Oracle && self.input.treebank.is_none() {
                return bad("rule-based policies with oracle labels need input.treebank".into());
            }
            if spec.uses_subwords() && self.input.merges.is_none() {
                return bad("subword fixed-size policies need input.merges".into());
            }
        }
        let mut paths: Vec<&PathBuf> = [
            &self.input.treebank,
            &self.input.sentences,
            &self.input.references,
            &self.input.dictionary,
            &self.input.merges,
        ]
        .into_iter()
        .flatten()
        .collect();
        if let LabelConfig::Model { path } | LabelConfig::External { path } = &self.labels {
            paths.push(path);
        }
        for p in paths {
            if !p.is_file() {
                return bad(format!("input file {} does not exist", p.display()));
            }
        }
        Ok(())
    }
}
