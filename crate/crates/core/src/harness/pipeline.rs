use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Config, LabelConfig, MetricsConfig, PolicySpec, TranslatorConfig};
use super::HarnessError;
use crate::iclp::{load_external_predictions, IclpModel, LabelPredictor};
use crate::metrics::{
    corpus_bleu, latency_report, segment_length_distribution, write_histogram_csv, LatencyReport, LengthUnit,
    QualityReport, TargetUnit,
};
use crate::segmenter::{PolicyConfig, Unit};
use crate::simulator::{run_session, write_session_logs, Sentence, SessionLog};
use crate::subword::MergeTable;
use crate::translator::{EchoTranslator, GlossDictionary, ProcessTranslator, SovToyTranslator, Translator};
use crate::treebank::read_treebank;

/// Shared, immutable inputs for any number of runs.
pub struct Workspace {
    sentences: Vec<Sentence>,
    references: Vec<Vec<String>>,
    translator: Box<dyn Translator>,
    merges: Option<MergeTable>,
    metrics: MetricsConfig,
}

/// Every session of one policy plus its corpus-level scores.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub policy: PolicyConfig,
    pub logs: Vec<SessionLog>,
    pub quality: Option<QualityReport<f64>>,
    pub latency: LatencyReport<f64>,
    pub segment_lengths: BTreeMap<usize, usize>,
    pub boundaries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub policy: String,
    pub hyperparameter: usize,
    pub bleu: Option<f64>,
    pub al: Option<f64>,
    pub length_ratio: Option<f64>,
    pub sentences: usize,
    pub failures: usize,
    /// Chunk boundaries inside sentences, summed over successful sessions.
    pub boundaries: usize,
}

/// JSON summary written next to each run's session logs.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub policy: PolicyConfig,
    pub name: String,
    pub hyperparameter: usize,
    pub bleu: Option<f64>,
    pub brevity_penalty: Option<f64>,
    pub precisions: Option<Vec<f64>>,
    pub length_ratio: Option<f64>,
    pub al: Option<f64>,
    pub latency_unit: TargetUnit,
    pub latency_excluded: usize,
    pub sentences: usize,
    pub failures: usize,
    pub boundaries: usize,
    pub segment_lengths: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Sorted by AL.
    pub rows: Vec<SweepRow>,
    /// In configuration order.
    pub runs: Vec<RunOutcome>,
}

impl SweepOutcome {
    pub fn all_failed(&self) -> bool {
        self.rows.iter().all(|r| r.failures == r.sentences)
    }
}

impl RunOutcome {
    pub fn failures(&self) -> usize {
        self.logs.iter().filter(|l| !l.is_ok()).count()
    }

    pub fn row(&self) -> SweepRow {
        SweepRow {
            policy: self.policy.name(),
            hyperparameter: self.policy.hyperparameter(),
            bleu: self.quality.as_ref().map(|q| q.bleu),
            al: self.latency.corpus,
            length_ratio: self
                .quality
                .as_ref()
                .filter(|q| q.reference_len > 0)
                .map(|q| q.length_ratio),
            sentences: self.logs.len(),
            failures: self.failures(),
            boundaries: self.boundaries,
        }
    }

    pub fn report(&self) -> RunReport {
        let row = self.row();
        RunReport {
            policy: self.policy.clone(),
            name: row.policy,
            hyperparameter: row.hyperparameter,
            bleu: row.bleu,
            brevity_penalty: self.quality.as_ref().map(|q| q.brevity_penalty),
            precisions: self.quality.as_ref().map(|q| q.precisions.clone()),
            length_ratio: row.length_ratio,
            al: row.al,
            latency_unit: self.latency.unit,
            latency_excluded: self.latency.excluded,
            sentences: row.sentences,
            failures: row.failures,
            boundaries: row.boundaries,
            segment_lengths: self.segment_lengths.clone(),
        }
    }

    /// `<stem>.jsonl`, `<stem>.report.json` and `<stem>.segments.csv` in `dir`.
    pub fn write_to_dir(&self, dir: &Path, stem: &str) -> Result<(), HarnessError> {
        create_dir(dir)?;
        write_session_logs(create(&dir.join(format!("{stem}.jsonl")))?, &self.logs)?;
        let mut report = create(&dir.join(format!("{stem}.report.json")))?;
        serde_json::to_writer_pretty(&mut report, &self.report())?;
        writeln!(report).and_then(|_| report.flush()).map_err(|source| HarnessError::Io {
            path: dir.join(format!("{stem}.report.json")),
            source,
        })?;
        write_histogram_csv(create(&dir.join(format!("{stem}.segments.csv")))?, &self.segment_lengths)?;
        Ok(())
    }
}

fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_owned(),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    File::create(path).map(BufWriter::new).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })
}

fn open(path: &Path) -> Result<BufReader<File>, HarnessError> {
    File::open(path).map(BufReader::new).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, HarnessError> {
    let mut out = Vec::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|source| HarnessError::Io {
            path: path.to_owned(),
            source,
        })?;
        if !line.trim().is_empty() {
            out.push((n + 1, line));
        }
    }
    Ok(out)
}

/// One sentence per non-blank line; `id<TAB>tokens` or just tokens (id = line number).
pub fn read_sentence_file(path: &Path) -> Result<Vec<Sentence>, HarnessError> {
    Ok(read_lines(path)?
        .into_iter()
        .map(|(n, line)| {
            let (id, text) = match line.split_once('\t') {
                Some((id, text)) => (id.to_owned(), text),
                None => (n.to_string(), line.as_str()),
            };
            Sentence::new(id, text.split_whitespace().map(str::to_owned).collect())
        })
        .collect())
}

fn build_translator(config: &Config) -> Result<Box<dyn Translator>, HarnessError> {
    Ok(match &config.translator {
        TranslatorConfig::SovToy => {
            let path = config
                .input
                .dictionary
                .as_ref()
                .ok_or_else(|| HarnessError::Config("the sov-toy translator needs input.dictionary".into()))?;
            Box::new(SovToyTranslator::new(GlossDictionary::load(path)?))
        }
        TranslatorConfig::Echo => Box::new(EchoTranslator),
        TranslatorConfig::External { program, args } => Box::new(ProcessTranslator::spawn(program, args)?),
    })
}

fn load_sentences(config: &Config) -> Result<Vec<Sentence>, HarnessError> {
    if let Some(path) = &config.input.treebank {
        let bank = read_treebank(path)?;
        let oracle = config.labels == LabelConfig::Oracle;
        return Ok(bank
            .trees
            .iter()
            .enumerate()
            .map(|(i, tree)| {
                let s = Sentence::new((i + 1).to_string(), tree.words().to_vec());
                if oracle {
                    s.with_labels(tree.next_constituent_labels().into_iter().map(str::to_owned).collect())
                } else {
                    s
                }
            })
            .collect());
    }
    match &config.input.sentences {
        Some(path) => read_sentence_file(path),
        None => Err(HarnessError::Config("input.treebank or input.sentences is required".into())),
    }
}

fn attach_labels(config: &Config, sentences: &mut [Sentence]) -> Result<(), HarnessError> {
    match &config.labels {
        LabelConfig::Oracle => {}
        LabelConfig::Model { path } => {
            let model = IclpModel::<f64>::read_from(open(path)?)?;
            for s in sentences.iter_mut() {
                s.labels = Some(model.label_sentence(&s.words)?);
            }
        }
        LabelConfig::External { path } => {
            let preds = load_external_predictions(path)?;
            let by_sentence = preds.sentence_labels();
            for s in sentences.iter_mut() {
                s.labels = by_sentence
                    .get(s.id.as_str())
                    .map(|labels| labels.iter().map(|l| (*l).to_owned()).collect());
            }
        }
    }
    Ok(())
}

fn sort_key(row: &SweepRow) -> (bool, f64, &str, usize) {
    (row.al.is_none(), row.al.unwrap_or(0.0), row.policy.as_str(), row.hyperparameter)
}

/// Ascending AL; rows without AL last; ties by policy and hyperparameter.
pub fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| {
        let (ka, kb) = (sort_key(a), sort_key(b));
        ka.0.cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.cmp(kb.2))
            .then(ka.3.cmp(&kb.3))
    });
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "policy",
            "hyperparameter",
            "bleu",
            "al",
            "length_ratio",
            "sentences",
            "failures",
            "boundaries",
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Plot-ready points: `series,al,bleu`.
pub fn write_scatter_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["series", "al", "bleu"])?;
    for row in rows {
        if let (Some(al), Some(bleu)) = (row.al, row.bleu) {
            w.write_record([row.policy.clone(), al.to_string(), bleu.to_string()])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

impl Workspace {
    /// References default to the translator's full-sentence output.
    pub fn new(
        sentences: Vec<Sentence>,
        references: Option<Vec<Vec<String>>>,
        translator: Box<dyn Translator>,
        merges: Option<MergeTable>,
        metrics: MetricsConfig,
    ) -> Result<Self, HarnessError> {
        let references = match references {
            Some(refs) => {
                if refs.len() != sentences.len() {
                    return Err(HarnessError::Config(format!(
                        "{} references for {} sentences",
                        refs.len(),
                        sentences.len()
                    )));
                }
                refs
            }
            None => sentences
                .iter()
                .map(|s| {
                    translator
                        .translate(&s.words, &[])
                        .map_err(|source| HarnessError::Reference {
                            sentence_id: s.id.clone(),
                            source,
                        })
                })
                .collect::<Result<_, _>>()?,
        };
        Ok(Self {
            sentences,
            references,
            translator,
            merges,
            metrics,
        })
    }

    /// Loads every input named by `config`.
    pub fn prepare(config: &Config) -> Result<Self, HarnessError> {
        let mut sentences = load_sentences(config)?;
        attach_labels(config, &mut sentences)?;
        let translator = build_translator(config)?;
        let merges = match &config.input.merges {
            Some(path) => Some(MergeTable::read_from(open(path)?)?),
            None => None,
        };
        let references = match &config.input.references {
            Some(path) => Some(
                read_lines(path)?
                    .into_iter()
                    .map(|(_, line)| line.split_whitespace().map(str::to_owned).collect())
                    .collect(),
            ),
            None => None,
        };
        Self::new(sentences, references, translator, merges, config.metrics.clone())
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn references(&self) -> &[Vec<String>] {
        &self.references
    }

    fn session(&self, sentence: &Sentence, policy: &PolicyConfig) -> SessionLog {
        run_session(sentence, policy, self.merges.as_ref(), &self.translator)
            .unwrap_or_else(|e| SessionLog::failed(sentence, policy, e.to_string()))
    }

    fn summarize(&self, policy: &PolicyConfig, logs: Vec<SessionLog>) -> RunOutcome {
        let (hyps, refs): (Vec<Vec<String>>, Vec<Vec<String>>) = logs
            .iter()
            .zip(&self.references)
            .filter(|(log, _)| log.is_ok())
            .map(|(log, r)| (log.target_tokens.clone(), r.clone()))
            .unzip();
        let quality = corpus_bleu(&hyps, &refs, &self.metrics.bleu_options()).ok();
        let latency = latency_report(&logs, self.metrics.latency_unit);
        let unit = match (policy, &self.merges) {
            (
                PolicyConfig::FixedSize {
                    unit: Unit::Subword, ..
                },
                Some(table),
            ) => LengthUnit::Subword(table),
            _ => LengthUnit::Word,
        };
        let segment_lengths = segment_length_distribution(&logs, unit);
        let boundaries = logs
            .iter()
            .filter(|l| l.is_ok())
            .map(|l| l.inner_boundaries().len())
            .sum();
        RunOutcome {
            policy: policy.clone(),
            logs,
            quality,
            latency,
            segment_lengths,
            boundaries,
        }
    }

    pub fn run(&self, policy: &PolicyConfig) -> RunOutcome {
        self.run_all(std::slice::from_ref(policy)).remove(0)
    }

    /// Runs every (policy, sentence) pair in parallel; results keep input order.
    pub fn run_all(&self, policies: &[PolicyConfig]) -> Vec<RunOutcome> {
        let n = self.sentences.len();
        let units: Vec<(usize, usize)> = (0..policies.len())
            .flat_map(|p| (0..n).map(move |s| (p, s)))
            .collect();
        let mut logs: Vec<SessionLog> = units
            .par_iter()
            .map(|&(p, s)| self.session(&self.sentences[s], &policies[p]))
            .collect();
        let mut out = Vec::with_capacity(policies.len());
        for policy in policies.iter().rev() {
            let run = logs.split_off(logs.len() - n);
            out.push(self.summarize(policy, run));
        }
        out.reverse();
        out
    }
}

fn run_stem(policy: &PolicyConfig) -> String {
    format!("{}-{}", policy.name(), policy.hyperparameter())
}

/// A single configured policy: session logs and reports in `output_dir`.
pub fn run_pipeline(config: &Config) -> Result<RunOutcome, HarnessError> {
    let spec = config
        .policy
        .clone()
        .ok_or_else(|| HarnessError::Config("missing [policy] table".into()))?;
    config.validate(std::slice::from_ref(&spec))?;
    let policies = spec.policies()?;
    if policies.len() != 1 {
        return Err(HarnessError::Config("[policy] must name exactly one hyperparameter value".into()));
    }
    let workspace = Workspace::prepare(config)?;
    let outcome = workspace.run(&policies[0]);
    outcome.write_to_dir(&config.output_dir, "run")?;
    Ok(outcome)
}

/// Every configured policy family over its range. Writes `sweep.csv`,
/// `scatter.csv`, `runs/*.jsonl` and `reports/*` under `output_dir`.
pub fn sweep(config: &Config) -> Result<SweepOutcome, HarnessError> {
    let specs: Vec<PolicySpec> = if config.sweep.is_empty() {
        config.policy.iter().cloned().collect()
    } else {
        config.sweep.clone()
    };
    config.validate(&specs)?;
    let mut policies = Vec::new();
    for spec in &specs {
        policies.extend(spec.policies()?);
    }
    let mut seen = HashMap::new();
    for p in &policies {
        if seen.insert((p.name(), p.hyperparameter()), ()).is_some() {
            return Err(HarnessError::Config(format!(
                "policy {} with value {} appears twice",
                p.name(),
                p.hyperparameter()
            )));
        }
    }
    let workspace = Workspace::prepare(config)?;
    let runs = workspace.run_all(&policies);
    let mut rows: Vec<SweepRow> = runs.iter().map(RunOutcome::row).collect();
    sort_rows(&mut rows);

    let dir = &config.output_dir;
    create_dir(dir)?;
    write_sweep_csv(create(&dir.join("sweep.csv"))?, &rows)?;
    write_scatter_csv(create(&dir.join("scatter.csv"))?, &rows)?;
    for run in &runs {
        let stem = run_stem(&run.policy);
        write_session_logs(
            {
                create_dir(&dir.join("runs"))?;
                create(&dir.join("runs").join(format!("{stem}.jsonl")))?
            },
            &run.logs,
        )?;
        let reports = dir.join("reports");
        create_dir(&reports)?;
        let mut report = create(&reports.join(format!("{stem}.json")))?;
        serde_json::to_writer_pretty(&mut report, &run.report())?;
        report.flush().map_err(|source| HarnessError::Io {
            path: reports.join(format!("{stem}.json")),
            source,
        })?;
        write_histogram_csv(create(&reports.join(format!("{stem}.segments.csv")))?, &run.segment_lengths)?;
    }
    Ok(SweepOutcome { rows, runs })
}
