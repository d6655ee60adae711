use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use chunkseg::harness::{self, parse_values, Config, PolicySpec};
use chunkseg::iclp::{
    evaluate, load_external_predictions, train_with, LabelPredictor, PredictionRecord, TrainOptions,
};
use chunkseg::segmenter::{
    segment_fixed, segment_rule_based, waitk_segmentation, PolicyConfig, Segmentation, Unit,
};
use chunkseg::simulator::{chunk_segmentation, Sentence};
use chunkseg::subword::{apply_bpe, learn_bpe, MergeTable};
use chunkseg::synth::{synth_corpus, SynthOptions};
use chunkseg::treebank::{
    extract_instances, read_instances, read_treebank, split_dev, without_lookahead, write_instances, Lookahead,
    PrefixInstance,
};
use chunkseg::Model;

#[derive(Parser)]
#[command(name = "chunkseg", version, about = "Chunk segmentation for simultaneous translation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Treebank utilities.
    #[command(subcommand)]
    Treebank(TreebankCmd),
    /// Train, evaluate and apply the constituent label classifier.
    #[command(subcommand)]
    Iclp(IclpCmd),
    /// Segment sentences with one policy and print chunk boundaries as JSON lines.
    Segment(SegmentArgs),
    /// Learn or apply BPE merges.
    #[command(subcommand)]
    Bpe(BpeCmd),
    /// Run one policy end to end.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run policies over hyperparameter ranges.
    Sweep(SweepArgs),
    /// Write a synthetic treebank and matching gloss dictionary.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 400)]
        sentences: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum TreebankCmd {
    /// Write (prefix, next-label) instances as TSV.
    Extract {
        #[arg(long)]
        trees: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Hold out this fraction of sentences.
        #[arg(long, default_value_t = 0.0)]
        dev_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        dev_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum IclpCmd {
    Train {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_lookahead: bool,
        #[arg(long)]
        no_average: bool,
    },
    /// Per-label precision, recall and F1.
    Eval {
        #[arg(long, required_unless_present = "predictions")]
        instances: Option<PathBuf>,
        #[arg(long, required_unless_present = "predictions")]
        model: Option<PathBuf>,
        #[arg(long)]
        no_lookahead: bool,
        /// Score an external predictions file (with gold column) instead.
        #[arg(long, conflicts_with_all = ["instances", "model"])]
        predictions: Option<PathBuf>,
    },
    /// Label every word of every sentence.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// One sentence per line, optionally `id<TAB>tokens`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyKind {
    Rule,
    Fixed,
    Waitk,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long, value_enum)]
    policy: PolicyKind,
    /// m, f or k.
    #[arg(long)]
    value: usize,
    /// Treebank to segment; rule-based labels come from the trees.
    #[arg(long, conflicts_with = "sentences")]
    trees: Option<PathBuf>,
    #[arg(long, required_unless_present = "trees")]
    sentences: Option<PathBuf>,
    /// Predicted labels for `--sentences`.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "S,VP")]
    labels: Vec<String>,
    #[arg(long, default_value = "word")]
    unit: Unit,
    #[arg(long)]
    merges: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BpeCmd {
    Learn {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        merges: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print each line as space-separated subwords with `</w>` markers.
    Apply {
        #[arg(long)]
        merges: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Replace the configured sweep with this policy family.
    #[arg(long, requires = "range")]
    policy: Option<String>,
    /// `start:end[:step]` or `a,b,c`.
    #[arg(long, requires = "policy")]
    range: Option<String>,
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    #[arg(long)]
    unit: Option<Unit>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn load_instances(path: &Path, no_lookahead: bool) -> Result<Vec<PrefixInstance>> {
    let instances = read_instances(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    Ok(if no_lookahead {
        without_lookahead(&instances)
    } else {
        instances
    })
}

fn load_model(path: &Path) -> Result<Model> {
    Model::read_from(open(path)?).with_context(|| format!("reading model {}", path.display()))
}

fn treebank(cmd: TreebankCmd) -> Result<()> {
    let TreebankCmd::Extract {
        trees,
        out,
        dev_fraction,
        seed,
        dev_out,
    } = cmd;
    let bank = read_treebank(&trees).with_context(|| format!("reading {}", trees.display()))?;
    if bank.skipped > 0 {
        log::warn!("{} trees had no words left after pruning", bank.skipped);
    }
    let (train, dev) = split_dev(bank.trees.len(), dev_fraction, seed)?;
    let collect = |ix: &[usize]| -> Vec<PrefixInstance> {
        ix.iter()
            .flat_map(|&i| extract_instances(&bank.trees[i], &(i + 1).to_string(), Lookahead::OneWord))
            .collect()
    };
    let train_instances = collect(&train);
    let mut w = create(&out)?;
    write_instances(&mut w, &train_instances)?;
    w.flush()?;
    eprintln!(
        "{} trees ({} skipped), {} instances -> {}",
        bank.trees.len(),
        bank.skipped,
        train_instances.len(),
        out.display()
    );
    if !dev.is_empty() {
        let Some(dev_out) = dev_out else {
            bail!("--dev-out is required when --dev-fraction is positive");
        };
        let dev_instances = collect(&dev);
        let mut w = create(&dev_out)?;
        write_instances(&mut w, &dev_instances)?;
        w.flush()?;
        eprintln!("{} dev instances -> {}", dev_instances.len(), dev_out.display());
    }
    Ok(())
}

fn iclp(cmd: IclpCmd) -> Result<()> {
    match cmd {
        IclpCmd::Train {
            instances,
            model,
            epochs,
            seed,
            no_lookahead,
            no_average,
        } => {
            let data = load_instances(&instances, no_lookahead)?;
            let opts = TrainOptions {
                epochs,
                seed,
                averaged: !no_average,
                ..TrainOptions::default()
            };
            let (trained, report) = train_with::<f64>(&data, &opts)?;
            let mut w = create(&model)?;
            trained.write_to(&mut w)?;
            w.flush()?;
            eprintln!(
                "trained on {} instances; errors per epoch {:?}",
                data.len(),
                report.errors_per_epoch
            );
        }
        IclpCmd::Eval {
            instances,
            model,
            no_lookahead,
            predictions,
        } => {
            let records = match predictions {
                Some(path) => {
                    let preds = load_external_predictions(&path)?;
                    if preds.records.iter().any(|r| r.gold.is_none()) {
                        bail!("{} has rows without a gold label", path.display());
                    }
                    preds.records
                }
                None => {
                    let (instances, model) = (instances.expect("clap"), model.expect("clap"));
                    let data = load_instances(&instances, no_lookahead)?;
                    let model = load_model(&model)?;
                    data.iter()
                        .map(|inst| {
                            Ok(PredictionRecord {
                                sentence_id: inst.sentence_id.clone(),
                                index: inst.index,
                                predicted: model.predict(&inst.prefix)?.to_owned(),
                                gold: Some(inst.label.clone()),
                            })
                        })
                        .collect::<Result<Vec<_>>>()?
                }
            };
            let report = evaluate::<f64>(&records)?;
            print!("{}", report.to_table());
        }
        IclpCmd::Predict { model, input, out } => {
            let model = load_model(&model)?;
            let sentences = harness::read_sentence_file(&input)?;
            let mut w = output(out.as_deref())?;
            for s in &sentences {
                for (k, label) in model.label_sentence(&s.words)?.into_iter().enumerate() {
                    writeln!(w, "{}\t{}\t{}", s.id, k + 1, label)?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn segment(args: SegmentArgs) -> Result<()> {
    let mut sentences: Vec<Sentence> = match (&args.trees, &args.sentences) {
        (Some(path), _) => read_treebank(path)?
            .trees
            .iter()
            .enumerate()
            .map(|(i, t)| {
                Sentence::new((i + 1).to_string(), t.words().to_vec())
                    .with_labels(t.next_constituent_labels().into_iter().map(str::to_owned).collect())
            })
            .collect(),
        (None, Some(path)) => harness::read_sentence_file(path)?,
        (None, None) => unreachable!("clap requires one input"),
    };
    if let Some(path) = &args.predictions {
        let preds = load_external_predictions(path)?;
        let by_sentence = preds.sentence_labels();
        for s in &mut sentences {
            s.labels = by_sentence
                .get(s.id.as_str())
                .map(|l| l.iter().map(|x| (*x).to_owned()).collect());
        }
    }
    let merges = match &args.merges {
        Some(p) => Some(MergeTable::read_from(open(p)?)?),
        None => None,
    };
    let policy = match args.policy {
        PolicyKind::Rule => PolicyConfig::rule_based(args.labels.iter().cloned(), args.value)?,
        PolicyKind::Fixed => PolicyConfig::fixed(args.value, args.unit)?,
        PolicyKind::Waitk => PolicyConfig::wait_k(args.value)?,
    };
    let mut w = output(args.out.as_deref())?;
    for s in &sentences {
        let seg: Segmentation = match &policy {
            PolicyConfig::WaitK { k } => waitk_segmentation(*k, s.words.len()),
            PolicyConfig::FixedSize { f, unit: Unit::Word } => segment_fixed(s.words.len(), *f),
            PolicyConfig::RuleBased {
                boundary_labels,
                min_len,
            } => {
                let labels = s
                    .labels
                    .as_ref()
                    .with_context(|| format!("no labels for sentence {}", s.id))?;
                segment_rule_based(&s.words, labels, boundary_labels, *min_len)?
            }
            PolicyConfig::FixedSize { .. } => chunk_segmentation(s, &policy, merges.as_ref())?.0,
        };
        let chunks: Vec<String> = seg.split(&s.words).iter().map(|c| c.join(" ")).collect();
        let line = serde_json::json!({
            "sentence_id": s.id,
            "boundaries": seg.boundaries(),
            "chunks": chunks,
        });
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

fn read_text_lines(path: &Path) -> Result<Vec<String>> {
    open(path)?
        .lines()
        .collect::<io::Result<Vec<_>>>()
        .with_context(|| format!("reading {}", path.display()))
}

fn bpe(cmd: BpeCmd) -> Result<()> {
    match cmd {
        BpeCmd::Learn { input, merges, out } => {
            let words: Vec<String> = read_text_lines(&input)?
                .iter()
                .flat_map(|l| l.split_whitespace().map(str::to_owned).collect::<Vec<_>>())
                .collect();
            let table = learn_bpe(&words, merges)?;
            if table.len() < merges {
                log::warn!("only {} of {} merges were possible", table.len(), merges);
            }
            let mut w = create(&out)?;
            table.write_to(&mut w)?;
            w.flush()?;
        }
        BpeCmd::Apply { merges, input, out } => {
            let table = MergeTable::read_from(open(&merges)?)?;
            let mut w = output(out.as_deref())?;
            for line in read_text_lines(&input)? {
                let words: Vec<&str> = line.split_whitespace().collect();
                let pieces: Vec<String> = apply_bpe(&table, &words).iter().map(|s| s.marked()).collect();
                writeln!(w, "{}", pieces.join(" "))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn load_config(path: &Path, output: Option<PathBuf>) -> Result<Config> {
    let mut config = Config::load(path)?;
    if let Some(dir) = output {
        config.output_dir = dir;
    }
    Ok(config)
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let mut config = load_config(&args.config, args.output)?;
    if let (Some(kind), Some(range)) = (args.policy, args.range) {
        let mut spec = PolicySpec::new(kind);
        spec.values = Some(parse_values(&range)?);
        config.sweep = vec![spec];
    }
    for spec in &mut config.sweep {
        if let Some(labels) = &args.labels {
            spec.boundary_labels = Some(labels.clone());
        }
        if let Some(unit) = args.unit {
            spec.unit = Some(unit);
        }
    }
    let outcome = harness::sweep(&config)?;
    let mut w = BufWriter::new(io::stdout().lock());
    harness::write_sweep_csv(&mut w, &outcome.rows)?;
    w.flush()?;
    eprintln!("wrote {}", config.output_dir.join("sweep.csv").display());
    if outcome.all_failed() {
        eprintln!("every run failed");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Treebank(cmd) => treebank(cmd)?,
        Command::Iclp(cmd) => iclp(cmd)?,
        Command::Segment(args) => segment(args)?,
        Command::Bpe(cmd) => bpe(cmd)?,
        Command::Run { config, output } => {
            let config = load_config(&config, output)?;
            let outcome = harness::run_pipeline(&config)?;
            println!("{}", serde_json::to_string_pretty(&outcome.report())?);
            if outcome.failures() == outcome.logs.len() {
                eprintln!("every session failed");
                return Ok(ExitCode::from(1));
            }
        }
        Command::Sweep(args) => return sweep(args),
        Command::Synth {
            out_dir,
            sentences,
            seed,
        } => {
            let corpus = synth_corpus(&SynthOptions {
                sentences,
                seed,
                ..SynthOptions::default()
            });
            let mut w = create(&out_dir.join("treebank.mrg"))?;
            w.write_all(corpus.bracketed.as_bytes())?;
            w.flush()?;
            let mut w = create(&out_dir.join("dict.tsv"))?;
            corpus.dictionary.write_to(&mut w)?;
            w.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
