use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use opsum::config::RunConfig;
use opsum::corpus::{ingest, sentence_split, tokenize, write_threads, Genre, Thread};
use opsum::eval::{jsd_eval, rouge2, rouge_su4, MetricsReport};
use opsum::lexicon::SentimentLexicon;
use opsum::pipeline::{
    corpus_docs, eval_ranker, global_unigram_counts, run_ablation, summarize_thread,
    train_ranker, RankSource, ThreadInputs,
};
use opsum::ranker::{BaselineKind, ListnetOptions, RankModel};
use opsum::similarity::{SynsetGraph, DEFAULT_MAX_PATH};
use opsum::summarizer::{Budget, BudgetKind};
use opsum::topics::{train_lda, TopicModel};

#[derive(Parser)]
#[command(name = "opsum", about = "Query-focused diversity-aware opinion summarizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a single configuration key, repeatable (key=value).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => RunConfig::default(),
        };
        for item in &self.sets {
            let (key, value) = item
                .split_once('=')
                .with_context(|| format!("--set expects key=value, got: {item}"))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate and normalize a raw corpus file.
    Ingest {
        /// Input JSONL corpus.
        #[arg(long)]
        input: PathBuf,
        /// Fallback genre for records that do not carry one.
        #[arg(long, default_value = "qa")]
        genre: Genre,
        /// Keep only qa threads with >= 5 answers and mean answer length > 20 words.
        #[arg(long)]
        filter_qa: bool,
        /// Normalized corpus output path.
        #[arg(long)]
        output: PathBuf,
        /// Also write the split sentences as JSONL.
        #[arg(long)]
        emit_sentences: Option<PathBuf>,
    },
    /// Train the topic model on the configured corpus.
    TrainLda {
        #[command(flatten)]
        config: ConfigArgs,
        /// Where to store the trained model (defaults to the config's lda_model).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train the listwise answer ranker.
    TrainRanker {
        #[command(flatten)]
        config: ConfigArgs,
        /// Where to store the trained model (defaults to the config's ranker_model).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Report p@1 and MRR for the trained ranker or a baseline.
    EvalRanker {
        #[command(flatten)]
        config: ConfigArgs,
        /// Score a baseline instead of the trained model.
        #[arg(long, value_parser = ["random", "length", "jsd"])]
        baseline: Option<String>,
    },
    /// Produce one summary per thread.
    Summarize {
        #[command(flatten)]
        config: ConfigArgs,
        /// Word budget (overrides the config budget).
        #[arg(long, conflicts_with = "budget_chars")]
        budget_words: Option<usize>,
        /// Non-whitespace character budget (overrides the config budget).
        #[arg(long)]
        budget_chars: Option<usize>,
        /// Rank with a baseline when no ranker model is configured.
        #[arg(long, value_parser = ["random", "length", "jsd"])]
        baseline: Option<String>,
        /// Line-delimited summary records.
        #[arg(long)]
        output: PathBuf,
        /// Optional greedy-trace output.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Score previously written summaries.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Summary records produced by `summarize`.
        #[arg(long)]
        summaries: PathBuf,
        /// Optional gold references: JSONL {thread_id, references: [text, ...]}.
        #[arg(long)]
        references: Option<PathBuf>,
        /// Line-delimited per-thread reports plus the aggregate.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the full dispersion x content x dissimilarity grid.
    Ablate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Line-delimited cell records in addition to the printed table.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct SummaryRecord {
    thread_id: String,
    sentence_ids: Vec<usize>,
    text: String,
    objective_value: f64,
    total_cost: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRecord {
    thread_id: String,
    candidates: Vec<usize>,
    gains: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReferenceRecord {
    thread_id: String,
    references: Vec<String>,
}

fn load_corpus(cfg: &RunConfig) -> Result<Vec<Thread>> {
    let path = cfg
        .corpus
        .as_ref()
        .context("config key `corpus` is required for this command")?;
    let threads = ingest(path, cfg.genre, false)
        .with_context(|| format!("loading corpus {}", path.display()))?;
    if threads.is_empty() {
        bail!("corpus {} contains no threads", path.display());
    }
    Ok(threads)
}

fn load_lexicon(cfg: &RunConfig) -> Result<SentimentLexicon> {
    let dir = cfg
        .lexicon_dir
        .as_ref()
        .context("config key `lexicon_dir` is required for this command")?;
    SentimentLexicon::load_dir(dir)
        .with_context(|| format!("loading lexicon directory {}", dir.display()))
}

fn load_graph(cfg: &RunConfig) -> Result<Option<SynsetGraph>> {
    match &cfg.synsets {
        Some(path) => Ok(Some(
            SynsetGraph::load(path, DEFAULT_MAX_PATH)
                .with_context(|| format!("loading synset graph {}", path.display()))?,
        )),
        None => Ok(None),
    }
}

fn load_topic_model(cfg: &RunConfig) -> Result<TopicModel> {
    let path = cfg
        .lda_model
        .as_ref()
        .context("config key `lda_model` is required; run train-lda first")?;
    TopicModel::load(path).with_context(|| format!("loading topic model {}", path.display()))
}

fn baseline_kind(name: &str, seed: u64) -> BaselineKind {
    match name {
        "random" => BaselineKind::Random(seed),
        "length" => BaselineKind::Length,
        _ => BaselineKind::Jsd,
    }
}

fn rank_source<'a>(
    cfg: &RunConfig,
    baseline: &Option<String>,
    model_slot: &'a mut Option<RankModel>,
) -> Result<RankSource<'a>> {
    if let Some(name) = baseline {
        return Ok(RankSource::Baseline(baseline_kind(name, cfg.seed)));
    }
    let path = cfg.ranker_model.as_ref().context(
        "config key `ranker_model` is required unless --baseline is given; run train-ranker first",
    )?;
    *model_slot = Some(
        RankModel::load(path)
            .with_context(|| format!("loading ranker model {}", path.display()))?,
    );
    Ok(RankSource::Model(model_slot.as_ref().unwrap()))
}

fn write_lines<T: Serialize>(path: &PathBuf, records: &[T]) -> Result<()> {
    let mut out = File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn log_config(cfg: &RunConfig) {
    eprintln!("resolved configuration (hash {}):", cfg.config_hash());
    for line in cfg.resolved().lines() {
        eprintln!("  {line}");
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest {
            input,
            genre,
            filter_qa,
            output,
            emit_sentences,
        } => {
            let threads = ingest(&input, genre, filter_qa)
                .with_context(|| format!("ingesting {}", input.display()))?;
            let out = File::create(&output)
                .with_context(|| format!("creating {}", output.display()))?;
            write_threads(&threads, out)?;
            if let Some(path) = emit_sentences {
                let sentences: Vec<_> = threads.iter().flat_map(|t| sentence_split(t)).collect();
                write_lines(&path, &sentences)?;
            }
            eprintln!("ingested {} threads", threads.len());
        }
        Command::TrainLda { config, output } => {
            let cfg = config.load()?;
            log_config(&cfg);
            let threads = load_corpus(&cfg)?;
            let docs = corpus_docs(&threads);
            let model = train_lda(
                &docs,
                cfg.topics,
                cfg.lda_iters,
                cfg.lda_alpha(),
                cfg.lda_beta,
                cfg.seed,
            )?;
            let path = output
                .or(cfg.lda_model)
                .context("pass --output or set `lda_model` in the config")?;
            model.save(&path)?;
            eprintln!(
                "trained {}-topic model on {} documents -> {}",
                model.n_topics,
                docs.len(),
                path.display()
            );
        }
        Command::TrainRanker { config, output } => {
            let cfg = config.load()?;
            log_config(&cfg);
            let threads = load_corpus(&cfg)?;
            let lex = load_lexicon(&cfg)?;
            let topic_model = load_topic_model(&cfg)?;
            let background = global_unigram_counts(&threads);
            let opts = ListnetOptions {
                epochs: cfg.epochs,
                learning_rate: cfg.learning_rate,
                seed: cfg.seed,
            };
            let model = train_ranker(
                &threads,
                &lex,
                &topic_model,
                &opts,
                cfg.infer_iters,
                Some(&background),
            )?;
            let path = output
                .or(cfg.ranker_model)
                .context("pass --output or set `ranker_model` in the config")?;
            model.save(&path)?;
            eprintln!("trained ranker -> {}", path.display());
        }
        Command::EvalRanker { config, baseline } => {
            let cfg = config.load()?;
            log_config(&cfg);
            let threads = load_corpus(&cfg)?;
            let lex = load_lexicon(&cfg)?;
            let topic_model = load_topic_model(&cfg)?;
            let background = global_unigram_counts(&threads);
            let mut model_slot = None;
            let source = rank_source(&cfg, &baseline, &mut model_slot)?;
            let (p1, mrr) = eval_ranker(
                &threads,
                &lex,
                &topic_model,
                source,
                cfg.infer_iters,
                Some(&background),
            )?;
            println!(
                "{}",
                serde_json::json!({
                    "config_hash": cfg.config_hash(),
                    "system": baseline.unwrap_or_else(|| "ranker".into()),
                    "p_at_1": p1,
                    "mrr": mrr,
                })
            );
        }
        Command::Summarize {
            config,
            budget_words,
            budget_chars,
            baseline,
            output,
            trace,
        } => {
            let mut cfg = config.load()?;
            if let Some(words) = budget_words {
                cfg.budget_kind = BudgetKind::Words;
                cfg.budget_limit = words;
            } else if let Some(chars) = budget_chars {
                cfg.budget_kind = BudgetKind::NonwhiteChars;
                cfg.budget_limit = chars;
            }
            log_config(&cfg);
            let threads = load_corpus(&cfg)?;
            let lex = load_lexicon(&cfg)?;
            let topic_model = load_topic_model(&cfg)?;
            let graph = load_graph(&cfg)?;
            let background = global_unigram_counts(&threads);
            let mut model_slot = None;
            let source = rank_source(&cfg, &baseline, &mut model_slot)?;
            let spec = cfg.objective_spec();
            let budget: Budget = cfg.budget()?;

            let mut records = Vec::new();
            let mut traces = Vec::new();
            for thread in &threads {
                let inputs = ThreadInputs::build(
                    thread,
                    &lex,
                    &topic_model,
                    source,
                    cfg.infer_iters,
                    Some(&background),
                )
                .with_context(|| format!("preparing thread {}", thread.id))?;
                let (summary, record) = summarize_thread(&inputs, &spec, budget, graph.as_ref())
                    .with_context(|| format!("summarizing thread {}", thread.id))?;
                records.push(SummaryRecord {
                    thread_id: record.thread_id,
                    sentence_ids: record.sentence_ids,
                    text: record.text,
                    objective_value: record.objective_value,
                    total_cost: record.total_cost,
                });
                traces.push(TraceRecord {
                    thread_id: thread.id.clone(),
                    candidates: summary.trace.iter().map(|s| s.candidate).collect(),
                    gains: summary.trace.iter().map(|s| s.gain).collect(),
                });
            }
            write_lines(&output, &records)?;
            if let Some(path) = trace {
                write_lines(&path, &traces)?;
            }
            eprintln!(
                "summarized {} threads -> {}",
                records.len(),
                output.display()
            );
        }
        Command::Evaluate {
            config,
            summaries,
            references,
            output,
        } => {
            let cfg = config.load()?;
            log_config(&cfg);
            let threads = load_corpus(&cfg)?;
            let by_id: HashMap<&str, &Thread> =
                threads.iter().map(|t| (t.id.as_str(), t)).collect();

            let refs_by_id: HashMap<String, Vec<Vec<String>>> = match &references {
                Some(path) => read_jsonl::<ReferenceRecord>(path)?
                    .into_iter()
                    .map(|r| {
                        (
                            r.thread_id,
                            r.references.iter().map(|t| tokenize(t)).collect(),
                        )
                    })
                    .collect(),
                None => HashMap::new(),
            };

            let mut reports = Vec::new();
            let mut lines = Vec::new();
            for record in read_jsonl::<SummaryRecord>(&summaries)? {
                let thread = by_id
                    .get(record.thread_id.as_str())
                    .with_context(|| format!("unknown thread id {}", record.thread_id))?;
                let reference: Vec<String> = thread
                    .answers
                    .iter()
                    .flat_map(|a| tokenize(&a.text))
                    .collect();
                let summary_tokens = tokenize(&record.text);
                let jsd = jsd_eval(&summary_tokens, &reference)?;
                let golds = refs_by_id.get(&record.thread_id);
                let (r2, su4) = match golds {
                    Some(golds) if !golds.is_empty() => (
                        Some(rouge2(&summary_tokens, golds)?),
                        Some(rouge_su4(&summary_tokens, golds)?),
                    ),
                    _ => (None, None),
                };
                let report = MetricsReport {
                    jsd,
                    rouge2: r2,
                    rouge_su4: su4,
                    p_at_1: None,
                    mrr: None,
                };
                lines.push(serde_json::json!({
                    "config_hash": cfg.config_hash(),
                    "thread_id": record.thread_id,
                    "report": report,
                }));
                reports.push(report);
            }
            if reports.is_empty() {
                bail!("no summary records in {}", summaries.display());
            }
            let aggregate = MetricsReport::aggregate(&reports).unwrap();
            lines.push(serde_json::json!({
                "config_hash": cfg.config_hash(),
                "thread_id": "<aggregate>",
                "report": aggregate,
            }));
            for line in &lines {
                println!("{line}");
            }
            if let Some(path) = output {
                write_lines(&path, &lines)?;
            }
        }
        Command::Ablate { config, output } => {
            let cfg = config.load()?;
            log_config(&cfg);
            let threads = load_corpus(&cfg)?;
            let lex = load_lexicon(&cfg)?;
            let topic_model = load_topic_model(&cfg)?;
            let graph = load_graph(&cfg)?;
            let background = global_unigram_counts(&threads);
            let mut model_slot = None;
            let baseline_fallback = if cfg.ranker_model.is_none() {
                Some("length".to_string())
            } else {
                None
            };
            let source = rank_source(&cfg, &baseline_fallback, &mut model_slot)?;
            let inputs: Vec<ThreadInputs> = threads
                .iter()
                .map(|t| {
                    ThreadInputs::build(
                        t,
                        &lex,
                        &topic_model,
                        source,
                        cfg.infer_iters,
                        Some(&background),
                    )
                })
                .collect::<opsum::Result<_>>()?;
            let cells = run_ablation(
                &inputs,
                &cfg.objective_spec(),
                cfg.budget()?,
                graph.as_ref(),
                &cfg.ablation_dispersion,
                &cfg.ablation_content,
                &cfg.ablation_dissimilarity,
            )?;
            println!(
                "{:<12} {:<10} {:<14} {:>10}  (config hash {})",
                "dispersion",
                "content",
                "dissimilarity",
                "mean JSD",
                cfg.config_hash()
            );
            for cell in &cells {
                println!(
                    "{:<12} {:<10} {:<14} {:>10.4}",
                    cell.dispersion, cell.content_sim, cell.dissimilarity, cell.mean_jsd
                );
            }
            if let Some(path) = output {
                let hash = cfg.config_hash();
                let lines: Vec<_> = cells
                    .iter()
                    .map(|c| {
                        serde_json::json!({
                            "config_hash": hash,
                            "cell": c,
                        })
                    })
                    .collect();
                write_lines(&path, &lines)?;
            }
        }
    }
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &PathBuf) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line)
                .with_context(|| format!("{}:{}: malformed record", path.display(), idx + 1))?,
        );
    }
    Ok(records)
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
