//! emoarc: ingest/inspect labeled story corpora, build valence/arousal gold
//! standards, compute agreement, predict trajectories, and run the 4-stage
//! weak-supervision pipeline.
//!
//! Exit codes: 0 success, 2 validation error, 3 coverage/data error,
//! 4 numeric degeneracy.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use emoarc_core::corpus::{
    apply_manifest, corpus_stats, emotion_distribution, export_manifest, ingest_labeled,
    load_manifest, remove_low_agreement, stratified_split, AnnotatorId, SplitTargets, Story,
};
use emoarc_core::error::Error;
use emoarc_core::fusion::{export_signals, fuse_corpus, load_gold, EweConfig};
use emoarc_core::mapping::{load_lexicon, LabelMap};
use emoarc_core::metrics::alpha_report;
use emoarc_core::pipeline::{evaluate_run, parse_config, render_report, run_pipeline, PipelineConfig};
use emoarc_core::predict::{
    lexicon_predict, load_external_predictions, predict_linear, train_linear, FeatureConfig,
    PredictionSet, WindowSpec,
};

#[derive(Parser)]
#[command(name = "emoarc", version, about = "Emotional-arc toolkit")]
struct Cli {
    /// Seed for stochastic steps (splitting)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory for generated files
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and summarize a labeled corpus (TSV)
    Ingest(IngestArgs),
    /// Create an author-stratified train/dev/test split
    Split(SplitArgs),
    /// Corpus statistics: sizes and emotion distribution
    Stats(StatsArgs),
    /// Inter-annotator agreement (Krippendorff's alpha)
    Agree(AgreeArgs),
    /// Fuse annotator signals into the gold standard
    Fuse(FuseArgs),
    /// Predict valence/arousal trajectories
    Predict(PredictArgs),
    /// Evaluate predictions against a gold standard
    Eval(EvalArgs),
    /// Run the full 4-stage weak-supervision pipeline
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Corpus file: labeled TSV, unlabeled JSONL, or raw text
    #[arg(long)]
    input: PathBuf,
    /// Input format: tsv (labeled) | jsonl | text
    #[arg(long, default_value = "tsv")]
    format: String,
    /// Re-export the corpus in canonical form under OUT/
    #[arg(long)]
    export: bool,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    train: Option<usize>,
    #[arg(long)]
    dev: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    /// Existing manifest overriding the algorithm
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    /// Emit machine-readable JSON instead of a table
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AgreeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Annotators to include, e.g. "1,2,3"
    #[arg(long, default_value = "1,2,3")]
    annotators: String,
    /// Also filter low-agreement stories at mean − K·std
    #[arg(long)]
    remove_low: Option<f64>,
    /// Write a confusion matrix CSV for an annotator pair, e.g. "1,3"
    #[arg(long)]
    confusion: Option<String>,
}

#[derive(Args)]
struct FuseArgs {
    #[arg(long)]
    input: PathBuf,
    /// Weight metric: ccc | pearson
    #[arg(long, default_value = "ccc")]
    ewe_weight: String,
    /// Weight reference: loo | mean
    #[arg(long, default_value = "loo")]
    ewe_ref: String,
    /// Label table override (TSV)
    #[arg(long)]
    label_table: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    input: PathBuf,
    /// lexicon | linear | external
    #[arg(long)]
    backend: String,
    /// Context window size
    #[arg(long, default_value_t = 2)]
    context: usize,
    /// Token budget per window
    #[arg(long, default_value_t = 512)]
    max_tokens: usize,
    /// VAD lexicon TSV (lexicon/linear backends)
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Smoothing half-life (lexicon backend)
    #[arg(long, default_value_t = 0.0)]
    half_life: f64,
    /// Ridge strength (linear backend)
    #[arg(long, default_value_t = 1.0)]
    l2: f64,
    /// Gold TSV to train the linear backend on
    #[arg(long)]
    gold: Option<PathBuf>,
    /// External predictions file (external backend)
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Labeled corpus (for authors and coverage)
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Split manifest naming dev/test stories
    #[arg(long)]
    manifest: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    /// Pipeline config file (key = value lines)
    #[arg(long)]
    config: PathBuf,
}

fn load_lexicon_or_empty(path: &Option<PathBuf>) -> anyhow::Result<emoarc_core::mapping::VadLexicon> {
    match path {
        Some(p) => {
            let load = load_lexicon(p)?;
            if load.duplicate_warnings > 0 {
                eprintln!(
                    "warning: {} duplicate lexicon tokens (last value wins)",
                    load.duplicate_warnings
                );
            }
            Ok(load.lexicon)
        }
        None => Ok(emoarc_core::mapping::VadLexicon::empty("none")),
    }
}

fn label_table(path: &Option<PathBuf>) -> anyhow::Result<LabelMap> {
    Ok(match path {
        Some(p) => LabelMap::from_tsv_path(p)?,
        None => LabelMap::default(),
    })
}

fn ensure_out(dir: &PathBuf) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest(args) => match args.format.as_str() {
            "tsv" => {
                let stories = ingest_labeled(&args.input)?;
                let stats = corpus_stats(&stories);
                println!("stories: {}", stats.stories);
                println!("sentences: {}", stats.sentences);
                for (author, c) in &stats.per_author {
                    println!("  {author}: {} stories, {} sentences", c.stories, c.sentences);
                }
                if args.export {
                    ensure_out(&cli.out)?;
                    let path = cli.out.join("corpus.tsv");
                    emoarc_core::corpus::export_labeled(&stories, &path)?;
                    println!("exported {}", path.display());
                }
            }
            "jsonl" | "text" => {
                let corpus = if args.format == "jsonl" {
                    emoarc_core::corpus::ingest_unlabeled_jsonl(&args.input)?
                } else {
                    emoarc_core::corpus::ingest_unlabeled_text(&args.input)?
                };
                println!("documents: {}", corpus.documents.len());
                println!("sentences: {}", corpus.sentence_count());
                if args.export {
                    ensure_out(&cli.out)?;
                    let path = cli.out.join("corpus.jsonl");
                    emoarc_core::corpus::export_unlabeled(&corpus, &path)?;
                    println!("exported {}", path.display());
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown format '{other}' (tsv|jsonl|text)"
                ))
                .into())
            }
        },
        Command::Split(args) => {
            let stories = ingest_labeled(&args.input)?;
            let partitions = match &args.manifest {
                Some(m) => apply_manifest(&stories, &load_manifest(m)?)?,
                None => {
                    let (Some(train), Some(dev), Some(test)) = (args.train, args.dev, args.test)
                    else {
                        return Err(Error::Config(
                            "need --train/--dev/--test or --manifest".into(),
                        )
                        .into());
                    };
                    stratified_split(&stories, SplitTargets { train, dev, test }, cli.seed)?
                }
            };
            ensure_out(&cli.out)?;
            let path = cli.out.join("split.tsv");
            export_manifest(&partitions, &path)?;
            for p in &partitions {
                println!("{}: {} stories", p.name, p.story_ids.len());
            }
            println!("wrote {}", path.display());
        }
        Command::Stats(args) => {
            let stories = ingest_labeled(&args.input)?;
            let stats = corpus_stats(&stories);
            let dist = emotion_distribution(&stories);
            if args.json {
                let value = serde_json::json!({
                    "counts": stats,
                    "emotion_distribution": dist,
                });
                println!("{}", serde_json::to_string_pretty(&value)?);
            } else {
                println!("stories: {}  sentences: {}", stats.stories, stats.sentences);
                for (author, c) in &stats.per_author {
                    println!("  {author}: {} stories, {} sentences", c.stories, c.sentences);
                }
                println!("label distribution [%]:");
                for (label, pct) in &dist.overall {
                    println!("  {label:>18}: {pct:6.2}");
                }
            }
        }
        Command::Agree(args) => {
            let stories = ingest_labeled(&args.input)?;
            let annotators: Vec<AnnotatorId> = args
                .annotators
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u8>()
                        .map(AnnotatorId)
                        .map_err(|_| Error::InvalidValue {
                            what: "annotator id",
                            msg: format!("'{t}'"),
                        })
                })
                .collect::<Result<_, _>>()?;
            let report = alpha_report(&stories, &annotators)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(pair) = &args.confusion {
                let ids: Vec<u8> = pair
                    .split(',')
                    .map(|t| {
                        t.trim().parse::<u8>().map_err(|_| Error::InvalidValue {
                            what: "annotator pair",
                            msg: format!("'{pair}'"),
                        })
                    })
                    .collect::<Result<_, _>>()?;
                let [a, b] = ids[..] else {
                    return Err(Error::InvalidValue {
                        what: "annotator pair",
                        msg: "expected exactly two ids, e.g. '1,3'".into(),
                    }
                    .into());
                };
                let matrix = emoarc_core::metrics::confusion(&stories, AnnotatorId(a), AnnotatorId(b));
                ensure_out(&cli.out)?;
                let path = cli.out.join(format!("confusion_a{a}_a{b}.csv"));
                std::fs::write(&path, matrix.to_csv())?;
                eprintln!("wrote {} ({} co-annotated sentences)", path.display(), matrix.total());
            }
            if let Some(k) = args.remove_low {
                let filter = remove_low_agreement(stories, &report.per_story, k)?;
                eprintln!(
                    "threshold {:.6}: kept {}, removed {}",
                    filter.threshold,
                    filter.kept.len(),
                    filter.removed.len()
                );
                for id in &filter.removed {
                    eprintln!("  removed {id}");
                }
            }
        }
        Command::Fuse(args) => {
            let stories = ingest_labeled(&args.input)?;
            let table = label_table(&args.label_table)?;
            let cfg = EweConfig {
                metric: args.ewe_weight.parse()?,
                reference: args.ewe_ref.parse()?,
            };
            let fused = fuse_corpus(&stories, &table, &cfg)?;
            ensure_out(&cli.out)?;
            let path = cli.out.join("gold.tsv");
            export_signals(fused.values().map(|f| &f.gold), &path, None)?;
            let fallbacks = fused.values().filter(|f| f.weights.fallback_used).count();
            println!(
                "fused {} stories ({} with uniform fallback) -> {}",
                fused.len(),
                fallbacks,
                path.display()
            );
        }
        Command::Predict(args) => {
            let stories = ingest_labeled(&args.input)?;
            ensure_out(&cli.out)?;
            let path = cli.out.join("predictions.tsv");
            let preds = match args.backend.as_str() {
                "lexicon" => {
                    let lexicon = load_lexicon_or_empty(&args.lexicon)?;
                    let mut set = PredictionSet::new(format!("lexicon:h={}", args.half_life));
                    for story in &stories {
                        set.insert(lexicon_predict(story, &lexicon, args.half_life)?);
                    }
                    set
                }
                "linear" => {
                    let lexicon = load_lexicon_or_empty(&args.lexicon)?;
                    let gold_path = args.gold.as_ref().ok_or_else(|| {
                        Error::Config("linear backend needs --gold for training".into())
                    })?;
                    let gold = load_gold(gold_path)?;
                    let spec = WindowSpec::new(args.context, args.max_tokens);
                    let fcfg = FeatureConfig::new(spec.clone());
                    let mut rows = Vec::new();
                    let mut targets = Vec::new();
                    for story in &stories {
                        let sig = gold.get(&story.story_id).ok_or_else(|| Error::CoverageGap {
                            story: story.story_id.to_string(),
                            index: 0,
                        })?;
                        if sig.len() != story.len() {
                            return Err(Error::CoverageGap {
                                story: story.story_id.to_string(),
                                index: sig.len().min(story.len()),
                            }
                            .into());
                        }
                        rows.extend(emoarc_core::predict::sentence_features(
                            &story.story_id,
                            &story.texts(),
                            &fcfg,
                            &lexicon,
                        ));
                        targets.extend(sig.valence.iter().zip(&sig.arousal).map(|(&v, &a)| (v, a)));
                    }
                    let model = train_linear(&rows, &targets, &fcfg, args.l2)?;
                    let mut set = PredictionSet::new(format!("linear:C={}", args.context));
                    for story in &stories {
                        set.insert(predict_linear(&model, story, &spec, &lexicon)?);
                    }
                    set
                }
                "external" => {
                    let file = args.predictions.as_ref().ok_or_else(|| {
                        Error::Config("external backend needs --predictions".into())
                    })?;
                    load_external_predictions(file, &stories)?
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown backend '{other}' (lexicon|linear|external)"
                    ))
                    .into())
                }
            };
            preds.export(&path)?;
            println!("wrote {} ({} stories)", path.display(), preds.signals.len());
        }
        Command::Eval(args) => {
            let stories = ingest_labeled(&args.input)?;
            let gold = load_gold(&args.gold)?;
            let preds = load_external_predictions(&args.predictions, &stories)?;
            let partitions = apply_manifest(&stories, &load_manifest(&args.manifest)?)?;
            let authors: BTreeMap<_, _> = stories
                .iter()
                .map(|s: &Story| (s.story_id.clone(), s.author))
                .collect();
            let report = evaluate_run(&preds, &gold, &partitions, &authors, &preds.run_id, "cli")?;
            let rendered = render_report(&report)?;
            ensure_out(&cli.out)?;
            let path = cli.out.join("report.json");
            std::fs::write(&path, &rendered)?;
            println!("{rendered}");
            eprintln!("wrote {}", path.display());

            // story-level correlations over dev+test where human agreement
            // and both model CCCs are defined
            use emoarc_core::fusion::Dimension;
            use emoarc_core::pipeline::{human_story_agreement, story_correlation_analysis, StoryCorrelationRow};
            let human = human_story_agreement(&stories, &LabelMap::default());
            let mut rows = Vec::new();
            for block in report.partitions.values() {
                let v = &block[&Dimension::Valence].per_story_ccc;
                let a = &block[&Dimension::Arousal].per_story_ccc;
                for (id, &ccc_v) in v {
                    if let (Some(&ccc_a), Some(&(hv, ha))) = (a.get(id), human.get(id)) {
                        rows.push(StoryCorrelationRow {
                            story_id: id.clone(),
                            model_ccc_v: ccc_v,
                            model_ccc_a: ccc_a,
                            human_ccc_v: hv,
                            human_ccc_a: ha,
                        });
                    }
                }
            }
            match story_correlation_analysis(&rows) {
                Ok(c) => eprintln!(
                    "story correlations: V-vs-A {:.4}, model-vs-human V {:.4}, model-vs-human A {:.4}",
                    c.v_vs_a, c.model_vs_human_v, c.model_vs_human_a
                ),
                Err(e) => eprintln!("story correlations undefined: {e}"),
            }
        }
        Command::Pipeline(args) => {
            let mut config: PipelineConfig = parse_config(&args.config)?;
            if cli.out != PathBuf::from("out") {
                config.out_dir = cli.out.clone();
            }
            if cli.seed != 0 {
                config.seed = cli.seed;
            }
            let summary = run_pipeline(config)?;
            println!("run_id: {}", summary.run_id);
            for (name, outcome) in [
                ("stage1", &summary.stage1),
                ("stage3", &summary.stage3),
                ("stage4", &summary.stage4),
            ] {
                match outcome.dev_score {
                    Some(s) => println!("{name}: dev CCC {s:.4} ({})", &outcome.digest[..12]),
                    None => println!("{name}: ({})", &outcome.digest[..12]),
                }
            }
            for warning in &summary.warnings {
                eprintln!("warning: {warning}");
            }
            println!("outputs in {}", summary.out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<Error>()
                .map(|e| e.exit_code())
                .unwrap_or(2);
            ExitCode::from(code as u8)
        }
    }
}
