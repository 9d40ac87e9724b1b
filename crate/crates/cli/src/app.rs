use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use clap::{ArgAction, Args, Parser, Subcommand};

use retweet_guard::analysis::{filter_and_rebin, heatmap_bins, load_threads, load_tweets, save_threads, save_tweets, thread_stats};
use retweet_guard::corpus::{attach_scores, load_corpus, load_labels, save_corpus, save_labels, save_scores, FileScoreProvider};
use retweet_guard::dataset;
use retweet_guard::eval::{cross_validate, single_feature_importance, MetricsReport};
use retweet_guard::features::{extract_all, feature_names, influence_median};
use retweet_guard::models::{load_model, save_model, Hyperparameters};
use retweet_guard::serve::{FeedbackPolicy, Retweeters, ScoringService, ServiceConfig, ThreadIndex};
use retweet_guard::synth::{generate, generate_threads, generate_tweets, SynthConfig};
use retweet_guard::{Class, ClassMode, Corpus, ExtractionConfig, LabelMap, LabeledDataset, ModelKind, ModelSpec};

use crate::http;

#[derive(Debug, Parser)]
#[command(name = "retweet-guard", version, about = "Collusive retweeter detection toolkit")]
pub struct Cli {
    /// Seed for every random choice (folds, sampling, generators).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for data-parallel work; defaults to available cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus (and optionally labels and scores) and print a summary.
    Ingest(IngestArgs),
    /// Write the 64-column feature matrix for every user in a corpus.
    Extract(ExtractArgs),
    /// Train a model on a labeled corpus and save it.
    Train(TrainArgs),
    /// Cross-validate one or all model kinds.
    Evaluate(EvaluateArgs),
    /// Single-feature and per-family importance by linear-SVM cross-validation.
    Importance(ImportanceArgs),
    /// Label users with a saved model.
    Score(ScoreArgs),
    /// Re-bin tweet retweet counts after removing customer retweets.
    Rerank(RerankArgs),
    /// Lifespan and inter-arrival statistics of retweet threads.
    Threads(ThreadsArgs),
    /// Generate a synthetic labeled corpus with tweets and threads.
    Synth(SynthArgs),
    /// Run the HTTP scoring service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus file, one JSON user record per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Score file: user_id, bot_score, influence_score (tab separated, `-` for missing).
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Reference time for account age (RFC 3339); defaults to the latest activity.
    #[arg(long, value_parser = parse_time)]
    pub snapshot: Option<DateTime<Utc>>,
}

#[derive(Debug, Args)]
pub struct ExtractionArgs {
    /// Smoothing added to the gap standard deviation, in seconds.
    #[arg(long)]
    pub steadiness_epsilon: Option<f64>,
    /// Bot score used for users without one.
    #[arg(long)]
    pub bot_score_default: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ModeArgs {
    /// Genuine vs customer (the default).
    #[arg(long, conflicts_with = "four_class")]
    pub binary: bool,
    /// Genuine, bot, promotional, normal.
    #[arg(long)]
    pub four_class: bool,
}

impl ModeArgs {
    fn mode(&self) -> ClassMode {
        if self.four_class {
            ClassMode::FourClass
        } else {
            ClassMode::Binary
        }
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Write the validated corpus (timelines sorted, scores attached) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    #[command(flatten)]
    pub extraction: ExtractionArgs,
    /// Influence score for users without one; defaults to the corpus median.
    #[arg(long)]
    pub imputed_influence: Option<f64>,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    #[arg(long)]
    pub labels: PathBuf,
    #[command(flatten)]
    pub extraction: ExtractionArgs,
    /// Model kind: dt, knn, lr, nb, svm, rf, bagging, boosting.
    #[arg(long, default_value = "svm")]
    pub model: ModelKind,
    #[command(flatten)]
    pub mode: ModeArgs,
    /// TOML file overriding hyperparameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    #[arg(long)]
    pub labels: PathBuf,
    #[command(flatten)]
    pub extraction: ExtractionArgs,
    /// A model kind or `all`.
    #[arg(long, default_value = "all")]
    pub model: String,
    #[command(flatten)]
    pub mode: ModeArgs,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// CSV table; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Full JSON report including per-class metrics and confusion matrices.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    #[arg(long)]
    pub labels: PathBuf,
    #[command(flatten)]
    pub extraction: ExtractionArgs,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Saved model file.
    #[arg(long = "model-file")]
    pub model_file: PathBuf,
    #[command(flatten)]
    pub input: CorpusArgs,
    /// Comma-separated user ids; all users when omitted.
    #[arg(long, value_delimiter = ',')]
    pub users: Vec<String>,
    /// Report genuine/customer even for a four-class model.
    #[arg(long)]
    pub binary: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    /// Tweets file, one JSON object per line with tweet_id, retweet_count, retweeters.
    #[arg(long)]
    pub tweets: PathBuf,
    /// Customer ids, one per line. A second tab-separated column is read as
    /// a class, and only customer classes are kept.
    #[arg(long)]
    pub customers: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThreadsArgs {
    /// Threads file, one JSON object per line with tweet_id, retweet_count, events.
    #[arg(long)]
    pub threads: PathBuf,
    /// Heatmap CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-thread lifespan and Arr-MAD CSV.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator config (TOML); overrides the count flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub genuine: usize,
    #[arg(long, default_value_t = 100)]
    pub customers: usize,
    /// Four counts (genuine,bot,promotional,normal) instead of the binary pair.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub four_class: Option<Vec<usize>>,
    #[arg(long, default_value_t = 60)]
    pub span_days: u32,
    #[arg(long, default_value_t = 500)]
    pub tweets: usize,
    #[arg(long, default_value_t = 200)]
    pub threads: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Service config (TOML). Environment variables prefixed RETWEET_GUARD_
    /// override it and flags override both.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub listen: Option<String>,
    #[arg(long = "model-file")]
    pub model_file: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<PathBuf>,
    #[arg(long)]
    pub state_dir: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub retrain_trigger: Option<usize>,
    /// Kind trained at startup when no model file or saved state exists.
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub four_class: bool,
}

fn parse_time(s: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| e.to_string())
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!("--workers must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    let seed = cli.seed;
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Extract(a) => extract(a),
        Command::Train(a) => train(a, seed),
        Command::Evaluate(a) => evaluate(a, seed),
        Command::Importance(a) => importance(a, seed),
        Command::Score(a) => score(a),
        Command::Rerank(a) => rerank(a),
        Command::Threads(a) => threads(a),
        Command::Synth(a) => synth(a, seed),
        Command::Serve(a) => serve(a, seed),
    }
}

fn load_input(args: &CorpusArgs) -> Result<Corpus> {
    let corpus = load_corpus(&args.corpus, args.snapshot)?;
    match &args.scores {
        Some(path) => {
            let provider = FileScoreProvider::load(path)?;
            Ok(attach_scores(corpus, &provider)?)
        }
        None => Ok(corpus),
    }
}

fn extraction_config(corpus: &Corpus, args: &ExtractionArgs) -> Result<ExtractionConfig> {
    let mut cfg = ExtractionConfig::new(corpus.snapshot_time());
    if let Some(eps) = args.steadiness_epsilon {
        if !(eps > 0.0 && eps.is_finite()) {
            bail!("--steadiness-epsilon must be positive");
        }
        cfg.steadiness_epsilon = eps;
    }
    if let Some(b) = args.bot_score_default {
        if !(0.0..=1.0).contains(&b) {
            bail!("--bot-score-default must lie in [0, 1]");
        }
        cfg.bot_score_default = b;
    }
    Ok(cfg)
}

fn load_dataset(input: &CorpusArgs, labels: &Path, extraction: &ExtractionArgs, mode: ClassMode) -> Result<LabeledDataset> {
    let corpus = load_input(input)?;
    let labels = load_labels(labels, &corpus)?;
    if labels.is_empty() {
        bail!("label file has no entries");
    }
    let cfg = extraction_config(&corpus, extraction)?;
    Ok(LabeledDataset::build_with(&corpus, &labels, mode, &cfg)?)
}

fn load_params(path: Option<&PathBuf>) -> Result<Hyperparameters> {
    let params = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => Hyperparameters::default(),
    };
    params.validate()?;
    Ok(params)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// Runs `write` against the file at `out`, or stdout.
fn emit(out: Option<&PathBuf>, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let mut f = create(path)?;
            write(&mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn ingest(args: IngestArgs) -> Result<()> {
    let corpus = load_input(&args.input)?;
    let posts: usize = corpus.records().iter().map(|r| r.timeline.len()).sum();
    println!("users\t{}", corpus.len());
    println!("posts\t{posts}");
    println!("snapshot\t{}", corpus.snapshot_time().to_rfc3339());
    let missing_bot = corpus.records().iter().filter(|r| r.bot_score.is_none()).count();
    let missing_influence = corpus.records().iter().filter(|r| r.influence_score.is_none()).count();
    println!("missing_bot_score\t{missing_bot}");
    println!("missing_influence_score\t{missing_influence}");
    if let Some(path) = &args.labels {
        let labels = load_labels(path, &corpus)?;
        for (class, n) in labels.counts() {
            println!("label_{class}\t{n}");
        }
        let (genuine, customers) = labels.binary_counts();
        println!("label_binary\t{genuine}\t{customers}");
    }
    if let Some(out) = &args.out {
        save_corpus(&corpus, out)?;
    }
    Ok(())
}

fn extract(args: ExtractArgs) -> Result<()> {
    use rayon::prelude::*;
    let corpus = load_input(&args.input)?;
    let cfg = extraction_config(&corpus, &args.extraction)?;
    let imputed = args.imputed_influence.unwrap_or_else(|| influence_median(corpus.records()));
    let rows = corpus
        .records()
        .par_iter()
        .map(|r| extract_all(r, &cfg, imputed))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = create(&args.out)?;
    writeln!(out, "user_id,{}", feature_names().join(","))?;
    for v in rows {
        let cells: Vec<String> = v.values().iter().map(f64::to_string).collect();
        writeln!(out, "{},{}", v.user_id, cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn train(args: TrainArgs, seed: u64) -> Result<()> {
    let mode = args.mode.mode();
    let data = load_dataset(&args.input, &args.labels, &args.extraction, mode)?;
    let mut spec = ModelSpec::new(args.model, mode, seed);
    spec.hyperparameters = load_params(args.params.as_ref())?;
    let model = dataset::fit(&spec, &data)?;
    save_model(&model, &args.out)?;
    log::info!("trained {} on {} users", args.model.display_name(), data.len());
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.4}"))
}

fn write_table(out: &mut dyn Write, rows: &[(ModelKind, MetricsReport)]) -> std::io::Result<()> {
    writeln!(
        out,
        "model,micro_precision,micro_recall,micro_f1,micro_auc,macro_precision,macro_recall,macro_f1,macro_auc"
    )?;
    for (kind, r) in rows {
        writeln!(
            out,
            "{},{:.4},{:.4},{:.4},{},{:.4},{:.4},{:.4},{}",
            kind.display_name(),
            r.micro_precision,
            r.micro_recall,
            r.micro_f1,
            fmt_opt(r.micro_auc),
            r.macro_precision,
            r.macro_recall,
            r.macro_f1,
            fmt_opt(r.macro_auc)
        )?;
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs, seed: u64) -> Result<()> {
    let kinds: Vec<ModelKind> = if args.model.eq_ignore_ascii_case("all") {
        ModelKind::ALL.to_vec()
    } else {
        vec![args.model.parse().map_err(anyhow::Error::msg)?]
    };
    let mode = args.mode.mode();
    let hyper = load_params(args.params.as_ref())?;
    let data = load_dataset(&args.input, &args.labels, &args.extraction, mode)?;
    let mut rows = Vec::new();
    for kind in kinds {
        let mut spec = ModelSpec::new(kind, mode, seed);
        spec.hyperparameters = hyper.clone();
        let report = cross_validate(&spec, &data, args.folds).with_context(|| format!("evaluating {}", kind.display_name()))?;
        rows.push((kind, report));
    }
    emit(args.out.as_ref(), |w| write_table(w, &rows))?;
    if let Some(path) = &args.json {
        let doc: Vec<serde_json::Value> = rows
            .iter()
            .map(|(k, r)| serde_json::json!({ "model": k.short_name(), "report": r }))
            .collect();
        let mut f = create(path)?;
        serde_json::to_writer_pretty(&mut f, &serde_json::json!({ "mode": mode, "folds": args.folds, "seed": seed, "results": doc }))?;
        writeln!(f)?;
        f.flush()?;
    }
    Ok(())
}

fn importance(args: ImportanceArgs, seed: u64) -> Result<()> {
    let data = load_dataset(&args.input, &args.labels, &args.extraction, ClassMode::Binary)?;
    let report = single_feature_importance(&data, args.folds, seed)?;
    let mut out = create(&args.out)?;
    writeln!(out, "scope,name,macro_f1")?;
    for e in &report.features {
        writeln!(out, "feature,{},{:.6}", e.name, e.macro_f1)?;
    }
    for e in &report.families {
        writeln!(out, "family,{},{:.6}", e.name, e.macro_f1)?;
    }
    writeln!(out, "all,ALL,{:.6}", report.all_features)?;
    out.flush()?;
    Ok(())
}

fn score(args: ScoreArgs) -> Result<()> {
    let model = load_model(&args.model_file).with_context(|| format!("loading {}", args.model_file.display()))?;
    let corpus = load_input(&args.input)?;
    let ids: Vec<String> = if args.users.is_empty() {
        corpus.records().iter().map(|r| r.user_id().to_string()).collect()
    } else {
        args.users.clone()
    };
    let spec = model.spec.clone();
    let service = ScoringService::new(corpus, LabelMap::new(), spec, Some(model), FeedbackPolicy::default(), None)?;
    let mode = if args.binary { ClassMode::Binary } else { service.spec().class_mode };
    let response = service.score_retweeters(&Retweeters::RetweeterIds(ids), Some(mode))?;
    emit(args.out.as_ref(), |w| {
        writeln!(w, "user_id,label,confidence,error")?;
        for e in &response.results {
            writeln!(
                w,
                "{},{},{},{}",
                e.user_id,
                e.label.as_deref().unwrap_or(""),
                e.confidence.map_or_else(String::new, |c| format!("{c:.6}")),
                e.error.as_deref().unwrap_or("")
            )?;
        }
        Ok(())
    })
}

fn read_customers(path: &Path) -> Result<HashSet<String>> {
    let reader = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut out = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        let id = cols.next().unwrap_or_default();
        match cols.next() {
            None => {
                out.insert(id.to_string());
            }
            Some(class) => {
                if i == 0 && id == "user_id" {
                    continue;
                }
                let class: Class = class
                    .parse()
                    .map_err(|t| anyhow::anyhow!("{}:{}: unknown class {t:?}", path.display(), i + 1))?;
                if class.is_customer() {
                    out.insert(id.to_string());
                }
            }
        }
    }
    Ok(out)
}

fn rerank(args: RerankArgs) -> Result<()> {
    let tweets = load_tweets(&args.tweets).with_context(|| format!("loading {}", args.tweets.display()))?;
    let customers = read_customers(&args.customers)?;
    let flow = filter_and_rebin(&tweets, &customers)?;
    emit(args.out.as_ref(), |w| flow.write_csv(w))
}

fn threads(args: ThreadsArgs) -> Result<()> {
    let threads = load_threads(&args.threads).with_context(|| format!("loading {}", args.threads.display()))?;
    let stats: Vec<_> = threads.iter().filter_map(|t| thread_stats(t).map(|s| (t, s))).collect();
    if let Some(path) = &args.stats {
        let mut f = create(path)?;
        writeln!(f, "tweet_id,retweet_count,events,lifespan_s,arr_mad_s")?;
        for (t, s) in &stats {
            writeln!(f, "{},{},{},{},{}", t.tweet_id, t.retweet_count, t.events.len(), s.lifespan, s.arr_mad)?;
        }
        f.flush()?;
    }
    let grid = heatmap_bins(&stats.iter().map(|(_, s)| *s).collect::<Vec<_>>());
    emit(args.out.as_ref(), |w| grid.write_csv(w))
}

fn synth(args: SynthArgs, seed: u64) -> Result<()> {
    let cfg = match (&args.config, &args.four_class) {
        (Some(path), _) => SynthConfig::load(path)?,
        (None, Some(counts)) => SynthConfig::four_class([counts[0], counts[1], counts[2], counts[3]], args.span_days),
        (None, None) => SynthConfig::binary(args.genuine, args.customers, args.span_days),
    };
    let (corpus, labels) = generate(&cfg, seed)?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let dir = &args.out_dir;
    save_corpus(&corpus, dir.join("corpus.jsonl"))?;
    save_labels(&labels, dir.join("labels.tsv"))?;
    save_scores(corpus.records(), dir.join("scores.tsv"))?;
    save_tweets(&generate_tweets(&corpus, &labels, args.tweets, seed), dir.join("tweets.jsonl"))?;
    save_threads(&generate_threads(&corpus, &labels, args.threads, seed), dir.join("threads.jsonl"))?;
    fs::write(dir.join("synth.toml"), cfg.to_toml())?;
    println!("wrote {} users to {}", corpus.len(), dir.display());
    Ok(())
}

fn serve(args: ServeArgs, seed: u64) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => ServiceConfig::load(p).map_err(anyhow::Error::msg)?,
        None => ServiceConfig::default(),
    };
    cfg.apply_env(std::env::vars()).map_err(anyhow::Error::msg)?;
    macro_rules! flag {
        ($field:ident, $value:expr) => {
            if let Some(v) = $value {
                cfg.$field = v;
            }
        };
    }
    flag!(listen, args.listen);
    flag!(confidence_threshold, args.threshold);
    flag!(retrain_trigger, args.retrain_trigger);
    for (slot, value) in [
        (&mut cfg.model_path, args.model_file),
        (&mut cfg.corpus_path, args.corpus),
        (&mut cfg.labels_path, args.labels),
        (&mut cfg.scores_path, args.scores),
        (&mut cfg.threads_path, args.threads),
        (&mut cfg.state_dir, args.state_dir),
    ] {
        if value.is_some() {
            *slot = value;
        }
    }
    if let Some(kind) = args.model {
        cfg.model = Some(kind.short_name().to_string());
    }
    if args.four_class {
        cfg.four_class = true;
    }
    let service = build_service(&cfg, seed)?;
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(http::serve(Arc::new(service), &cfg.listen))?;
    Ok(())
}

/// Assembles a scoring service from a resolved configuration.
pub fn build_service(cfg: &ServiceConfig, seed: u64) -> Result<ScoringService> {
    let corpus_path = cfg.corpus_path.as_ref().context("a corpus path is required")?;
    let input = CorpusArgs {
        corpus: corpus_path.clone(),
        scores: cfg.scores_path.clone(),
        snapshot: None,
    };
    let corpus = load_input(&input)?;
    let labels = match &cfg.labels_path {
        Some(p) => load_labels(p, &corpus)?,
        None => LabelMap::new(),
    };
    let mode = if cfg.four_class { ClassMode::FourClass } else { ClassMode::Binary };
    let kind: ModelKind = cfg.model.as_deref().unwrap_or("svm").parse().map_err(anyhow::Error::msg)?;
    let initial = match &cfg.model_path {
        Some(p) => Some(load_model(p).with_context(|| format!("loading {}", p.display()))?),
        None => None,
    };
    let spec = match &initial {
        Some(m) => m.spec.clone(),
        None => ModelSpec::new(kind, mode, seed),
    };
    let has_state = cfg.state_dir.as_ref().is_some_and(|d| d.join("active.json").exists());
    let initial = match initial {
        Some(m) => Some(m),
        None if has_state => None,
        None if !labels.is_empty() => {
            let data = LabeledDataset::build(&corpus, &labels, spec.class_mode)?;
            Some(dataset::fit(&spec, &data)?)
        }
        None => bail!("no model file, saved state or labels to train from"),
    };
    let mut service = ScoringService::new(corpus, labels, spec, initial, cfg.policy(), cfg.state_dir.clone())?;
    if let Some(p) = &cfg.threads_path {
        let threads = load_threads(p).with_context(|| format!("loading {}", p.display()))?;
        service = service.with_fetcher(ThreadIndex::new(&threads));
    }
    Ok(service)
}
