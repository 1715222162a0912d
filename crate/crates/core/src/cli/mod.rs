//! Command-line front end: `augment`, `train`, `score`, `eval`, `copa`
//! and `shift-report`.
//!
//! Settings come from an optional JSON [`RunConfig`] (`--config`), with
//! command-line flags taking precedence. Exit codes: 0 on success, 1 for
//! usage and validation errors, 2 for runtime failures.

mod config;

pub use config::{MetricName, ProviderKind, RunConfig};

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::baselines::{
    BaselineError, CeqConfig, CooccurrenceStats, CtcwProvider, CtcwTemplate, HttpProvider, MockProvider,
    RockOracleFile,
};
use crate::cesar::{
    load_fixed_embeddings, train, write_loss_curve, AttentionMode, CesarModel, EmbedderKind, ModelError,
};
use crate::data::{self, DataError};
use crate::eval::{
    evaluate_copa_with, evaluate_defeasibility_with, percent, shift_report, AdditionRole, CausalMetric,
    CeqMetric, CtcwMetric, EvalError, RockMetric, TiePolicy,
};
use crate::text::{EventText, Vocabulary, WordTokenizer};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration or input files (exit code 1).
    Validation(String),
    /// Failures while running (exit code 2).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

fn invalid(message: impl Into<String>) -> CliError {
    CliError::Validation(message.into())
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Io(_) | ModelError::NonFiniteLoss { .. } | ModelError::Numerics(_) => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        match e {
            BaselineError::Io(_) | BaselineError::Provider(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::EmptyData => CliError::Validation(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "cesar",
    version,
    about = "Causal-strength metrics and defeasibility evaluation"
)]
pub struct Cli {
    /// JSON run configuration; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every random choice (default 42).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// More log output: -v info, -vv debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expand augmentation records into a training set.
    Augment(AugmentArgs),
    /// Train a CESAR model and write a checkpoint.
    Train(TrainArgs),
    /// Score one cause-effect pair.
    Score(ScoreArgs),
    /// Supporter/defeater accuracy on a defeasibility file.
    Eval(EvalArgs),
    /// Two-choice COPA accuracy.
    Copa(CopaArgs),
    /// Score distributions with and without supporters/defeaters.
    ShiftReport(ShiftArgs),
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Source JSONL: {cause, effect, explanation, opposite, is_causal}.
    #[arg(long)]
    pub input: PathBuf,
    /// Output training JSONL: {cause, addition, effect, target}.
    #[arg(long, required_unless_present = "split_dir")]
    pub output: Option<PathBuf>,
    /// Split the records train/dev/test first and write one file per part here.
    #[arg(long)]
    pub split_dir: Option<PathBuf>,
    #[arg(long)]
    pub target_pair: Option<f64>,
    #[arg(long)]
    pub target_explanation: Option<f64>,
    #[arg(long)]
    pub target_opposite: Option<f64>,
    #[arg(long)]
    pub target_non_causal: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training JSONL produced by `augment`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Where to write the checkpoint.
    #[arg(long)]
    pub out: PathBuf,
    /// Write an `epoch,loss` CSV here.
    #[arg(long)]
    pub loss_curve: Option<PathBuf>,
    /// Embedding dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// lookup, mixer or fixed.
    #[arg(long, value_parser = parse_embedder)]
    pub embedder: Option<EmbedderKind>,
    /// Word-vector text file (`token v1 v2 ...`); implies the fixed embedder.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// learned or uniform.
    #[arg(long)]
    pub attention: Option<AttentionMode>,
    /// Drop [CLS]/[SEP] rows when scoring.
    #[arg(long)]
    pub no_specials: bool,
    /// Keep at most this many vocabulary entries (most frequent first).
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Base learning rate before `--lr-scale`.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lr_scale: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
}

fn parse_embedder(s: &str) -> std::result::Result<EmbedderKind, String> {
    EmbedderKind::parse(s).ok_or_else(|| format!("unknown embedder {s:?} (expected lookup, mixer or fixed)"))
}

fn parse_template(s: &str) -> std::result::Result<CtcwTemplate, String> {
    s.parse()
}

/// Metric selection shared by the scoring subcommands.
#[derive(Debug, Args, Default)]
pub struct MetricArgs {
    /// cesar, ceq, rock or ctcw.
    #[arg(long)]
    pub metric: Option<MetricName>,
    /// CESAR checkpoint.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Override the checkpoint's attention mode (learned or uniform).
    #[arg(long)]
    pub attention: Option<AttentionMode>,
    /// Drop [CLS]/[SEP] rows when scoring with CESAR.
    #[arg(long)]
    pub no_specials: bool,
    /// CEQ statements JSONL (records with cause and effect).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// CEQ exponent on the effect-word count.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// ROCK oracle JSON.
    #[arg(long)]
    pub oracles: Option<PathBuf>,
    /// CTCW probability source: mock or http.
    #[arg(long)]
    pub provider: Option<ProviderKind>,
    /// Mock fixtures JSONL: {prompt_sha256, after, before, therefore, because}.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// CTCW template for every addition (and, fact, and-later).
    #[arg(long, value_parser = parse_template)]
    pub template: Option<CtcwTemplate>,
    /// CTCW template for supporters.
    #[arg(long, value_parser = parse_template)]
    pub supporter_template: Option<CtcwTemplate>,
    /// CTCW template for defeaters.
    #[arg(long, value_parser = parse_template)]
    pub defeater_template: Option<CtcwTemplate>,
    /// Keep raw CTCW scores when probabilities sum above 1.
    #[arg(long)]
    pub no_clamp: bool,
    /// Chat model name sent by the http provider.
    #[arg(long)]
    pub llm_model: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long)]
    pub cause: String,
    #[arg(long)]
    pub effect: String,
    /// Supporter, defeater or other text attached to the cause.
    #[arg(long)]
    pub addition: Option<String>,
    /// Role of `--addition`: supporter, defeater or other.
    #[arg(long, default_value = "other", value_parser = parse_role)]
    pub role: AdditionRole,
    /// Print the association, attention and strength matrices (CESAR).
    #[arg(long)]
    pub breakdown: bool,
}

fn parse_role(s: &str) -> std::result::Result<AdditionRole, String> {
    match s {
        "supporter" => Ok(AdditionRole::Supporter),
        "defeater" => Ok(AdditionRole::Defeater),
        "other" => Ok(AdditionRole::Other),
        _ => Err(format!(
            "unknown role {s:?} (expected supporter, defeater or other)"
        )),
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Defeasibility JSONL.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// strict or lenient.
    #[arg(long)]
    pub tie_policy: Option<TiePolicy>,
    /// Worker threads for scoring.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Write the full report (per-instance scores included) as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write per-domain / time-interval counts of the data as CSV.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CopaArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    /// COPA JSONL: {premise, ask_for, choice1, choice2, label}.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ShiftArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Directory for scores.csv, kde.csv, summary.txt and shift.svg.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn existing(path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    let p = path
        .clone()
        .ok_or_else(|| invalid(format!("{what} is required")))?;
    if !p.exists() {
        return Err(invalid(format!("{what} {} does not exist", p.display())));
    }
    Ok(p)
}

fn apply_metric_flags(cfg: &mut RunConfig, m: &MetricArgs) {
    config::set(&mut cfg.metric, m.metric);
    config::set(&mut cfg.model_path, m.model.clone());
    config::set(&mut cfg.corpus, m.corpus.clone());
    config::set(&mut cfg.oracles, m.oracles.clone());
    config::set(&mut cfg.fixtures, m.fixtures.clone());
    config::set(&mut cfg.llm_model, m.llm_model.clone());
    if let Some(a) = m.alpha {
        cfg.alpha = a;
    }
    if let Some(p) = m.provider {
        cfg.provider = p;
    }
    if let Some(t) = m.template {
        cfg.supporter_template = t;
        cfg.defeater_template = t;
        cfg.other_template = t;
    }
    if let Some(t) = m.supporter_template {
        cfg.supporter_template = t;
    }
    if let Some(t) = m.defeater_template {
        cfg.defeater_template = t;
    }
    if m.no_clamp {
        cfg.clamp = false;
    }
    if let Some(a) = m.attention {
        cfg.model.attention_mode = a;
        cfg.attention_override = true;
    }
    if m.no_specials {
        cfg.model.include_specials = false;
        cfg.specials_override = true;
    }
}

fn load_cesar(cfg: &RunConfig) -> Result<CesarModel> {
    let path = existing(&cfg.model_path, "--model")?;
    let mut model = CesarModel::load(&path)?;
    if cfg.attention_override {
        model.set_attention_mode(cfg.model.attention_mode);
    }
    if cfg.specials_override {
        model.set_include_specials(cfg.model.include_specials);
    }
    Ok(model)
}

fn provider(cfg: &RunConfig) -> Result<Arc<dyn CtcwProvider>> {
    Ok(match cfg.provider {
        ProviderKind::Mock => match &cfg.fixtures {
            Some(_) => Arc::new(MockProvider::from_fixtures(existing(
                &cfg.fixtures,
                "--fixtures",
            )?)?),
            None => Arc::new(MockProvider::new()),
        },
        ProviderKind::Http => {
            Arc::new(HttpProvider::from_env(cfg.llm_model.as_deref()).map_err(|e| invalid(e.to_string()))?)
        }
    })
}

fn build_metric(cfg: &RunConfig) -> Result<Box<dyn CausalMetric>> {
    let name = cfg
        .metric
        .ok_or_else(|| invalid("--metric is required (cesar, ceq, rock or ctcw)"))?;
    Ok(match name {
        MetricName::Cesar => Box::new(load_cesar(cfg)?),
        MetricName::Ceq => {
            let corpus = data::load_causal_statements(existing(&cfg.corpus, "--corpus")?)?;
            let config = CeqConfig { alpha: cfg.alpha };
            config.validate()?;
            let source = cfg
                .corpus
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default();
            Box::new(CeqMetric {
                stats: CooccurrenceStats::from_corpus(&WordTokenizer, &corpus, source)?,
                config,
            })
        }
        MetricName::Rock => Box::new(RockMetric {
            inputs: RockOracleFile::load(existing(&cfg.oracles, "--oracles")?)?,
        }),
        MetricName::Ctcw => Box::new(CtcwMetric {
            provider: provider(cfg)?,
            supporter_template: cfg.supporter_template,
            defeater_template: cfg.defeater_template,
            other_template: cfg.other_template,
            clamp: cfg.clamp,
        }),
    })
}

fn text(raw: &str, what: &str) -> Result<EventText> {
    EventText::new(raw).map_err(|_| invalid(format!("{what} must not be empty")))
}

fn run_augment(cfg: &RunConfig, args: &AugmentArgs) -> Result<String> {
    let mut targets = cfg.targets;
    config::set_value(&mut targets.pair, args.target_pair);
    config::set_value(&mut targets.with_explanation, args.target_explanation);
    config::set_value(&mut targets.with_opposite, args.target_opposite);
    config::set_value(&mut targets.non_causal, args.target_non_causal);
    let records = data::load_augmentation_source(existing(&Some(args.input.clone()), "--input")?)?;
    let mut out = String::new();
    if let Some(path) = &args.output {
        let examples = data::build_augmented_set(&records, &targets)?;
        data::write_jsonl(path, &examples)?;
        let _ = writeln!(
            out,
            "{} records -> {} examples -> {}",
            records.len(),
            examples.len(),
            path.display()
        );
    }
    if let Some(dir) = &args.split_dir {
        fs::create_dir_all(dir)?;
        let parts = data::split(&records, cfg.seed);
        for (name, part) in [
            ("train", &parts.train),
            ("dev", &parts.dev),
            ("test", &parts.test),
        ] {
            let examples = data::build_augmented_set(part, &targets)?;
            let path = dir.join(format!("{name}.jsonl"));
            data::write_jsonl(&path, &examples)?;
            let _ = writeln!(
                out,
                "{name}: {} records -> {} examples -> {}",
                part.len(),
                examples.len(),
                path.display()
            );
        }
    }
    Ok(out)
}

fn run_train(mut cfg: RunConfig, args: &TrainArgs) -> Result<String> {
    config::set(&mut cfg.data, args.data.clone());
    config::set(&mut cfg.embeddings, args.embeddings.clone());
    config::set(&mut cfg.vocab_size, args.vocab_size);
    config::set_value(&mut cfg.model.dim, args.dim);
    config::set_value(&mut cfg.model.embedder, args.embedder);
    config::set_value(&mut cfg.model.attention_mode, args.attention);
    if args.no_specials {
        cfg.model.include_specials = false;
    }
    config::set_value(&mut cfg.train.epochs, args.epochs);
    config::set_value(&mut cfg.train.learning_rate, args.lr);
    config::set_value(&mut cfg.train.lr_scale, args.lr_scale);
    config::set_value(&mut cfg.train.batch_size, args.batch_size);
    config::set_value(&mut cfg.train.weight_decay, args.weight_decay);
    if cfg.embeddings.is_some() {
        cfg.model.embedder = EmbedderKind::Fixed;
    }

    let examples = data::load_training(existing(&cfg.data, "--data")?)?;
    let model = if cfg.model.embedder == EmbedderKind::Fixed {
        let path = existing(&cfg.embeddings, "--embeddings (required by the fixed embedder)")?;
        let (vocab, table) = load_fixed_embeddings(path)?;
        CesarModel::with_fixed_embeddings(vocab, table, cfg.model)?
    } else {
        let texts = examples.iter().flat_map(|e| {
            [Some(&e.cause), e.addition.as_ref(), Some(&e.effect)]
                .into_iter()
                .flatten()
                .map(EventText::as_str)
        });
        let vocab = Vocabulary::build(&WordTokenizer, texts, cfg.vocab_size);
        CesarModel::new(vocab, cfg.model)?
    };
    let (trained, report) = train(&model, &examples, &cfg.train)?;
    trained.save(&args.out)?;
    if let Some(path) = &args.loss_curve {
        write_loss_curve(path, &report)?;
    }
    let mut out = String::new();
    for (i, loss) in report.epoch_loss.iter().enumerate() {
        let _ = writeln!(out, "epoch {} loss {loss:.6}", i + 1);
    }
    let _ = writeln!(
        out,
        "{} examples, {} steps, vocabulary {} -> {}",
        examples.len(),
        report.steps,
        trained.vocab().len(),
        args.out.display()
    );
    Ok(out)
}

fn run_score(mut cfg: RunConfig, args: &ScoreArgs) -> Result<String> {
    apply_metric_flags(&mut cfg, &args.metric);
    let cause = text(&args.cause, "--cause")?;
    let effect = text(&args.effect, "--effect")?;
    let addition = args
        .addition
        .as_deref()
        .map(|a| text(a, "--addition"))
        .transpose()?;
    if args.breakdown {
        if cfg.metric != Some(MetricName::Cesar) {
            return Err(invalid("--breakdown is only available for --metric cesar"));
        }
        let model = load_cesar(&cfg)?;
        let b = model.score(&cause, addition.as_ref(), &effect)?;
        return Ok(format!("score {}\n{}", b.score, b.render()));
    }
    let metric = build_metric(&cfg)?;
    let s = metric
        .score(&cause, addition.as_ref().map(|a| (a, args.role)), &effect)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(format!("score {s}\n"))
}

fn run_eval(mut cfg: RunConfig, args: &EvalArgs) -> Result<String> {
    apply_metric_flags(&mut cfg, &args.metric);
    config::set(&mut cfg.data, args.data.clone());
    config::set_value(&mut cfg.tie_policy, args.tie_policy);
    config::set_value(&mut cfg.jobs, args.jobs);
    let instances = data::load_defeasibility(existing(&cfg.data, "--data")?)?;
    if let Some(path) = &args.stats {
        fs::write(path, data::statistics_csv(&instances))?;
    }
    let metric = build_metric(&cfg)?;
    let report = evaluate_defeasibility_with(metric.as_ref(), &instances, cfg.tie_policy, cfg.jobs)?;
    if let Some(path) = &args.report {
        fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    let mut out = format!("{report}\n");
    for e in &report.excluded {
        let _ = writeln!(out, "excluded {}: {}", e.id, e.error);
    }
    Ok(out)
}

fn run_copa(mut cfg: RunConfig, args: &CopaArgs) -> Result<String> {
    apply_metric_flags(&mut cfg, &args.metric);
    config::set(&mut cfg.data, args.data.clone());
    config::set_value(&mut cfg.jobs, args.jobs);
    let instances = data::load_copa(existing(&cfg.data, "--data")?)?;
    let metric = build_metric(&cfg)?;
    let r = evaluate_copa_with(metric.as_ref(), &instances, cfg.jobs)?;
    Ok(format!(
        "metric | accuracy\n{} | {}\ncorrect {} of {} | excluded {}\n",
        r.metric,
        percent(r.accuracy),
        r.correct,
        r.evaluated,
        r.excluded.len()
    ))
}

fn run_shift(mut cfg: RunConfig, args: &ShiftArgs) -> Result<String> {
    apply_metric_flags(&mut cfg, &args.metric);
    config::set(&mut cfg.data, args.data.clone());
    let instances = data::load_defeasibility(existing(&cfg.data, "--data")?)?;
    let metric = build_metric(&cfg)?;
    let s = shift_report(metric.as_ref(), &instances, &args.out_dir)?;
    Ok(format!(
        "{} instances ({} excluded)\nmean delta supporter {}\nmean delta defeater {}\nwrote {}\n",
        s.instances,
        s.excluded,
        s.mean_delta_supporter,
        s.mean_delta_defeater,
        args.out_dir.display()
    ))
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
}

/// Runs a parsed command line and returns what it prints on success.
pub fn run(cli: Cli) -> Result<String> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.apply_seed();
    match &cli.command {
        Command::Augment(a) => run_augment(&cfg, a),
        Command::Train(a) => run_train(cfg, a),
        Command::Score(a) => run_score(cfg, a),
        Command::Eval(a) => run_eval(cfg, a),
        Command::Copa(a) => run_copa(cfg, a),
        Command::ShiftReport(a) => run_shift(cfg, a),
    }
}

/// Full entry point: parses `argv`, runs, prints, and returns the exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    main_with(std::env::args_os())
}
