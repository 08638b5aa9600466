//! The `maskfill` command line.
//!
//! Settings resolve as flags, then the `--config` file, then built-in
//! defaults. The config file is a JSON object whose keys are flag names
//! (`n-aug` or `n_aug`). Top-level keys apply to every subcommand that accepts
//! them; a nested object keyed by subcommand name applies to that subcommand
//! only and takes precedence over top-level keys.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use maskfill_core::augment::{
    augment_sample, harvest_trigger_lexicon, span_backtranslation, synonym_replacement, AugmentConfig,
    AugmentedSample, FillFilterConfig, IdentityTranslator, Translator,
};
use maskfill_core::fragmenter::{
    compute_adjunct_fragments, generate_infill_training_examples, select_and_mask, LengthBounds,
    DEFAULT_MASK_TOKEN, DEFAULT_MAX_MASK_LEN, DEFAULT_MIN_MASK_LEN,
};
use maskfill_core::harness::SplitSpec;
use maskfill_core::infill::ngram::{DEFAULT_ORDER, DEFAULT_SMOOTHING};
use maskfill_core::infill::{
    train_ngram, Infiller, NgramModel, Scorer, DEFAULT_BEAM_SIZE, DEFAULT_MAX_FILL_LEN, DEFAULT_NUM_CANDIDATES,
    DEFAULT_TOP_K, DEFAULT_TOP_P,
};
use maskfill_core::metrics::evaluate_pair_corpus;
use maskfill_core::rng::{seeded, stream_rng};
use maskfill_core::{Corpus, Error as CoreError};
use rayon::prelude::*;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::export::{atomic_write, ensure_trainable, export_experiment, manifest_role, CorpusRole};
use crate::format;
use crate::remote::{RemoteClient, RemoteConfig, RemoteTranslator, DEFAULT_MAX_IN_FLIGHT, DEFAULT_RETRIES};

pub const DEFAULT_SEED: u64 = 1024;
pub const DEFAULT_P_REPLACE: f64 = 0.1;
pub const ENDPOINT_ENV: &str = "MASKFILL_ENDPOINT";

#[derive(Debug, Parser)]
#[command(name = "maskfill", version, about = "Mask-then-fill augmentation for event-extraction corpora")]
pub struct Cli {
    /// JSON object of flag defaults; command-line flags take precedence
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// More log output on stderr (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every record of a corpus and report all violations
    Validate(ValidateArgs),
    /// List adjunct fragments per sample
    Fragments(FragmentsArgs),
    /// Mask one adjunct fragment per sample
    Mask(MaskCmdArgs),
    /// Build infilling training examples from plain sentences
    GenInfillData(GenInfillArgs),
    /// Train and save the native n-gram infilling model
    TrainNgram(TrainArgs),
    /// Mask-then-fill augmentation
    Augment(AugmentArgs),
    /// Baseline augmenters
    Baseline(BaselineArgs),
    /// Affinity and Dist-1/2 for an (original, augmented) pair
    Metrics(MetricsArgs),
    /// Seeded low-resource splits with a digest manifest
    Subsample(SubsampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    NativeNgram,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TextFormat {
    /// One whitespace-tokenized sentence per line
    Plain,
    /// Annotated corpus records; only the tokens are used
    Corpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineMethod {
    Synonym,
    Backtranslate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TranslatorKind {
    Remote,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Corpus file
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct FragmentsArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Output file; stdout when omitted
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Shortest fragment eligible for masking
    #[arg(long, default_value_t = DEFAULT_MIN_MASK_LEN)]
    pub min_mask_len: usize,
    /// Longest fragment eligible for masking
    #[arg(long, default_value_t = DEFAULT_MAX_MASK_LEN)]
    pub max_mask_len: usize,
    /// Placeholder token
    #[arg(long, default_value = DEFAULT_MASK_TOKEN)]
    pub mask_token: String,
}

impl MaskArgs {
    fn bounds(&self) -> Result<LengthBounds> {
        Ok(LengthBounds::new(self.min_mask_len, self.max_mask_len)?)
    }
}

#[derive(Debug, Args)]
pub struct MaskCmdArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub mask: MaskArgs,
}

#[derive(Debug, Args)]
pub struct GenInfillArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = TextFormat::Plain)]
    pub format: TextFormat,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value = DEFAULT_MASK_TOKEN)]
    pub mask_token: String,
}

#[derive(Debug, Args)]
pub struct NgramArgs {
    /// N-gram order
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    /// Add-k smoothing constant
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    pub smoothing: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = TextFormat::Plain)]
    pub format: TextFormat,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub ngram: NgramArgs,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Saved n-gram model; without it the native model is trained on the input corpus
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Remote service base URL
    #[arg(long, env = ENDPOINT_ENV, value_name = "URL")]
    pub endpoint: Option<String>,
    /// Concurrent requests to the remote service
    #[arg(long, default_value_t = DEFAULT_MAX_IN_FLIGHT)]
    pub max_in_flight: usize,
    /// Retries of failed remote requests
    #[arg(long, default_value_t = DEFAULT_RETRIES)]
    pub retries: usize,
    #[command(flatten)]
    pub ngram: NgramArgs,
}

impl ModelArgs {
    fn remote(&self) -> Result<RemoteClient> {
        let endpoint = self
            .endpoint
            .as_deref()
            .ok_or_else(|| Error::Config(format!("remote backend needs --endpoint or {ENDPOINT_ENV}")))?;
        let mut cfg = RemoteConfig::new(endpoint);
        cfg.max_in_flight = self.max_in_flight;
        cfg.retries = self.retries;
        Ok(RemoteClient::with_config(cfg))
    }

    fn native(&self, fallback: &Corpus) -> Result<NgramModel> {
        match &self.model {
            Some(path) => format::parse_model(&read_bytes(path)?),
            None => {
                log::info!("training order-{} n-gram model on {} sentences", self.ngram.order, fallback.len());
                Ok(train_ngram(&fallback.sentences(), self.ngram.order, self.ngram.smoothing)?)
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Training corpus
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = BackendKind::NativeNgram)]
    pub backend: BackendKind,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Augmented samples per source sample (grid 1, 3, 6, 10)
    #[arg(long, default_value_t = 1)]
    pub n_aug: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
    #[arg(long, default_value_t = DEFAULT_TOP_P)]
    pub top_p: f64,
    /// Passed to remote backends
    #[arg(long, default_value_t = DEFAULT_BEAM_SIZE)]
    pub beam_size: usize,
    /// Candidates requested per infill call
    #[arg(long, default_value_t = DEFAULT_NUM_CANDIDATES)]
    pub num_candidates: usize,
    #[arg(long, default_value_t = 1)]
    pub min_fill_len: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_FILL_LEN)]
    pub max_fill_len: usize,
    #[command(flatten)]
    pub mask: MaskArgs,
    /// Extra corpus whose triggers are banned from fills (the input's always are)
    #[arg(long, value_name = "PATH")]
    pub banned_from: Vec<PathBuf>,
    /// Declared role of the input corpus
    #[arg(long, value_enum, default_value_t = Role::Train)]
    pub role: Role,
    /// Worker threads; output order does not depend on it
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Role {
    Train,
    Dev,
    Test,
}

impl From<Role> for CorpusRole {
    fn from(r: Role) -> Self {
        match r {
            Role::Train => CorpusRole::Train,
            Role::Dev => CorpusRole::Dev,
            Role::Test => CorpusRole::Test,
        }
    }
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(value_enum)]
    pub method: BaselineMethod,
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub n_aug: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Synonym lexicon, `headword<TAB>syn1,syn2` per line (synonym)
    #[arg(long, value_name = "PATH")]
    pub lexicon: Option<PathBuf>,
    /// Per-token replacement probability (synonym)
    #[arg(long, default_value_t = DEFAULT_P_REPLACE)]
    pub p_replace: f64,
    /// Round-trip translator (backtranslate)
    #[arg(long, value_enum, default_value_t = TranslatorKind::Remote)]
    pub translator: TranslatorKind,
    /// Translation service base URL (backtranslate)
    #[arg(long, env = ENDPOINT_ENV, value_name = "URL")]
    pub endpoint: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MIN_MASK_LEN)]
    pub min_mask_len: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_MASK_LEN)]
    pub max_mask_len: usize,
    #[arg(long, value_enum, default_value_t = Role::Train)]
    pub role: Role,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Original corpus
    #[arg(long, value_name = "PATH")]
    pub orig: PathBuf,
    /// Augmented corpus; records without provenance pair with the same id
    #[arg(long, value_name = "PATH")]
    pub aug: PathBuf,
    #[arg(long, value_enum, default_value_t = BackendKind::NativeNgram)]
    pub scorer: BackendKind,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SubsampleArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// NAME=SIZE or NAME=all; repeatable
    #[arg(long = "split", value_name = "NAME=SIZE")]
    pub splits: Vec<SplitSpec>,
    /// Add the S=1000, M=4000, L=8000, F=all splits
    #[arg(long)]
    pub presets: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Role::Train)]
    pub role: Role,
}

/// Exit status for data errors. Usage errors exit with 2.
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Parses `args` (including the program name), runs the command and returns
/// the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    init_logging(cli.verbose);
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            }
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .try_init();
}

/// Index of the subcommand name, skipping global options before it.
fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Expands config-file entries into flags placed right after the subcommand,
/// skipping any flag already given on the command line.
fn apply_config(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let Some(at) = subcommand_index(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let Value::Object(root) = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))? else {
        return Err(format!("{}: config must be a JSON object", path.display()));
    };

    let cmd = Cli::command();
    let name = args[at].to_string_lossy().into_owned();
    let Some(sub) = cmd.find_subcommand(&name) else {
        return Ok(args);
    };
    let all_longs: Vec<String> = cmd
        .get_subcommands()
        .flat_map(|s| s.get_arguments().filter_map(|a| a.get_long().map(str::to_string)))
        .collect();
    let subcommands: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();

    // top-level entries first, then the subcommand's section overriding them
    let mut entries: Vec<(String, Value, bool)> = Vec::new();
    for (k, v) in &root {
        if subcommands.contains(k) {
            continue;
        }
        entries.push((k.replace('_', "-"), v.clone(), false));
    }
    if let Some(section) = root.get(&name) {
        let Value::Object(section) = section else {
            return Err(format!("config section `{name}` must be an object"));
        };
        for (k, v) in section {
            let k = k.replace('_', "-");
            entries.retain(|(e, _, _)| *e != k);
            entries.push((k, v.clone(), true));
        }
    }

    let given = |long: &str| {
        let flag = format!("--{long}");
        let prefixed = format!("--{long}=");
        args.iter().any(|a| {
            let a = a.to_string_lossy();
            a == flag || a.starts_with(&prefixed)
        })
    };
    let mut extra: Vec<OsString> = Vec::new();
    for (key, value, scoped) in entries {
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            if scoped || !all_longs.contains(&key) {
                return Err(format!("config key `{key}` is not a flag of `{name}`"));
            }
            continue;
        };
        if key == "config" || given(&key) {
            continue;
        }
        let flag = OsString::from(format!("--{key}"));
        if !arg.get_action().takes_values() {
            match value {
                Value::Bool(true) => extra.push(flag),
                Value::Bool(false) => {}
                _ => return Err(format!("config key `{key}` must be a boolean")),
            }
            continue;
        }
        let values = match &value {
            Value::Array(items) => items.iter().map(scalar).collect::<Option<Vec<_>>>(),
            v => scalar(v).map(|s| vec![s]),
        }
        .ok_or_else(|| format!("config key `{key}` must be a string, number, boolean or list"))?;
        for v in values {
            extra.push(flag.clone());
            extra.push(v.into());
        }
    }
    let mut out = args;
    out.splice(at + 1..at + 1, extra);
    Ok(out)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    format::parse_corpus(open(path)?).map_err(|e| at_path(path, e))
}

fn at_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse { line, message: format!("{}: {message}", path.display()) },
        other => other,
    }
}

fn load_sentences(path: &Path, fmt: TextFormat) -> Result<Vec<Vec<String>>> {
    match fmt {
        TextFormat::Plain => format::read_plain_sentences(open(path)?).map_err(|e| at_path(path, e)),
        TextFormat::Corpus => Ok(load_corpus(path)?.sentences()),
    }
}

/// Refuses to overwrite any of the command's inputs.
fn check_output(out: Option<&Path>, inputs: &[&Path]) -> Result<()> {
    let Some(out) = out else { return Ok(()) };
    let Ok(out) = fs::canonicalize(out) else { return Ok(()) };
    for input in inputs {
        if fs::canonicalize(input).is_ok_and(|p| p == out) {
            return Err(Error::Config(format!("output {} would overwrite an input", out.display())));
        }
    }
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => atomic_write(path, bytes),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::Config("--workers must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

pub fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Validate(a) => validate(&a),
        Command::Fragments(a) => fragments(&a),
        Command::Mask(a) => mask(&a),
        Command::GenInfillData(a) => gen_infill_data(&a),
        Command::TrainNgram(a) => train(&a),
        Command::Augment(a) => augment(&a),
        Command::Baseline(a) => baseline(&a),
        Command::Metrics(a) => metrics(&a),
        Command::Subsample(a) => subsample(&a),
    }
}

fn validate(a: &ValidateArgs) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    let (mut total, mut bad) = (0usize, 0usize);
    for rec in format::read_records(open(&a.input)?) {
        total += 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                bad += 1;
                eprintln!("{}: {e}", a.input.display());
                continue;
            }
        };
        let mut problems: Vec<String> = rec.sample.validate().iter().map(ToString::to_string).collect();
        if !seen.insert(rec.sample.id.clone()) {
            problems.push("duplicate sample id".into());
        }
        if !problems.is_empty() {
            bad += 1;
            for p in problems {
                eprintln!("{}: line {}: sample `{}`: {p}", a.input.display(), rec.line, rec.sample.id);
            }
        }
    }
    println!("{total} records, {bad} invalid");
    if bad > 0 {
        return Err(Error::Parse { line: 0, message: format!("{bad} invalid records in {}", a.input.display()) });
    }
    Ok(())
}

fn fragments(a: &FragmentsArgs) -> Result<()> {
    check_output(a.out.as_deref(), &[&a.input])?;
    let c = load_corpus(&a.input)?;
    let bytes = format::serialize_fragments(c.iter().map(|s| (s.id.as_str(), compute_adjunct_fragments(s))));
    emit(a.out.as_deref(), &bytes)
}

fn mask(a: &MaskCmdArgs) -> Result<()> {
    check_output(a.out.as_deref(), &[&a.input])?;
    let c = load_corpus(&a.input)?;
    let bounds = a.mask.bounds()?;
    let mut out = Vec::new();
    for s in &c {
        let mut rng = stream_rng(a.seed, &s.id, 0);
        match select_and_mask(s, &mut rng, bounds, &a.mask.mask_token) {
            Ok(m) => out.push(m),
            Err(e @ (CoreError::NoEligibleFragment { .. } | CoreError::PlaceholderInInput(_))) => {
                log::info!("skipping `{}`: {e}", s.id)
            }
            Err(e) => return Err(e.into()),
        }
    }
    log::info!("masked {} of {} samples", out.len(), c.len());
    emit(a.out.as_deref(), &format::serialize_masked(&out))
}

fn gen_infill_data(a: &GenInfillArgs) -> Result<()> {
    check_output(a.out.as_deref(), &[&a.input])?;
    let sentences = load_sentences(&a.input, a.format)?;
    let examples = generate_infill_training_examples(&sentences, &mut seeded(a.seed), &a.mask_token);
    emit(a.out.as_deref(), &format::serialize_training_examples(&examples))
}

fn train(a: &TrainArgs) -> Result<()> {
    check_output(a.out.as_deref(), &[&a.input])?;
    let sentences = load_sentences(&a.input, a.format)?;
    let model = train_ngram(&sentences, a.ngram.order, a.ngram.smoothing)?;
    emit(a.out.as_deref(), &format::serialize_model(&model))
}

enum Backend {
    Native(NgramModel),
    Remote(RemoteClient),
}

impl Backend {
    fn infiller(&self) -> &dyn Infiller {
        match self {
            Backend::Native(m) => m,
            Backend::Remote(r) => r,
        }
    }

    fn scorer(&self) -> &dyn Scorer {
        match self {
            Backend::Native(m) => m,
            Backend::Remote(r) => r,
        }
    }
}

fn backend(kind: BackendKind, m: &ModelArgs, fallback: &Corpus) -> Result<Backend> {
    Ok(match kind {
        BackendKind::NativeNgram => Backend::Native(m.native(fallback)?),
        BackendKind::Remote => {
            let client = m.remote()?;
            let health = client.health()?;
            log::info!("remote model `{}` at {}", health.model_id, client.endpoint());
            Backend::Remote(client)
        }
    })
}

/// Runs `f` over the samples in parallel and concatenates the results in
/// input order. Backend outages skip the sample; if every sample fails the
/// first error is returned.
fn run_batch<F>(c: &Corpus, workers: usize, f: F) -> Result<Vec<AugmentedSample>>
where
    F: Fn(&maskfill_core::AnnotatedSample) -> std::result::Result<Vec<AugmentedSample>, CoreError> + Sync,
{
    let results: Vec<_> = pool(workers)?.install(|| c.samples().par_iter().map(&f).collect());
    let mut out = Vec::new();
    let mut failures = Vec::new();
    for (s, r) in c.iter().zip(results) {
        match r {
            Ok(v) => out.extend(v),
            Err(e @ CoreError::BackendUnavailable(_)) => {
                log::warn!("skipping `{}`: {e}", s.id);
                failures.push(e);
            }
            Err(e) => return Err(e.into()),
        }
    }
    if !c.is_empty() && failures.len() == c.len() {
        return Err(failures.swap_remove(0).into());
    }
    if !failures.is_empty() {
        log::warn!("{} of {} samples skipped after backend errors", failures.len(), c.len());
    }
    Ok(out)
}

fn augment(a: &AugmentArgs) -> Result<()> {
    ensure_trainable(Some(&a.input), a.role.into())?;
    let mut inputs: Vec<&Path> = vec![&a.input];
    inputs.extend(a.banned_from.iter().map(PathBuf::as_path));
    check_output(a.out.as_deref(), &inputs)?;
    let c = load_corpus(&a.input)?;
    let mut banned = harvest_trigger_lexicon(c.iter());
    for path in &a.banned_from {
        banned.extend(harvest_trigger_lexicon(load_corpus(path)?.iter()));
    }
    let cfg = AugmentConfig {
        n_aug: a.n_aug,
        filter: FillFilterConfig::new(banned, a.min_fill_len, a.max_fill_len, &a.mask.mask_token)?,
        mask_bounds: a.mask.bounds()?,
        num_candidates: a.num_candidates,
        top_k: a.top_k,
        top_p: a.top_p,
        beam_size: a.beam_size,
        seed: a.seed,
    };
    let backend = backend(a.backend, &a.model, &c)?;
    let infiller = backend.infiller();
    let out = run_batch(&c, a.workers, |s| augment_sample(s, infiller, &cfg))?;
    log::info!("{} augmented samples from {} sources", out.len(), c.len());
    emit(a.out.as_deref(), &format::serialize_augmented(&out))
}

fn baseline(a: &BaselineArgs) -> Result<()> {
    ensure_trainable(Some(&a.input), a.role.into())?;
    let mut inputs: Vec<&Path> = vec![&a.input];
    if let Some(l) = &a.lexicon {
        inputs.push(l);
    }
    check_output(a.out.as_deref(), &inputs)?;
    if a.n_aug == 0 {
        return Err(Error::Config("--n-aug must be >= 1".into()));
    }
    let c = load_corpus(&a.input)?;
    let out = match a.method {
        BaselineMethod::Synonym => {
            let path = a.lexicon.as_deref().ok_or_else(|| Error::Config("synonym baseline needs --lexicon".into()))?;
            let lexicon = format::parse_lexicon(open(path)?).map_err(|e| at_path(path, e))?;
            run_batch(&c, a.workers, |s| {
                (0..a.n_aug).map(|j| synonym_replacement(s, &lexicon, a.p_replace, a.seed, j)).collect()
            })?
        }
        BaselineMethod::Backtranslate => {
            let bounds = LengthBounds::new(a.min_mask_len, a.max_mask_len)?;
            let translator: Box<dyn Translator> = match a.translator {
                TranslatorKind::Identity => Box::new(IdentityTranslator),
                TranslatorKind::Remote => {
                    let endpoint = a.endpoint.as_deref().ok_or_else(|| {
                        Error::Config(format!("remote translator needs --endpoint or {ENDPOINT_ENV}"))
                    })?;
                    Box::new(RemoteTranslator(RemoteClient::new(endpoint)))
                }
            };
            let translator = translator.as_ref();
            run_batch(&c, a.workers, |s| {
                let mut v = Vec::new();
                for j in 0..a.n_aug {
                    match span_backtranslation(s, translator, bounds, a.seed, j) {
                        Ok(x) => v.push(x),
                        Err(CoreError::NoEligibleFragment { .. } | CoreError::NoCandidate) => {}
                        Err(e) => return Err(e),
                    }
                }
                Ok(v)
            })?
        }
    };
    emit(a.out.as_deref(), &format::serialize_augmented(&out))
}

fn metrics(a: &MetricsArgs) -> Result<()> {
    check_output(a.out.as_deref(), &[&a.orig, &a.aug])?;
    let orig = load_corpus(&a.orig)?;
    let aug = format::parse_augmented(open(&a.aug)?).map_err(|e| at_path(&a.aug, e))?;
    let backend = backend(a.scorer, &a.model, &orig)?;
    let scorer = backend.scorer();
    let report = evaluate_pair_corpus(&orig, &aug, scorer)?;
    let bytes = match a.format {
        ReportFormat::Json => format::serialize_report(&report, &scorer.scorer_id()),
        ReportFormat::Table => format::report_table(&report).into_bytes(),
    };
    emit(a.out.as_deref(), &bytes)
}

fn subsample(a: &SubsampleArgs) -> Result<()> {
    // protected data may still be copied whole; export_experiment enforces that
    let role = match manifest_role(&a.input)? {
        Some(tagged) if tagged.is_protected() => tagged,
        _ => a.role.into(),
    };
    let c = load_corpus(&a.input)?;
    let mut specs: Vec<SplitSpec> = a.splits.iter().map(|s| SplitSpec { seed: a.seed, ..s.clone() }).collect();
    if a.presets {
        specs.extend(SplitSpec::low_resource_presets(a.seed));
    }
    let mut names = std::collections::HashSet::new();
    if let Some(dup) = specs.iter().find(|s| !names.insert(s.name.clone())) {
        return Err(Error::Config(format!("split `{}` given twice", dup.name)));
    }
    for spec in &specs {
        check_output(Some(&a.out_dir.join(format!("{}.jsonl", spec.name))), &[&a.input])?;
    }
    let manifest = export_experiment(&c, &specs, &a.out_dir, role)?;
    println!("wrote {} splits to {}", manifest.splits.len(), a.out_dir.display());
    Ok(())
}
