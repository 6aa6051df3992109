//! The `normprobe` command line.
//!
//! Every tunable can be given as a long flag or as a key in a
//! `key = value` file passed with `--config`; flags win over the file, the
//! file wins over built-in defaults. Each run writes its resolved
//! configuration to `effective.conf` in the output directory and echoes it
//! in the JSON bundle.

mod settings;

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::builder::{build_ppmi_space, BuildMetadata, BuilderConfig, FileCorpus, SvdMethod};
use crate::clustering::{entropy_trials, EntropyOptions, EntropyReport};
use crate::data::{align, load_embeddings, load_norms, CasePolicy, EmbeddingFormat, EmbeddingSpace, NormPaths};
use crate::error::{Error, Result};
use crate::evaluation::{loocv, CorrelationReport, FoldDiagnostic, LoocvOptions, ProbeSummary, ReportFiles};
use crate::mapping::{BatchMode, Method, TrainConfig};
use crate::table::Table;

pub use settings::{to_conf, write_atomic, Settings};

/// Name of the resolved-configuration file written next to every output.
pub const EFFECTIVE_CONF: &str = "effective.conf";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_DEGENERATE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "normprobe", version, about = "Probe word embeddings against attribute norms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Leave-one-out mapping from embeddings to norms, scored by Spearman correlation.
    Probe(ProbeArgs),
    /// Repeated k-means over aligned vectors, scored by normalized entropy against gold clusters.
    Cluster(ClusterArgs),
    /// PPMI + truncated SVD embeddings from a text corpus.
    Build(BuildArgs),
    /// Concatenate probe summaries and pivot them into a mean-correlation table.
    ReportMerge(MergeArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// `key = value` file supplying any of the long options.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Global seed from which every random stream is derived.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads: 1 runs sequentially, 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// headered, plain or auto.
    #[arg(long)]
    format: Option<EmbeddingFormat>,
    #[arg(long)]
    norms: Option<PathBuf>,
    #[arg(long)]
    domains: Option<PathBuf>,
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// sensitive or lowercase.
    #[arg(long)]
    case: Option<CasePolicy>,
    /// linear (lt) or mlp.
    #[arg(long)]
    method: Option<Method>,
    /// Row label in summary.csv; defaults to the embeddings file stem.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    adagrad_epsilon: Option<f64>,
    /// Mini-batch size; 0 trains on the full batch.
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    init_scale: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    standardize_inputs: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    normalize_targets: Option<bool>,
    /// Also write the estimated norm vectors as an embedding file.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    write_estimates: Option<bool>,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[command(flatten)]
    common: Common,
    /// Embeddings or estimates written by `probe`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    format: Option<EmbeddingFormat>,
    #[arg(long)]
    norms: Option<PathBuf>,
    #[arg(long)]
    domains: Option<PathBuf>,
    /// `word<TAB>cluster_id` gold clusters.
    #[arg(long)]
    clusters: Option<PathBuf>,
    #[arg(long)]
    case: Option<CasePolicy>,
    /// Cluster the input vectors (input) or the norm vectors themselves (norms).
    #[arg(long)]
    source: Option<ClusterSource>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Z-score every column before clustering.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    standardize: Option<bool>,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[command(flatten)]
    common: Common,
    /// Whitespace-tokenized text; blank lines separate documents.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    min_count: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Words kept regardless of frequency (comma-separated).
    #[arg(long, value_delimiter = ',')]
    include_words: Vec<String>,
    /// Norms file whose words are kept regardless of frequency.
    #[arg(long)]
    include_norms: Option<PathBuf>,
    /// auto, exact or randomized.
    #[arg(long)]
    svd: Option<SvdKind>,
    #[arg(long)]
    oversample: Option<usize>,
    #[arg(long)]
    power_iters: Option<usize>,
    /// Write a `<count> <dim>` header line.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    headered: Option<bool>,
}

#[derive(Debug, Args)]
struct MergeArgs {
    /// `key = value` file; `inputs` is a comma-separated list.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// summary.csv files or probe output directories.
    inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterSource {
    Input,
    Norms,
}

impl FromStr for ClusterSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "input" => Ok(Self::Input),
            "norms" => Ok(Self::Norms),
            other => Err(Error::InvalidArgument(format!(
                "unknown cluster source {other:?} (expected input or norms)"
            ))),
        }
    }
}

impl fmt::Display for ClusterSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Input => "input",
            Self::Norms => "norms",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SvdKind {
    Auto,
    Exact,
    Randomized,
}

impl FromStr for SvdKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "exact" => Ok(Self::Exact),
            "randomized" => Ok(Self::Randomized),
            other => Err(Error::InvalidArgument(format!(
                "unknown svd method {other:?} (expected auto, exact or randomized)"
            ))),
        }
    }
}

impl fmt::Display for SvdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Auto => "auto",
            Self::Exact => "exact",
            Self::Randomized => "randomized",
        })
    }
}

/// Resolved `probe` settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub embeddings: PathBuf,
    pub format: EmbeddingFormat,
    pub norms: PathBuf,
    pub domains: Option<PathBuf>,
    pub clusters: Option<PathBuf>,
    pub case: CasePolicy,
    pub method: Method,
    pub label: String,
    pub seed: u64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub adagrad_epsilon: f64,
    pub batch_size: usize,
    pub init_scale: f64,
    pub hidden: usize,
    pub tolerance: f64,
    pub patience: usize,
    pub standardize_inputs: bool,
    pub normalize_targets: bool,
    pub write_estimates: bool,
}

impl ProbeConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            adagrad_epsilon: self.adagrad_epsilon,
            batch: match self.batch_size {
                0 => BatchMode::Full,
                b => BatchMode::MiniBatch(b),
            },
            seed: self.seed,
            init_scale: self.init_scale,
            hidden: self.hidden,
            tolerance: self.tolerance,
            patience: self.patience,
        }
    }
}

/// Resolved `cluster` settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterConfig {
    pub input: PathBuf,
    pub format: EmbeddingFormat,
    pub norms: PathBuf,
    pub domains: Option<PathBuf>,
    pub clusters: PathBuf,
    pub case: CasePolicy,
    pub source: ClusterSource,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub standardize: bool,
}

/// Resolved `build` settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildConfig {
    pub corpus: PathBuf,
    pub window: usize,
    pub min_count: u64,
    pub dim: usize,
    pub seed: u64,
    pub include_words: Vec<String>,
    pub include_norms: Option<PathBuf>,
    pub svd: SvdKind,
    pub oversample: usize,
    pub power_iters: usize,
    pub headered: bool,
}

impl BuildConfig {
    pub fn svd_method(&self) -> SvdMethod {
        match self.svd {
            SvdKind::Auto => SvdMethod::Auto,
            SvdKind::Exact => SvdMethod::Exact,
            SvdKind::Randomized => SvdMethod::Randomized {
                oversample: self.oversample,
                power_iters: self.power_iters,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeConfig {
    pub inputs: Vec<PathBuf>,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Probe(a) => cmd_probe(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Build(a) => cmd_build(a),
        Command::ReportMerge(a) => cmd_merge(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("normprobe: error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_degenerate() {
        EXIT_DEGENERATE
    } else {
        EXIT_FAILURE
    }
}

fn threads(settings: &mut Settings, flag: Option<usize>) -> Result<usize> {
    settings.get(flag, "threads", 1)
}

/// Runs `f` sequentially (`threads == 1`) or inside a pool of the given
/// size; the flag passed to `f` says whether to parallelize.
fn with_threads<T>(threads: usize, f: impl FnOnce(bool) -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    if threads == 1 {
        return f(false);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| f(true))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "embeddings".to_owned())
}

fn resolve_probe(a: &ProbeArgs, s: &mut Settings) -> Result<ProbeConfig> {
    let d = TrainConfig::default();
    let embeddings: PathBuf = s.require(a.embeddings.clone(), "embeddings")?;
    let label = s.get(a.label.clone(), "label", file_stem(&embeddings))?;
    Ok(ProbeConfig {
        format: s.get(a.format, "format", EmbeddingFormat::Auto)?,
        norms: s.require(a.norms.clone(), "norms")?,
        domains: s.opt(a.domains.clone(), "domains")?,
        clusters: s.opt(a.clusters.clone(), "clusters")?,
        case: s.get(a.case, "case", CasePolicy::default())?,
        method: s.get(a.method, "method", Method::Linear)?,
        label,
        embeddings,
        seed: s.get(a.common.seed, "seed", 0)?,
        learning_rate: s.get(a.learning_rate, "learning_rate", d.learning_rate)?,
        epochs: s.get(a.epochs, "epochs", d.epochs)?,
        adagrad_epsilon: s.get(a.adagrad_epsilon, "adagrad_epsilon", d.adagrad_epsilon)?,
        batch_size: s.get(a.batch_size, "batch_size", 0)?,
        init_scale: s.get(a.init_scale, "init_scale", d.init_scale)?,
        hidden: s.get(a.hidden, "hidden", d.hidden)?,
        tolerance: s.get(a.tolerance, "tolerance", d.tolerance)?,
        patience: s.get(a.patience, "patience", d.patience)?,
        standardize_inputs: s.get(a.standardize_inputs, "standardize_inputs", false)?,
        normalize_targets: s.get(a.normalize_targets, "normalize_targets", false)?,
        write_estimates: s.get(a.write_estimates, "write_estimates", true)?,
    })
}

#[derive(Serialize)]
struct ProbeBundle<'a> {
    config: &'a ProbeConfig,
    summary: &'a ProbeSummary,
    missing: &'a [String],
    report: &'a CorrelationReport,
    folds: &'a [FoldDiagnostic],
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn write_outputs(out: &Path, files: &[(&str, Vec<u8>)]) -> Result<()> {
    settings::ensure_dir(out)?;
    for (name, bytes) in files {
        write_atomic(&out.join(name), bytes)?;
    }
    Ok(())
}

fn cmd_probe(a: ProbeArgs) -> Result<()> {
    let mut s = Settings::load(a.common.config.as_deref())?;
    let cfg = resolve_probe(&a, &mut s)?;
    let threads = threads(&mut s, a.common.threads)?;
    s.finish()?;
    let train = cfg.train_config();
    train.validate()?;

    let space = load_embeddings(&cfg.embeddings, cfg.format)?;
    let norms = load_norms(&NormPaths {
        norms: cfg.norms.clone(),
        domains: cfg.domains.clone(),
        clusters: cfg.clusters.clone(),
    })?;
    let data = align(&space, &norms, cfg.case)?;
    eprintln!(
        "normprobe: {} of {} norm words aligned, {} missing",
        data.len(),
        norms.len(),
        data.missing.len()
    );

    let mut opts = LoocvOptions::new(cfg.method, train);
    opts.standardize_inputs = cfg.standardize_inputs;
    opts.normalize_targets = cfg.normalize_targets;
    let result = with_threads(threads, |parallel| {
        opts.parallel = parallel;
        loocv(&data, &opts)
    })?;
    let failed = result.failed_folds();
    if failed > 0 {
        eprintln!("normprobe: warning: {failed} of {} folds failed", data.len());
    }

    let report = CorrelationReport::build(&result.estimates, &data, norms.attributes(), norms.domains())?;
    let mses: Vec<f64> = result.folds.iter().filter_map(|f| f.heldout_mse).collect();
    let summary = ProbeSummary {
        label: cfg.label.clone(),
        method: cfg.method.to_string(),
        n_words: data.len(),
        n_missing: data.missing.len(),
        failed_folds: failed,
        attribute_mean_rho: report.overall_attribute.mean,
        attributes_defined: report.overall_attribute.defined,
        attributes_excluded: report.overall_attribute.excluded,
        word_mean_rho: report.overall_word.mean,
        words_defined: report.overall_word.defined,
        words_excluded: report.overall_word.excluded,
        mean_heldout_mse: (!mses.is_empty()).then(|| mses.iter().sum::<f64>() / mses.len() as f64),
    };

    let bundle = ProbeBundle {
        config: &cfg,
        summary: &summary,
        missing: &data.missing,
        report: &report,
        folds: &result.folds,
    };
    let mut files = vec![
        (ReportFiles::ATTRIBUTE, report.attribute_csv()?.into_bytes()),
        (ReportFiles::WORD, report.word_csv()?.into_bytes()),
        (ReportFiles::DOMAIN, report.domain_csv()?.into_bytes()),
        (ReportFiles::CATEGORY, report.category_csv()?.into_bytes()),
        (
            ReportFiles::SUMMARY,
            ProbeSummary::csv(std::slice::from_ref(&summary))?.into_bytes(),
        ),
        (ReportFiles::BUNDLE, json_bytes(&bundle)?),
        (EFFECTIVE_CONF, to_conf(&cfg)?.into_bytes()),
    ];
    if cfg.write_estimates {
        files.push((ReportFiles::ESTIMATES, estimates_file(&data.words, &result.estimates)?));
    }
    write_outputs(&a.common.out, &files)?;
    eprintln!(
        "normprobe: mean attribute rho {}, mean word rho {}",
        fmt_rho(summary.attribute_mean_rho),
        fmt_rho(summary.word_mean_rho)
    );
    Ok(())
}

fn fmt_rho(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_owned(), |v| format!("{v:.4}"))
}

/// Estimated rows in embedding-file format; rows of failed folds are left
/// out.
fn estimates_file(words: &[String], estimates: &DMatrix<f64>) -> Result<Vec<u8>> {
    let keep: Vec<usize> = (0..estimates.nrows())
        .filter(|&i| estimates.row(i).iter().all(|v| v.is_finite()))
        .collect();
    let mut bytes = Vec::new();
    if keep.is_empty() {
        return Ok(bytes);
    }
    let m = DMatrix::from_fn(keep.len(), estimates.ncols(), |r, c| estimates[(keep[r], c)]);
    let space = EmbeddingSpace::new(keep.iter().map(|&i| words[i].clone()).collect(), m)?;
    space
        .write_to(&mut bytes, true)
        .map_err(|e| Error::io(ReportFiles::ESTIMATES, e))?;
    Ok(bytes)
}

fn resolve_cluster(a: &ClusterArgs, s: &mut Settings) -> Result<ClusterConfig> {
    let d = EntropyOptions::default();
    Ok(ClusterConfig {
        input: s.require(a.input.clone(), "input")?,
        format: s.get(a.format, "format", EmbeddingFormat::Auto)?,
        norms: s.require(a.norms.clone(), "norms")?,
        domains: s.opt(a.domains.clone(), "domains")?,
        clusters: s.require(a.clusters.clone(), "clusters")?,
        case: s.get(a.case, "case", CasePolicy::default())?,
        source: s.get(a.source, "source", ClusterSource::Input)?,
        k: s.get(a.k, "k", d.k)?,
        trials: s.get(a.trials, "trials", d.trials)?,
        seed: s.get(a.common.seed, "seed", 0)?,
        max_iters: s.get(a.max_iters, "max_iters", d.max_iters)?,
        standardize: s.get(a.standardize, "standardize", false)?,
    })
}

fn zscore(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() as f64;
    let mut z = m.clone();
    for mut col in z.column_iter_mut() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        col.apply(|v| *v = if sd > 0.0 { (*v - mean) / sd } else { *v - mean });
    }
    z
}

#[derive(Serialize)]
struct ClusterBundle<'a> {
    config: &'a ClusterConfig,
    words: usize,
    missing: &'a [String],
    report: &'a EntropyReport,
}

/// File names written by `cluster`.
pub const ENTROPY_CSV: &str = "entropy.csv";
pub const CLUSTER_JSON: &str = "cluster.json";

fn cmd_cluster(a: ClusterArgs) -> Result<()> {
    let mut s = Settings::load(a.common.config.as_deref())?;
    let cfg = resolve_cluster(&a, &mut s)?;
    let threads = threads(&mut s, a.common.threads)?;
    s.finish()?;

    let space = load_embeddings(&cfg.input, cfg.format)?;
    let norms = load_norms(&NormPaths {
        norms: cfg.norms.clone(),
        domains: cfg.domains.clone(),
        clusters: Some(cfg.clusters.clone()),
    })?;
    let data = align(&space, &norms, cfg.case)?;
    let gold = data
        .gold_clusters
        .clone()
        .ok_or_else(|| Error::InvalidArgument("norms carry no gold clusters".into()))?;
    let x = match cfg.source {
        ClusterSource::Input => &data.inputs,
        ClusterSource::Norms => &data.targets,
    };
    let x = if cfg.standardize { zscore(x) } else { x.clone() };
    let mut opts = EntropyOptions {
        k: cfg.k,
        trials: cfg.trials,
        seed: cfg.seed,
        max_iters: cfg.max_iters,
        parallel: false,
    };
    let report = with_threads(threads, |parallel| {
        opts.parallel = parallel;
        entropy_trials(&x, &gold, &opts)
    })?;
    let bundle = ClusterBundle {
        config: &cfg,
        words: data.len(),
        missing: &data.missing,
        report: &report,
    };
    write_outputs(
        &a.common.out,
        &[
            (ENTROPY_CSV, report.csv()?.into_bytes()),
            (CLUSTER_JSON, json_bytes(&bundle)?),
            (EFFECTIVE_CONF, to_conf(&cfg)?.into_bytes()),
        ],
    )?;
    eprintln!(
        "normprobe: {} words, k={}, mean normalized entropy {:.4} over {} trials",
        data.len(),
        report.k,
        report.overall_mean,
        report.trials
    );
    Ok(())
}

/// File names written by `build`.
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const BUILD_JSON: &str = "build.json";

fn resolve_build(a: &BuildArgs, s: &mut Settings) -> Result<BuildConfig> {
    let d = BuilderConfig::default();
    let (oversample, power_iters) = match SvdMethod::DEFAULT_RANDOMIZED {
        SvdMethod::Randomized {
            oversample,
            power_iters,
        } => (oversample, power_iters),
        _ => unreachable!("default randomized method"),
    };
    Ok(BuildConfig {
        corpus: s.require(a.corpus.clone(), "corpus")?,
        window: s.get(a.window, "window", d.window)?,
        min_count: s.get(a.min_count, "min_count", d.min_count)?,
        dim: s.get(a.dim, "dim", d.dim)?,
        seed: s.get(a.common.seed, "seed", d.svd_seed)?,
        include_words: s.list(a.include_words.clone(), "include_words"),
        include_norms: s.opt(a.include_norms.clone(), "include_norms")?,
        svd: s.get(a.svd, "svd", SvdKind::Auto)?,
        oversample: s.get(a.oversample, "oversample", oversample)?,
        power_iters: s.get(a.power_iters, "power_iters", power_iters)?,
        headered: s.get(a.headered, "headered", true)?,
    })
}

#[derive(Serialize)]
struct BuildBundle<'a> {
    config: &'a BuildConfig,
    metadata: &'a BuildMetadata,
}

fn cmd_build(a: BuildArgs) -> Result<()> {
    let mut s = Settings::load(a.common.config.as_deref())?;
    let cfg = resolve_build(&a, &mut s)?;
    threads(&mut s, a.common.threads)?;
    s.finish()?;

    let mut include = cfg.include_words.clone();
    if let Some(p) = &cfg.include_norms {
        let norms = load_norms(&NormPaths::new(p))?;
        include.extend(norms.words().iter().cloned());
    }
    let builder = BuilderConfig {
        window: cfg.window,
        min_count: cfg.min_count,
        dim: cfg.dim,
        svd_seed: cfg.seed,
        include_words: include,
    };
    let built = build_ppmi_space(&FileCorpus(cfg.corpus.clone()), &builder, cfg.svd_method())?;
    let mut embeddings = Vec::new();
    built
        .space
        .write_to(&mut embeddings, cfg.headered)
        .map_err(|e| Error::io(EMBEDDINGS_FILE, e))?;
    let bundle = BuildBundle {
        config: &cfg,
        metadata: &built.metadata,
    };
    write_outputs(
        &a.common.out,
        &[
            (EMBEDDINGS_FILE, embeddings),
            (BUILD_JSON, json_bytes(&bundle)?),
            (EFFECTIVE_CONF, to_conf(&cfg)?.into_bytes()),
        ],
    )?;
    let absent = &built.metadata.include_words_absent;
    if !absent.is_empty() {
        eprintln!("normprobe: {} included words never occur in the corpus", absent.len());
    }
    eprintln!(
        "normprobe: {} words x {} dimensions from {} tokens",
        built.metadata.vocab_size, built.metadata.dim, built.metadata.total_tokens
    );
    Ok(())
}

/// File names written by `report-merge`.
pub const MERGED_SUMMARY: &str = "summary.csv";
pub const MERGED_TABLE: &str = "table.csv";

/// Splits a summary label `group/column` at its last `/`; labels without a
/// slash have an empty group.
fn split_label(label: &str) -> (&str, &str) {
    match label.rsplit_once('/') {
        Some((g, c)) => (g, c),
        None => ("", label),
    }
}

/// Mean attribute correlations with one row per (group, method) and one
/// column per label column, all in first-appearance order.
pub fn pivot_table(rows: &[ProbeSummary]) -> Result<String> {
    let mut row_keys: Vec<(String, String)> = Vec::new();
    let mut columns: Vec<String> = Vec::new();
    let mut cells: HashMap<(usize, usize), Option<f64>> = HashMap::new();
    for r in rows {
        let (group, column) = split_label(&r.label);
        let key = (group.to_owned(), r.method.clone());
        let ri = row_keys.iter().position(|k| *k == key).unwrap_or_else(|| {
            row_keys.push(key);
            row_keys.len() - 1
        });
        let ci = columns.iter().position(|c| c == column).unwrap_or_else(|| {
            columns.push(column.to_owned());
            columns.len() - 1
        });
        if cells.insert((ri, ci), r.attribute_mean_rho).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate summary for label {:?} and method {}",
                r.label, r.method
            )));
        }
    }
    let header: Vec<&str> = ["group", "method"]
        .into_iter()
        .chain(columns.iter().map(String::as_str))
        .collect();
    let mut table = Table::new(&header);
    for (ri, (group, method)) in row_keys.iter().enumerate() {
        let mut record = vec![group.clone(), method.clone()];
        for ci in 0..columns.len() {
            record.push(match cells.get(&(ri, ci)) {
                Some(Some(v)) => format!("{v:.3}"),
                _ => "NA".to_owned(),
            });
        }
        table.row(&record)?;
    }
    table.finish()
}

fn cmd_merge(a: MergeArgs) -> Result<()> {
    let mut s = Settings::load(a.config.as_deref())?;
    let inputs: Vec<PathBuf> = s
        .list(
            a.inputs.iter().map(|p| p.to_string_lossy().into_owned()).collect(),
            "inputs",
        )
        .into_iter()
        .map(PathBuf::from)
        .collect();
    s.finish()?;
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("report-merge needs at least one summary".into()));
    }
    let mut rows = Vec::new();
    for input in &inputs {
        let path = if input.is_dir() {
            input.join(ReportFiles::SUMMARY)
        } else {
            input.clone()
        };
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let parsed = ProbeSummary::parse_csv(&text).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("{}: {m}", path.display())),
            other => other,
        })?;
        rows.extend(parsed);
    }
    let cfg = MergeConfig { inputs };
    write_outputs(
        &a.out,
        &[
            (MERGED_SUMMARY, ProbeSummary::csv(&rows)?.into_bytes()),
            (MERGED_TABLE, pivot_table(&rows)?.into_bytes()),
            (EFFECTIVE_CONF, to_conf(&cfg)?.into_bytes()),
        ],
    )?;
    eprintln!("normprobe: merged {} summaries", rows.len());
    Ok(())
}
