//! Command-line front end.
//!
//! Six subcommands cover the pipeline from data generation to model
//! inspection: `synth` writes a trajectory CSV, `dist` turns it into a
//! pairwise distance matrix (`TDM1` binary), `violations` reports
//! triangle-violation statistics of a matrix, `train` fits an
//! embedding model (`LHM1` binary) against a matrix, `eval` scores a
//! trained model's retrieval quality, and `project` lifts raw vectors
//! onto the hyperboloid.
//!
//! Conventions shared by every subcommand:
//!
//! * Settings resolve as command-line flag, then config file, then
//!   built-in default. The `--config` file is flat `key = value` text
//!   using the exact flag names; one file can hold keys for several
//!   subcommands, unknown keys are ignored.
//! * Before any output the effective settings are printed as a
//!   `# key = value` header, so a logged run can be reproduced.
//! * Numeric CSV output uses 17 significant digits and round-trips
//!   exactly; rerunning a subcommand with equal inputs gives
//!   byte-identical files regardless of `--threads`.
//! * Exit codes: 0 success, 1 usage error, 2 data or i/o error,
//!   3 training divergence.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::{evaluate, rvs_pairs, write_rvs_pairs, EvalConfig, QuerySelection};
use crate::lorentz::{cosh_project, lorentz_inner, vanilla_project, ProjectionConfig};
use crate::matrix::DistanceMatrix;
use crate::metrics::MetricKind;
use crate::synth::{gen_metric_dataset, gen_violating_dataset};
use crate::traj::{fmt_f64, load_trajectories, save_trajectories};
use crate::trainer::{EmbeddingModel, EncoderKind, LossKind, Mode, TrainConfig};
use crate::violation::{exhaustive_violations, sample_violations, ViolationStats};

#[derive(Parser)]
#[command(
    name = "trajlorentz",
    about = "Trajectory similarity, triangle violations, and Lorentzian distance learning",
    version
)]
struct Cli {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Worker threads for parallel stages; output is identical for
    /// any value. [default: all cores]
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trajectory CSV.
    Synth(SynthArgs),
    /// Compute the pairwise distance matrix of a trajectory CSV.
    Dist(DistArgs),
    /// Report triangle-violation statistics of a distance matrix.
    Violations(ViolationsArgs),
    /// Train an embedding model against a distance matrix.
    Train(TrainArgs),
    /// Score a trained model's retrieval quality.
    Eval(EvalArgs),
    /// Project raw vectors onto the hyperboloid.
    Project(ProjectArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Generator family: `violating` (triangle-violation-rich comb
    /// field) or `metric` (single-point control). [default: violating]
    #[arg(long)]
    kind: Option<String>,

    /// Trajectory count. [default: 200]
    #[arg(long)]
    n: Option<usize>,

    /// Generator seed; required. Seed 0 of the violating family
    /// starts with the exact witness trio (distances 4, 15, 9).
    #[arg(long)]
    seed: Option<u64>,

    /// Output trajectory CSV path; required.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DistArgs {
    /// Measure: dtw, sspd, edr, hausdorff, or dfrechet.
    /// [default: dtw]
    #[arg(long)]
    metric: Option<String>,

    /// EDR match threshold; required when the metric is edr.
    #[arg(long)]
    epsilon: Option<f64>,

    /// Input trajectory CSV path; required.
    #[arg(long, value_name = "PATH")]
    r#in: Option<PathBuf>,

    /// Output matrix path (TDM1 binary); required.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ViolationsArgs {
    /// Input matrix path (TDM1 binary); required.
    #[arg(long, value_name = "PATH")]
    r#in: Option<PathBuf>,

    /// Triples to sample when not exhaustive. [default: 20000]
    #[arg(long)]
    count: Option<u64>,

    /// Sampling seed. [default: 0]
    #[arg(long)]
    seed: Option<u64>,

    /// Examine every triple instead of sampling.
    #[arg(long)]
    exhaustive: bool,

    /// Optional summary CSV path (`sampled,violating,degenerate,rv,arvs`).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Optional histogram CSV path (`bin_lo,bin_hi,count`).
    #[arg(long, value_name = "PATH")]
    histogram: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Input trajectory CSV path; required.
    #[arg(long, value_name = "PATH")]
    r#in: Option<PathBuf>,

    /// Ground-truth matrix path (TDM1 binary); required.
    #[arg(long, value_name = "PATH")]
    matrix: Option<PathBuf>,

    /// Output model path (LHM1 binary); required.
    #[arg(long, value_name = "PATH")]
    model_out: Option<PathBuf>,

    /// Optional loss-log CSV path (`epoch,mean_loss`).
    #[arg(long, value_name = "PATH")]
    log_out: Option<PathBuf>,

    /// Distance mode: original, lh-vanilla, lh-cosh, or fusion-dist.
    /// [default: fusion-dist]
    #[arg(long)]
    mode: Option<String>,

    /// Embedding width. [default: 32]
    #[arg(long)]
    embed_dim: Option<usize>,

    /// Gate factor width. [default: 8]
    #[arg(long)]
    factor_dim: Option<usize>,

    /// Hyperboloid curvature parameter. [default: 1]
    #[arg(long)]
    beta: Option<f64>,

    /// Norm compression exponent of the cosh projection. [default: 4]
    #[arg(long)]
    c: Option<f64>,

    /// Clamp on the compressed norm. [default: 50]
    #[arg(long)]
    norm_clamp: Option<f64>,

    /// Loss: mse or mae. [default: mse]
    #[arg(long)]
    loss: Option<String>,

    /// SGD learning rate. [default: 0.001]
    #[arg(long)]
    learning_rate: Option<f64>,

    /// Training epochs. [default: 300]
    #[arg(long)]
    epochs: Option<usize>,

    /// Pairs per SGD batch. [default: 32]
    #[arg(long)]
    batch_pairs: Option<usize>,

    /// Nearest neighbors sampled per anchor per epoch. [default: 10]
    #[arg(long)]
    neighbors_per_anchor: Option<usize>,

    /// Random pairs sampled per anchor per epoch. [default: 10]
    #[arg(long)]
    random_pairs_per_anchor: Option<usize>,

    /// Init and sampling seed. [default: 0]
    #[arg(long)]
    seed: Option<u64>,

    /// Encoder: lookup (one row per trajectory) or gridmean (rows are
    /// grid cells, trajectories average them). [default: lookup]
    #[arg(long)]
    encoder: Option<String>,

    /// Grid cell size; required when the encoder is gridmean.
    #[arg(long)]
    cell_size: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    /// Trained model path (LHM1 binary); required.
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,

    /// Ground-truth matrix path (TDM1 binary); required.
    #[arg(long, value_name = "PATH")]
    matrix: Option<PathBuf>,

    /// Trajectory CSV path the model encodes; required.
    #[arg(long, value_name = "PATH")]
    r#in: Option<PathBuf>,

    /// Comma-separated k values for HR@k and NDCG@k.
    /// [default: 5,10,50]
    #[arg(long)]
    ks: Option<String>,

    /// Query selection: `all` or `sample:N`. [default: all]
    #[arg(long)]
    queries: Option<String>,

    /// Query sampling seed. [default: 0]
    #[arg(long)]
    seed: Option<u64>,

    /// Optional report CSV path (`stat,k,value`).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Optional paired violation-size CSV path (`rvs_true,rvs_pred`)
    /// over the ground truth's violating triples.
    #[arg(long, value_name = "PATH")]
    rvs_export: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    /// Input CSV of raw vectors, one per row, no header; required.
    #[arg(long, value_name = "PATH")]
    r#in: Option<PathBuf>,

    /// Output CSV path: projected coordinates (time-like first) plus a
    /// membership-residual column; required.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Projection: vanilla (coordinate lift) or cosh (norm-compressed).
    /// [default: cosh]
    #[arg(long)]
    projection: Option<String>,

    /// Hyperboloid curvature parameter. [default: 1]
    #[arg(long)]
    beta: Option<f64>,

    /// Norm compression exponent (cosh projection only). [default: 4]
    #[arg(long)]
    c: Option<f64>,

    /// Clamp on the compressed norm (cosh projection only).
    /// [default: 50]
    #[arg(long)]
    norm_clamp: Option<f64>,
}

/// Parsed `key = value` config file. Keys are flag names; a single
/// file may serve several subcommands, so unknown keys are kept
/// without complaint and only consulted on demand.
struct FileConfig {
    entries: BTreeMap<String, String>,
    origin: String,
}

impl FileConfig {
    fn empty() -> Self {
        FileConfig {
            entries: BTreeMap::new(),
            origin: "<none>".into(),
        }
    }

    fn load(path: &Path) -> Result<Self> {
        let origin = path.display().to_string();
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::io(&origin, e))?;
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: origin,
                    line: i as u64 + 1,
                    message: format!("expected `key = value`, got {line:?}"),
                });
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { entries, origin })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                Error::Config(format!(
                    "bad value {raw:?} for `{key}` in {}",
                    self.origin
                ))
            }),
        }
    }
}

/// Flag, then config file, then default.
fn resolve<T: FromStr>(flag: Option<T>, file: &FileConfig, key: &str, default: T) -> Result<T> {
    match flag {
        Some(v) => Ok(v),
        None => Ok(file.get(key)?.unwrap_or(default)),
    }
}

/// Flag, then config file; error when neither names the key.
fn resolve_req<T: FromStr>(flag: Option<T>, file: &FileConfig, key: &str) -> Result<T> {
    match flag {
        Some(v) => Ok(v),
        None => file.get(key)?.ok_or_else(|| {
            Error::Config(format!("missing required setting `--{key}`"))
        }),
    }
}

/// The effective-settings header every subcommand prints first.
fn print_header(command: &str, settings: &[(&str, String)]) {
    println!("# {command}");
    for (key, value) in settings {
        println!("# {key} = {value}");
    }
}

fn fmt_path(p: &Path) -> String {
    p.display().to_string()
}

fn fmt_opt_path(p: &Option<PathBuf>) -> String {
    p.as_deref().map_or_else(|| "-".into(), fmt_path)
}

fn parse_mode(name: &str) -> Result<Mode> {
    Mode::from_name(name)
}

fn parse_loss(name: &str) -> Result<LossKind> {
    LossKind::from_name(name)
}

fn parse_metric(name: &str, epsilon: Option<f64>) -> Result<MetricKind> {
    let kind = match name {
        "dtw" => MetricKind::Dtw,
        "sspd" => MetricKind::Sspd,
        "edr" => {
            let epsilon = epsilon.ok_or_else(|| {
                Error::Config("the edr metric needs `--epsilon`".into())
            })?;
            MetricKind::Edr { epsilon }
        }
        "hausdorff" => MetricKind::Hausdorff,
        "dfrechet" => MetricKind::DFrechet,
        other => {
            return Err(Error::Config(format!(
                "unknown metric {other:?}; expected dtw, sspd, edr, hausdorff, or dfrechet"
            )))
        }
    };
    kind.validate()?;
    Ok(kind)
}

fn parse_ks(text: &str) -> Result<Vec<usize>> {
    let ks: Vec<usize> = text
        .split(',')
        .map(|part| {
            part.trim().parse().map_err(|_| {
                Error::Config(format!("bad k value {part:?} in `--ks`"))
            })
        })
        .collect::<Result<_>>()?;
    if ks.is_empty() {
        return Err(Error::Config("`--ks` names no k values".into()));
    }
    Ok(ks)
}

fn parse_queries(text: &str, seed: u64) -> Result<QuerySelection> {
    if text == "all" {
        return Ok(QuerySelection::All);
    }
    if let Some(count) = text.strip_prefix("sample:") {
        let count = count.parse().map_err(|_| {
            Error::Config(format!("bad sample count in `--queries {text}`"))
        })?;
        return Ok(QuerySelection::Sample { count, seed });
    }
    Err(Error::Config(format!(
        "unknown query selection {text:?}; expected `all` or `sample:N`"
    )))
}

/// Entry point of the `trajlorentz` binary: parse, dispatch, map
/// errors to exit codes.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprint!("{e}");
            return 1;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::Config("`--threads` must be positive".into()));
        }
        // The global pool can only be sized once per process; a second
        // attempt (say, library callers running dispatch twice) keeps
        // the first size, which never changes results, only speed.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::empty(),
    };
    match cli.command {
        Command::Synth(args) => run_synth(args, &file),
        Command::Dist(args) => run_dist(args, &file),
        Command::Violations(args) => run_violations(args, &file),
        Command::Train(args) => run_train(args, &file),
        Command::Eval(args) => run_eval(args, &file),
        Command::Project(args) => run_project(args, &file),
    }
}

fn run_synth(args: SynthArgs, file: &FileConfig) -> Result<()> {
    let kind = resolve(args.kind, file, "kind", "violating".into())?;
    let n = resolve(args.n, file, "n", 200)?;
    let seed: u64 = resolve_req(args.seed, file, "seed")?;
    let out: PathBuf = resolve_req(args.out, file, "out")?;

    print_header(
        "synth",
        &[
            ("kind", kind.clone()),
            ("n", n.to_string()),
            ("seed", seed.to_string()),
            ("out", fmt_path(&out)),
        ],
    );

    let ds = match kind.as_str() {
        "violating" => gen_violating_dataset(n, seed)?,
        "metric" => gen_metric_dataset(n, seed)?,
        other => {
            return Err(Error::Config(format!(
                "unknown kind {other:?}; expected violating or metric"
            )))
        }
    };
    save_trajectories(&ds, &out)?;
    println!("wrote {} trajectories to {}", ds.len(), out.display());
    Ok(())
}

fn run_dist(args: DistArgs, file: &FileConfig) -> Result<()> {
    let metric_name = resolve(args.metric, file, "metric", "dtw".into())?;
    let epsilon = match args.epsilon {
        Some(e) => Some(e),
        None => file.get("epsilon")?,
    };
    let input: PathBuf = resolve_req(args.r#in, file, "in")?;
    let out: PathBuf = resolve_req(args.out, file, "out")?;
    let metric = parse_metric(&metric_name, epsilon)?;

    let mut settings = vec![("metric", metric_name.clone())];
    if let MetricKind::Edr { epsilon } = metric {
        settings.push(("epsilon", fmt_f64(epsilon)));
    }
    settings.push(("in", fmt_path(&input)));
    settings.push(("out", fmt_path(&out)));
    print_header("dist", &settings);

    let ds = load_trajectories(&input)?;
    let m = DistanceMatrix::compute(&ds, metric)?;
    m.save_binary(&out)?;
    println!(
        "wrote {} x {} {} matrix to {}",
        m.n(),
        m.n(),
        metric.name(),
        out.display()
    );
    Ok(())
}

fn print_violation_report(stats: &ViolationStats) {
    println!("triples examined   {}", stats.sampled);
    println!("violating          {}", stats.violating);
    println!("degenerate skipped {}", stats.degenerate);
    println!("violation rate     {}", fmt_f64(stats.rv));
    println!("mean violation     {}", fmt_f64(stats.arvs));
}

fn run_violations(args: ViolationsArgs, file: &FileConfig) -> Result<()> {
    let input: PathBuf = resolve_req(args.r#in, file, "in")?;
    let count = resolve(args.count, file, "count", 20_000)?;
    let seed = resolve(args.seed, file, "seed", 0)?;
    let exhaustive = args.exhaustive || file.get("exhaustive")?.unwrap_or(false);

    let mut settings = vec![
        ("in", fmt_path(&input)),
        ("exhaustive", exhaustive.to_string()),
    ];
    if !exhaustive {
        settings.push(("count", count.to_string()));
        settings.push(("seed", seed.to_string()));
    }
    settings.push(("out", fmt_opt_path(&args.out)));
    settings.push(("histogram", fmt_opt_path(&args.histogram)));
    print_header("violations", &settings);

    let m = DistanceMatrix::load_binary(&input)?;
    let stats = if exhaustive {
        exhaustive_violations(&m)?
    } else {
        sample_violations(&m, count, seed)?
    };
    print_violation_report(&stats);
    if let Some(path) = &args.out {
        let name = path.display().to_string();
        let f = File::create(path).map_err(|e| Error::io(&name, e))?;
        stats.write_csv(f, &name)?;
    }
    if let Some(path) = &args.histogram {
        let name = path.display().to_string();
        let f = File::create(path).map_err(|e| Error::io(&name, e))?;
        stats.histogram.write_csv(f, &name)?;
    }
    Ok(())
}

fn run_train(args: TrainArgs, file: &FileConfig) -> Result<()> {
    let input: PathBuf = resolve_req(args.r#in, file, "in")?;
    let matrix: PathBuf = resolve_req(args.matrix, file, "matrix")?;
    let model_out: PathBuf = resolve_req(args.model_out, file, "model-out")?;
    let log_out: Option<PathBuf> = match args.log_out {
        Some(p) => Some(p),
        None => file.get("log-out")?,
    };

    let defaults = TrainConfig::default();
    let mode = parse_mode(&resolve(args.mode, file, "mode", defaults.mode.name().into())?)?;
    let loss = parse_loss(&resolve(args.loss, file, "loss", "mse".into())?)?;
    let encoder_name = resolve(args.encoder, file, "encoder", "lookup".into())?;
    let cell_size = match args.cell_size {
        Some(v) => Some(v),
        None => file.get("cell-size")?,
    };
    let encoder = match encoder_name.as_str() {
        "lookup" => EncoderKind::Lookup,
        "gridmean" => {
            let cell_size = cell_size.ok_or_else(|| {
                Error::Config("the gridmean encoder needs `--cell-size`".into())
            })?;
            EncoderKind::GridMean { cell_size }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown encoder {other:?}; expected lookup or gridmean"
            )))
        }
    };
    let config = TrainConfig {
        embed_dim: resolve(args.embed_dim, file, "embed-dim", defaults.embed_dim)?,
        factor_dim: resolve(args.factor_dim, file, "factor-dim", defaults.factor_dim)?,
        beta: resolve(args.beta, file, "beta", defaults.beta)?,
        c: resolve(args.c, file, "c", defaults.c)?,
        norm_clamp: resolve(args.norm_clamp, file, "norm-clamp", defaults.norm_clamp)?,
        mode,
        loss,
        learning_rate: resolve(
            args.learning_rate,
            file,
            "learning-rate",
            defaults.learning_rate,
        )?,
        epochs: resolve(args.epochs, file, "epochs", defaults.epochs)?,
        batch_pairs: resolve(args.batch_pairs, file, "batch-pairs", defaults.batch_pairs)?,
        neighbors_per_anchor: resolve(
            args.neighbors_per_anchor,
            file,
            "neighbors-per-anchor",
            defaults.neighbors_per_anchor,
        )?,
        random_pairs_per_anchor: resolve(
            args.random_pairs_per_anchor,
            file,
            "random-pairs-per-anchor",
            defaults.random_pairs_per_anchor,
        )?,
        seed: resolve(args.seed, file, "seed", defaults.seed)?,
        encoder,
    };

    let mut settings = vec![
        ("in", fmt_path(&input)),
        ("matrix", fmt_path(&matrix)),
        ("model-out", fmt_path(&model_out)),
        ("log-out", fmt_opt_path(&log_out)),
        ("mode", config.mode.name().to_string()),
        ("embed-dim", config.embed_dim.to_string()),
        ("factor-dim", config.factor_dim.to_string()),
        ("beta", fmt_f64(config.beta)),
        ("c", fmt_f64(config.c)),
        ("norm-clamp", fmt_f64(config.norm_clamp)),
        ("loss", config.loss.name().to_string()),
        ("learning-rate", fmt_f64(config.learning_rate)),
        ("epochs", config.epochs.to_string()),
        ("batch-pairs", config.batch_pairs.to_string()),
        (
            "neighbors-per-anchor",
            config.neighbors_per_anchor.to_string(),
        ),
        (
            "random-pairs-per-anchor",
            config.random_pairs_per_anchor.to_string(),
        ),
        ("seed", config.seed.to_string()),
        ("encoder", encoder_name.clone()),
    ];
    if let EncoderKind::GridMean { cell_size } = config.encoder {
        settings.push(("cell-size", fmt_f64(cell_size)));
    }
    print_header("train", &settings);

    let ds = load_trajectories(&input)?;
    let gt = DistanceMatrix::load_binary(&matrix)?;
    let mut model = EmbeddingModel::init(&ds, config)?;
    let log = model.train(&ds, &gt)?;
    model.save(&model_out)?;
    if let Some(path) = &log_out {
        let name = path.display().to_string();
        let f = File::create(path).map_err(|e| Error::io(&name, e))?;
        log.write_csv(f, &name)?;
    }
    let final_loss = log.epoch_losses.last().copied().unwrap_or(f64::NAN);
    println!(
        "trained {} epochs, final mean loss {}, model written to {}",
        log.epoch_losses.len(),
        fmt_f64(final_loss),
        model_out.display()
    );
    Ok(())
}

fn run_eval(args: EvalArgs, file: &FileConfig) -> Result<()> {
    let model_path: PathBuf = resolve_req(args.model, file, "model")?;
    let matrix: PathBuf = resolve_req(args.matrix, file, "matrix")?;
    let input: PathBuf = resolve_req(args.r#in, file, "in")?;
    let ks_text = resolve(args.ks, file, "ks", "5,10,50".into())?;
    let queries_text = resolve(args.queries, file, "queries", "all".into())?;
    let seed = resolve(args.seed, file, "seed", 0)?;
    let ks = parse_ks(&ks_text)?;
    let queries = parse_queries(&queries_text, seed)?;

    let mut settings = vec![
        ("model", fmt_path(&model_path)),
        ("matrix", fmt_path(&matrix)),
        ("in", fmt_path(&input)),
        ("ks", ks_text.clone()),
        ("queries", queries_text.clone()),
    ];
    if matches!(queries, QuerySelection::Sample { .. }) {
        settings.push(("seed", seed.to_string()));
    }
    settings.push(("out", fmt_opt_path(&args.out)));
    settings.push(("rvs-export", fmt_opt_path(&args.rvs_export)));
    print_header("eval", &settings);

    let model = {
        let name = model_path.display().to_string();
        let f = File::open(&model_path).map_err(|e| Error::io(&name, e))?;
        EmbeddingModel::read(f, &name)?
    };
    let ds = load_trajectories(&input)?;
    let gt = DistanceMatrix::load_binary(&matrix)?;
    let cfg = EvalConfig {
        hr_ks: ks.clone(),
        ndcg_ks: ks,
        queries,
    };
    let report = evaluate(&model, &ds, &gt, &cfg)?;
    print!("{report}");
    if let Some(path) = &args.out {
        let name = path.display().to_string();
        let f = File::create(path).map_err(|e| Error::io(&name, e))?;
        report.write_csv(f, &name)?;
    }
    if let Some(path) = &args.rvs_export {
        let pairs = rvs_pairs(&model, &ds, &gt)?;
        let name = path.display().to_string();
        let f = File::create(path).map_err(|e| Error::io(&name, e))?;
        write_rvs_pairs(&pairs, f, &name)?;
        println!(
            "wrote {} violating-triple pairs to {}",
            pairs.len(),
            path.display()
        );
    }
    Ok(())
}

fn run_project(args: ProjectArgs, file: &FileConfig) -> Result<()> {
    let input: PathBuf = resolve_req(args.r#in, file, "in")?;
    let out: PathBuf = resolve_req(args.out, file, "out")?;
    let projection = resolve(args.projection, file, "projection", "cosh".into())?;
    let cfg = ProjectionConfig {
        beta: resolve(args.beta, file, "beta", 1.0)?,
        c: resolve(args.c, file, "c", 4.0)?,
        norm_clamp: resolve(args.norm_clamp, file, "norm-clamp", 50.0)?,
    };
    cfg.validate()?;
    let vanilla = match projection.as_str() {
        "vanilla" => true,
        "cosh" => false,
        other => {
            return Err(Error::Config(format!(
                "unknown projection {other:?}; expected vanilla or cosh"
            )))
        }
    };

    let mut settings = vec![
        ("in", fmt_path(&input)),
        ("out", fmt_path(&out)),
        ("projection", projection.clone()),
        ("beta", fmt_f64(cfg.beta)),
    ];
    if !vanilla {
        settings.push(("c", fmt_f64(cfg.c)));
        settings.push(("norm-clamp", fmt_f64(cfg.norm_clamp)));
    }
    print_header("project", &settings);

    let in_name = input.display().to_string();
    let mut text = String::new();
    File::open(&input)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(&in_name, e))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |field: &dyn Display| Error::Parse {
            path: in_name.clone(),
            line: i as u64 + 1,
            message: format!("bad vector component {field}"),
        };
        let row: Vec<f64> = line
            .split(',')
            .map(|part| {
                let part = part.trim();
                part.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(&format!("{part:?}")))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{in_name}: no vector rows")));
    }

    let out_name = out.display().to_string();
    let mut w = String::new();
    for row in &rows {
        let p = if vanilla {
            vanilla_project(row, cfg.beta)
        } else {
            cosh_project(row, &cfg)
        };
        // How far the lift is off the hyperboloid: <p, p> + beta,
        // zero for exact membership.
        let residual = lorentz_inner(p.coords(), p.coords()) + cfg.beta;
        let fields: Vec<String> = p
            .coords()
            .iter()
            .copied()
            .chain(std::iter::once(residual))
            .map(fmt_f64)
            .collect();
        w.push_str(&fields.join(","));
        w.push('\n');
    }
    std::fs::write(&out, w).map_err(|e| Error::io(&out_name, e))?;
    println!("projected {} vectors to {}", rows.len(), out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_file_config_parses_and_resolves() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# shared pipeline settings\nseed = 9\nmetric = sspd\n\nn = 42\n")
            .unwrap();
        let file = FileConfig::load(&path).unwrap();
        assert_eq!(resolve(None, &file, "seed", 0u64).unwrap(), 9);
        assert_eq!(resolve(Some(3u64), &file, "seed", 0).unwrap(), 3);
        assert_eq!(resolve(None, &file, "absent", 7u64).unwrap(), 7);
        assert_eq!(
            resolve_req::<String>(None, &file, "metric").unwrap(),
            "sspd"
        );
        assert!(resolve_req::<String>(None, &file, "out").is_err());
    }

    #[test]
    fn test_file_config_rejects_malformed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        std::fs::write(&path, "seed 9\n").unwrap();
        assert!(FileConfig::load(&path).is_err());
    }

    #[test]
    fn test_file_config_bad_value_names_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "n = many\n").unwrap();
        let file = FileConfig::load(&path).unwrap();
        let err = resolve(None::<usize>, &file, "n", 1).unwrap_err();
        assert!(err.to_string().contains("`n`"), "{err}");
    }

    #[test]
    fn test_parse_metric_names_and_epsilon() {
        assert_eq!(parse_metric("dtw", None).unwrap(), MetricKind::Dtw);
        assert_eq!(
            parse_metric("edr", Some(0.5)).unwrap(),
            MetricKind::Edr { epsilon: 0.5 }
        );
        assert!(parse_metric("edr", None).is_err());
        assert!(parse_metric("edr", Some(-1.0)).is_err());
        assert!(parse_metric("cosine", None).is_err());
    }

    #[test]
    fn test_parse_ks_and_queries() {
        assert_eq!(parse_ks("5,10,50").unwrap(), vec![5, 10, 50]);
        assert!(parse_ks("5,x").is_err());
        assert_eq!(parse_queries("all", 1).unwrap(), QuerySelection::All);
        assert_eq!(
            parse_queries("sample:8", 3).unwrap(),
            QuerySelection::Sample { count: 8, seed: 3 }
        );
        assert!(parse_queries("most", 0).is_err());
    }
}
