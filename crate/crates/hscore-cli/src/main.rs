//! Command-line front end for the H-score toolkit.
//!
//! One process per invocation; every subcommand is a pure function of its
//! input files, flags, and seed, and writes exactly one canonical JSON
//! document to stdout (or `--output`). Diagnostics go to stderr. Exit codes:
//! 0 success, 1 usage error, 2 data error, 3 numerical error.

mod config;
mod inputs;
mod json;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use serde::Serialize;

use hscore::curriculum::{
    cluster_tasks, percentile_alpha, relatedness_matrix, render_dot, transfer_curriculum, Merge,
};
use hscore::exponent::{mismatched_exponent, optimal_exponent, simulate_error_rate};
use hscore::linalg::DEFAULT_PSEUDO_TOL;
use hscore::pixelwise::{
    heatmap_meta, learn_palette, pixelwise_h_scores, quantize, render_pgm, render_svg,
    HeatmapMeta, PaletteConfig,
};
use hscore::spectral::exact_h_score;
use hscore::transfer::{
    rank_pairs, select_source, transferability, DenominatorMode, RankEntry, TaskFeatureSet,
};
use hscore::{h_score, Error, ErrorCategory, InverseMode};

use config::{prefer, ConfigFile};
use json::Envelope;

/// Wording attached to every transferability or ranking report.
const LINEAR_HEAD_CAVEAT: &str = "scores assume a linear downstream head; \
     features tuned for a nonlinear head can rank differently";

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

/// A CLI failure: a usage problem detected here, a computed report that
/// contains non-finite numbers, or a library error carrying its own category.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    NonFiniteReport(String),
    Lib(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            // A NaN or infinity in computed output is a numerical failure.
            CliError::NonFiniteReport(_) => 3,
            CliError::Lib(e) => match e.category() {
                ErrorCategory::Usage => 1,
                ErrorCategory::Data => 2,
                ErrorCategory::Numerical => 3,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::NonFiniteReport(msg) => write!(f, "{msg}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn write_err(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Lib(Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

// ---------------------------------------------------------------------------
// Argument surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "hscore",
    version,
    about = "H-score feature analysis: transferability, spectral optima, exponents, curricula",
    after_help = "Without a subcommand, --features and --labels compute the H-score itself.\n\
                  Exit codes: 1 usage, 2 data, 3 numerical."
)]
struct Cli {
    /// Feature matrix (CSV or XFT1 tensor) for the default H-score analysis.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Labels (one integer per line) for the default H-score analysis.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// JSON file supplying any flag of the active command; command line wins.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (0 = automatic); XFER_THREADS is the fallback.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Pseudo-inverse relative eigenvalue cutoff (conflicts with --ridge).
    #[arg(long, global = true)]
    pseudo_tol: Option<f64>,
    /// Ridge regularization strength (conflicts with --pseudo-tol).
    #[arg(long, global = true)]
    ridge: Option<f64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Transferability of source features onto a target task.
    Transfer(TransferArgs),
    /// Rank candidate source feature sets on a target task.
    Rank(RankArgs),
    /// Rank unordered pairs of candidates by their concatenated features.
    Rank2(RankArgs),
    /// Per-pixel H-scores for image-output tasks, with heatmap rendering.
    Pixelwise(PixelwiseArgs),
    /// Transfer curriculum (spanning forest + dendrogram) over tasks.
    Curriculum(CurriculumArgs),
    /// Error-exponent validation of a local hypothesis pair.
    ValidateExponent(ValidateArgs),
}

#[derive(Args)]
struct TransferArgs {
    /// Source features evaluated on the target task's samples (CSV or XFT1).
    #[arg(long)]
    features: Option<PathBuf>,
    /// Target task labels.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Denominator: exact-discrete, proxy-self, or bound-k.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Discrete target inputs, one symbol per line (exact-discrete mode).
    #[arg(long)]
    x_samples: Option<PathBuf>,
    /// The target task's own features (proxy-self mode).
    #[arg(long)]
    target_features: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    /// Candidate source, `id=path`; repeat per candidate.
    #[arg(long)]
    candidate: Vec<String>,
    /// Target task labels.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct PixelwiseArgs {
    /// Per-image feature matrix (CSV or XFT1).
    #[arg(long)]
    features: Option<PathBuf>,
    /// Ground-truth images as an XFT1 rank-4 tensor (m, H, W, channels).
    #[arg(long)]
    images: Option<PathBuf>,
    /// Palette size (classes per pixel task).
    #[arg(long)]
    n_colors: Option<usize>,
    /// Palette initialization seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the score heatmap as a binary PGM here.
    #[arg(long)]
    heatmap: Option<PathBuf>,
    /// Write the score heatmap as an SVG here.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct CurriculumArgs {
    /// Task manifest: {"tasks": [{"id", "features", "labels"}, ...]}.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Explicit affinity threshold (conflicts with --alpha-percentile).
    #[arg(long)]
    alpha: Option<f64>,
    /// Percentile of off-diagonal relatedness used as the threshold.
    #[arg(long)]
    alpha_percentile: Option<f64>,
    /// Write the curriculum as Graphviz DOT here.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Local pair file: {"p0": [...], "p1": [...], "p2": [...], "epsilon": e}.
    #[arg(long)]
    pair: Option<PathBuf>,
    /// Feature table, one row per alphabet symbol (conflicts with
    /// --random-features); columns are scored separately and simulated
    /// jointly.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Number of seeded random 1-d features for the ratio table.
    #[arg(long)]
    random_features: Option<usize>,
    /// Comma-separated strictly increasing sample sizes for the simulation.
    #[arg(long)]
    sizes: Option<String>,
    /// Monte-Carlo trials per hypothesis per size (must be >= 1).
    #[arg(long)]
    trials: Option<usize>,
    /// Seed for feature generation and the simulation.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum ModeArg {
    ExactDiscrete,
    ProxySelf,
    BoundK,
}

impl ModeArg {
    fn as_str(self) -> &'static str {
        match self {
            ModeArg::ExactDiscrete => "exact-discrete",
            ModeArg::ProxySelf => "proxy-self",
            ModeArg::BoundK => "bound-k",
        }
    }

    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "exact-discrete" => Ok(ModeArg::ExactDiscrete),
            "proxy-self" => Ok(ModeArg::ProxySelf),
            "bound-k" => Ok(ModeArg::BoundK),
            other => Err(usage(format!(
                "mode must be exact-discrete, proxy-self, or bound-k, got `{other}`"
            ))),
        }
    }
}

// ---------------------------------------------------------------------------
// Shared resolution
// ---------------------------------------------------------------------------

/// Serializable form of the inverse mode, recorded in every report.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
enum InverseConfig {
    Pseudo { rel_tol: f64 },
    Ridge { lambda: f64 },
}

struct Globals {
    inverse: InverseMode,
    inverse_json: InverseConfig,
    output: Option<PathBuf>,
}

fn resolve_inverse(
    pseudo_tol: Option<f64>,
    ridge: Option<f64>,
) -> Result<(InverseMode, InverseConfig), CliError> {
    match (pseudo_tol, ridge) {
        (Some(_), Some(_)) => Err(usage("--pseudo-tol conflicts with --ridge; pick one")),
        (Some(t), None) => Ok((
            InverseMode::Pseudo { rel_tol: t },
            InverseConfig::Pseudo { rel_tol: t },
        )),
        (None, Some(l)) => Ok((
            InverseMode::Ridge { lambda: l },
            InverseConfig::Ridge { lambda: l },
        )),
        (None, None) => Ok((
            InverseMode::Pseudo {
                rel_tol: DEFAULT_PSEUDO_TOL,
            },
            InverseConfig::Pseudo {
                rel_tol: DEFAULT_PSEUDO_TOL,
            },
        )),
    }
}

fn resolve_threads(flag: Option<usize>, cfg: Option<usize>) -> Result<usize, CliError> {
    if let Some(n) = flag.or(cfg) {
        return Ok(n);
    }
    match std::env::var("XFER_THREADS") {
        Ok(s) => s.trim().parse::<usize>().map_err(|_| {
            usage(format!(
                "XFER_THREADS must be a non-negative integer, got {s:?}"
            ))
        }),
        Err(_) => Ok(0),
    }
}

fn init_thread_pool(threads: usize) -> Result<(), CliError> {
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| usage(format!("cannot configure {threads} threads: {e}")))
}

fn emit(bytes: &[u8], output: Option<&PathBuf>) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, bytes).map_err(|e| write_err(path, e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| write_err(std::path::Path::new("<stdout>"), e)),
    }
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn main() {
    std::process::exit(real_main());
}

/// Wall-clock provenance goes to stderr so the JSON document stays
/// byte-identical across identical invocations.
fn log_completion(started: std::time::Instant) {
    let elapsed = started.elapsed().as_secs_f64();
    let unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    eprintln!("completed in {elapsed:.3}s at unix_time={unix}");
}

fn real_main() -> i32 {
    let started = std::time::Instant::now();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version print to stdout and succeed; everything else
            // is a usage error.
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => {
            log_completion(started);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.command.is_some() && (cli.features.is_some() || cli.labels.is_some()) {
        return Err(usage(
            "--features/--labels before a subcommand are ambiguous; pass them to the subcommand",
        ));
    }
    let mut cfg = ConfigFile::load(cli.config.as_deref())?;
    let pseudo_tol = prefer(cli.pseudo_tol, cfg.f64("pseudo-tol")?);
    let ridge = prefer(cli.ridge, cfg.f64("ridge")?);
    let output = prefer(cli.output.clone(), cfg.path("output")?);
    let threads = resolve_threads(cli.threads, cfg.usize("threads")?)?;
    init_thread_pool(threads)?;
    let (inverse, inverse_json) = resolve_inverse(pseudo_tol, ridge)?;
    let globals = Globals {
        inverse,
        inverse_json,
        output,
    };
    let bytes = match cli.command {
        None => {
            let features = prefer(cli.features, cfg.path("features")?)
                .ok_or_else(|| usage("--features is required (see --help)"))?;
            let labels = prefer(cli.labels, cfg.path("labels")?)
                .ok_or_else(|| usage("--labels is required (see --help)"))?;
            cfg.finish()?;
            cmd_hscore(&features, &labels, &globals)?
        }
        Some(Command::Transfer(args)) => cmd_transfer(args, &mut cfg, &globals)?,
        Some(Command::Rank(args)) => cmd_rank(args, &mut cfg, &globals, false)?,
        Some(Command::Rank2(args)) => cmd_rank(args, &mut cfg, &globals, true)?,
        Some(Command::Pixelwise(args)) => cmd_pixelwise(args, &mut cfg, &globals)?,
        Some(Command::Curriculum(args)) => cmd_curriculum(args, &mut cfg, &globals)?,
        Some(Command::ValidateExponent(args)) => cmd_validate(args, &mut cfg, &globals)?,
    };
    emit(&bytes, globals.output.as_ref())
}

/// Consumes the leftover-key check for commands that already took their keys.
fn finish_config(cfg: ConfigFile) -> Result<(), CliError> {
    cfg.finish()
}

// ---------------------------------------------------------------------------
// hscore (default command)
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct HscoreConfig {
    inverse: InverseConfig,
}

#[derive(Serialize)]
struct HscoreReportOut {
    hscore: f64,
    effective_rank: usize,
    samples: usize,
    features: usize,
    classes: usize,
}

fn cmd_hscore(
    features: &PathBuf,
    labels: &PathBuf,
    globals: &Globals,
) -> Result<Vec<u8>, CliError> {
    let (f, frec) = inputs::load_features("features", features)?;
    let (y, lrec) = inputs::load_labels("labels", labels)?;
    let report = h_score(&f, &y, globals.inverse)?;
    let out = HscoreReportOut {
        hscore: report.value,
        effective_rank: report.effective_rank,
        samples: f.n_samples(),
        features: f.n_features(),
        classes: y.class_count(),
    };
    json::to_canonical_vec(&Envelope::new(
        "hscore",
        vec![frec, lrec],
        HscoreConfig {
            inverse: globals.inverse_json.clone(),
        },
        out,
    ))
}

// ---------------------------------------------------------------------------
// transfer
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct TransferConfig {
    inverse: InverseConfig,
    mode: &'static str,
}

#[derive(Serialize)]
struct TransferOut {
    h_score: f64,
    denominator: f64,
    transferability: f64,
    exceeds_unit_range: bool,
    denominator_mode: String,
    caveat: &'static str,
}

fn cmd_transfer(
    args: TransferArgs,
    cfg: &mut ConfigFile,
    globals: &Globals,
) -> Result<Vec<u8>, CliError> {
    let features = prefer(args.features, cfg.path("features")?)
        .ok_or_else(|| usage("transfer requires --features"))?;
    let labels =
        prefer(args.labels, cfg.path("labels")?).ok_or_else(|| usage("transfer requires --labels"))?;
    let mode = match (args.mode, cfg.string("mode")?) {
        (Some(m), _) => m,
        (None, Some(s)) => ModeArg::parse(&s)?,
        (None, None) => return Err(usage("transfer requires --mode")),
    };
    let x_samples = prefer(args.x_samples, cfg.path("x-samples")?);
    let target_features = prefer(args.target_features, cfg.path("target-features")?);
    finish_config(std::mem::replace(cfg, ConfigFile::load(None)?))?;

    if mode != ModeArg::ExactDiscrete && x_samples.is_some() {
        return Err(usage("--x-samples is only used by --mode exact-discrete"));
    }
    if mode != ModeArg::ProxySelf && target_features.is_some() {
        return Err(usage("--target-features is only used by --mode proxy-self"));
    }

    let (f, frec) = inputs::load_features("features", &features)?;
    let (y, lrec) = inputs::load_labels("labels", &labels)?;
    let mut records = vec![frec, lrec];
    let report = match mode {
        ModeArg::ExactDiscrete => {
            let path = x_samples
                .ok_or_else(|| usage("--mode exact-discrete requires --x-samples"))?;
            let (xs, xrec) = inputs::load_symbols("x-samples", &path)?;
            records.push(xrec);
            transferability(
                &f,
                &y,
                DenominatorMode::ExactDiscrete { x_samples: &xs },
                globals.inverse,
            )?
        }
        ModeArg::ProxySelf => {
            let path = target_features
                .ok_or_else(|| usage("--mode proxy-self requires --target-features"))?;
            let (tf, trec) = inputs::load_features("target-features", &path)?;
            records.push(trec);
            transferability(
                &f,
                &y,
                DenominatorMode::ProxySelf {
                    target_features: &tf,
                },
                globals.inverse,
            )?
        }
        ModeArg::BoundK => transferability(&f, &y, DenominatorMode::BoundK, globals.inverse)?,
    };
    let out = TransferOut {
        h_score: report.h_score,
        denominator: report.denominator,
        transferability: report.transferability,
        exceeds_unit_range: report.exceeds_unit_range,
        denominator_mode: report.denominator_mode,
        caveat: LINEAR_HEAD_CAVEAT,
    };
    json::to_canonical_vec(&Envelope::new(
        "transfer",
        records,
        TransferConfig {
            inverse: globals.inverse_json.clone(),
            mode: mode.as_str(),
        },
        out,
    ))
}

// ---------------------------------------------------------------------------
// rank / rank2
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RankConfig {
    inverse: InverseConfig,
}

#[derive(Serialize)]
struct RankOut {
    entries: Vec<RankEntry>,
    caveat: &'static str,
}

fn cmd_rank(
    args: RankArgs,
    cfg: &mut ConfigFile,
    globals: &Globals,
    pairs: bool,
) -> Result<Vec<u8>, CliError> {
    let specs = if args.candidate.is_empty() {
        cfg.string_list("candidate")?.unwrap_or_default()
    } else {
        args.candidate
    };
    let labels = prefer(args.labels, cfg.path("labels")?)
        .ok_or_else(|| usage("ranking requires --labels"))?;
    finish_config(std::mem::replace(cfg, ConfigFile::load(None)?))?;
    if specs.is_empty() {
        return Err(usage("pass at least one --candidate id=path"));
    }

    let mut sets = Vec::with_capacity(specs.len());
    let mut records = Vec::with_capacity(specs.len() + 1);
    for spec in &specs {
        let (id, path) = inputs::parse_candidate_spec(spec).map_err(usage)?;
        let (f, rec) = inputs::load_features(&format!("candidate:{id}"), &path)?;
        sets.push(TaskFeatureSet::new(id, f));
        records.push(rec);
    }
    let (y, lrec) = inputs::load_labels("labels", &labels)?;
    records.push(lrec);
    let ranking = if pairs {
        rank_pairs(&sets, &y, globals.inverse)?
    } else {
        select_source(&sets, &y, globals.inverse)?
    };
    let out = RankOut {
        entries: ranking.entries,
        caveat: LINEAR_HEAD_CAVEAT,
    };
    json::to_canonical_vec(&Envelope::new(
        if pairs { "rank2" } else { "rank" },
        records,
        RankConfig {
            inverse: globals.inverse_json.clone(),
        },
        out,
    ))
}

// ---------------------------------------------------------------------------
// pixelwise
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PixelwiseConfig {
    inverse: InverseConfig,
    n_colors: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
    subsample_cap: usize,
}

#[derive(Serialize)]
struct PaletteOut {
    colors: usize,
    seed: u64,
    iterations: usize,
    inertia: f64,
    centers: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct PixelwiseOut {
    palette: PaletteOut,
    height: usize,
    width: usize,
    /// Row-major score map; skipped positions are null.
    scores: Vec<Vec<Option<f64>>>,
    mean: f64,
    min: f64,
    max: f64,
    skipped_count: usize,
    heatmap: HeatmapMeta,
    written: Vec<String>,
}

fn cmd_pixelwise(
    args: PixelwiseArgs,
    cfg: &mut ConfigFile,
    globals: &Globals,
) -> Result<Vec<u8>, CliError> {
    let features = prefer(args.features, cfg.path("features")?)
        .ok_or_else(|| usage("pixelwise requires --features"))?;
    let images = prefer(args.images, cfg.path("images")?)
        .ok_or_else(|| usage("pixelwise requires --images"))?;
    let n_colors = prefer(args.n_colors, cfg.usize("n-colors")?).unwrap_or(16);
    let seed = prefer(args.seed, cfg.u64("seed")?).unwrap_or(0);
    let heatmap_path = prefer(args.heatmap, cfg.path("heatmap")?);
    let svg_path = prefer(args.svg, cfg.path("svg")?);
    finish_config(std::mem::replace(cfg, ConfigFile::load(None)?))?;

    let (f, frec) = inputs::load_features("features", &features)?;
    let (imgs, irec) = inputs::load_images("images", &images)?;
    let mut palette_cfg = PaletteConfig::new(n_colors);
    palette_cfg.seed = seed;
    let palette = learn_palette(&imgs, &palette_cfg)?;
    let maps = quantize(&imgs, &palette)?;
    let report = pixelwise_h_scores(&f, &maps.view(), globals.inverse)?;
    let meta = heatmap_meta(&report, seed);

    let mut written = Vec::new();
    if let Some(path) = &heatmap_path {
        fs::write(path, render_pgm(&report)).map_err(|e| write_err(path, e))?;
        written.push(path.display().to_string());
    }
    if let Some(path) = &svg_path {
        fs::write(path, render_svg(&report)).map_err(|e| write_err(path, e))?;
        written.push(path.display().to_string());
    }

    let (height, width) = report.scores.dim();
    let scores: Vec<Vec<Option<f64>>> = (0..height)
        .map(|r| {
            (0..width)
                .map(|c| {
                    if report.skipped[[r, c]] {
                        None
                    } else {
                        Some(report.scores[[r, c]])
                    }
                })
                .collect()
        })
        .collect();
    let out = PixelwiseOut {
        palette: PaletteOut {
            colors: n_colors,
            seed,
            iterations: palette.iterations,
            inertia: palette.inertia,
            centers: palette
                .centers
                .outer_iter()
                .map(|row| row.to_vec())
                .collect(),
        },
        height,
        width,
        scores,
        mean: report.mean,
        min: report.min,
        max: report.max,
        skipped_count: report.skipped_count,
        heatmap: meta,
        written,
    };
    json::to_canonical_vec(&Envelope::new(
        "pixelwise",
        vec![frec, irec],
        PixelwiseConfig {
            inverse: globals.inverse_json.clone(),
            n_colors,
            seed,
            max_iter: palette_cfg.max_iter,
            tol: palette_cfg.tol,
            subsample_cap: palette_cfg.subsample_cap,
        },
        out,
    ))
}

// ---------------------------------------------------------------------------
// curriculum
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CurriculumConfig {
    inverse: InverseConfig,
    alpha: Option<f64>,
    alpha_percentile: Option<f64>,
}

#[derive(Serialize)]
struct EdgeOut {
    src: usize,
    dst: usize,
    src_id: String,
    dst_id: String,
    weight: f64,
    m_ij: f64,
    m_ji: f64,
}

#[derive(Serialize)]
struct CurriculumOut {
    ids: Vec<String>,
    alpha: f64,
    raw: Vec<Vec<f64>>,
    normalized: Vec<Vec<f64>>,
    edges: Vec<EdgeOut>,
    components: Vec<Vec<usize>>,
    dendrogram: Vec<Merge>,
    written: Vec<String>,
}

fn matrix_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.outer_iter().map(|row| row.to_vec()).collect()
}

fn cmd_curriculum(
    args: CurriculumArgs,
    cfg: &mut ConfigFile,
    globals: &Globals,
) -> Result<Vec<u8>, CliError> {
    let manifest = prefer(args.manifest, cfg.path("manifest")?)
        .ok_or_else(|| usage("curriculum requires --manifest"))?;
    let alpha_flag = prefer(args.alpha, cfg.f64("alpha")?);
    let percentile_flag = prefer(args.alpha_percentile, cfg.f64("alpha-percentile")?);
    let dot_path = prefer(args.dot, cfg.path("dot")?);
    finish_config(std::mem::replace(cfg, ConfigFile::load(None)?))?;
    if alpha_flag.is_some() && percentile_flag.is_some() {
        return Err(usage("--alpha conflicts with --alpha-percentile; pick one"));
    }

    let (tasks, records) = inputs::load_manifest(&manifest)?;
    let rel = relatedness_matrix(&tasks, globals.inverse)?;
    let (alpha, percentile_used) = match (alpha_flag, percentile_flag) {
        (Some(a), None) => (a, None),
        (None, pct) => {
            let p = pct.unwrap_or(2.3);
            (percentile_alpha(&rel.normalized.view(), p)?, Some(p))
        }
        (Some(_), Some(_)) => unreachable!("conflict rejected above"),
    };
    let curriculum = transfer_curriculum(&rel.normalized.view(), alpha)?;
    let merges = cluster_tasks(&rel.raw.view())?;
    let ids: Vec<String> = tasks.iter().map(|t| t.id.clone()).collect();

    let mut written = Vec::new();
    if let Some(path) = &dot_path {
        fs::write(path, render_dot(&curriculum, &ids)?).map_err(|e| write_err(path, e))?;
        written.push(path.display().to_string());
    }

    let edges = curriculum
        .edges
        .iter()
        .map(|e| EdgeOut {
            src: e.src,
            dst: e.dst,
            src_id: ids[e.src].clone(),
            dst_id: ids[e.dst].clone(),
            weight: e.weight,
            m_ij: e.m_ij,
            m_ji: e.m_ji,
        })
        .collect();
    let out = CurriculumOut {
        ids,
        alpha: curriculum.alpha,
        raw: matrix_rows(&rel.raw),
        normalized: matrix_rows(&rel.normalized),
        edges,
        components: curriculum.components,
        dendrogram: merges,
        written,
    };
    json::to_canonical_vec(&Envelope::new(
        "curriculum",
        records,
        CurriculumConfig {
            inverse: globals.inverse_json.clone(),
            alpha: alpha_flag,
            alpha_percentile: percentile_used,
        },
        out,
    ))
}

// ---------------------------------------------------------------------------
// validate-exponent
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ValidateConfig {
    inverse: InverseConfig,
    random_features: Option<usize>,
    sizes: Vec<usize>,
    trials: usize,
    seed: u64,
}

#[derive(Serialize)]
struct FeatureEntry {
    index: usize,
    predicted_exponent: f64,
    h_score: f64,
    /// `predicted / h_score`; null when the H-score is too small to divide by.
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct SimulationOut {
    /// Which statistic was simulated: the supplied table or the
    /// likelihood-ratio direction derived from the pair.
    feature: &'static str,
    sizes: Vec<usize>,
    error_rates: Vec<f64>,
    dropped: Vec<usize>,
    slope: f64,
    intercept: f64,
    trials: usize,
}

#[derive(Serialize)]
struct ValidateOut {
    epsilon: f64,
    alphabet: usize,
    optimal_exponent: f64,
    features: Vec<FeatureEntry>,
    simulation: SimulationOut,
}

fn parse_sizes(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|tok| {
            tok.trim().parse::<usize>().map_err(|_| {
                usage(format!(
                    "--sizes must be comma-separated integers, got `{}`",
                    tok.trim()
                ))
            })
        })
        .collect()
}

fn cmd_validate(
    args: ValidateArgs,
    cfg: &mut ConfigFile,
    globals: &Globals,
) -> Result<Vec<u8>, CliError> {
    let pair_path = prefer(args.pair, cfg.path("pair")?)
        .ok_or_else(|| usage("validate-exponent requires --pair"))?;
    let features_path = prefer(args.features, cfg.path("features")?);
    let random_features = prefer(args.random_features, cfg.usize("random-features")?);
    let sizes_text = prefer(args.sizes, cfg.string("sizes")?);
    let trials = prefer(args.trials, cfg.usize("trials")?).unwrap_or(1000);
    let seed = prefer(args.seed, cfg.u64("seed")?).unwrap_or(0);
    finish_config(std::mem::replace(cfg, ConfigFile::load(None)?))?;

    if trials == 0 {
        return Err(usage("--trials must be >= 1"));
    }
    if features_path.is_some() && random_features.is_some() {
        return Err(usage("--features conflicts with --random-features; pick one"));
    }
    let sizes = match sizes_text {
        Some(text) => parse_sizes(&text)?,
        None => vec![400, 800, 1200, 1600, 2000],
    };

    let (pair, prec) = inputs::load_local_pair("pair", &pair_path)?;
    let mut records = vec![prec];
    let joint = pair.detection_joint()?;
    let alphabet = pair.alphabet();

    let (table, sim_label, random_used) = match &features_path {
        Some(path) => {
            let (f, rec) = inputs::load_features("features", path)?;
            records.push(rec);
            (f.values().clone(), "file", None)
        }
        None => {
            let n = random_features.unwrap_or(20);
            if n == 0 {
                return Err(usage("--random-features must be >= 1"));
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let table = Array2::from_shape_fn((alphabet, n), |_| rng.gen_range(-1.0..1.0));
            (table, "likelihood_ratio", Some(n))
        }
    };

    let mut feature_entries = Vec::with_capacity(table.ncols());
    for j in 0..table.ncols() {
        let col = table.column(j).insert_axis(Axis(1)).to_owned();
        let predicted = mismatched_exponent(&pair, &col.view())?;
        let h = exact_h_score(&joint, &col.view(), globals.inverse)?;
        let ratio = if h > 1e-12 { Some(predicted / h) } else { None };
        feature_entries.push(FeatureEntry {
            index: j,
            predicted_exponent: predicted,
            h_score: h,
            ratio,
        });
    }

    // The simulated statistic: the supplied table as a whole, or the
    // likelihood-ratio direction, which attains the optimal exponent.
    let sim_table = match &features_path {
        Some(_) => table,
        None => {
            let mut lr = Array2::zeros((alphabet, 1));
            for x in 0..alphabet {
                lr[[x, 0]] = (pair.p1()[x] - pair.p2()[x]) / pair.p0()[x];
            }
            lr
        }
    };
    let sim = simulate_error_rate(&pair, &sim_table.view(), &sizes, trials, seed)?;

    let out = ValidateOut {
        epsilon: pair.epsilon(),
        alphabet,
        optimal_exponent: optimal_exponent(&pair),
        features: feature_entries,
        simulation: SimulationOut {
            feature: sim_label,
            sizes: sim.sizes,
            error_rates: sim.error_rates,
            dropped: sim.dropped,
            slope: sim.slope,
            intercept: sim.intercept,
            trials: sim.trials,
        },
    };
    json::to_canonical_vec(&Envelope::new(
        "validate-exponent",
        records,
        ValidateConfig {
            inverse: globals.inverse_json.clone(),
            random_features: random_used,
            sizes,
            trials,
            seed,
        },
        out,
    ))
}
