//! `histsplit` — dataset splitting from the command line.
//!
//! Subcommands: `split` (chd | random | kfold | stratified) writes a split
//! manifest for a labeled image tree, `eval` recomputes dissimilarity
//! metrics for an existing manifest, `synth` generates a synthetic dataset
//! tree from a TOML spec, and `fuse` rewrites a five-band tree as fused RGB
//! composites.
//!
//! Every stochastic operation takes an explicit `--seed`; there is no
//! environment-variable default, so a command line is a complete record of
//! a run. Failures print one machine-parsable line to stderr:
//! `error[Category]: detail`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use histsplit::baselines::{kfold, random_split, stratified_split};
use histsplit::evaluate::{evaluate_manifest, EvalConfig};
use histsplit::fusion::BandFusionParams;
use histsplit::ingest::{load_dataset, write_dataset_tree, IngestOptions, LoadReport};
use histsplit::rng::substream_seed;
use histsplit::synth::{parse_synth_config, synth_dataset};
use histsplit::{
    compute_partition_sizes, read_manifest, split_three_way, write_manifest, write_trace,
    ChannelPolicy, ChdConfig, ChdMode, Dataset, Error, HistogramConfig, Result, SplitFractions,
    SplitManifest,
};

/// Print one line to stdout like `println!`, but survive a consumer that
/// stops reading. `histsplit eval … | head -1` closes the pipe after the
/// first line; `println!` would panic on the resulting `BrokenPipe`, while
/// this treats it as the normal end of output and exits cleanly.
macro_rules! outln {
    ($($arg:tt)*) => {
        emit(format_args!($($arg)*))
    };
}

fn emit(line: std::fmt::Arguments) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_fmt(line).and_then(|()| out.write_all(b"\n")) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error[IoError]: stdout: {e}");
        std::process::exit(1);
    }
}

#[derive(Debug, Parser)]
#[command(name = "histsplit", version)]
#[command(about = "Dataset splitting by cumulative-histogram dissimilarity search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Partition a dataset tree and write a reproducible split manifest.
    #[command(subcommand)]
    Split(SplitMethod),
    /// Recompute dissimilarity metrics for an existing manifest.
    Eval(EvalArgs),
    /// Generate a synthetic dataset tree from a TOML spec.
    Synth(SynthArgs),
    /// Rewrite a five-band dataset tree as fused RGB composites.
    Fuse(FuseArgs),
}

#[derive(Debug, Subcommand)]
enum SplitMethod {
    /// Iterative search for the split with the lowest histogram dissimilarity.
    Chd(ChdArgs),
    /// Single uniform random split.
    Random(RandomArgs),
    /// K-fold cross-validation folds.
    Kfold(KfoldArgs),
    /// Class-proportional random split.
    Stratified(StratifiedArgs),
}

/// Flags shared by every split method.
#[derive(Debug, Args)]
struct InputArgs {
    /// Dataset root: one subdirectory per class label.
    #[arg(long)]
    input: PathBuf,
    /// Apply the default SWIR/RGB band fusion to five-band samples at load;
    /// samples it cannot be applied to are skipped with a warning.
    #[arg(long)]
    fusion: bool,
}

#[derive(Debug, Args)]
struct ChdArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Training fraction of the whole dataset.
    #[arg(long)]
    alpha: f64,
    /// Validation fraction of the whole dataset.
    #[arg(long)]
    beta: f64,
    /// Test fraction of the whole dataset (omit with --val-equals-test).
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Random split proposals scored per phase (S).
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    /// Samples drawn from each side per proposal (K); must fit the smaller
    /// side of both phases.
    #[arg(long)]
    k: usize,
    /// Histogram bin count over the [0, 1] pixel range.
    #[arg(long, default_value_t = 256)]
    bins: usize,
    /// Dissimilarity reduction: scalar or per-bin-l1.
    #[arg(long, default_value = "scalar")]
    mode: ChdMode,
    /// Master seed; the train-test phase derives its own stream from it.
    #[arg(long)]
    seed: u64,
    /// Reuse the validation set as the test set (the train-test phase is
    /// skipped); requires gamma = 0.
    #[arg(long)]
    val_equals_test: bool,
    /// Manifest output path.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV dissimilarity trace; the train-test phase, when it runs,
    /// writes a sibling file with `-phase2` before the extension.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RandomArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Fraction withheld as the validation set.
    #[arg(long)]
    factor: f64,
    /// Seed for the shuffle.
    #[arg(long)]
    seed: u64,
    /// Manifest output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct KfoldArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of folds.
    #[arg(long)]
    folds: usize,
    /// Seed for the shuffle.
    #[arg(long)]
    seed: u64,
    /// Manifest output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StratifiedArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Training fraction, preserved per class.
    #[arg(long)]
    alpha: f64,
    /// Validation fraction, preserved per class.
    #[arg(long)]
    beta: f64,
    /// Test fraction, preserved per class.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Seed for the per-class shuffles.
    #[arg(long)]
    seed: u64,
    /// Manifest output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Dataset root the manifest was computed on.
    #[arg(long)]
    input: PathBuf,
    /// Split manifest to evaluate; a recorded band fusion is re-applied.
    #[arg(long)]
    manifest: PathBuf,
    /// Independent K-sample draws to average over.
    #[arg(long, default_value_t = 16)]
    draws: usize,
    /// Histogram samples per draw (default: the smaller side's size).
    #[arg(long)]
    k: Option<usize>,
    /// Histogram bin count over the [0, 1] pixel range.
    #[arg(long, default_value_t = 256)]
    bins: usize,
    /// Evaluation seed, independent of the split seed.
    #[arg(long)]
    seed: u64,
    /// Optional JSON report path; a summary always prints to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// TOML spec: image shape, per-class pixel distributions, sample count.
    #[arg(long)]
    spec: PathBuf,
    /// Seed for pixel generation.
    #[arg(long)]
    seed: u64,
    /// Output dataset root.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FuseArgs {
    /// Five-band dataset root (bands B2, B3, B4, SWIR1, SWIR2).
    #[arg(long)]
    input: PathBuf,
    /// Output dataset root for the fused RGB composites.
    #[arg(long)]
    out: PathBuf,
    /// Gain on the red band (B4).
    #[arg(long, default_value_t = 2.5)]
    alpha1: f64,
    /// Gain on the green band (B3).
    #[arg(long, default_value_t = 2.5)]
    alpha2: f64,
    /// Gain on the blue band (B2).
    #[arg(long, default_value_t = 2.5)]
    alpha3: f64,
    /// SWIR activation threshold subtracted before the rectified add.
    #[arg(long, default_value_t = 0.1)]
    offset: f64,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Split(SplitMethod::Chd(a)) => split_chd(a),
        Command::Split(SplitMethod::Random(a)) => split_random(a),
        Command::Split(SplitMethod::Kfold(a)) => split_kfold(a),
        Command::Split(SplitMethod::Stratified(a)) => split_stratified(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
        Command::Fuse(a) => fuse(a),
    }
}

fn split_chd(args: ChdArgs) -> Result<()> {
    if args.val_equals_test && args.gamma != 0.0 {
        return Err(Error::InvalidConfig(
            "--val-equals-test needs gamma = 0 (the validation set doubles as the test set)".into(),
        ));
    }
    if !args.val_equals_test && args.gamma == 0.0 {
        return Err(Error::InvalidConfig(
            "gamma = 0 leaves no test set; pass --gamma or --val-equals-test".into(),
        ));
    }
    let (dataset, fusion) = load_input(&args.input)?;
    let global = SplitFractions::new(args.alpha, args.beta, args.gamma)?;
    let sizes = compute_partition_sizes(dataset.n(), &global)?;
    let hist = histogram_config(args.bins)?;

    // Phase 1 carves the validation set off the whole dataset; its train
    // side keeps the future train + test samples (m + q of n). Phase 2
    // re-expresses (alpha, gamma) relative to that subset, so the composed
    // sizes land exactly on the whole-dataset floor rule.
    let m1 = sizes.m + sizes.q;
    let phase1 = ChdConfig {
        iterations: args.iterations,
        k: args.k,
        fractions: phase_fractions(m1, sizes.p, dataset.n(), args.alpha + args.gamma, args.beta)?,
        hist,
        mode: args.mode,
        seed: args.seed,
    };
    let phase2 = if args.val_equals_test {
        None
    } else {
        Some(ChdConfig {
            iterations: args.iterations,
            k: args.k,
            fractions: phase_fractions(
                sizes.m,
                sizes.q,
                m1,
                args.alpha / (args.alpha + args.gamma),
                args.gamma / (args.alpha + args.gamma),
            )?,
            hist,
            mode: args.mode,
            // The stream right after phase 1's S iteration streams, so the
            // manifest's single seed reproduces both phases.
            seed: substream_seed(args.seed, args.iterations as u64),
        })
    };

    let split = split_three_way(&dataset, &phase1, phase2.as_ref())?;
    let manifest = SplitManifest::from_chd(
        &split,
        &dataset,
        &global,
        &phase1,
        phase2.as_ref(),
        fusion.as_ref(),
    );
    write_manifest(&manifest, &args.out)?;
    if let Some(tp) = &args.trace {
        write_trace(&split.phase1.trace, tp)?;
        if let Some(p2) = &split.phase2 {
            write_trace(&p2.trace, &phase2_trace_path(tp))?;
        }
        outln!("trace={}", tp.display());
    }

    print_sizes(&manifest);
    outln!(
        "best_d={} best_iteration={}",
        split.phase1.best_d,
        split.phase1.best_iteration
    );
    if let Some(p2) = &split.phase2 {
        outln!(
            "phase2_best_d={} phase2_best_iteration={}",
            p2.best_d,
            p2.best_iteration
        );
    }
    outln!("manifest={}", args.out.display());
    Ok(())
}

fn split_random(args: RandomArgs) -> Result<()> {
    let (dataset, fusion) = load_input(&args.input)?;
    let assignment = random_split(&dataset, args.factor, args.seed)?;
    let manifest = SplitManifest::from_random(
        &assignment,
        &dataset,
        args.factor,
        args.seed,
        fusion.as_ref(),
    );
    write_manifest(&manifest, &args.out)?;
    print_sizes(&manifest);
    outln!("manifest={}", args.out.display());
    Ok(())
}

fn split_kfold(args: KfoldArgs) -> Result<()> {
    let (dataset, fusion) = load_input(&args.input)?;
    let folds = kfold(&dataset, args.folds, args.seed)?;
    let manifest = SplitManifest::from_kfold(&folds, &dataset, args.seed, fusion.as_ref());
    write_manifest(&manifest, &args.out)?;
    outln!("samples={} folds={}", dataset.n(), args.folds);
    outln!("manifest={}", args.out.display());
    Ok(())
}

fn split_stratified(args: StratifiedArgs) -> Result<()> {
    let (dataset, fusion) = load_input(&args.input)?;
    let fractions = SplitFractions::new(args.alpha, args.beta, args.gamma)?;
    let assignment = stratified_split(&dataset, &fractions, args.seed)?;
    let manifest = SplitManifest::from_stratified(
        &assignment,
        &dataset,
        &fractions,
        args.seed,
        fusion.as_ref(),
    );
    write_manifest(&manifest, &args.out)?;
    print_sizes(&manifest);
    outln!("manifest={}", args.out.display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let manifest = read_manifest(&args.manifest)?;
    let fuse = manifest
        .fusion
        .as_ref()
        .map(|f| f.to_params())
        .transpose()?;
    let report = load_dataset(&args.input, &IngestOptions { fuse })?;
    warn_skipped(&report);
    let config = EvalConfig {
        hist: histogram_config(args.bins)?,
        draws: args.draws,
        k: args.k,
        seed: args.seed,
    };
    let result = evaluate_manifest(&manifest, &report.dataset, &config)?;
    for row in &result.rows {
        outln!(
            "strategy={} pair={} k={} draws={} chd_scalar={:.6}±{:.6} \
             chd_per_bin={:.6}±{:.6} ks={:.6}±{:.6}",
            row.strategy,
            row.pair,
            row.k,
            row.draws,
            row.chd_scalar_mean,
            row.chd_scalar_sd,
            row.chd_per_bin_mean,
            row.chd_per_bin_sd,
            row.ks_mean,
            row.ks_sd,
        );
    }
    if let Some(out) = &args.out {
        let json = serde_json::to_string_pretty(&result).expect("report serialization cannot fail");
        fs::write(out, json + "\n").map_err(|e| io_err(out, e))?;
        outln!("report={}", out.display());
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let text = fs::read_to_string(&args.spec).map_err(|e| io_err(&args.spec, e))?;
    let config = parse_synth_config(&text)?;
    let dataset = synth_dataset(&config.spec(), config.n_per_class, args.seed)?;
    write_dataset_tree(&args.out, &dataset)?;
    outln!(
        "samples={} classes={} out={}",
        dataset.n(),
        config.classes.len(),
        args.out.display()
    );
    Ok(())
}

fn fuse(args: FuseArgs) -> Result<()> {
    let params = BandFusionParams::new(args.alpha1, args.alpha2, args.alpha3, args.offset)?;
    let report = load_dataset(&args.input, &IngestOptions { fuse: Some(params) })?;
    warn_skipped(&report);
    write_dataset_tree(&args.out, &report.dataset)?;
    outln!(
        "samples={} skipped={} out={}",
        report.dataset.n(),
        report.skipped.len(),
        args.out.display()
    );
    Ok(())
}

/// Load a split input tree, printing skip warnings; returns the fusion
/// parameters actually applied so manifests can record them.
fn load_input(args: &InputArgs) -> Result<(Dataset, Option<BandFusionParams>)> {
    let fusion = args.fusion.then(BandFusionParams::default);
    let report = load_dataset(&args.input, &IngestOptions { fuse: fusion })?;
    warn_skipped(&report);
    Ok((report.dataset, fusion))
}

fn warn_skipped(report: &LoadReport) {
    for (path, reason) in &report.skipped {
        eprintln!("warning: skipped {}: {reason}", path.display());
    }
}

fn histogram_config(bins: usize) -> Result<HistogramConfig> {
    HistogramConfig::new(bins, 0.0, 1.0, ChannelPolicy::Pooled)
}

/// Two-way fractions for one search phase over `n` samples, aiming for
/// exact sizes (a, b). Quotients of the user's decimal fractions can land an
/// ulp under the intended rational (0.6/0.8 sits just below 0.75) and then
/// floor one sample short, so each fraction is the smallest double whose
/// floor-rule size hits its target. Should that pair round to a sum just
/// over 1, the unadjusted quotients (`fa`, `fb`) are used instead — sizes
/// may then differ from the whole-dataset targets by one, which the
/// manifest records faithfully.
fn phase_fractions(a: usize, b: usize, n: usize, fa: f64, fb: f64) -> Result<SplitFractions> {
    SplitFractions::two_way(fraction_hitting(a, n), fraction_hitting(b, n))
        .or_else(|_| SplitFractions::two_way(fa, fb))
}

/// Smallest f64 fraction f with floor(f·n) = t. Starts at t/n; if division
/// rounding lands the product just under t, walks up an ulp at a time.
/// (t + 0.5)/n provably floors to t, so the walk is a few steps at most.
fn fraction_hitting(t: usize, n: usize) -> f64 {
    let mut f = t as f64 / n as f64;
    while (f * n as f64).floor() < t as f64 {
        f = f.next_up();
    }
    f
}

/// `splits/run.csv` → `splits/run-phase2.csv`.
fn phase2_trace_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match path.extension() {
        Some(ext) => path.with_file_name(format!("{stem}-phase2.{}", ext.to_string_lossy())),
        None => path.with_file_name(format!("{stem}-phase2")),
    }
}

fn print_sizes(manifest: &SplitManifest) {
    if let Some(sizes) = &manifest.sizes {
        outln!(
            "train={} val={} test={} unassigned={}",
            sizes.train,
            sizes.val,
            sizes.test,
            manifest.unassigned_ids.len()
        );
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}
