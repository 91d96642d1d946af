//! `weakstil`: weak-label TIL scoring pipeline.
//!
//! Every command validates its flags before touching the filesystem,
//! writes outputs under `--out` with fixed names, and is byte-for-byte
//! reproducible for a given seed. Environment variables are never
//! consulted. Exit codes: 0 success, 1 validation error, 2 runtime
//! error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use weakstil::grid::{sweep_learning_rates, sweep_regs, select_best, GridSpec};
use weakstil::heatmap::{render, write_ppm};
use weakstil::io;
use weakstil::metrics::{auc, mse, pearson_r, r_squared, EvalRecord, EvalReport, ScorePairs};
use weakstil::model::forward;
use weakstil::pipeline::{run_cv, run_eval, run_fold, run_grid_to_dir, write_dataset};
use weakstil::splits::stratified_kfold;
use weakstil::synth::{generate, SynthConfig};
use weakstil::train::binarize;
use weakstil::{Error, HeadKind, Result, SplitPlan, TileGeometry, TrainConfig};

#[derive(Parser)]
#[command(name = "weakstil", version, about = "Weak-label TIL scoring on tile feature bags")]
struct Cli {
    /// Worker threads for cv and grid (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with a planted scoring head.
    Synth(SynthArgs),
    /// Write a stratified patient-level k-fold split plan.
    Split(SplitArgs),
    /// Train a single fold and write its checkpoint, log, and reports.
    Train(TrainArgs),
    /// Run full cross-validation and write per-fold plus summary reports.
    Cv(CvArgs),
    /// Sweep the learning-rate x L2 grid and report per-cell AUC.
    Grid(GridArgs),
    /// Score a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Evaluate detection-count predictions against manifest labels.
    Baseline(BaselineArgs),
    /// Render per-tile score heatmaps as PPM images.
    Heatmap(HeatmapArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Number of bags to generate.
    #[arg(long, default_value_t = 200)]
    bags: usize,
    /// Feature dimension.
    #[arg(long, default_value_t = 32)]
    h_dim: usize,
    #[arg(long, default_value_t = 100)]
    tiles_min: usize,
    #[arg(long, default_value_t = 400)]
    tiles_max: usize,
    /// Gaussian sd added to the planted label.
    #[arg(long, default_value_t = 0.0)]
    label_noise: f64,
    /// Stratum proportions as name:weight pairs, e.g. lumA:0.6,basal:0.4.
    #[arg(long)]
    strata: Option<String>,
    /// Planted head kind.
    #[arg(long, default_value = "linear")]
    head: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    fit: FitArgs,
    /// Fold index to train (0-based).
    #[arg(long)]
    fold: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    fit: FitArgs,
    /// Also report the standard error of the mean.
    #[arg(long)]
    sem: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    fit: FitArgs,
    /// Comma-separated learning rates, strictly decreasing
    /// (default: the 8-value sweep).
    #[arg(long)]
    lrs: Option<String>,
    /// Comma-separated L2 strengths, strictly decreasing
    /// (default: the 6-value sweep).
    #[arg(long)]
    regs: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    bags: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BaselineArgs {
    /// CSV of slide_id,num_tils,num_tb_tiles from an external detector.
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct HeatmapArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Directory of .bag files.
    #[arg(long)]
    bags: PathBuf,
    /// Comma-separated slide ids to render.
    #[arg(long)]
    slides: String,
    /// Pixels per tile.
    #[arg(long, default_value_t = 8)]
    scale: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Dataset location plus the split plan, shared by train/cv/grid.
#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    bags: PathBuf,
    /// Reuse an existing split plan CSV instead of deriving one from
    /// the manifest with --k and --seed.
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    k: usize,
}

/// Optimization flags, defaults matching the reference protocol.
#[derive(Args)]
struct FitArgs {
    #[arg(long, default_value = "linear")]
    head: String,
    /// Hidden width for the two-layer heads.
    #[arg(long, default_value_t = 128)]
    hidden: usize,
    #[arg(long, default_value_t = 5e-3)]
    lr: f64,
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    /// Per-step tile subsample cap.
    #[arg(long)]
    subsample: Option<usize>,
    /// Label binarization threshold for AUC.
    #[arg(long, default_value_t = 0.2)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl FitArgs {
    fn to_config(&self) -> Result<TrainConfig> {
        let kind: HeadKind = self.head.parse()?;
        let mut config = TrainConfig::new(kind, self.lr, self.l2);
        config.hidden = self.hidden;
        config.epochs = self.epochs;
        config.subsample = self.subsample;
        config.binarize_threshold = self.threshold;
        config.seed = self.seed;
        config.validate()?;
        Ok(config)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be >= 1");
            return ExitCode::from(1);
        }
        // ignore failure: the global pool can only be set once
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(args) => cmd_synth(args),
        Command::Split(args) => cmd_split(args),
        Command::Train(args) => cmd_train(args),
        Command::Cv(args) => cmd_cv(args),
        Command::Grid(args) => cmd_grid(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Baseline(args) => cmd_baseline(args),
        Command::Heatmap(args) => cmd_heatmap(args),
    }
}

fn parse_strata(text: &str) -> Result<Vec<(String, f64)>> {
    text.split(',')
        .map(|part| {
            let (name, weight) = part
                .split_once(':')
                .ok_or_else(|| Error::validation(format!("bad stratum spec: {part}")))?;
            let weight: f64 = weight
                .parse()
                .map_err(|_| Error::validation(format!("bad stratum weight: {part}")))?;
            Ok((name.to_string(), weight))
        })
        .collect()
}

fn parse_float_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::validation(format!("bad {what} value: {v}")))
        })
        .collect()
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let mut config = SynthConfig::new(args.bags, args.h_dim, args.seed);
    config.tiles_min = args.tiles_min;
    config.tiles_max = args.tiles_max;
    config.label_noise_sd = args.label_noise;
    config.planted_kind = args.head.parse()?;
    if let Some(spec) = &args.strata {
        config.strata = parse_strata(spec)?;
    }
    let (bags, planted) = generate(&config)?;
    write_dataset(&bags, &args.out)?;
    io::write_checkpoint(&planted, &args.out.join("planted_checkpoint.bin"))?;
    println!("wrote {} bags under {}", bags.len(), args.out.display());
    Ok(())
}

fn patients_of(manifest: &Path) -> Result<Vec<(String, String)>> {
    let rows = io::parse_manifest(&std::fs::read_to_string(manifest)?)?;
    let mut seen = std::collections::BTreeSet::new();
    Ok(rows
        .into_iter()
        .filter(|r| seen.insert(r.patient_id.clone()))
        .map(|r| (r.patient_id, r.stratum))
        .collect())
}

fn cmd_split(args: SplitArgs) -> Result<()> {
    let patients = patients_of(&args.manifest)?;
    let plan = stratified_kfold(&patients, args.k, args.seed)?;
    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join("split_plan.csv");
    io::atomic_write(&path, io::split_plan_csv(&plan).as_bytes())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_plan(data: &DataArgs, seed: u64) -> Result<SplitPlan> {
    match &data.split {
        Some(path) => io::parse_split_plan(&std::fs::read_to_string(path)?),
        None => stratified_kfold(&patients_of(&data.manifest)?, data.k, seed),
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let config = args.fit.to_config()?;
    let bags = io::load_dataset(&args.data.manifest, &args.data.bags)?;
    let plan = load_plan(&args.data, args.fit.seed)?;
    if args.fold >= plan.k {
        return Err(Error::validation(format!(
            "fold {} out of range for k={}",
            args.fold, plan.k
        )));
    }
    std::fs::create_dir_all(&args.out)?;
    let outcome = run_fold(&bags, &plan, args.fold, &config, &args.out)?;
    println!(
        "fold {}: best epoch {} val auc {:.4}",
        outcome.fold, outcome.best_epoch, outcome.best_val_auc
    );
    Ok(())
}

fn cmd_cv(args: CvArgs) -> Result<()> {
    let config = args.fit.to_config()?;
    let bags = io::load_dataset(&args.data.manifest, &args.data.bags)?;
    let plan = load_plan(&args.data, args.fit.seed)?;
    let summary = run_cv(&bags, &plan, &config, &args.out, args.sem)?;
    print!("{}", summary.summary_csv(args.sem));
    Ok(())
}

fn cmd_grid(args: GridArgs) -> Result<()> {
    let base = args.fit.to_config()?;
    let mut spec = GridSpec {
        learning_rates: sweep_learning_rates(),
        regs: sweep_regs(),
        base,
    };
    // grid default: cap tiles at 500 per step unless told otherwise
    if args.fit.subsample.is_none() {
        spec.base.subsample = Some(500);
    }
    if let Some(lrs) = &args.lrs {
        spec.learning_rates = parse_float_list(lrs, "learning rate")?;
    }
    if let Some(regs) = &args.regs {
        spec.regs = parse_float_list(regs, "l2")?;
    }
    let bags = io::load_dataset(&args.data.manifest, &args.data.bags)?;
    let plan = load_plan(&args.data, args.fit.seed)?;
    let report = run_grid_to_dir(&spec, &plan, &bags, &args.out)?;
    let (lr, l2) = select_best(&report)?;
    println!("best cell: lr={lr:e} l2={l2:e}");
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let head = io::read_checkpoint(&args.checkpoint)?;
    let bags = io::load_dataset(&args.manifest, &args.bags)?;
    let report = run_eval(&head, &bags, args.threshold, &args.out)?;
    print!("{}", io::summary_csv(&report));
    Ok(())
}

/// UndefinedMetric means "report as absent", anything else is fatal.
fn optional(result: Result<f64>) -> Result<Option<f64>> {
    match result {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn cmd_baseline(args: BaselineArgs) -> Result<()> {
    let detections = io::parse_detections(
        &std::fs::read_to_string(&args.detections)?,
        TileGeometry::default(),
    )?;
    let rows = io::parse_manifest(&std::fs::read_to_string(&args.manifest)?)?;
    let labels: std::collections::BTreeMap<&str, f64> =
        rows.iter().map(|r| (r.slide_id.as_str(), r.stil_fraction)).collect();

    let mut records = Vec::with_capacity(detections.len());
    for det in &detections {
        let label = labels.get(det.slide_id.as_str()).ok_or_else(|| {
            Error::validation(format!("slide {} not in manifest", det.slide_id))
        })?;
        records.push(EvalRecord {
            slide_id: det.slide_id.clone(),
            true_label: *label,
            predicted: weakstil::tb_til_percent(det),
        });
    }
    let truth: Vec<f64> = records.iter().map(|r| r.true_label).collect();
    let predicted: Vec<f64> = records.iter().map(|r| r.predicted).collect();
    let classes: Vec<_> = truth.iter().map(|&t| binarize(t, args.threshold)).collect();
    let pairs = ScorePairs::new(truth, predicted.clone())?;
    let report = EvalReport {
        auc: optional(auc(&predicted, &classes))?,
        pearson_r: optional(pearson_r(&pairs))?,
        r2: optional(r_squared(&pairs))?,
        mse: mse(&pairs),
        records,
    };
    std::fs::create_dir_all(&args.out)?;
    io::atomic_write(&args.out.join("predictions.csv"), io::predictions_csv(&report).as_bytes())?;
    io::atomic_write(&args.out.join("summary.csv"), io::summary_csv(&report).as_bytes())?;
    print!("{}", io::summary_csv(&report));
    Ok(())
}

fn cmd_heatmap(args: HeatmapArgs) -> Result<()> {
    if args.scale == 0 {
        return Err(Error::validation("scale must be >= 1"));
    }
    let head = io::read_checkpoint(&args.checkpoint)?;
    std::fs::create_dir_all(&args.out)?;
    for slide in args.slides.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bag = io::read_bag(&io::bag_path(&args.bags, slide))?;
        let pred = forward(&head, &bag)?;
        let canvas = render(&bag, &pred.tile_scores, args.scale)?;
        let path = args.out.join(format!("{slide}.ppm"));
        write_ppm(&canvas, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
