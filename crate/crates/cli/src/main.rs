use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use drsynth_core::assets::build_catalog;
use drsynth_core::config::{load_config, Ablation, Config};
use drsynth_core::evaluator::{curve_csv, evaluate_dirs, report_text, Interpolation};
use drsynth_core::pipeline::{augment_dataset, generate, verify, GenerateOptions};
use drsynth_core::stats::{cars_per_image_histogram, centroid_heatmap, histogram_csv, parse_grid};
use drsynth_core::{AssetCatalog, CatalogDirs};

#[derive(Parser)]
#[command(name = "drsynth", version, about = "Domain-randomized synthetic detection datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a labelled dataset.
    Generate(GenerateArgs),
    /// Apply training-time augmentations to an existing dataset.
    Augment(AugmentArgs),
    /// Objects-per-image histogram and centroid heatmap.
    Stats(StatsArgs),
    /// Score detections against ground truth.
    Evaluate(EvaluateArgs),
    /// Check a generated dataset against its manifest.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct AssetArgs {
    /// Directory of .obj car meshes (built-in fleet if omitted).
    #[arg(long)]
    cars_dir: Option<PathBuf>,
    /// Directory of .obj distractor meshes (built-in primitives if omitted).
    #[arg(long)]
    distractors_dir: Option<PathBuf>,
    /// Directory of texture images (procedural set if omitted).
    #[arg(long)]
    textures_dir: Option<PathBuf>,
    /// Directory of background images (procedural set if omitted).
    #[arg(long)]
    backgrounds_dir: Option<PathBuf>,
}

impl AssetArgs {
    fn catalog(&self, config: &Config) -> Result<AssetCatalog> {
        let dirs = CatalogDirs {
            cars: self.cars_dir.clone(),
            distractors: self.distractors_dir.clone(),
            textures: self.textures_dir.clone(),
            backgrounds: self.backgrounds_dir.clone(),
        };
        let catalog = build_catalog(&dirs, config.randomization.car_length).context("building asset catalog")?;
        if catalog.skipped_images > 0 {
            log::warn!("skipped {} unreadable images", catalog.skipped_images);
        }
        Ok(catalog)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (all cores if omitted).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "full")]
    ablation: Ablation,
    /// Also apply the training-time augmentations.
    #[arg(long)]
    augment: bool,
    #[arg(long)]
    emit_scene_specs: bool,
    #[arg(long)]
    emit_instance_masks: bool,
    #[command(flatten)]
    assets: AssetArgs,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Heatmap grid as WIDTHxHEIGHT.
    #[arg(long, default_value = "48x16")]
    grid: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "Car")]
    class: String,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground-truth label directory (or dataset root).
    #[arg(long)]
    gt: PathBuf,
    /// Detection directory, KITTI labels with a trailing score.
    #[arg(long)]
    det: PathBuf,
    #[arg(long)]
    iou: Option<f64>,
    /// Text report path; PR points go next to it as .csv.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "Car")]
    class: String,
    /// 11-point interpolated AP instead of all-point.
    #[arg(long)]
    eleven_point: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Generated dataset directory.
    #[arg(long)]
    out: PathBuf,
    /// Config to check against (the copy stored with the dataset if omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    assets: AssetArgs,
}

fn read_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => load_config(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn threads(requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn run_generate(args: GenerateArgs) -> Result<ExitCode> {
    let config = read_config(args.config.as_deref())?;
    let seed = args.seed.unwrap_or(config.seed);
    let catalog = args.assets.catalog(&config)?;
    let options = GenerateOptions {
        workers: threads(args.threads),
        ablation: args.ablation,
        augment: args.augment,
        emit_scene_specs: args.emit_scene_specs,
        emit_instance_masks: args.emit_instance_masks,
    };
    let start = std::time::Instant::now();
    let manifest = generate(&config, &catalog, seed, args.count, &args.out, &options)?;
    let secs = start.elapsed().as_secs_f64();
    println!(
        "wrote {} images to {} in {:.1}s ({:.2} images/s)",
        manifest.image_count,
        args.out.display(),
        secs,
        manifest.image_count as f64 / secs.max(1e-9)
    );
    Ok(ExitCode::SUCCESS)
}

fn run_augment(args: AugmentArgs) -> Result<ExitCode> {
    let config = read_config(args.config.as_deref())?;
    let seed = args.seed.unwrap_or(config.seed);
    let rand = &config.randomization;
    let params = config.augmentation.gated(rand.enable_photometric_aug, rand.enable_geometric_aug);
    let records = augment_dataset(&args.input, &args.out, &params, seed, threads(args.threads))?;
    println!("augmented {} images into {}", records.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn run_stats(args: StatsArgs) -> Result<ExitCode> {
    let (gw, gh) = parse_grid(&args.grid)?;
    let hist = cars_per_image_histogram(&args.dataset, &args.class)?;
    let grid = centroid_heatmap(&args.dataset, &args.class, gw, gh)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write(&args.out.join("objects_per_image.csv"), histogram_csv(&hist))?;
    write(&args.out.join("centroid_heatmap.csv"), grid.to_csv())?;
    write(&args.out.join("centroid_heatmap.pgm"), grid.to_pgm())?;
    println!(
        "{} images, {} {} boxes; outputs in {}",
        hist.iter().sum::<u64>(),
        grid.total(),
        args.class,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_evaluate(args: EvaluateArgs) -> Result<ExitCode> {
    let mut params = read_config(args.config.as_deref())?.evaluation;
    if let Some(iou) = args.iou {
        params.iou_threshold = iou;
    }
    params.validate()?;
    let interp = if args.eleven_point {
        Interpolation::ElevenPoint
    } else {
        Interpolation::AllPoint
    };
    let gt_dir = drsynth_core::stats::labels_dir(&args.gt);
    let report = evaluate_dirs(&gt_dir, &args.det, &args.class, &params, interp)?;
    let text = report_text(&report, &args.class, &params);
    print!("{text}");
    if let Some(path) = &args.report {
        write(path, &text)?;
        write(&path.with_extension("csv"), curve_csv(&report))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_verify(args: VerifyArgs) -> Result<ExitCode> {
    let config = match &args.config {
        Some(p) => Some(read_config(Some(p))?),
        None => None,
    };
    let catalog_config = match &config {
        Some(c) => c.clone(),
        None => load_config(&args.out.join(drsynth_core::pipeline::CONFIG_FILE)).unwrap_or_default(),
    };
    let catalog = args.assets.catalog(&catalog_config)?;
    let report = verify(&args.out, config.as_ref(), &catalog)?;
    print!("{}", report.summary());
    Ok(if report.is_ok() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Augment(a) => run_augment(a),
        Command::Stats(a) => run_stats(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Verify(a) => run_verify(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
