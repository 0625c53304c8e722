use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};

use wiredepth::camera::{sample_hemisphere_views, DEFAULT_HALF_WIDTH, DEFAULT_RESOLUTION};
use wiredepth::complexity::{score, AprConfig};
use wiredepth::depth::{
    read_depth_file, read_mask_file, write_depth_file, write_mask_file, DEFAULT_Z_FAR, DEFAULT_Z_NEAR,
};
use wiredepth::diffusion::{
    load_model, necker_fixture, save_model, train_denoiser, two_mode_dataset, two_mode_experiment, ConditionTensor,
    DenoiserConfig, DiffusionSchedule, OutputParam, TinyDenoiser, TrainConfig, TwoModeConfig,
};
use wiredepth::metrics::{aggregate, evaluate_images, AggregationMode};
use wiredepth::partial::{bfs_partial_mask_with, CoverageMeasure};
use wiredepth::pipeline::{
    assign_splits, cmd_benchmark, cmd_dataset, cmd_fit, list_shapes, load_shape, load_training_pairs, read_camera,
    read_manifest, read_split_csv, sample_to_files, split_counts, write_benchmark_inputs, write_benchmark_tables,
    write_mean_baseline, write_split_csv, PartialPolicy, PipelineError, RunConfig, Split, MANIFEST_FILE,
    OUTPUT_ROOT_ENV,
};
use wiredepth::reconstruct::FitConfig;
use wiredepth::render::DEFAULT_STROKE_RADIUS;
use wiredepth::{rasterize, DisparityConfig, OrthoCamera, Vec3};

#[derive(Parser)]
#[command(name = "wiredepth", version, about = "Wireframe sketch to depth toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render one shape from one view to mask, disparity and camera files.
    Render(RenderCmd),
    /// Render a directory of shapes into a training corpus with a manifest.
    Dataset(DatasetCmd),
    /// Assign shapes to train/val/test.
    Split(SplitCmd),
    /// Simulate a partially drawn sketch by BFS edge reveal.
    Mask(MaskCmd),
    /// Accidental pixel ratio and curve complexity of rendered views.
    Score(ScoreCmd),
    /// Compare predicted disparity PNGs with ground truth.
    Eval(EvalCmd),
    /// Evaluate K predictions per isometric benchmark view.
    Benchmark(BenchmarkCmd),
    /// Lift a disparity map to a point cloud and fit a line wireframe.
    Fit(FitCmd),
    /// Toy conditional diffusion model.
    #[command(subcommand)]
    Diffuse(DiffuseCmd),
}

#[derive(Args, Clone)]
struct RenderArgs {
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
    #[arg(long, default_value_t = DEFAULT_STROKE_RADIUS)]
    stroke_radius: f64,
    #[arg(long, default_value_t = DEFAULT_HALF_WIDTH)]
    half_width: f64,
    #[arg(long, default_value_t = DEFAULT_Z_NEAR)]
    z_near: f64,
    #[arg(long, default_value_t = DEFAULT_Z_FAR)]
    z_far: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl RenderArgs {
    fn run_config(&self) -> RunConfig {
        RunConfig {
            resolution: self.resolution,
            stroke_radius: self.stroke_radius,
            half_width: self.half_width,
            z_near: self.z_near,
            z_far: self.z_far,
            seed: self.seed,
            jobs: self.jobs,
            ..Default::default()
        }
    }

    fn disparity(&self) -> Result<DisparityConfig, PipelineError> {
        Ok(DisparityConfig::new(self.z_near, self.z_far)?)
    }
}

#[derive(Args)]
struct RenderCmd {
    #[arg(long)]
    shape: PathBuf,
    /// View direction `x,y,z`; a random hemisphere view when omitted.
    #[arg(long, value_parser = parse_vec3)]
    view: Option<Vec3>,
    #[arg(long, env = OUTPUT_ROOT_ENV, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    render: RenderArgs,
}

#[derive(Args)]
struct DatasetCmd {
    #[arg(long)]
    shapes: PathBuf,
    /// `shape_id,split` CSV; splits are hashed from shape ids when omitted.
    #[arg(long)]
    split_file: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    views: usize,
    #[arg(long, default_value_t = 0.1)]
    zoom_fraction: f64,
    #[arg(long, default_value_t = 40)]
    zoom_min_complexity: u64,
    /// `training`, `none`, or a fixed reveal fraction.
    #[arg(long, default_value = "training", value_parser = parse_policy)]
    partial: PartialPolicy,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    #[arg(long, default_value_t = 0.05)]
    max_skip_fraction: f64,
    /// Leave out shapes with fewer edges than this.
    #[arg(long, default_value_t = 0)]
    min_edges: usize,
    #[arg(long, env = OUTPUT_ROOT_ENV, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    render: RenderArgs,
}

#[derive(Args)]
struct SplitCmd {
    /// Directory of shape files, or a text file with one id per line.
    #[arg(long)]
    shapes: PathBuf,
    #[arg(long, default_value = "0.9,0.05,0.05", value_parser = parse_ratios)]
    ratios: [f64; 3],
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MaskCmd {
    #[arg(long)]
    shape: PathBuf,
    /// Camera JSON as written by `render`.
    #[arg(long)]
    camera: PathBuf,
    #[arg(long)]
    k: f64,
    #[arg(long, default_value_t = false)]
    edge_coverage: bool,
    #[arg(long, env = OUTPUT_ROOT_ENV, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    render: RenderArgs,
}

#[derive(Args)]
struct ScoreCmd {
    #[arg(long)]
    shape: PathBuf,
    /// Camera JSON; otherwise `--views` random hemisphere views.
    #[arg(long)]
    camera: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    views: usize,
    #[arg(long, default_value_t = 0.01)]
    delta_occ: f64,
    #[command(flatten)]
    render: RenderArgs,
}

#[derive(Args)]
struct EvalCmd {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    /// One or more predictions of the same view.
    #[arg(long, required = true)]
    pred: Vec<PathBuf>,
}

#[derive(Args)]
struct BenchmarkCmd {
    #[arg(long)]
    shapes: PathBuf,
    /// Only the `test` shapes of this split CSV; all shapes when omitted.
    #[arg(long)]
    split_file: Option<PathBuf>,
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long, default_value_t = 5)]
    draws: usize,
    /// Write the constant mean-disparity baseline into `--predictions` first.
    #[arg(long, default_value_t = false)]
    baseline: bool,
    /// Also write the ground-truth masks, disparities and cameras here.
    #[arg(long)]
    write_inputs: Option<PathBuf>,
    #[arg(long, default_value = "model")]
    model: String,
    #[arg(long, env = OUTPUT_ROOT_ENV, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    render: RenderArgs,
}

#[derive(Args)]
struct FitCmd {
    #[arg(long)]
    depth: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    camera: PathBuf,
    #[arg(long, default_value_t = DEFAULT_STROKE_RADIUS)]
    stroke_radius: f64,
    /// Split tolerance in pixel footprints.
    #[arg(long, default_value_t = 1.5)]
    split_tolerance: f64,
    #[arg(long, env = OUTPUT_ROOT_ENV, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum DiffuseCmd {
    /// Train a denoiser on a dataset's train split or on the Necker fixture.
    Train(TrainCmd),
    /// Draw samples for one sketch.
    Sample(SampleCmd),
    /// Mode-collapse versus mode-selection experiment on the Necker cube.
    TwoMode(TwoModeCmd),
}

#[derive(Args)]
struct TrainCmd {
    /// Dataset root holding `manifest.jsonl`.
    #[arg(long, conflicts_with = "necker")]
    dataset: Option<PathBuf>,
    #[arg(long, default_value_t = false)]
    necker: bool,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 200)]
    schedule_steps: usize,
    #[arg(long, default_value = "128,128", value_delimiter = ',')]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 12_000)]
    steps: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 5e-2)]
    lr: f64,
    #[arg(long, default_value_t = 5.0)]
    clip: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SampleCmd {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long, requires = "partial_mask")]
    partial: Option<PathBuf>,
    #[arg(long, requires = "partial")]
    partial_mask: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    draws: usize,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "sample")]
    stem: String,
    #[arg(long, env = OUTPUT_ROOT_ENV, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct TwoModeCmd {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    match parse_floats(s)?[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err("expected x,y,z".into()),
    }
}

fn parse_ratios(s: &str) -> Result<[f64; 3], String> {
    match parse_floats(s)?[..] {
        [a, b, c] => Ok([a, b, c]),
        _ => Err("expected train,val,test".into()),
    }
}

fn parse_policy(s: &str) -> Result<PartialPolicy, String> {
    match s {
        "training" => Ok(PartialPolicy::Training),
        "none" => Ok(PartialPolicy::None),
        k => k
            .parse()
            .map(|k| PartialPolicy::Fixed { k })
            .map_err(|_| format!("expected training, none or a fraction, got {k:?}")),
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("json output")
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    std::fs::write(path, json(value)).map_err(|e| PipelineError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(path: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(path).map_err(|e| PipelineError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn camera_for(args: &RenderArgs, view: Option<Vec3>) -> Result<OrthoCamera, PipelineError> {
    match view {
        Some(v) => OrthoCamera::looking(v, args.half_width, args.resolution, args.resolution)
            .map_err(|e| PipelineError::Data(e.to_string())),
        None => Ok(sample_hemisphere_views(1, args.seed, args.half_width, args.resolution).remove(0)),
    }
}

fn render(cmd: RenderCmd) -> Result<(), PipelineError> {
    let g = load_shape(&cmd.shape)?;
    let cam = camera_for(&cmd.render, cmd.view)?;
    let bundle = rasterize(&g, &cam, cmd.render.stroke_radius, &cmd.render.disparity()?)?;
    create_dir(&cmd.out)?;
    write_mask_file(&cmd.out.join("mask.png"), &bundle.mask)?;
    write_depth_file(&cmd.out.join("depth.png"), &bundle.disparity)?;
    write_json(&cmd.out.join("camera.json"), &cam)?;
    println!("{} foreground pixels -> {}", bundle.foreground(), cmd.out.display());
    Ok(())
}

fn dataset(cmd: DatasetCmd) -> Result<(), PipelineError> {
    let cfg = RunConfig {
        views: cmd.views,
        zoom_fraction: cmd.zoom_fraction,
        zoom_min_complexity: cmd.zoom_min_complexity,
        partial: cmd.partial,
        split_seed: cmd.split_seed,
        output_root: cmd.out.clone(),
        max_skip_fraction: cmd.max_skip_fraction,
        min_edges: cmd.min_edges,
        ..cmd.render.run_config()
    };
    let splits = match &cmd.split_file {
        Some(p) => Some(read_split_csv(File::open(p).map_err(|e| PipelineError::Io {
            path: p.clone(),
            source: e,
        })?)?),
        None => None,
    };
    create_dir(&cfg.output_root)?;
    let summary = cmd_dataset(&cfg, &cmd.shapes, splits.as_ref())?;
    println!(
        "{} entries from {} shapes ({} with partial depth, {} skipped, {} filtered) -> {}",
        summary.entries.len(),
        summary.shapes,
        summary.with_partial(),
        summary.skipped.len(),
        summary.filtered,
        summary.manifest.display()
    );
    if summary.skip_fraction() > cfg.max_skip_fraction {
        return Err(PipelineError::Data(format!(
            "skipped {:.1}% of shapes, above the {:.1}% limit",
            100.0 * summary.skip_fraction(),
            100.0 * cfg.max_skip_fraction
        )));
    }
    Ok(())
}

fn shape_ids(source: &Path) -> Result<Vec<String>, PipelineError> {
    if source.is_dir() {
        return Ok(list_shapes(source)?.into_iter().map(|s| s.id).collect());
    }
    let text = std::fs::read_to_string(source).map_err(|e| PipelineError::Io {
        path: source.to_path_buf(),
        source: e,
    })?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

fn split(cmd: SplitCmd) -> Result<(), PipelineError> {
    let ids = shape_ids(&cmd.shapes)?;
    let rows = assign_splits(&ids, &cmd.ratios, cmd.seed)?;
    let counts = split_counts(rows.len(), &cmd.ratios)?;
    match &cmd.out {
        Some(p) => write_split_csv(
            File::create(p).map_err(|e| PipelineError::Io {
                path: p.clone(),
                source: e,
            })?,
            &rows,
        )?,
        None => write_split_csv(std::io::stdout().lock(), &rows)?,
    }
    eprintln!("train {} / val {} / test {}", counts[0], counts[1], counts[2]);
    Ok(())
}

fn mask(cmd: MaskCmd) -> Result<(), PipelineError> {
    let g = load_shape(&cmd.shape)?;
    let cam = read_camera(&cmd.camera)?;
    let bundle = rasterize(&g, &cam, cmd.render.stroke_radius, &cmd.render.disparity()?)?;
    let measure = if cmd.edge_coverage {
        CoverageMeasure::Edges
    } else {
        CoverageMeasure::Pixels
    };
    let pair = bfs_partial_mask_with(&bundle, &g, cmd.k, cmd.render.seed, measure)?;
    create_dir(&cmd.out)?;
    write_depth_file(&cmd.out.join("partial.png"), &pair.partial)?;
    write_mask_file(&cmd.out.join("partialmask.png"), &pair.mask)?;
    println!(
        "revealed {} of {} edges, coverage {:.4}, {} restarts",
        pair.revealed.len(),
        g.edges().len(),
        pair.coverage,
        pair.restarts
    );
    Ok(())
}

fn score_cmd(cmd: ScoreCmd) -> Result<(), PipelineError> {
    let g = load_shape(&cmd.shape)?;
    let cams = match &cmd.camera {
        Some(p) => vec![read_camera(p)?],
        None => sample_hemisphere_views(cmd.views, cmd.render.seed, cmd.render.half_width, cmd.render.resolution),
    };
    let apr = AprConfig {
        delta_occ: cmd.delta_occ,
        ..Default::default()
    };
    let disparity = cmd.render.disparity()?;
    for cam in cams {
        let bundle = rasterize(&g, &cam, cmd.render.stroke_radius, &disparity)?;
        println!("{}", serde_json::to_string(&score(&bundle, &g, &apr))?);
    }
    Ok(())
}

fn eval(cmd: EvalCmd) -> Result<(), PipelineError> {
    let gt = read_depth_file(&cmd.gt)?;
    let mask = read_mask_file(&cmd.mask)?;
    let draws = cmd
        .pred
        .iter()
        .map(|p| Ok(evaluate_images(&read_depth_file(p)?, &gt, &mask)?))
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let groups = [draws.clone()];
    let out = serde_json::json!({
        "draws": draws,
        "average": aggregate(&groups, AggregationMode::Average)?.per_sample[0],
        "best": aggregate(&groups, AggregationMode::Best)?.per_sample[0],
    });
    println!("{}", json(&out));
    Ok(())
}

fn benchmark(cmd: BenchmarkCmd) -> Result<(), PipelineError> {
    let cfg = cmd.render.run_config();
    let ids: Vec<String> = match &cmd.split_file {
        Some(p) => read_split_csv(File::open(p).map_err(|e| PipelineError::Io {
            path: p.clone(),
            source: e,
        })?)?
        .into_iter()
        .filter(|(_, s)| *s == Split::Test)
        .map(|(id, _)| id)
        .collect(),
        None => list_shapes(&cmd.shapes)?.into_iter().map(|s| s.id).collect(),
    };
    if let Some(dir) = &cmd.write_inputs {
        let views = write_benchmark_inputs(&cfg, &cmd.shapes, &ids, dir)?;
        info!("wrote {} ground-truth views to {}", views.len(), dir.display());
    }
    if cmd.baseline {
        write_mean_baseline(&cfg, &cmd.shapes, &ids, &cmd.predictions, cmd.draws)?;
    }
    let report = cmd_benchmark(&cfg, &cmd.shapes, &ids, &cmd.predictions, cmd.draws)?;
    write_benchmark_tables(&report, &cmd.out, &cmd.model)?;
    println!(
        "{} viewpoints, {} evaluated: NMAE average {:.4} best {:.4} -> {}",
        report.viewpoints,
        report.evaluated.len(),
        report.average.nmae.mean,
        report.best.nmae.mean,
        cmd.out.display()
    );
    if report.missing_fraction() > 0.01 {
        return Err(PipelineError::Data(format!(
            "{} prediction files missing ({:.1}%)",
            report.missing.len(),
            100.0 * report.missing_fraction()
        )));
    }
    Ok(())
}

fn fit(cmd: FitCmd) -> Result<(), PipelineError> {
    let cfg = FitConfig {
        split_tolerance: cmd.split_tolerance,
        ..FitConfig::for_stroke_radius(cmd.stroke_radius)
    };
    let s = cmd_fit(&cmd.depth, &cmd.mask, &cmd.camera, &cfg, &cmd.out)?;
    println!(
        "{} points -> {} vertices, {} edges; residual mean {:.3} max {:.3} px",
        s.points, s.vertices, s.edges, s.mean_residual, s.max_residual
    );
    Ok(())
}

fn diffuse_train(cmd: TrainCmd) -> Result<(), PipelineError> {
    let (data, disparity) = if cmd.necker {
        let fx = necker_fixture(16, false)?;
        let disparity = fx.bundle.disparity.config;
        (two_mode_dataset(&fx, 64, cmd.seed), disparity)
    } else {
        let root = cmd
            .dataset
            .ok_or_else(|| PipelineError::Data("pass --dataset or --necker".into()))?;
        let entries = read_manifest(&root.join(MANIFEST_FILE))?;
        let data = load_training_pairs(&root, &entries, Split::Train)?;
        let disparity = DisparityConfig::default();
        (data, disparity)
    };
    let first = data
        .first()
        .ok_or_else(|| PipelineError::Data("no training pairs".into()))?;
    let (w, h) = (first.target.width(), first.target.height());
    let config = DenoiserConfig::global(w, h, &[], &cmd.hidden).with_output(OutputParam::Sample);
    let mut net = TinyDenoiser::new(config, cmd.seed)?;
    let schedule = DiffusionSchedule::scaled_linear(cmd.schedule_steps)?;
    let train = TrainConfig {
        steps: cmd.steps,
        batch: cmd.batch,
        learning_rate: cmd.lr,
        clip_norm: Some(cmd.clip),
        seed: cmd.seed,
    };
    info!("training {} parameters on {} pairs of {w}x{h}", net.param_count(), data.len());
    let report = train_denoiser(&mut net, &data, &schedule, &train)?;
    let tail = (cmd.steps / 10).max(1);
    save_model(&cmd.model, &net, cmd.schedule_steps)?;
    println!(
        "loss {:.4} -> {:.4} ({} z-range {:?}) -> {}",
        report.head_mean(tail),
        report.tail_mean(tail),
        cmd.steps,
        (disparity.z_near, disparity.z_far),
        cmd.model.display()
    );
    Ok(())
}

fn diffuse_sample(cmd: SampleCmd) -> Result<(), PipelineError> {
    let (net, header) = load_model(&cmd.model)?;
    let schedule = DiffusionSchedule::scaled_linear(header.schedule_steps)?;
    let sketch = read_mask_file(&cmd.mask)?;
    let (cond, disparity) = match (&cmd.partial, &cmd.partial_mask) {
        (Some(p), Some(m)) => {
            let partial = read_depth_file(p)?;
            let cfg = partial.config;
            (ConditionTensor::new(sketch, partial.values, read_mask_file(m)?)?, cfg)
        }
        _ => (ConditionTensor::sketch_only(sketch), DisparityConfig::default()),
    };
    let paths = sample_to_files(&net, &schedule, &cond, cmd.draws, cmd.seed, cmd.stride, disparity, &cmd.out, &cmd.stem)?;
    println!("wrote {} samples to {}", paths.len(), cmd.out.display());
    Ok(())
}

fn diffuse_two_mode(cmd: TwoModeCmd) -> Result<(), PipelineError> {
    let mut cfg = TwoModeConfig {
        seed: cmd.seed,
        ..Default::default()
    };
    if let Some(s) = cmd.steps {
        cfg.diffusion.steps = s;
    }
    if let Some(n) = cmd.samples {
        cfg.samples = n;
    }
    let report = two_mode_experiment(&cfg)?;
    println!("{}", json(&report));
    if report.free.fraction_near_mode() < 0.8 || report.anchored.fraction_a() < 0.95 {
        warn!("mode selection below the expected rates");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Render(c) => render(c),
        Command::Dataset(c) => dataset(c),
        Command::Split(c) => split(c),
        Command::Mask(c) => mask(c),
        Command::Score(c) => score_cmd(c),
        Command::Eval(c) => eval(c),
        Command::Benchmark(c) => benchmark(c),
        Command::Fit(c) => fit(c),
        Command::Diffuse(DiffuseCmd::Train(c)) => diffuse_train(c),
        Command::Diffuse(DiffuseCmd::Sample(c)) => diffuse_sample(c),
        Command::Diffuse(DiffuseCmd::TwoMode(c)) => diffuse_two_mode(c),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {
            std::io::stdout().flush().ok();
            ExitCode::SUCCESS
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
