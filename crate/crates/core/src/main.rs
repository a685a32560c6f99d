use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crbridge::canny::{canny, CannyConfig};
use crbridge::data::dataset::{self, Manifest};
use crbridge::data::synth::{generate_sequence_with, SceneConfig};
use crbridge::data::{normalize_depth, pgm, resize_bilinear, CameraIntrinsics, FramePair};
use crbridge::features::{evaluate_pairs, report_csv, EvalMode, EvalReport, REPORT_HEADER};
use crbridge::generator::GeneratorWeights;
use crbridge::persist::{self, load_checkpoint, read_run_config, Role, RunConfig};
use crbridge::training::{TrainConfig, Trainer};
use crbridge::{Error, GrayImage};

const STATE_FILE: &str = "train_state.bin";
const LOSS_FILE: &str = "loss.csv";
const CHECKPOINT_DIR: &str = "checkpoints";

#[derive(Parser)]
#[command(
    name = "crbridge",
    version,
    about = "Common representations for camera and LiDAR depth images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Image,
    Depth,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic driving sequence as PGM frames plus a manifest.
    GenerateData {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        frames: usize,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 320)]
        width: usize,
        #[arg(long, default_value_t = 160)]
        height: usize,
    },
    /// Train both generators; writes checkpoints, training state and loss.csv.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Continue from the training state in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Map one image to its CR with a trained generator.
    Infer {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Input kind; must match the checkpoint's role.
        #[arg(long, value_enum, default_value = "image")]
        kind: Kind,
        /// Depth mapped to full intensity for depth inputs, in meters.
        #[arg(long, default_value_t = 60.0)]
        max_range: f64,
    },
    /// Feature-matching evaluation over consecutive frame pairs.
    Eval {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long, default_value = "raw")]
        mode: String,
        /// Frame distance within a pair; 0 matches each frame with itself.
        #[arg(long)]
        offset: Option<usize>,
        #[arg(long)]
        checkpoint_image: Option<PathBuf>,
        #[arg(long)]
        checkpoint_depth: Option<PathBuf>,
        /// Report CSV whose first row supplies the distance normalizer.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Report path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Canny edge map of a grayscale PGM.
    Edges {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        low: f32,
        #[arg(long, default_value_t = 0.15)]
        high: f32,
        #[arg(long, default_value_t = 1.4)]
        sigma: f32,
    },
}

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Exit {
    Usage = 2,
    Numeric = 3,
    Corrupt = 4,
}

struct Failure {
    code: Exit,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NonFinite { .. } | Error::InsufficientCorrespondences(_) => Exit::Numeric,
            Error::Corrupt { .. } | Error::Format(_) => Exit::Corrupt,
            Error::Shape(_) | Error::InvalidArgument(_) | Error::Config(_) | Error::Io { .. } => Exit::Usage,
        };
        let message = match e {
            Error::Corrupt { path, reason } => format!("corrupt checkpoint or artifact {}: {reason}", path.display()),
            Error::Config(problems) => format!("invalid config:\n  {}", problems.join("\n  ")),
            other => other.to_string(),
        };
        Failure { code, message }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: Exit::Usage,
        message: message.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn init_threads() -> CmdResult {
    let Ok(raw) = std::env::var("CRBRIDGE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("CRBRIDGE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(format!("cannot size thread pool: {e}")))
}

fn run_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        Some(p) => Ok(read_run_config(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    Ok(persist::write_atomic(path, bytes)?)
}

fn generate_data(seed: u64, frames: usize, out_dir: &Path, width: usize, height: usize) -> CmdResult {
    let intrinsics = CameraIntrinsics::centered(width, height);
    let scene = SceneConfig {
        seed,
        num_frames: frames,
        ..SceneConfig::default()
    };
    let rendered = generate_sequence_with(&scene, &intrinsics)?;
    let manifest = Manifest {
        seed,
        frames,
        intrinsics,
        scene,
    };
    dataset::write_dataset(out_dir, &manifest, &rendered)?;
    eprintln!("wrote {frames} frames to {}", out_dir.display());
    Ok(())
}

/// Frames normalized with `max_range` and resized to `size` when given.
fn load_pairs(data_dir: &Path, max_range: f64, size: Option<(usize, usize)>) -> Result<Vec<FramePair>, Failure> {
    if !data_dir.join(dataset::FRAMES_DIR).is_dir() {
        return Err(usage(format!("no dataset at {}", data_dir.display())));
    }
    let frames = dataset::load_frames(data_dir)?;
    Ok(frames
        .iter()
        .map(|f| f.to_pair(max_range, size))
        .collect::<crbridge::Result<_>>()?)
}

/// Everything except the run length must match to continue a run.
fn resumable(saved: &TrainConfig, cfg: &TrainConfig) -> bool {
    let strip = |c: &TrainConfig| TrainConfig {
        steps: 0,
        checkpoint_every: 0,
        ..c.clone()
    };
    strip(saved) == strip(cfg)
}

fn train(config: Option<&Path>, data_dir: &Path, out_dir: &Path, resume: bool) -> CmdResult {
    let run = run_config(config)?;
    let cfg = run.train.clone();
    let size = (cfg.resolution[0], cfg.resolution[1]);
    let frames = load_pairs(data_dir, cfg.max_range, Some(size))?;
    let state_path = out_dir.join(STATE_FILE);
    let mut trainer = if resume {
        let (saved, state) = persist::load_state(&state_path)?;
        if !resumable(&saved, &cfg) {
            return Err(usage("config differs from the saved run beyond steps/checkpoint_every"));
        }
        if state.step() > cfg.steps {
            return Err(usage(format!(
                "saved run is already at step {}, past steps = {}",
                state.step(),
                cfg.steps
            )));
        }
        Trainer::resume(cfg.clone(), frames, &run.canny, state)?
    } else {
        Trainer::new(cfg.clone(), frames, &run.canny)?
    };
    fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let config_echo = serde_json::to_string_pretty(&run).expect("config serializes") + "\n";
    write_file(&out_dir.join("config.json"), config_echo.as_bytes())?;

    let save = |state: &crbridge::training::TrainState| -> crbridge::Result<()> {
        let step = state.step();
        if cfg.checkpoint_every > 0 && step.is_multiple_of(cfg.checkpoint_every) {
            let dir = out_dir.join(CHECKPOINT_DIR);
            fs::create_dir_all(&dir).map_err(|e| Error::Io {
                path: dir.clone(),
                source: e,
            })?;
            persist::save_checkpoint(
                &dir.join(format!("step_{step:06}.image.crw")),
                Role::Image,
                &state.image,
            )?;
            persist::save_checkpoint(
                &dir.join(format!("step_{step:06}.depth.crw")),
                Role::Depth,
                &state.depth,
            )?;
        }
        persist::save_checkpoint(&out_dir.join("image.crw"), Role::Image, &state.image)?;
        persist::save_checkpoint(&out_dir.join("depth.crw"), Role::Depth, &state.depth)?;
        persist::write_atomic(&out_dir.join(LOSS_FILE), persist::loss_csv(&state.history).as_bytes())?;
        persist::save_state(&state_path, &cfg, state)
    };
    let already_done = trainer.state().step() == cfg.steps;
    trainer.run(save)?;
    if already_done {
        // Nothing ran, so the callback never fired; still leave a complete
        // set of outputs behind.
        save(trainer.state())?;
    }
    let history = &trainer.state().history;
    match history.last() {
        Some(l) => eprintln!("trained {} steps, final loss {l:.6}", history.len()),
        None => eprintln!("no training steps requested"),
    }
    Ok(())
}

fn load_role(path: &Path, expected: Role) -> Result<GeneratorWeights<f32>, Failure> {
    if !path.exists() {
        return Err(usage(format!("checkpoint {} does not exist", path.display())));
    }
    let (role, weights) = load_checkpoint(path)?;
    if role != expected {
        return Err(usage(format!(
            "{} holds the {} generator, expected {}",
            path.display(),
            role.label(),
            expected.label()
        )));
    }
    Ok(weights)
}

fn infer(checkpoint: &Path, input: &Path, output: &Path, kind: Kind, max_range: f64) -> CmdResult {
    let role = match kind {
        Kind::Image => Role::Image,
        Kind::Depth => Role::Depth,
    };
    let weights = load_role(checkpoint, role)?;
    let img = match kind {
        Kind::Image => pgm::read_gray(input)?,
        Kind::Depth => normalize_depth(&pgm::read_depth(input)?, max_range)?,
    };
    let dims = (weights.config.input_width, weights.config.input_height);
    let cr = if img.dims() == dims {
        weights.forward(&img)?
    } else {
        let cr = weights.forward(&resize_bilinear(&img, dims.0, dims.1)?)?;
        resize_bilinear(&cr, img.width(), img.height())?
    };
    write_file(output, &pgm::encode(&pgm::gray_to_pgm(&cr)))
}

/// `avg_distance_raw` of the first data row of a report CSV.
fn baseline_distance(path: &Path) -> Result<f64, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut lines = text.lines();
    if lines.next() != Some(REPORT_HEADER) {
        return Err(usage(format!("{} is not an evaluation report", path.display())));
    }
    lines
        .next()
        .and_then(|row| row.split(',').nth(1))
        .and_then(|v| v.parse::<f64>().ok())
        .filter(|v| *v > 0.0)
        .ok_or_else(|| usage(format!("{} has no usable baseline distance", path.display())))
}

#[allow(clippy::too_many_arguments)]
fn eval(
    data_dir: &Path,
    config: Option<&Path>,
    pairs: Option<usize>,
    mode: &str,
    offset: Option<usize>,
    checkpoint_image: Option<&Path>,
    checkpoint_depth: Option<&Path>,
    baseline: Option<&Path>,
    output: Option<&Path>,
) -> CmdResult {
    let mode = EvalMode::parse(mode).ok_or_else(|| {
        usage(format!(
            "unknown mode {mode:?}; expected raw, image_cr, depth_cr or cross_cr"
        ))
    })?;
    let run = run_config(config)?;
    let mut cfg = run.eval.clone();
    if let Some(p) = pairs {
        cfg.pairs = p;
    }
    if let Some(o) = offset {
        cfg.frame_offset = o;
    }
    let need_image = matches!(mode, EvalMode::ImageCr | EvalMode::CrossCr);
    let need_depth = matches!(mode, EvalMode::DepthCr | EvalMode::CrossCr);
    let load = |needed: bool, path: Option<&Path>, role: Role| -> Result<Option<GeneratorWeights<f32>>, Failure> {
        match (needed, path) {
            (false, _) => Ok(None),
            (true, None) => Err(usage(format!(
                "mode {} needs --checkpoint-{}",
                mode.label(),
                role.label()
            ))),
            (true, Some(p)) => load_role(p, role).map(Some),
        }
    };
    let image = load(need_image, checkpoint_image, Role::Image)?;
    let depth = load(need_depth, checkpoint_depth, Role::Depth)?;
    let frames = load_pairs(data_dir, run.train.max_range, None)?;
    let mut report: EvalReport = evaluate_pairs(&frames, mode, image.as_ref(), depth.as_ref(), &cfg)?;
    if let Some(b) = baseline {
        let d0 = baseline_distance(b)?;
        report.avg_distance_normalized = report.avg_distance_raw.map(|d| d / d0);
    }
    let csv = report_csv(&[report]);
    match output {
        Some(p) => write_file(p, csv.as_bytes()),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn edges(input: &Path, output: &Path, low: f32, high: f32, sigma: f32) -> CmdResult {
    let cfg = CannyConfig {
        sigma,
        low_threshold: low,
        high_threshold: high,
    };
    cfg.validate()?;
    let img: GrayImage = pgm::read_gray(input)?;
    let e = canny(&img, &cfg)?;
    write_file(output, &pgm::encode(&pgm::gray_to_pgm(&e)))
}

fn dispatch(cli: Cli) -> CmdResult {
    init_threads()?;
    match cli.command {
        Command::GenerateData {
            seed,
            frames,
            out_dir,
            width,
            height,
        } => generate_data(seed, frames, &out_dir, width, height),
        Command::Train {
            config,
            data_dir,
            out_dir,
            resume,
        } => train(config.as_deref(), &data_dir, &out_dir, resume),
        Command::Infer {
            checkpoint,
            input,
            output,
            kind,
            max_range,
        } => infer(&checkpoint, &input, &output, kind, max_range),
        Command::Eval {
            data_dir,
            config,
            pairs,
            mode,
            offset,
            checkpoint_image,
            checkpoint_depth,
            baseline,
            output,
        } => eval(
            &data_dir,
            config.as_deref(),
            pairs,
            &mode,
            offset,
            checkpoint_image.as_deref(),
            checkpoint_depth.as_deref(),
            baseline.as_deref(),
            output.as_deref(),
        ),
        Command::Edges {
            input,
            output,
            low,
            high,
            sigma,
        } => edges(&input, &output, low, high, sigma),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Exit::Usage as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
