mod config;
mod io;

use clap::{Parser, Subcommand, ValueEnum};
use config::{Cfg, CliError, CliResult};
use std::path::{Path, PathBuf};
use stillflow_core::data::{make_synthetic, FlowEstimator, MotionKind, SyntheticClipSpec};
use stillflow_core::eval::{perceptual_dissimilarity, rmse_flows, rmse_frames, MetricsReport};
use stillflow_core::flow2rgb::{FeatureExtractor, Flow2RgbConfig};
use stillflow_core::pipeline::{
    load_flow2rgb, load_flow_vae, predict_sequence, rollout_with_flows, train_flow2rgb,
    train_flow_vae, RolloutMode, TrainConfig,
};
use stillflow_core::vae::FlowVaeConfig;
use stillflow_core::{data::ClipSet, Real};

#[derive(Parser)]
#[command(name = "stillflow", about = "Single-image video prediction toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Render a synthetic clip with exact ground-truth backward flows.
    MakeSynthetic(MakeSyntheticArgs),
    /// Train the latent flow predictor.
    TrainFlow(TrainArgs),
    /// Train the warp-and-generate frame synthesizer.
    TrainFrame(TrainArgs),
    /// Predict a video from one image with both trained models.
    Predict(PredictArgs),
    /// Synthesize frames from externally supplied flows.
    Rollout(RolloutArgs),
    /// Compare a predicted sequence against ground truth.
    Evaluate(EvaluateArgs),
    /// Encode a directory of PNG frames as an animated GIF.
    ExportGif(ExportGifArgs),
}

#[derive(clap::Args)]
struct MakeSyntheticArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// translate | rotate | sine-warp
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    max_disp: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Clip corpus: subdirectories with frames/*.png and flows/*.flo.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct PredictArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    vae: PathBuf,
    #[arg(long)]
    gen: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    delay_ms: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Generate,
    WarpOnly,
}

#[derive(clap::Args)]
struct RolloutArgs {
    #[arg(long)]
    image: PathBuf,
    /// Directory of .flo files applied in lexicographic order.
    #[arg(long)]
    flows: PathBuf,
    #[arg(long)]
    gen: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Generate)]
    mode: ModeArg,
    #[arg(long, default_value_t = 100)]
    delay_ms: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct EvaluateArgs {
    /// Prediction directory (frames/*.png).
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth directory (frames/*.png).
    #[arg(long)]
    gt: PathBuf,
    /// all | rmse-frames | rmse-flows | perceptual (comma-separated)
    #[arg(long, default_value = "all")]
    metrics: String,
    #[arg(long, default_value_t = 0)]
    extractor_seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ExportGifArgs {
    #[arg(long)]
    frames: PathBuf,
    #[arg(long, default_value_t = 100)]
    delay_ms: u32,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::MakeSynthetic(a) => cmd_make_synthetic(a),
        Cmd::TrainFlow(a) => cmd_train_flow(a),
        Cmd::TrainFrame(a) => cmd_train_frame(a),
        Cmd::Predict(a) => cmd_predict(a),
        Cmd::Rollout(a) => cmd_rollout(a),
        Cmd::Evaluate(a) => cmd_evaluate(a),
        Cmd::ExportGif(a) => cmd_export_gif(a),
    };
    if let Err(e) = r {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}

const MAKE_SYNTHETIC_KEYS: &[&str] = &[
    "kind", "length", "height", "width", "max_disp", "seed", "velocity_x", "velocity_y", "omega",
    "center_x", "center_y", "amplitude", "wavelength", "phase_speed",
];

fn cmd_make_synthetic(a: MakeSyntheticArgs) -> CliResult<()> {
    let mut cfg = Cfg::load(a.config.as_deref(), MAKE_SYNTHETIC_KEYS)?;
    cfg.set_flag("kind", &a.kind);
    cfg.set_flag("length", &a.length);
    cfg.set_flag("height", &a.height);
    cfg.set_flag("width", &a.width);
    cfg.set_flag("max_disp", &a.max_disp);
    cfg.set_flag("seed", &a.seed);

    let height = cfg.get_or("height", 64)?;
    let width = cfg.get_or("width", 64)?;
    let max_disp: f64 = cfg.get_or("max_disp", 5.0)?;
    let kind = match cfg.get_or::<String>("kind", "translate".into())?.as_str() {
        "translate" => MotionKind::Translate {
            velocity: (cfg.get_or("velocity_x", 1.5)?, cfg.get_or("velocity_y", 0.5)?),
        },
        "rotate" => MotionKind::Rotate {
            omega: cfg.get_or("omega", 0.05)?,
            center: (
                cfg.get_or("center_x", width as f64 / 2.0)?,
                cfg.get_or("center_y", height as f64 / 2.0)?,
            ),
        },
        "sine-warp" => MotionKind::SineWarp {
            amplitude: cfg.get_or("amplitude", 2.0)?,
            wavelength: cfg.get_or("wavelength", 24.0)?,
            phase_speed: cfg.get_or("phase_speed", 0.8)?,
        },
        other => {
            return Err(CliError::Config(format!(
                "unknown motion kind '{other}' (expected translate|rotate|sine-warp)"
            )))
        }
    };
    let spec = SyntheticClipSpec {
        kind,
        length: cfg.get_or("length", 9)?,
        height,
        width,
        max_disp,
        seed: cfg.get_or("seed", 0)?,
    };
    let made = make_synthetic::<Real>(&spec)?;
    io::write_frames(made.clip.frames(), &a.out.join("frames"))?;
    io::write_flows(made.gt_flows.flows(), &a.out.join("flows"))?;
    cfg.record("length", spec.length);
    cfg.record("height", spec.height);
    cfg.record("width", spec.width);
    cfg.record("max_disp", spec.max_disp);
    cfg.record("seed", spec.seed);
    io::write_run_log(&a.out, "make-synthetic", &cfg.dump())
}

const TRAIN_KEYS: &[&str] = &[
    "lr", "batch_size", "max_steps", "kl_weight", "kl_warmup_steps", "lambda", "seed",
    "checkpoint_interval", "stop_below", "m", "height", "width", "latent_dim", "max_disp",
    "channel_scale", "widths", "convs_per_stage", "extractor_seed",
];

fn train_config(cfg: &Cfg) -> CliResult<TrainConfig> {
    let d = TrainConfig::default();
    Ok(TrainConfig {
        lr: cfg.get_or("lr", d.lr)?,
        batch_size: cfg.get_or("batch_size", d.batch_size)?,
        max_steps: cfg.get_or("max_steps", d.max_steps)?,
        kl_weight: cfg.get_or("kl_weight", d.kl_weight)?,
        kl_warmup_steps: cfg.get_or("kl_warmup_steps", d.kl_warmup_steps)?,
        lambda: cfg.get_or("lambda", d.lambda)?,
        seed: cfg.get_or("seed", d.seed)?,
        checkpoint_interval: cfg.get_or("checkpoint_interval", d.checkpoint_interval)?,
        stop_below: cfg.get("stop_below")?,
    })
}

fn load_train_inputs(a: &TrainArgs) -> CliResult<(Cfg, TrainConfig, ClipSet<Real>)> {
    let mut cfg = Cfg::load(a.config.as_deref(), TRAIN_KEYS)?;
    cfg.set_flag("seed", &a.seed);
    cfg.set_flag("max_steps", &a.max_steps);
    cfg.set_flag("batch_size", &a.batch_size);
    cfg.set_flag("lr", &a.lr);
    let tc = train_config(&cfg)?;
    let data = ClipSet::new(io::load_clipset(&a.data)?)?;
    Ok((cfg, tc, data))
}

fn cmd_train_flow(a: TrainArgs) -> CliResult<()> {
    let (mut cfg, tc, data) = load_train_inputs(&a)?;
    let reduced = FlowVaeConfig::reduced();
    let (h, w) = (data.items()[0].0.height(), data.items()[0].0.width());
    let model_cfg = FlowVaeConfig {
        m: cfg.get_or("m", reduced.m)?,
        height: cfg.get_or("height", h)?,
        width: cfg.get_or("width", w)?,
        latent_dim: cfg.get_or("latent_dim", reduced.latent_dim)?,
        max_disp: cfg.get_or("max_disp", reduced.max_disp)?,
        channel_scale: cfg.get_or("channel_scale", reduced.channel_scale)?,
    };
    if model_cfg.height != h || model_cfg.width != w {
        return Err(CliError::Config(format!(
            "model configured for {}x{} but clips are {h}x{w}",
            model_cfg.height, model_cfg.width
        )));
    }
    let run = train_flow_vae(&data, model_cfg, &tc, &a.out)?;
    cfg.record("seed", tc.seed);
    io::write_run_log(&a.out, "train-flow", &cfg.dump())?;
    println!(
        "trained {} steps, final recon {:.6}, checkpoint {}",
        run.log.len(),
        run.log.last().map_or(f64::NAN, |l| l.a),
        run.checkpoint.display()
    );
    Ok(())
}

fn cmd_train_frame(a: TrainArgs) -> CliResult<()> {
    let (mut cfg, tc, data) = load_train_inputs(&a)?;
    let reduced = Flow2RgbConfig::reduced();
    let model_cfg = Flow2RgbConfig {
        widths: cfg.get_list("widths", &reduced.widths)?,
        convs_per_stage: cfg.get_list("convs_per_stage", &reduced.convs_per_stage)?,
        max_disp: cfg.get_or("max_disp", reduced.max_disp)?,
    };
    let extractor = FeatureExtractor::default_seeded(cfg.get_or("extractor_seed", 0)?);
    let run = train_flow2rgb(&data, model_cfg, &extractor, &tc, &a.out)?;
    cfg.record("seed", tc.seed);
    io::write_run_log(&a.out, "train-frame", &cfg.dump())?;
    println!(
        "trained {} steps, final pixel loss {:.6}, checkpoint {}",
        run.log.len(),
        run.log.last().map_or(f64::NAN, |l| l.a),
        run.checkpoint.display()
    );
    Ok(())
}

fn write_rollout_outputs(
    out: &Path,
    frames: &[stillflow_core::types::Frame<Real>],
    flows: &[stillflow_core::types::FlowField<Real>],
    delay_ms: u32,
) -> CliResult<()> {
    io::write_frames(frames, &out.join("frames"))?;
    io::write_flows(flows, &out.join("flows"))?;
    io::export_gif(frames, &out.join("anim.gif"), delay_ms)
}

fn cmd_predict(a: PredictArgs) -> CliResult<()> {
    let vae = load_flow_vae::<Real>(&a.vae)?;
    let gen = load_flow2rgb::<Real>(&a.gen)?;
    let x0 = io::load_frame(&a.image)?;
    // fail (exit 2) before any output file is created
    let result = predict_sequence(&x0, a.seed, &vae, &gen)?;
    write_rollout_outputs(&a.out, &result.frames, &result.flows, a.delay_ms)?;
    let mut cfg = Cfg::load(None, &[])?;
    cfg.record("image", a.image.display());
    cfg.record("vae", a.vae.display());
    cfg.record("gen", a.gen.display());
    cfg.record("seed", a.seed);
    cfg.record("delay_ms", a.delay_ms);
    io::write_run_log(&a.out, "predict", &cfg.dump())
}

fn cmd_rollout(a: RolloutArgs) -> CliResult<()> {
    let gen = load_flow2rgb::<Real>(&a.gen)?;
    let x0 = io::load_frame(&a.image)?;
    let flows = io::load_flows_dir(&a.flows)?;
    let mode = match a.mode {
        ModeArg::Generate => RolloutMode::Generate,
        ModeArg::WarpOnly => RolloutMode::WarpOnly,
    };
    let result = rollout_with_flows(&x0, &flows, &gen, mode)?;
    write_rollout_outputs(&a.out, &result.frames, &result.flows, a.delay_ms)?;
    let mut cfg = Cfg::load(None, &[])?;
    cfg.record("image", a.image.display());
    cfg.record("flows", a.flows.display());
    cfg.record("gen", a.gen.display());
    cfg.record(
        "mode",
        match mode {
            RolloutMode::Generate => "generate",
            RolloutMode::WarpOnly => "warp-only",
        },
    );
    io::write_run_log(&a.out, "rollout", &cfg.dump())
}

fn cmd_evaluate(a: EvaluateArgs) -> CliResult<()> {
    let pred = io::load_frames_dir(&a.pred.join("frames"))?;
    let mut gt = io::load_frames_dir(&a.gt.join("frames"))?;
    // ground-truth clips include the conditioning frame; predictions start at t=1
    if gt.len() == pred.len() + 1 {
        gt.remove(0);
    }
    let wanted: Vec<&str> = a.metrics.split(',').map(str::trim).collect();
    let all = wanted.contains(&"all");
    let want = |m: &str| all || wanted.contains(&m);
    for w in &wanted {
        if !["all", "rmse-frames", "rmse-flows", "perceptual"].contains(w) {
            return Err(CliError::Config(format!("unknown metric '{w}'")));
        }
    }

    let mut report = MetricsReport::new();
    report.add_metadata("pred", &a.pred.display().to_string());
    report.add_metadata("gt", &a.gt.display().to_string());
    if want("rmse-frames") {
        report.add_vector("predicted", "rmse_frames", &rmse_frames(&pred, &gt)?)?;
    }
    if want("rmse-flows") {
        let est = FlowEstimator::builtin();
        report.add_vector("predicted", "rmse_flows", &rmse_flows(&pred, &gt, &est)?)?;
    }
    if want("perceptual") {
        let ex = FeatureExtractor::default_seeded(a.extractor_seed);
        let vals = pred
            .iter()
            .zip(gt.iter())
            .map(|(p, g)| perceptual_dissimilarity(p, g, &ex))
            .collect::<stillflow_core::Result<Vec<Real>>>()?;
        report.add_vector("predicted", "perceptual", &vals)?;
    }
    report.write_csv(&a.out)?;
    Ok(())
}

fn cmd_export_gif(a: ExportGifArgs) -> CliResult<()> {
    let frames = io::load_frames_dir(&a.frames)?;
    io::export_gif(&frames, &a.out, a.delay_ms)
}
