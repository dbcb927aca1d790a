//! Seeded training loops for the flow predictor and the frame generator.

use crate::data::ClipSet;
use crate::flow::{normalize_flow, stack_condition};
use crate::flow2rgb::{FeatureExtractor, Flow2Rgb, Flow2RgbConfig};
use crate::nn::Adam;
use crate::pipeline::checkpoint::{save_flow2rgb, save_flow_vae};
use crate::vae::{FlowVae, FlowVaeConfig};
use crate::{Error, Result, Scalar};
use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Shared optimization settings for both training entry points.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_steps: usize,
    /// Final KL weight; linearly warmed up over `kl_warmup_steps`.
    pub kl_weight: f64,
    pub kl_warmup_steps: usize,
    /// Feature-loss weight for the frame generator.
    pub lambda: f64,
    pub seed: u64,
    /// Steps between intermediate checkpoints; 0 saves only the final one.
    pub checkpoint_interval: usize,
    /// Optional early exit: stop once the per-step reconstruction metric
    /// (flow L1 / pixel RMSE) falls below this value.
    pub stop_below: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            batch_size: 16,
            max_steps: 2000,
            kl_weight: 1e-3,
            kl_warmup_steps: 200,
            lambda: 1e-2,
            seed: 0,
            checkpoint_interval: 0,
            stop_below: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || self.batch_size == 0 || self.max_steps == 0 {
            return Err(Error::Config(
                "lr, batch size and max steps must be positive".into(),
            ));
        }
        if self.kl_weight < 0.0 || self.lambda < 0.0 {
            return Err(Error::Config("loss weights must be nonnegative".into()));
        }
        Ok(())
    }

    fn kl_at(&self, step: usize) -> f64 {
        if self.kl_warmup_steps == 0 {
            self.kl_weight
        } else {
            self.kl_weight * (step as f64 / self.kl_warmup_steps as f64).min(1.0)
        }
    }
}

/// Per-step log entry; the second/third components are (recon, kl) for the
/// flow model and (pixel, feature) for the frame model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLog {
    pub step: usize,
    pub total: f64,
    pub a: f64,
    pub b: f64,
}

/// Outcome of a training run.
pub struct TrainRun<M> {
    pub model: M,
    pub log: Vec<StepLog>,
    pub checkpoint: PathBuf,
}

fn write_log(path: &Path, header: &str, log: &[StepLog]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{header}")?;
    for l in log {
        writeln!(f, "{},{},{},{}", l.step, l.total, l.a, l.b)?;
    }
    Ok(())
}

fn scale_grads<S: Scalar>(params: &mut [&mut crate::nn::Param<S>], factor: S) {
    for p in params.iter_mut() {
        p.g.mapv_inplace(|g| g * factor);
    }
}

/// Minimizes the flow-volume objective on random clip crops. Fully seeded:
/// identical (data, configs) reproduce the logged loss sequence.
pub fn train_flow_vae<S: Scalar>(
    data: &ClipSet<S>,
    model_cfg: FlowVaeConfig,
    cfg: &TrainConfig,
    out_dir: &Path,
) -> Result<TrainRun<FlowVae<S>>> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut model = FlowVae::new(model_cfg.clone(), cfg.seed)?;
    let mut opt = Adam::new(S::of(cfg.lr));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7261_696e);
    let ckpt_path = out_dir.join("flow_vae.fsv");
    let mut log = Vec::new();

    for step in 0..cfg.max_steps {
        let klw = S::of(cfg.kl_at(step));
        let (mut tot, mut rec, mut kl) = (0.0, 0.0, 0.0);
        for bi in 0..cfg.batch_size {
            let ex = data.sample_flow_example(model_cfg.m, &mut rng)?;
            let nflows = ex
                .flows
                .iter()
                .map(|f| normalize_flow(f, S::of(model_cfg.max_disp)))
                .collect::<Result<Vec<_>>>()?;
            let cube = stack_condition(ex.x0, &nflows)?;
            let target = FlowVae::nflows_to_volume(&nflows);
            let eps = Array1::from_shape_fn(model_cfg.latent_dim, |_| {
                S::of(StandardNormal.sample(&mut rng))
            });
            let loss = model
                .train_step(&cube, ex.x0, &target, &eps, klw)
                .map_err(|e| Error::TrainDiverged {
                    step,
                    batch: bi,
                    reason: e.to_string(),
                })?;
            tot += loss.total.to_f64c();
            rec += loss.recon.to_f64c();
            kl += loss.kl.to_f64c();
        }
        let n = cfg.batch_size as f64;
        let (tot, rec, kl) = (tot / n, rec / n, kl / n);
        if !tot.is_finite() {
            return Err(Error::TrainDiverged {
                step,
                batch: 0,
                reason: "non-finite batch loss".into(),
            });
        }
        scale_grads(&mut model.params_mut(), S::of(1.0 / n));
        opt.step(&mut model.params_mut());
        log.push(StepLog {
            step,
            total: tot,
            a: rec,
            b: kl,
        });
        if cfg.checkpoint_interval > 0 && (step + 1) % cfg.checkpoint_interval == 0 {
            save_flow_vae(&model, &out_dir.join(format!("flow_vae_step{:06}.fsv", step + 1)))?;
        }
        if cfg.stop_below.map_or(false, |th| rec < th) {
            break;
        }
    }
    save_flow_vae(&model, &ckpt_path)?;
    write_log(&out_dir.join("train_flow_vae.csv"), "step,total,recon,kl", &log)?;
    Ok(TrainRun {
        model,
        log,
        checkpoint: ckpt_path,
    })
}

/// Minimizes the frame-synthesis objective on random adjacent-frame triples.
pub fn train_flow2rgb<S: Scalar>(
    data: &ClipSet<S>,
    model_cfg: Flow2RgbConfig,
    extractor: &FeatureExtractor<S>,
    cfg: &TrainConfig,
    out_dir: &Path,
) -> Result<TrainRun<Flow2Rgb<S>>> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut model = Flow2Rgb::new(model_cfg, cfg.seed)?;
    let mut opt = Adam::new(S::of(cfg.lr));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6672_616d);
    let ckpt_path = out_dir.join("flow2rgb.fsv");
    let lambda = S::of(cfg.lambda);
    let mut log = Vec::new();

    for step in 0..cfg.max_steps {
        let (mut tot, mut pix, mut feat) = (0.0, 0.0, 0.0);
        for bi in 0..cfg.batch_size {
            let ex = data.sample_frame_example(&mut rng);
            let loss = model
                .train_step(ex.x_t, ex.flow, ex.x_t1, extractor, lambda)
                .map_err(|e| Error::TrainDiverged {
                    step,
                    batch: bi,
                    reason: e.to_string(),
                })?;
            tot += loss.total.to_f64c();
            pix += loss.pixel.to_f64c();
            feat += loss.feature.to_f64c();
        }
        let n = cfg.batch_size as f64;
        let (tot, pix, feat) = (tot / n, pix / n, feat / n);
        if !tot.is_finite() {
            return Err(Error::TrainDiverged {
                step,
                batch: 0,
                reason: "non-finite batch loss".into(),
            });
        }
        scale_grads(&mut model.params_mut(), S::of(1.0 / n));
        opt.step(&mut model.params_mut());
        log.push(StepLog {
            step,
            total: tot,
            a: pix,
            b: feat,
        });
        if cfg.checkpoint_interval > 0 && (step + 1) % cfg.checkpoint_interval == 0 {
            save_flow2rgb(&model, &out_dir.join(format!("flow2rgb_step{:06}.fsv", step + 1)))?;
        }
        // early exit measures pixel RMSE
        if cfg.stop_below.map_or(false, |th| pix.sqrt() < th) {
            break;
        }
    }
    save_flow2rgb(&model, &ckpt_path)?;
    write_log(
        &out_dir.join("train_flow2rgb.csv"),
        "step,total,pixel,feature",
        &log,
    )?;
    Ok(TrainRun {
        model,
        log,
        checkpoint: ckpt_path,
    })
}
