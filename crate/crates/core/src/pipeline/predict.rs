//! Sequence prediction from a single frame, plus the reference baselines.

use crate::flow::denormalize_flow;
use crate::flow2rgb::{generate_next_frame, Flow2Rgb};
use crate::types::{FlowField, Frame};
use crate::vae::{condition_latent, FlowVae, LatentCode};
use crate::{Error, Result, Scalar};
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Output of a full rollout: M predicted backward flows (pixel units), the
/// M synthesized frames, the seed that produced them and, when the flows
/// came from the latent model, the sampled code.
pub struct PredictionResult<S: Scalar> {
    pub flows: Vec<FlowField<S>>,
    pub frames: Vec<Frame<S>>,
    pub seed: u64,
    pub latent: Option<LatentCode<S>>,
}

/// How frames are produced from a flow sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RolloutMode {
    /// Warp then refine with the trained generator.
    Generate,
    /// Pure backward warping, no generator.
    WarpOnly,
}

fn check_compat<S: Scalar>(x0: &Frame<S>, vae: &FlowVae<S>, gen: &Flow2Rgb<S>) -> Result<()> {
    let c = vae.config();
    if x0.height() != c.height || x0.width() != c.width {
        return Err(Error::Config(format!(
            "frame is {}x{} but flow model expects {}x{}",
            x0.height(),
            x0.width(),
            c.height,
            c.width
        )));
    }
    let d = gen.config().required_divisor();
    if c.height % d != 0 || c.width % d != 0 {
        return Err(Error::Config(format!(
            "frame size {}x{} not divisible by generator factor {d}",
            c.height, c.width
        )));
    }
    if (c.max_disp - gen.config().max_disp).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "flow model max_disp {} differs from generator max_disp {}",
            c.max_disp,
            gen.config().max_disp
        )));
    }
    Ok(())
}

/// Samples a latent code from the prior, conditions it on the input frame,
/// decodes M backward flows and rolls the generator forward. Fully seeded.
pub fn predict_sequence<S: Scalar>(
    x0: &Frame<S>,
    seed: u64,
    vae: &FlowVae<S>,
    gen: &Flow2Rgb<S>,
) -> Result<PredictionResult<S>> {
    check_compat(x0, vae, gen)?;
    let cfg = vae.config();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = LatentCode {
        z: Array1::from_shape_fn(cfg.latent_dim, |_| S::of(StandardNormal.sample(&mut rng))),
    };
    let e = vae.encode_image(x0)?;
    let zc = condition_latent(&z, &e)?;
    let flows = vae
        .decode(&zc)?
        .iter()
        .map(denormalize_flow)
        .collect::<Result<Vec<_>>>()?;
    let frames = roll_frames(x0, &flows, gen, RolloutMode::Generate)?;
    Ok(PredictionResult {
        flows,
        frames,
        seed,
        latent: Some(zc),
    })
}

fn roll_frames<S: Scalar>(
    x0: &Frame<S>,
    flows: &[FlowField<S>],
    gen: &Flow2Rgb<S>,
    mode: RolloutMode,
) -> Result<Vec<Frame<S>>> {
    let mut frames = Vec::with_capacity(flows.len());
    let mut cur = x0.clone();
    for f in flows {
        let next = match mode {
            RolloutMode::Generate => generate_next_frame(&cur, f, gen)?,
            RolloutMode::WarpOnly => crate::warp::backward_warp(&cur, f)?,
        };
        frames.push(next.clone());
        cur = next;
    }
    Ok(frames)
}

/// Rolls frames from externally supplied flows (e.g. ground truth).
pub fn rollout_with_flows<S: Scalar>(
    x0: &Frame<S>,
    flows: &[FlowField<S>],
    gen: &Flow2Rgb<S>,
    mode: RolloutMode,
) -> Result<PredictionResult<S>> {
    if flows.is_empty() {
        return Err(Error::InvalidInput("rollout needs at least one flow".into()));
    }
    for f in flows {
        if f.height() != x0.height() || f.width() != x0.width() {
            return Err(Error::InvalidInput("flow/frame size mismatch".into()));
        }
    }
    let frames = roll_frames(x0, flows, gen, mode)?;
    Ok(PredictionResult {
        flows: flows.to_vec(),
        frames,
        seed: 0,
        latent: None,
    })
}

/// The trivial baseline: M copies of the input frame and zero flows.
pub fn baseline_copy<S: Scalar>(x0: &Frame<S>, m: usize) -> PredictionResult<S> {
    let zero = FlowField::zeros(x0.height(), x0.width());
    PredictionResult {
        flows: vec![zero; m],
        frames: vec![x0.clone(); m],
        seed: 0,
        latent: None,
    }
}

/// Structure-free baseline: per-pixel i.i.d. Gaussian flows (std `sigma`,
/// default 2.0) rolled through the generator.
pub fn baseline_random_flow<S: Scalar>(
    x0: &Frame<S>,
    m: usize,
    sigma: f64,
    seed: u64,
    gen: &Flow2Rgb<S>,
) -> Result<PredictionResult<S>> {
    if sigma < 0.0 {
        return Err(Error::InvalidInput("sigma must be nonnegative".into()));
    }
    let (h, w) = (x0.height(), x0.width());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = |_: (usize, usize)| {
        let x: f64 = StandardNormal.sample(&mut rng);
        S::of(sigma * x)
    };
    let flows = (0..m)
        .map(|_| {
            let u = Array2::from_shape_fn((h, w), &mut sample);
            let v = Array2::from_shape_fn((h, w), &mut sample);
            FlowField::new(u, v)
        })
        .collect::<Result<Vec<_>>>()?;
    let frames = roll_frames(x0, &flows, gen, RolloutMode::Generate)?;
    Ok(PredictionResult {
        flows,
        frames,
        seed,
        latent: None,
    })
}
