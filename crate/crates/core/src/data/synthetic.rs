//! Procedurally rendered clips with analytic ground-truth backward flows.
//!
//! Frames are produced by evaluating a smooth band-limited procedural texture
//! at motion-transformed real coordinates, so the rendered motion and its
//! backward flow agree exactly (up to bilinear resampling of the texture).

use crate::types::{FlowField, Frame, FlowVolume, VideoClip};
use crate::{Error, Result, Scalar};
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The motion family of a synthetic clip.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionKind {
    /// Whole-frame translation by `velocity` px/frame (x, y).
    Translate { velocity: (f64, f64) },
    /// Rotation by `omega` rad/frame around `center` (x, y) in pixels.
    Rotate { omega: f64, center: (f64, f64) },
    /// Horizontal shear wave: rows displace by
    /// `amplitude · sin(2π y / wavelength − t · phase_speed)`.
    SineWarp {
        amplitude: f64,
        wavelength: f64,
        phase_speed: f64,
    },
}

/// Recipe for [`make_synthetic`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticClipSpec {
    pub kind: MotionKind,
    /// Number of frames (M+1 for M flows).
    pub length: usize,
    pub height: usize,
    pub width: usize,
    /// Displacement budget; the motion parameters must stay within it.
    pub max_disp: f64,
    pub seed: u64,
}

impl SyntheticClipSpec {
    /// Largest per-step displacement the motion can produce anywhere in the
    /// frame.
    pub fn peak_displacement(&self) -> f64 {
        match &self.kind {
            MotionKind::Translate { velocity } => velocity.0.hypot(velocity.1),
            MotionKind::Rotate { omega, center } => {
                // chord length at the farthest corner
                let corners = [
                    (0.0, 0.0),
                    (self.width as f64 - 1.0, 0.0),
                    (0.0, self.height as f64 - 1.0),
                    (self.width as f64 - 1.0, self.height as f64 - 1.0),
                ];
                let r_max = corners
                    .iter()
                    .map(|&(x, y)| (x - center.0).hypot(y - center.1))
                    .fold(0.0f64, f64::max);
                2.0 * (omega / 2.0).sin().abs() * r_max
            }
            MotionKind::SineWarp {
                amplitude,
                phase_speed,
                ..
            } => 2.0 * amplitude.abs() * (phase_speed / 2.0).sin().abs(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::InvalidSpec("clip needs at least 2 frames".into()));
        }
        if self.height == 0 || self.width == 0 {
            return Err(Error::InvalidSpec("zero resolution".into()));
        }
        if !(self.max_disp > 0.0) {
            return Err(Error::InvalidSpec("max_disp must be positive".into()));
        }
        if let MotionKind::SineWarp { wavelength, .. } = &self.kind {
            if !(*wavelength > 0.0) {
                return Err(Error::InvalidSpec("wavelength must be positive".into()));
            }
        }
        let peak = self.peak_displacement();
        if peak > self.max_disp {
            return Err(Error::InvalidSpec(format!(
                "per-step displacement {peak:.3} px exceeds max_disp {}",
                self.max_disp
            )));
        }
        Ok(())
    }
}

/// A rendered clip together with its exact backward flows (flow `t` warps
/// frame `t` into frame `t+1`).
#[derive(Debug, Clone)]
pub struct SyntheticClip<S: Scalar> {
    pub clip: VideoClip<S>,
    pub gt_flows: FlowVolume<S>,
}

/// Smooth seeded texture: a small sum of random sinusoids per channel,
/// rescaled into [0.05, 0.95]. Band-limited (wavelengths ≥ 8 px) so bilinear
/// warping of rendered frames closely matches analytic re-rendering.
#[derive(Debug, Clone)]
pub struct ProceduralTexture {
    // per channel: (kx, ky, phase, amplitude)
    waves: Vec<Vec<(f64, f64, f64, f64)>>,
}

impl ProceduralTexture {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let waves = (0..3)
            .map(|_| {
                (0..6)
                    .map(|_| {
                        let wavelength = rng.gen_range(8.0..40.0);
                        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                        let k = std::f64::consts::TAU / wavelength;
                        (
                            k * angle.cos(),
                            k * angle.sin(),
                            rng.gen_range(0.0..std::f64::consts::TAU),
                            rng.gen_range(0.5..1.0),
                        )
                    })
                    .collect()
            })
            .collect();
        Self { waves }
    }

    /// Channel intensity at real coordinates, always in [0.05, 0.95].
    pub fn eval(&self, channel: usize, x: f64, y: f64) -> f64 {
        let waves = &self.waves[channel];
        let norm: f64 = waves.iter().map(|w| w.3).sum();
        let s: f64 = waves
            .iter()
            .map(|&(kx, ky, ph, a)| a * (kx * x + ky * y + ph).sin())
            .sum();
        0.5 + 0.45 * s / norm
    }
}

/// Inverse motion map: where frame-`t` content at pixel `(x, y)` lives in
/// texture coordinates.
fn texture_coords(kind: &MotionKind, t: f64, x: f64, y: f64) -> (f64, f64) {
    match kind {
        MotionKind::Translate { velocity } => (x - t * velocity.0, y - t * velocity.1),
        MotionKind::Rotate { omega, center } => {
            let (dx, dy) = (x - center.0, y - center.1);
            let a = -t * omega;
            (
                center.0 + dx * a.cos() - dy * a.sin(),
                center.1 + dx * a.sin() + dy * a.cos(),
            )
        }
        MotionKind::SineWarp {
            amplitude,
            wavelength,
            phase_speed,
        } => {
            let theta = std::f64::consts::TAU * y / wavelength;
            (x + amplitude * (theta - t * phase_speed).sin(), y)
        }
    }
}

/// Exact backward flow at pixel `(x, y)` of frame `t+1`: the displacement to
/// the location in frame `t` holding the same content.
fn backward_flow_at(kind: &MotionKind, t: f64, x: f64, y: f64) -> (f64, f64) {
    match kind {
        MotionKind::Translate { velocity } => (-velocity.0, -velocity.1),
        MotionKind::Rotate { omega, center } => {
            let (dx, dy) = (x - center.0, y - center.1);
            let a = -omega;
            (
                dx * a.cos() - dy * a.sin() - dx,
                dx * a.sin() + dy * a.cos() - dy,
            )
        }
        MotionKind::SineWarp {
            amplitude,
            wavelength,
            phase_speed,
        } => {
            let theta = std::f64::consts::TAU * y / wavelength;
            (
                amplitude * ((theta - (t + 1.0) * phase_speed).sin() - (theta - t * phase_speed).sin()),
                0.0,
            )
        }
    }
}

/// Renders a seeded clip of `length` frames plus its `length − 1` analytic
/// backward flows.
pub fn make_synthetic<S: Scalar>(spec: &SyntheticClipSpec) -> Result<SyntheticClip<S>> {
    spec.validate()?;
    let tex = ProceduralTexture::new(spec.seed);
    let (h, w) = (spec.height, spec.width);
    let mut frames = Vec::with_capacity(spec.length);
    for t in 0..spec.length {
        let mut px = Array3::zeros((h, w, 3));
        for y in 0..h {
            for x in 0..w {
                let (tx, ty) = texture_coords(&spec.kind, t as f64, x as f64, y as f64);
                for c in 0..3 {
                    px[[y, x, c]] = S::of(tex.eval(c, tx, ty).clamp(0.0, 1.0));
                }
            }
        }
        frames.push(Frame::new(px)?);
    }
    let mut flows = Vec::with_capacity(spec.length - 1);
    for t in 0..spec.length - 1 {
        let mut u = Array2::zeros((h, w));
        let mut v = Array2::zeros((h, w));
        for y in 0..h {
            for x in 0..w {
                let (fu, fv) = backward_flow_at(&spec.kind, t as f64, x as f64, y as f64);
                u[[y, x]] = S::of(fu);
                v[[y, x]] = S::of(fv);
            }
        }
        flows.push(FlowField::new(u, v)?);
    }
    Ok(SyntheticClip {
        clip: VideoClip::new(frames, None)?,
        gt_flows: FlowVolume::new(flows)?,
    })
}
