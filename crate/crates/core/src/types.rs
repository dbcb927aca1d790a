//! Domain types shared by every stage of the pipeline.

use crate::{Error, Result, Scalar};
use ndarray::{Array2, Array3, Array4};

/// An H×W×3 image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame<S: Scalar> {
    pixels: Array3<S>,
}

impl<S: Scalar> Frame<S> {
    /// Wraps an H×W×3 intensity array, validating the value range.
    pub fn new(pixels: Array3<S>) -> Result<Self> {
        let (h, w, c) = pixels.dim();
        if c != 3 {
            return Err(Error::InvalidInput(format!(
                "frame must have 3 channels, got {c}"
            )));
        }
        if h == 0 || w == 0 {
            return Err(Error::InvalidInput("frame has zero extent".into()));
        }
        for &p in pixels.iter() {
            if !p.is_finite() || p < S::zero() || p > S::one() {
                return Err(Error::InvalidInput(format!(
                    "frame pixel {p:?} outside [0, 1]"
                )));
            }
        }
        Ok(Self { pixels })
    }

    /// Constant-intensity frame (useful for tests and baselines).
    pub fn constant(height: usize, width: usize, value: S) -> Result<Self> {
        Self::new(Array3::from_elem((height, width, 3), value))
    }

    pub fn height(&self) -> usize {
        self.pixels.dim().0
    }

    pub fn width(&self) -> usize {
        self.pixels.dim().1
    }

    pub fn pixels(&self) -> &Array3<S> {
        &self.pixels
    }

    /// Channels-first (3×H×W) copy, the layout consumed by the networks.
    pub fn to_chw(&self) -> Array3<S> {
        let (h, w, _) = self.pixels.dim();
        let mut out = Array3::zeros((3, h, w));
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    out[[c, y, x]] = self.pixels[[y, x, c]];
                }
            }
        }
        out
    }

    /// Inverse of [`Frame::to_chw`]; values are clamped to `[0, 1]`.
    pub fn from_chw(chw: &Array3<S>) -> Result<Self> {
        let (c, h, w) = chw.dim();
        if c != 3 {
            return Err(Error::InvalidInput(format!(
                "expected 3×H×W tensor, got {c} channels"
            )));
        }
        let mut pixels = Array3::zeros((h, w, 3));
        for y in 0..h {
            for x in 0..w {
                for ch in 0..3 {
                    let v = chw[[ch, y, x]];
                    if !v.is_finite() {
                        return Err(Error::InvalidInput("non-finite pixel value".into()));
                    }
                    pixels[[y, x, ch]] = v.max(S::zero()).min(S::one());
                }
            }
        }
        Self::new(pixels)
    }

    pub fn map_precision<T: Scalar>(&self) -> Frame<T> {
        Frame {
            pixels: self.pixels.mapv(|v| T::of(v.to_f64c())),
        }
    }
}

/// Ordered list of equally sized frames.
#[derive(Debug, Clone)]
pub struct VideoClip<S: Scalar> {
    frames: Vec<Frame<S>>,
    frame_rate: Option<f64>,
}

impl<S: Scalar> VideoClip<S> {
    pub fn new(frames: Vec<Frame<S>>, frame_rate: Option<f64>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidInput("clip must contain frames".into()));
        }
        let (h, w) = (frames[0].height(), frames[0].width());
        if frames.iter().any(|f| f.height() != h || f.width() != w) {
            return Err(Error::InvalidInput("clip frames differ in size".into()));
        }
        if let Some(r) = frame_rate {
            if !(r > 0.0) {
                return Err(Error::InvalidInput("frame rate must be positive".into()));
            }
        }
        Ok(Self { frames, frame_rate })
    }

    pub fn frames(&self) -> &[Frame<S>] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn frame_rate(&self) -> Option<f64> {
        self.frame_rate
    }
}

/// Per-pixel backward displacement field, in pixels.
///
/// The flow is attached to frame `t+1`: `(u, v)` at `(y, x)` points to the
/// sampling location `(y + v, x + u)` in frame `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField<S: Scalar> {
    u: Array2<S>,
    v: Array2<S>,
}

impl<S: Scalar> FlowField<S> {
    pub fn new(u: Array2<S>, v: Array2<S>) -> Result<Self> {
        if u.dim() != v.dim() {
            return Err(Error::InvalidInput(
                "flow components differ in shape".into(),
            ));
        }
        if u.iter().chain(v.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("flow contains NaN/Inf".into()));
        }
        Ok(Self { u, v })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            u: Array2::zeros((height, width)),
            v: Array2::zeros((height, width)),
        }
    }

    pub fn u(&self) -> &Array2<S> {
        &self.u
    }

    pub fn v(&self) -> &Array2<S> {
        &self.v
    }

    pub fn height(&self) -> usize {
        self.u.dim().0
    }

    pub fn width(&self) -> usize {
        self.u.dim().1
    }

    /// Largest absolute displacement component.
    pub fn max_abs(&self) -> S {
        self.u
            .iter()
            .chain(self.v.iter())
            .fold(S::zero(), |m, &c| m.max(c.abs()))
    }
}

/// M-step stack of flow fields (the multi-step motion of a clip).
#[derive(Debug, Clone)]
pub struct FlowVolume<S: Scalar> {
    flows: Vec<FlowField<S>>,
}

impl<S: Scalar> FlowVolume<S> {
    pub fn new(flows: Vec<FlowField<S>>) -> Result<Self> {
        if flows.is_empty() {
            return Err(Error::InvalidInput("flow volume must be non-empty".into()));
        }
        let (h, w) = (flows[0].height(), flows[0].width());
        if flows.iter().any(|f| f.height() != h || f.width() != w) {
            return Err(Error::InvalidInput("flow volume sizes differ".into()));
        }
        Ok(Self { flows })
    }

    pub fn flows(&self) -> &[FlowField<S>] {
        &self.flows
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn height(&self) -> usize {
        self.flows[0].height()
    }

    pub fn width(&self) -> usize {
        self.flows[0].width()
    }
}

/// Flow mapped into `[0, 1]` for network consumption.
///
/// Values at exactly 0 or 1 indicate clipping at `±max_disp`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFlowField<S: Scalar> {
    u: Array2<S>,
    v: Array2<S>,
    max_disp: S,
}

impl<S: Scalar> NormalizedFlowField<S> {
    pub(crate) fn from_parts(u: Array2<S>, v: Array2<S>, max_disp: S) -> Result<Self> {
        if u.dim() != v.dim() {
            return Err(Error::InvalidInput(
                "flow components differ in shape".into(),
            ));
        }
        if !(max_disp > S::zero()) {
            return Err(Error::InvalidInput("max_disp must be positive".into()));
        }
        if u
            .iter()
            .chain(v.iter())
            .any(|&c| !c.is_finite() || c < S::zero() || c > S::one())
        {
            return Err(Error::InvalidInput(
                "normalized flow values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self { u, v, max_disp })
    }

    pub fn u(&self) -> &Array2<S> {
        &self.u
    }

    pub fn v(&self) -> &Array2<S> {
        &self.v
    }

    pub fn max_disp(&self) -> S {
        self.max_disp
    }

    pub fn height(&self) -> usize {
        self.u.dim().0
    }

    pub fn width(&self) -> usize {
        self.u.dim().1
    }
}

/// M×5×H×W network input: per time step the 2 normalized flow channels
/// followed by the replicated starting frame (channel order u, v, R, G, B).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedInputCube<S: Scalar> {
    data: Array4<S>,
}

impl<S: Scalar> ConditionedInputCube<S> {
    pub(crate) fn from_array(data: Array4<S>) -> Self {
        Self { data }
    }

    /// Shape `(M, 5, H, W)`.
    pub fn data(&self) -> &Array4<S> {
        &self.data
    }

    pub fn steps(&self) -> usize {
        self.data.dim().0
    }

    pub fn height(&self) -> usize {
        self.data.dim().2
    }

    pub fn width(&self) -> usize {
        self.data.dim().3
    }

    /// Channels-first (5×M×H×W) copy for the volumetric encoder.
    pub fn to_ctime(&self) -> Array4<S> {
        let (m, c, h, w) = self.data.dim();
        let mut out = Array4::zeros((c, m, h, w));
        for t in 0..m {
            for ch in 0..c {
                for y in 0..h {
                    for x in 0..w {
                        out[[ch, t, y, x]] = self.data[[t, ch, y, x]];
                    }
                }
            }
        }
        out
    }
}
