//! Warp-then-generate frame synthesis.
//!
//! The generator first backward-warps the current frame by the predicted
//! flow, then feeds the warped frame and the flow through two separate
//! encoder streams, fuses them by concatenation + convolution and decodes
//! with nearest-neighbor upsampling back to a full-resolution frame. The
//! training objective combines a pixel loss with a deep-feature loss.

use crate::nn::{relu_bwd, relu_fwd, sigmoid_bwd, sigmoid_fwd, Conv2d, MaxPool2d, Param, Upsample2d};
use crate::types::{FlowField, Frame};
use crate::warp::backward_warp;
use crate::{Error, Result, Scalar};
use ndarray::{Array3, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Frozen convolutional feature pyramid. Stage K (1-based) is downsampled by
/// `2^(K−1)`; weights are fixed at construction (seeded random by default, or
/// loaded from a checkpoint), never trained.
pub struct FeatureExtractor<S: Scalar> {
    convs: Vec<Conv2d<S>>,
    pool: MaxPool2d,
}

impl<S: Scalar> FeatureExtractor<S> {
    /// Compact default: five stages of widths 16..128.
    pub fn default_seeded(seed: u64) -> Self {
        Self::random(&[16, 32, 64, 128, 128], seed)
    }

    /// A frozen pyramid with one 3×3 convolution per stage.
    pub fn random(widths: &[usize], seed: u64) -> Self {
        assert!(!widths.is_empty() && widths.len() <= 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut convs = Vec::new();
        let mut ci = 3;
        for (i, &co) in widths.iter().enumerate() {
            convs.push(Conv2d::new(
                &format!("feat.conv{}", i + 1),
                ci,
                co,
                [3, 3],
                [1, 1],
                [1, 1],
                &mut rng,
            ));
            ci = co;
        }
        Self {
            convs,
            pool: MaxPool2d::new(),
        }
    }

    pub fn stages(&self) -> usize {
        self.convs.len()
    }

    pub fn params(&self) -> Vec<&Param<S>> {
        self.convs.iter().flat_map(|c| c.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        self.convs.iter_mut().flat_map(|c| c.params_mut()).collect()
    }

    fn check_k(&self, image: &Frame<S>, k: usize) -> Result<()> {
        if k == 0 || k > self.stages() {
            return Err(Error::InvalidInput(format!(
                "stage {k} outside 1..{}",
                self.stages()
            )));
        }
        let div = 1usize << (k - 1);
        if image.height() % div != 0 || image.width() % div != 0 {
            return Err(Error::InvalidInput(format!(
                "image {}×{} not divisible by {div} for stage {k}",
                image.height(),
                image.width()
            )));
        }
        Ok(())
    }

    /// All stage outputs up to `k_max` (1-based, inclusive).
    pub fn forward_stages(&self, image: &Frame<S>, k_max: usize) -> Result<Vec<Array3<S>>> {
        self.check_k(image, k_max)?;
        let mut outs = Vec::new();
        let mut x = image.to_chw();
        for (i, conv) in self.convs.iter().take(k_max).enumerate() {
            if i > 0 {
                let (p, _) = self.pool.forward(&x);
                x = p;
            }
            x = relu_fwd(&conv.forward(&x));
            outs.push(x.clone());
        }
        Ok(outs)
    }

    /// Gradient of `Σ_K <grads[K], stage_K(image)>` with respect to the image
    /// (C,H,W); parameters stay frozen. `grads[i]` may be `None`.
    fn backward_to_image(
        &self,
        image: &Frame<S>,
        grads: &[Option<Array3<S>>],
    ) -> Array3<S> {
        let k_max = grads.len();
        // forward tape
        let mut conv_inputs = Vec::new();
        let mut relu_outs = Vec::new();
        let mut pool_idx: Vec<Option<(Vec<usize>, (usize, usize, usize))>> = Vec::new();
        let mut x = image.to_chw();
        for (i, conv) in self.convs.iter().take(k_max).enumerate() {
            if i > 0 {
                let dims = x.dim();
                let (p, idx) = self.pool.forward(&x);
                pool_idx.push(Some((idx, dims)));
                x = p;
            } else {
                pool_idx.push(None);
            }
            conv_inputs.push(x.clone());
            x = relu_fwd(&conv.forward(&x));
            relu_outs.push(x.clone());
        }
        // backward, injecting each stage's output gradient on the way down
        let mut g: Array3<S> = Array3::zeros(relu_outs[k_max - 1].dim());
        for i in (0..k_max).rev() {
            if let Some(gi) = &grads[i] {
                g = &g + gi;
            }
            let gr = relu_bwd(&relu_outs[i], &g);
            g = self.convs[i].backward_input(conv_inputs[i].dim(), &gr);
            if let Some((idx, dims)) = &pool_idx[i] {
                g = self.pool.backward(idx, &g, *dims);
            }
        }
        g
    }
}

/// Stage-K deep features of a frame.
pub fn extract_features<S: Scalar>(
    image: &Frame<S>,
    params: &FeatureExtractor<S>,
    k: usize,
) -> Result<Array3<S>> {
    let outs = params.forward_stages(image, k)?;
    Ok(outs.into_iter().last().unwrap())
}

/// Generator geometry. Encoders run `convs_per_stage[i]` 3×3 convolutions of
/// width `widths[i]` per stage with 2× pooling between stages; the decoder is
/// symmetric with nearest-neighbor upsampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow2RgbConfig {
    pub widths: Vec<usize>,
    pub convs_per_stage: Vec<usize>,
    /// Flow inputs are divided by this before encoding so their dynamic
    /// range matches image inputs.
    pub max_disp: f64,
}

impl Default for Flow2RgbConfig {
    fn default() -> Self {
        Self {
            widths: vec![64, 128, 256, 512],
            convs_per_stage: vec![2, 2, 4, 1],
            max_disp: 10.0,
        }
    }
}

impl Flow2RgbConfig {
    pub fn reduced() -> Self {
        Self {
            widths: vec![16, 32, 64, 128],
            convs_per_stage: vec![1, 1, 1, 1],
            max_disp: 5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() || self.widths.len() != self.convs_per_stage.len() {
            return Err(Error::Config(
                "widths and convs_per_stage must be non-empty and equal length".into(),
            ));
        }
        if self.convs_per_stage.iter().any(|&c| c == 0) {
            return Err(Error::Config("every stage needs at least one convolution".into()));
        }
        if !(self.max_disp > 0.0) {
            return Err(Error::Config("max_disp must be positive".into()));
        }
        Ok(())
    }

    /// Spatial divisibility the input must satisfy (one pooling between
    /// consecutive stages).
    pub fn required_divisor(&self) -> usize {
        1 << (self.widths.len() - 1)
    }
}

struct Stream<S: Scalar> {
    convs: Vec<Conv2d<S>>, // flattened; stage boundaries from cfg
}

struct StreamTape<S: Scalar> {
    conv_inputs: Vec<Array3<S>>,
    relu_outs: Vec<Array3<S>>,
    pools: Vec<Option<(Vec<usize>, (usize, usize, usize))>>, // per conv, pool applied before it
}

/// Generator parameters: two encoder streams, fusion convolution, decoder.
pub struct Flow2Rgb<S: Scalar> {
    cfg: Flow2RgbConfig,
    frame_stream: Stream<S>,
    flow_stream: Stream<S>,
    fuse: Conv2d<S>,
    dec_convs: Vec<Conv2d<S>>,
    dec_out: Conv2d<S>,
    up: Upsample2d,
}

impl<S: Scalar> Flow2Rgb<S> {
    pub fn new(cfg: Flow2RgbConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let build_stream = |ci0: usize, tag: &str, rng: &mut ChaCha8Rng| -> Stream<S> {
            let mut convs = Vec::new();
            let mut ci = ci0;
            for (si, (&w, &n)) in cfg.widths.iter().zip(cfg.convs_per_stage.iter()).enumerate() {
                for j in 0..n {
                    convs.push(Conv2d::new(
                        &format!("{tag}.s{}c{}", si + 1, j + 1),
                        ci,
                        w,
                        [3, 3],
                        [1, 1],
                        [1, 1],
                        rng,
                    ));
                    ci = w;
                }
            }
            Stream { convs }
        };
        let frame_stream = build_stream(3, "frame", &mut rng);
        let flow_stream = build_stream(2, "flow", &mut rng);
        let top = *cfg.widths.last().unwrap();
        let fuse = Conv2d::new("fuse", 2 * top, top, [3, 3], [1, 1], [1, 1], &mut rng);
        let mut dec_convs = Vec::new();
        for i in (0..cfg.widths.len() - 1).rev() {
            dec_convs.push(Conv2d::new(
                &format!("dec.s{}", i + 1),
                cfg.widths[i + 1],
                cfg.widths[i],
                [3, 3],
                [1, 1],
                [1, 1],
                &mut rng,
            ));
        }
        let dec_out = Conv2d::new("dec.out", cfg.widths[0], 3, [3, 3], [1, 1], [1, 1], &mut rng);
        Ok(Self {
            cfg,
            frame_stream,
            flow_stream,
            fuse,
            dec_convs,
            dec_out,
            up: Upsample2d,
        })
    }

    pub fn config(&self) -> &Flow2RgbConfig {
        &self.cfg
    }

    fn check_dims(&self, h: usize, w: usize) -> Result<()> {
        let d = self.cfg.required_divisor();
        if h % d != 0 || w % d != 0 {
            return Err(Error::Config(format!(
                "input {h}×{w} not divisible by {d}"
            )));
        }
        Ok(())
    }

    /// Stage boundaries: index of the first conv of each stage.
    fn stage_starts(&self) -> Vec<usize> {
        let mut starts = Vec::new();
        let mut acc = 0;
        for &n in &self.cfg.convs_per_stage {
            starts.push(acc);
            acc += n;
        }
        starts
    }

    fn run_stream(&self, stream: &Stream<S>, input: &Array3<S>) -> (Array3<S>, StreamTape<S>) {
        let starts = self.stage_starts();
        let pool = MaxPool2d::new();
        let mut tape = StreamTape {
            conv_inputs: Vec::new(),
            relu_outs: Vec::new(),
            pools: Vec::new(),
        };
        let mut x = input.clone();
        for (i, conv) in stream.convs.iter().enumerate() {
            // pool before the first conv of stages 2..
            if starts.contains(&i) && i != 0 {
                let dims = x.dim();
                let (p, idx) = pool.forward(&x);
                tape.pools.push(Some((idx, dims)));
                x = p;
            } else {
                tape.pools.push(None);
            }
            tape.conv_inputs.push(x.clone());
            x = relu_fwd(&conv.forward(&x));
            tape.relu_outs.push(x.clone());
        }
        (x.clone(), tape)
    }

    fn backward_stream(
        &mut self,
        which: StreamKind,
        tape: &StreamTape<S>,
        gout: &Array3<S>,
    ) {
        let pool = MaxPool2d::new();
        let mut g = gout.clone();
        let n = tape.relu_outs.len();
        for i in (0..n).rev() {
            let gr = relu_bwd(&tape.relu_outs[i], &g);
            let conv = match which {
                StreamKind::Frame => &mut self.frame_stream.convs[i],
                StreamKind::Flow => &mut self.flow_stream.convs[i],
            };
            g = conv.backward(&tape.conv_inputs[i], &gr);
            if let Some((idx, dims)) = &tape.pools[i] {
                g = pool.backward(idx, &g, *dims);
            }
        }
    }

    fn flow_input(&self, f_t: &FlowField<S>) -> Array3<S> {
        let (h, w) = (f_t.height(), f_t.width());
        let inv = S::one() / S::of(self.cfg.max_disp);
        let mut x = Array3::zeros((2, h, w));
        for y in 0..h {
            for xx in 0..w {
                x[[0, y, xx]] = f_t.u()[[y, xx]] * inv;
                x[[1, y, xx]] = f_t.v()[[y, xx]] * inv;
            }
        }
        x
    }

    fn forward_tape(
        &self,
        x_t: &Frame<S>,
        f_t: &FlowField<S>,
    ) -> Result<ForwardTape<S>> {
        if f_t.height() != x_t.height() || f_t.width() != x_t.width() {
            return Err(Error::Config(format!(
                "flow {}×{} does not match frame {}×{}",
                f_t.height(),
                f_t.width(),
                x_t.height(),
                x_t.width()
            )));
        }
        self.check_dims(x_t.height(), x_t.width())?;
        let warped = backward_warp(x_t, f_t)?;
        let (ffeat, frame_tape) = self.run_stream(&self.frame_stream, &warped.to_chw());
        let (gfeat, flow_tape) = self.run_stream(&self.flow_stream, &self.flow_input(f_t));
        let cat = ndarray::concatenate(Axis(0), &[ffeat.view(), gfeat.view()]).unwrap();
        let fused = relu_fwd(&self.fuse.forward(&cat));
        let mut dec_inputs = Vec::new();
        let mut dec_relu = Vec::new();
        let mut x = fused.clone();
        for conv in &self.dec_convs {
            let u = self.up.forward(&x);
            dec_inputs.push(u.clone());
            x = relu_fwd(&conv.forward(&u));
            dec_relu.push(x.clone());
        }
        let out_pre = self.dec_out.forward(&x);
        let out = sigmoid_fwd(&out_pre);
        Ok(ForwardTape {
            warped,
            frame_tape,
            flow_tape,
            cat,
            fused,
            dec_inputs,
            dec_relu,
            out,
        })
    }

    /// Deterministic inference pass; also returns the warped intermediate so
    /// callers can assert the warp-first contract.
    pub fn generate_traced(&self, x_t: &Frame<S>, f_t: &FlowField<S>) -> Result<(Frame<S>, Frame<S>)> {
        let tape = self.forward_tape(x_t, f_t)?;
        let frame = Frame::from_chw(&tape.out)?;
        Ok((frame, tape.warped))
    }

    pub fn generate(&self, x_t: &Frame<S>, f_t: &FlowField<S>) -> Result<Frame<S>> {
        Ok(self.generate_traced(x_t, f_t)?.0)
    }

    pub fn params(&self) -> Vec<&Param<S>> {
        let mut out = Vec::new();
        for c in &self.frame_stream.convs {
            out.extend(c.params());
        }
        for c in &self.flow_stream.convs {
            out.extend(c.params());
        }
        out.extend(self.fuse.params());
        for c in &self.dec_convs {
            out.extend(c.params());
        }
        out.extend(self.dec_out.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        let mut out: Vec<&mut Param<S>> = Vec::new();
        for c in &mut self.frame_stream.convs {
            out.extend(c.params_mut());
        }
        for c in &mut self.flow_stream.convs {
            out.extend(c.params_mut());
        }
        out.extend(self.fuse.params_mut());
        for c in &mut self.dec_convs {
            out.extend(c.params_mut());
        }
        out.extend(self.dec_out.params_mut());
        out
    }

    /// One forward/backward pass on a `(x_t, f_t, x_{t+1})` triple;
    /// accumulates parameter gradients, the caller owns the optimizer step.
    pub fn train_step(
        &mut self,
        x_t: &Frame<S>,
        f_t: &FlowField<S>,
        target: &Frame<S>,
        extractor: &FeatureExtractor<S>,
        lambda: S,
    ) -> Result<Flow2RgbLoss<S>> {
        if target.height() != x_t.height() || target.width() != x_t.width() {
            return Err(Error::InvalidInput("target shape mismatch".into()));
        }
        let tape = self.forward_tape(x_t, f_t)?;
        let pred = Frame::from_chw(&tape.out)?;
        let loss = loss_flow2rgb(&pred, target, extractor, lambda)?;

        // d(pixel)/d(pred) + lambda · d(feature)/d(pred)
        let tc = target.to_chw();
        let n = S::of(tc.len() as f64);
        let two = S::of(2.0);
        let mut gpred = ndarray::Zip::from(&tape.out)
            .and(&tc)
            .map_collect(|&p, &t| two * (p - t) / n);
        if lambda > S::zero() {
            let k = extractor.stages();
            let pf = extractor.forward_stages(&pred, k)?;
            let tf = extractor.forward_stages(target, k)?;
            let stage_grads: Vec<Option<Array3<S>>> = pf
                .iter()
                .zip(tf.iter())
                .map(|(a, b)| {
                    let m = S::of(a.len() as f64);
                    Some(ndarray::Zip::from(a).and(b).map_collect(|&x, &y| {
                        lambda * two * (x - y) / m
                    }))
                })
                .collect();
            let gfeat = extractor.backward_to_image(&pred, &stage_grads);
            gpred = &gpred + &gfeat;
        }

        // decoder
        let g = sigmoid_bwd(&tape.out, &gpred);
        let mut g = {
            let last_in = tape
                .dec_relu
                .last()
                .cloned()
                .unwrap_or_else(|| tape.fused.clone());
            self.dec_out.backward(&last_in, &g)
        };
        for i in (0..self.dec_convs.len()).rev() {
            let gr = relu_bwd(&tape.dec_relu[i], &g);
            let gu = self.dec_convs[i].backward(&tape.dec_inputs[i], &gr);
            g = self.up.backward(&gu);
        }
        // fusion
        let gr = relu_bwd(&tape.fused, &g);
        let gcat = self.fuse.backward(&tape.cat, &gr);
        let top = self.cfg.widths[self.cfg.widths.len() - 1];
        let gframe = gcat.slice(ndarray::s![..top, .., ..]).to_owned();
        let gflow = gcat.slice(ndarray::s![top.., .., ..]).to_owned();
        self.backward_stream(StreamKind::Frame, &tape.frame_tape, &gframe);
        self.backward_stream(StreamKind::Flow, &tape.flow_tape, &gflow);
        Ok(loss)
    }
}

#[derive(Clone, Copy)]
enum StreamKind {
    Frame,
    Flow,
}

struct ForwardTape<S: Scalar> {
    warped: Frame<S>,
    frame_tape: StreamTape<S>,
    flow_tape: StreamTape<S>,
    cat: Array3<S>,
    fused: Array3<S>,
    dec_inputs: Vec<Array3<S>>,
    dec_relu: Vec<Array3<S>>,
    out: Array3<S>,
}

/// Synthesizes the next frame: warp first, then encode/fuse/decode.
/// Output is sigmoid-bounded to [0, 1].
pub fn generate_next_frame<S: Scalar>(
    x_t: &Frame<S>,
    f_t: &FlowField<S>,
    params: &Flow2Rgb<S>,
) -> Result<Frame<S>> {
    params.generate(x_t, f_t)
}

/// The training-loss record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flow2RgbLoss<S: Scalar> {
    pub total: S,
    pub pixel: S,
    pub feature: S,
}

/// Pixel + deep-feature objective: mean squared pixel difference plus the sum
/// over extractor stages of mean squared feature differences, weighted by
/// `lambda`.
pub fn loss_flow2rgb<S: Scalar>(
    pred: &Frame<S>,
    target: &Frame<S>,
    extractor: &FeatureExtractor<S>,
    lambda: S,
) -> Result<Flow2RgbLoss<S>> {
    if pred.height() != target.height() || pred.width() != target.width() {
        return Err(Error::InvalidInput(format!(
            "pred {}×{} vs target {}×{}",
            pred.height(),
            pred.width(),
            target.height(),
            target.width()
        )));
    }
    if lambda < S::zero() {
        return Err(Error::InvalidInput("lambda must be nonnegative".into()));
    }
    let n = S::of((pred.height() * pred.width() * 3) as f64);
    let pixel = pred
        .pixels()
        .iter()
        .zip(target.pixels().iter())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<S>()
        / n;
    let k = extractor.stages();
    let pf = extractor.forward_stages(pred, k)?;
    let tf = extractor.forward_stages(target, k)?;
    let mut feature = S::zero();
    for (a, b) in pf.iter().zip(tf.iter()) {
        let m = S::of(a.len() as f64);
        feature = feature
            + a.iter()
                .zip(b.iter())
                .map(|(&x, &y)| (x - y) * (x - y))
                .sum::<S>()
                / m;
    }
    Ok(Flow2RgbLoss {
        total: pixel + lambda * feature,
        pixel,
        feature,
    })
}

/// Analytic gradient of `loss_flow2rgb(...).total` with respect to `pred`,
/// returned in (3,H,W) layout.
pub fn loss_flow2rgb_grad_pred<S: Scalar>(
    pred: &Frame<S>,
    target: &Frame<S>,
    extractor: &FeatureExtractor<S>,
    lambda: S,
) -> Result<Array3<S>> {
    loss_flow2rgb(pred, target, extractor, lambda)?;
    let n = S::of((pred.height() * pred.width() * 3) as f64);
    let two = S::of(2.0);
    let mut g = (&pred.to_chw() - &target.to_chw()).mapv(|d| two * d / n);
    let k = extractor.stages();
    let pf = extractor.forward_stages(pred, k)?;
    let tf = extractor.forward_stages(target, k)?;
    let stage_grads: Vec<Option<Array3<S>>> = pf
        .iter()
        .zip(tf.iter())
        .map(|(a, b)| {
            let m = S::of(a.len() as f64);
            Some((a - b).mapv(|d| lambda * two * d / m))
        })
        .collect();
    g = &g + &extractor.backward_to_image(pred, &stage_grads);
    Ok(g)
}
