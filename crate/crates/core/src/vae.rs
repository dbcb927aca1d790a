//! 3D conditional VAE for multi-step flow prediction.
//!
//! A volumetric encoder maps the (flow volume ⊕ replicated first frame) cube
//! to a latent Gaussian, a separate image encoder maps the first frame to a
//! code of the same dimension, and a volumetric decoder reconstructs the
//! normalized flow volume from the conditioned latent. Conditioning combines
//! multiplication and addition: `z' = z ⊙ e + e`.

use crate::nn::{
    relu_bwd, relu_fwd, sigmoid_bwd, sigmoid_fwd, BatchNorm3d, Conv2d, Conv3d, ConvTranspose3d,
    MaxPool3d, Param,
};
use crate::types::{ConditionedInputCube, Frame, NormalizedFlowField};
use crate::{Error, Result, Scalar};
use ndarray::{Array1, Array4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Model geometry. The default is the full 16×5×128×128 / D=2000
/// configuration; reduced configurations shrink M, the resolution, the
/// latent dimension and optionally the channel widths.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowVaeConfig {
    /// Number of predicted time steps (flow maps per volume).
    pub m: usize,
    pub height: usize,
    pub width: usize,
    /// Latent dimension D.
    pub latent_dim: usize,
    /// Normalization scale in pixels; displacements map to (0,1) via
    /// `d / (2·max_disp) + 0.5`.
    pub max_disp: f64,
    /// Divisor applied to the stock channel widths (64,64,128,256,512);
    /// 1 keeps the published architecture, larger values give desk-scale
    /// models that train in minutes on a CPU.
    pub channel_scale: usize,
}

impl Default for FlowVaeConfig {
    fn default() -> Self {
        Self {
            m: 16,
            height: 128,
            width: 128,
            latent_dim: 2000,
            max_disp: 10.0,
            channel_scale: 1,
        }
    }
}

impl FlowVaeConfig {
    /// Desk-scale configuration used by the convergence tests.
    pub fn reduced() -> Self {
        Self {
            m: 8,
            height: 64,
            width: 64,
            latent_dim: 256,
            max_disp: 5.0,
            channel_scale: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.height % 32 != 0 || self.width % 32 != 0 {
            return Err(Error::Config(format!(
                "resolution {}×{} must be divisible by 32",
                self.height, self.width
            )));
        }
        if self.m % 8 != 0 || self.m == 0 {
            return Err(Error::Config(format!(
                "M = {} must be a positive multiple of 8 (three temporal poolings)",
                self.m
            )));
        }
        if self.latent_dim == 0 {
            return Err(Error::Config("latent dimension must be positive".into()));
        }
        if !(self.max_disp > 0.0) {
            return Err(Error::Config("max_disp must be positive".into()));
        }
        if self.channel_scale == 0 {
            return Err(Error::Config("channel_scale must be positive".into()));
        }
        Ok(())
    }

    /// Encoder channel widths after applying `channel_scale`.
    pub fn channels(&self) -> [usize; 5] {
        let base = [64usize, 64, 128, 256, 512];
        base.map(|c| (c / self.channel_scale).max(4))
    }

    /// Extents of the bottleneck after the five encoder stages: the MeanVar
    /// and first decoder kernels take exactly this size (2×4×4 at the full
    /// configuration).
    pub fn bottleneck(&self) -> [usize; 3] {
        [self.m / 8, self.height / 32, self.width / 32]
    }
}

/// Gaussian over the latent space: `(mu, log variance)`, both of dimension D.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentDistribution<S: Scalar> {
    pub mu: Array1<S>,
    pub logvar: Array1<S>,
}

/// A sampled latent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode<S: Scalar> {
    pub z: Array1<S>,
}

/// Image-conditioning code of the same dimension as the latent.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageCode<S: Scalar> {
    pub e: Array1<S>,
}

/// The loss record of one training example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvaeLoss<S: Scalar> {
    pub total: S,
    pub recon: S,
    pub kl: S,
}

struct EncBlock<S: Scalar> {
    conv: Conv3d<S>,
    bn: BatchNorm3d<S>,
    pool: MaxPool3d,
}

struct DecBlock<S: Scalar> {
    conv: ConvTranspose3d<S>,
    bn: BatchNorm3d<S>,
}

/// Full parameter set of the flow-prediction model.
pub struct FlowVae<S: Scalar> {
    cfg: FlowVaeConfig,
    enc: Vec<EncBlock<S>>,
    mean_head: Conv3d<S>,
    logvar_head: Conv3d<S>,
    img_convs: Vec<Conv2d<S>>,
    img_head: Conv2d<S>,
    dec: Vec<DecBlock<S>>,
    dec_out: ConvTranspose3d<S>,
}

impl<S: Scalar> FlowVae<S> {
    pub fn new(cfg: FlowVaeConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = cfg.channels();
        let d = cfg.latent_dim;
        let [bt, bh, bw] = cfg.bottleneck();

        // encoder: VConv1..VConv5, each 3×3×3 stride-1 pad-1 conv + BN +
        // ReLU + max pool (spatial-only for the first two stages)
        let pools = [[1, 2, 2], [1, 2, 2], [2, 2, 2], [2, 2, 2], [2, 2, 2]];
        let mut enc = Vec::new();
        let mut ci = 5;
        for (i, (&co, pool)) in ch.iter().zip(pools.iter()).enumerate() {
            enc.push(EncBlock {
                conv: Conv3d::new(
                    &format!("enc.vconv{}", i + 1),
                    ci,
                    co,
                    [3, 3, 3],
                    [1, 1, 1],
                    [1, 1, 1],
                    &mut rng,
                ),
                bn: BatchNorm3d::new(&format!("enc.vbn{}", i + 1), co),
                pool: MaxPool3d::new(*pool),
            });
            ci = co;
        }
        let mean_head = Conv3d::new(
            "enc.mean",
            ch[4],
            d,
            [bt, bh, bw],
            [1, 1, 1],
            [0, 0, 0],
            &mut rng,
        );
        let logvar_head = Conv3d::new(
            "enc.logvar",
            ch[4],
            d,
            [bt, bh, bw],
            [1, 1, 1],
            [0, 0, 0],
            &mut rng,
        );

        // image encoder: five stride-2 4×4 convs + a head collapsing the
        // remaining extent to 1×1
        let mut img_convs = Vec::new();
        let mut ci = 3;
        for (i, &co) in ch.iter().enumerate() {
            img_convs.push(Conv2d::new(
                &format!("img.conv{}", i + 1),
                ci,
                co,
                [4, 4],
                [2, 2],
                [1, 1],
                &mut rng,
            ));
            ci = co;
        }
        let img_head = Conv2d::new("img.conv6", ch[4], d, [bh, bw], [1, 1], [0, 0], &mut rng);

        // decoder: VFConv5..VFConv1 + Output
        let mut dec = Vec::new();
        dec.push(DecBlock {
            conv: ConvTranspose3d::new(
                "dec.vfconv5",
                d,
                ch[4],
                [bt, bh, bw],
                [1, 1, 1],
                [0, 0, 0],
                &mut rng,
            ),
            bn: BatchNorm3d::new("dec.vbn5", ch[4]),
        });
        for (i, (&ci, &co)) in [(ch[4], ch[3]), (ch[3], ch[2]), (ch[2], ch[1])]
            .iter()
            .map(|(a, b)| (a, b))
            .enumerate()
        {
            dec.push(DecBlock {
                conv: ConvTranspose3d::new(
                    &format!("dec.vfconv{}", 4 - i),
                    ci,
                    co,
                    [4, 4, 4],
                    [2, 2, 2],
                    [1, 1, 1],
                    &mut rng,
                ),
                bn: BatchNorm3d::new(&format!("dec.vbn{}", 4 - i), co),
            });
        }
        dec.push(DecBlock {
            conv: ConvTranspose3d::new(
                "dec.vfconv1",
                ch[1],
                ch[0],
                [3, 4, 4],
                [1, 2, 2],
                [1, 1, 1],
                &mut rng,
            ),
            bn: BatchNorm3d::new("dec.vbn1", ch[0]),
        });
        let dec_out = ConvTranspose3d::new(
            "dec.out",
            ch[0],
            2,
            [3, 4, 4],
            [1, 2, 2],
            [1, 1, 1],
            &mut rng,
        );

        Ok(Self {
            cfg,
            enc,
            mean_head,
            logvar_head,
            img_convs,
            img_head,
            dec,
            dec_out,
        })
    }

    pub fn config(&self) -> &FlowVaeConfig {
        &self.cfg
    }

    fn check_cube(&self, cube: &ConditionedInputCube<S>) -> Result<()> {
        let (m, c, h, w) = cube.data().dim();
        if m != self.cfg.m || c != 5 || h != self.cfg.height || w != self.cfg.width {
            return Err(Error::Config(format!(
                "cube {m}×{c}×{h}×{w} does not match configuration {}×5×{}×{}",
                self.cfg.m, self.cfg.height, self.cfg.width
            )));
        }
        Ok(())
    }

    /// Per-stage encoder extents `(C, T, H, W)`, bottleneck included; used by
    /// the shape-contract tests.
    pub fn encoder_stage_dims(&self) -> Vec<(usize, usize, usize, usize)> {
        let ch = self.cfg.channels();
        let mut t = self.cfg.m;
        let mut h = self.cfg.height;
        let mut w = self.cfg.width;
        let pools = [[1, 2, 2], [1, 2, 2], [2, 2, 2], [2, 2, 2], [2, 2, 2]];
        let mut dims = vec![(5, t, h, w)];
        for (c, p) in ch.iter().zip(pools.iter()) {
            t /= p[0];
            h /= p[1];
            w /= p[2];
            dims.push((*c, t, h, w));
        }
        dims.push((self.cfg.latent_dim, 1, 1, 1));
        dims
    }

    /// Runs the volumetric encoder. Deterministic given (cube, parameters).
    pub fn encode(&self, cube: &ConditionedInputCube<S>) -> Result<LatentDistribution<S>> {
        self.check_cube(cube)?;
        let mut x = cube.to_ctime();
        for block in &self.enc {
            let y = block.conv.forward(&x);
            let (y, _) = block.bn.forward(&y);
            let y = relu_fwd(&y);
            let (y, _) = block.pool.forward(&y);
            x = y;
        }
        let mu = self.mean_head.forward(&x);
        let lv = self.logvar_head.forward(&x);
        let d = self.cfg.latent_dim;
        Ok(LatentDistribution {
            mu: mu.into_shape(d).unwrap(),
            logvar: lv.into_shape(d).unwrap(),
        })
    }

    /// Runs the image encoder on the starting frame.
    pub fn encode_image(&self, x0: &Frame<S>) -> Result<ImageCode<S>> {
        if x0.height() != self.cfg.height || x0.width() != self.cfg.width {
            return Err(Error::Config(format!(
                "frame {}×{} does not match configuration {}×{}",
                x0.height(),
                x0.width(),
                self.cfg.height,
                self.cfg.width
            )));
        }
        let mut x = x0.to_chw();
        for conv in &self.img_convs {
            x = relu_fwd(&conv.forward(&x));
        }
        let e = self.img_head.forward(&x);
        Ok(ImageCode {
            e: e.into_shape(self.cfg.latent_dim).unwrap(),
        })
    }

    /// Decodes a conditioned latent into M normalized flow maps. The final
    /// sigmoid keeps every value in (0, 1).
    pub fn decode(&self, zc: &LatentCode<S>) -> Result<Vec<NormalizedFlowField<S>>> {
        if zc.z.len() != self.cfg.latent_dim {
            return Err(Error::Config(format!(
                "latent dimension {} does not match configuration {}",
                zc.z.len(),
                self.cfg.latent_dim
            )));
        }
        let mut x = zc
            .z
            .clone()
            .into_shape((self.cfg.latent_dim, 1, 1, 1))
            .unwrap();
        for block in &self.dec {
            let y = block.conv.forward(&x);
            let (y, _) = block.bn.forward(&y);
            x = relu_fwd(&y);
        }
        let out = sigmoid_fwd(&self.dec_out.forward(&x));
        Ok(self.volume_to_nflows(&out))
    }

    fn volume_to_nflows(&self, vol: &Array4<S>) -> Vec<NormalizedFlowField<S>> {
        let (_, m, h, w) = vol.dim();
        let md = S::of(self.cfg.max_disp);
        (0..m)
            .map(|t| {
                let mut u = ndarray::Array2::zeros((h, w));
                let mut v = ndarray::Array2::zeros((h, w));
                for y in 0..h {
                    for x in 0..w {
                        u[[y, x]] = vol[[0, t, y, x]];
                        v[[y, x]] = vol[[1, t, y, x]];
                    }
                }
                NormalizedFlowField::from_parts(u, v, md).expect("sigmoid output in (0,1)")
            })
            .collect()
    }

    /// Stacks normalized flow maps into the 2×M×H×W tensor the decoder
    /// produces (channel 0 = u, channel 1 = v).
    pub fn nflows_to_volume(nflows: &[NormalizedFlowField<S>]) -> Array4<S> {
        let m = nflows.len();
        let (h, w) = (nflows[0].height(), nflows[0].width());
        let mut vol = Array4::zeros((2, m, h, w));
        for (t, nf) in nflows.iter().enumerate() {
            for y in 0..h {
                for x in 0..w {
                    vol[[0, t, y, x]] = nf.u()[[y, x]];
                    vol[[1, t, y, x]] = nf.v()[[y, x]];
                }
            }
        }
        vol
    }

    pub fn params(&self) -> Vec<&Param<S>> {
        let mut out = Vec::new();
        for b in &self.enc {
            out.extend(b.conv.params());
            out.extend(b.bn.params());
        }
        out.extend(self.mean_head.params());
        out.extend(self.logvar_head.params());
        for c in &self.img_convs {
            out.extend(c.params());
        }
        out.extend(self.img_head.params());
        for b in &self.dec {
            out.extend(b.conv.params());
            out.extend(b.bn.params());
        }
        out.extend(self.dec_out.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        let mut out: Vec<&mut Param<S>> = Vec::new();
        for b in &mut self.enc {
            out.extend(b.conv.params_mut());
            out.extend(b.bn.params_mut());
        }
        out.extend(self.mean_head.params_mut());
        out.extend(self.logvar_head.params_mut());
        for c in &mut self.img_convs {
            out.extend(c.params_mut());
        }
        out.extend(self.img_head.params_mut());
        for b in &mut self.dec {
            out.extend(b.conv.params_mut());
            out.extend(b.bn.params_mut());
        }
        out.extend(self.dec_out.params_mut());
        out
    }

    /// One forward/backward pass on a single training example. Gradients are
    /// accumulated into the parameter set; the caller owns the optimizer
    /// step. `eps` is the reparameterization noise.
    pub fn train_step(
        &mut self,
        cube: &ConditionedInputCube<S>,
        x0: &Frame<S>,
        target: &Array4<S>,
        eps: &Array1<S>,
        kl_weight: S,
    ) -> Result<CvaeLoss<S>> {
        self.check_cube(cube)?;
        let d = self.cfg.latent_dim;
        if eps.len() != d {
            return Err(Error::InvalidInput("eps dimension mismatch".into()));
        }

        // ---- forward with tapes ----
        let mut enc_inputs = Vec::new();
        let mut enc_bn_caches = Vec::new();
        let mut enc_relu_outs = Vec::new();
        let mut enc_pool_idx = Vec::new();
        let mut x = cube.to_ctime();
        for block in &self.enc {
            enc_inputs.push(x.clone());
            let y = block.conv.forward(&x);
            let (y, bc) = block.bn.forward(&y);
            let y = relu_fwd(&y);
            enc_bn_caches.push(bc);
            let (p, idx) = block.pool.forward(&y);
            enc_relu_outs.push(y);
            enc_pool_idx.push(idx);
            x = p;
        }
        let bottleneck = x;
        let mu4 = self.mean_head.forward(&bottleneck);
        let lv4 = self.logvar_head.forward(&bottleneck);
        let mu = mu4.clone().into_shape(d).unwrap();
        let logvar = lv4.clone().into_shape(d).unwrap();
        let sigma = logvar.mapv(|v| (S::of(0.5) * v).exp());
        let z = &mu + &(&sigma * eps);

        let mut img_inputs = Vec::new();
        let mut img_outs = Vec::new();
        let mut ix = x0.to_chw();
        for conv in &self.img_convs {
            img_inputs.push(ix.clone());
            let y = relu_fwd(&conv.forward(&ix));
            img_outs.push(y.clone());
            ix = y;
        }
        let img_head_in = ix;
        let e = self
            .img_head
            .forward(&img_head_in)
            .into_shape(d)
            .unwrap();

        let zc = &(&z * &e) + &e;

        let mut dec_inputs = Vec::new();
        let mut dec_bn_caches = Vec::new();
        let mut dec_relu_outs = Vec::new();
        let mut dx = zc.clone().into_shape((d, 1, 1, 1)).unwrap();
        for block in &self.dec {
            dec_inputs.push(dx.clone());
            let y = block.conv.forward(&dx);
            let (y, bc) = block.bn.forward(&y);
            let y = relu_fwd(&y);
            dec_bn_caches.push(bc);
            dec_relu_outs.push(y.clone());
            dx = y;
        }
        let out_in = dx;
        let pred = sigmoid_fwd(&self.dec_out.forward(&out_in));

        // ---- losses ----
        if pred.dim() != target.dim() {
            return Err(Error::InvalidInput("target volume shape mismatch".into()));
        }
        let count = S::of(pred.len() as f64);
        let recon = pred
            .iter()
            .zip(target.iter())
            .map(|(&p, &t)| (p - t).abs())
            .sum::<S>()
            / count;
        let kl = kl_divergence(&LatentDistribution {
            mu: mu.clone(),
            logvar: logvar.clone(),
        })?;
        let total = recon + kl_weight * kl;
        if !total.is_finite() {
            return Err(Error::InvalidInput("non-finite loss".into()));
        }

        // ---- backward ----
        let mut gpred = Array4::zeros(pred.raw_dim());
        ndarray::Zip::from(&mut gpred)
            .and(&pred)
            .and(target)
            .for_each(|g, &p, &t| {
                *g = if p > t {
                    S::one() / count
                } else if p < t {
                    -S::one() / count
                } else {
                    S::zero()
                };
            });
        let g = sigmoid_bwd(&pred, &gpred);
        let mut g = self.dec_out.backward(&out_in, &g);
        for i in (0..self.dec.len()).rev() {
            let gr = relu_bwd(&dec_relu_outs[i], &g);
            let gb = self.dec[i].bn.backward(&dec_bn_caches[i], &gr);
            g = self.dec[i].conv.backward(&dec_inputs[i], &gb);
        }
        let gzc = g.into_shape(d).unwrap();

        let gz = &gzc * &e;
        let ge = &(&gzc * &z) + &gzc;

        // image encoder path
        let ge3 = ge.into_shape((d, 1, 1)).unwrap();
        let mut gi = self.img_head.backward(&img_head_in, &ge3);
        for i in (0..self.img_convs.len()).rev() {
            let gr = relu_bwd(&img_outs[i], &gi);
            gi = self.img_convs[i].backward(&img_inputs[i], &gr);
        }

        // latent path: reparameterization + KL
        let half = S::of(0.5);
        let gmu = &gz + &mu.mapv(|m| m * kl_weight);
        let glv_sample = ndarray::Zip::from(&gz)
            .and(&sigma)
            .and(eps)
            .map_collect(|&g, &s, &ep| g * half * s * ep);
        let glv_kl = logvar.mapv(|v| kl_weight * half * (v.exp() - S::one()));
        let glv = &glv_sample + &glv_kl;

        let gmu4 = gmu.into_shape(mu4.raw_dim()).unwrap();
        let glv4 = glv.into_shape(lv4.raw_dim()).unwrap();
        let gb1 = self.mean_head.backward(&bottleneck, &gmu4);
        let gb2 = self.logvar_head.backward(&bottleneck, &glv4);
        let mut g = &gb1 + &gb2;
        for i in (0..self.enc.len()).rev() {
            let dims = enc_relu_outs[i].dim();
            let gp = self.enc[i].pool.backward(&enc_pool_idx[i], &g, dims);
            let gr = relu_bwd(&enc_relu_outs[i], &gp);
            let gb = self.enc[i].bn.backward(&enc_bn_caches[i], &gr);
            g = self.enc[i].conv.backward(&enc_inputs[i], &gb);
        }

        Ok(CvaeLoss { total, recon, kl })
    }
}

/// Encoder entry point.
pub fn vae_encode<S: Scalar>(
    cube: &ConditionedInputCube<S>,
    params: &FlowVae<S>,
) -> Result<LatentDistribution<S>> {
    params.encode(cube)
}

/// Reparameterized sampling: `z = mu + exp(logvar / 2) ⊙ eps`.
pub fn sample_latent<S: Scalar>(
    dist: &LatentDistribution<S>,
    eps: &Array1<S>,
) -> Result<LatentCode<S>> {
    if dist.mu.len() != eps.len() || dist.mu.len() != dist.logvar.len() {
        return Err(Error::InvalidInput("latent dimension mismatch".into()));
    }
    let half = S::of(0.5);
    let z = ndarray::Zip::from(&dist.mu)
        .and(&dist.logvar)
        .and(eps)
        .map_collect(|&m, &lv, &ep| m + (half * lv).exp() * ep);
    Ok(LatentCode { z })
}

/// Image-encoder entry point.
pub fn encode_image<S: Scalar>(x0: &Frame<S>, params: &FlowVae<S>) -> Result<ImageCode<S>> {
    params.encode_image(x0)
}

/// Multiply-add conditioning: `z' = z ⊙ e + e`.
pub fn condition_latent<S: Scalar>(z: &LatentCode<S>, e: &ImageCode<S>) -> Result<LatentCode<S>> {
    if z.z.len() != e.e.len() {
        return Err(Error::InvalidInput("latent dimension mismatch".into()));
    }
    Ok(LatentCode {
        z: &(&z.z * &e.e) + &e.e,
    })
}

/// Decoder entry point.
pub fn vae_decode<S: Scalar>(
    zc: &LatentCode<S>,
    params: &FlowVae<S>,
) -> Result<Vec<NormalizedFlowField<S>>> {
    params.decode(zc)
}

/// Closed-form KL divergence from `N(mu, diag(exp(logvar)))` to `N(0, I)`:
/// `0.5 Σ (exp(logvar) + mu² − 1 − logvar)`.
pub fn kl_divergence<S: Scalar>(dist: &LatentDistribution<S>) -> Result<S> {
    if dist
        .mu
        .iter()
        .chain(dist.logvar.iter())
        .any(|v| !v.is_finite())
    {
        return Err(Error::InvalidInput("non-finite latent parameters".into()));
    }
    let half = S::of(0.5);
    let kl = ndarray::Zip::from(&dist.mu)
        .and(&dist.logvar)
        .fold(S::zero(), |acc, &m, &lv| {
            acc + half * (lv.exp() + m * m - S::one() - lv)
        });
    Ok(kl)
}

/// Eq.-style training objective on normalized flows: mean absolute
/// reconstruction error plus weighted KL.
pub fn loss_cvae<S: Scalar>(
    pred: &[NormalizedFlowField<S>],
    target: &[NormalizedFlowField<S>],
    dist: &LatentDistribution<S>,
    kl_weight: S,
) -> Result<CvaeLoss<S>> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::InvalidInput("flow list length mismatch".into()));
    }
    let mut sum = S::zero();
    let mut count = 0usize;
    for (p, t) in pred.iter().zip(target.iter()) {
        if p.height() != t.height() || p.width() != t.width() {
            return Err(Error::InvalidInput("flow map shape mismatch".into()));
        }
        for (a, b) in p.u().iter().zip(t.u().iter()) {
            sum = sum + (*a - *b).abs();
            count += 1;
        }
        for (a, b) in p.v().iter().zip(t.v().iter()) {
            sum = sum + (*a - *b).abs();
            count += 1;
        }
    }
    let recon = sum / S::of(count as f64);
    let kl = kl_divergence(dist)?;
    Ok(CvaeLoss {
        total: recon + kl_weight * kl,
        recon,
        kl,
    })
}

/// L1 subgradient of [`loss_cvae`]'s reconstruction term with respect to the
/// prediction, as a 2×M×H×W volume (used by training and gradient checks).
pub fn loss_cvae_grad_pred<S: Scalar>(pred: &Array4<S>, target: &Array4<S>) -> Array4<S> {
    let count = S::of(pred.len() as f64);
    let mut g = Array4::zeros(pred.raw_dim());
    ndarray::Zip::from(&mut g).and(pred).and(target).for_each(|gv, &p, &t| {
        *gv = if p > t {
            S::one() / count
        } else if p < t {
            -S::one() / count
        } else {
            S::zero()
        };
    });
    g
}
