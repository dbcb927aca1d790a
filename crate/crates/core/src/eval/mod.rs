//! Quantitative evaluation: frame/flow RMSE, a feature-space perceptual
//! metric, multi-sample diversity statistics and a deterministic 2-D
//! sequence embedding.

use crate::data::FlowEstimator;
use crate::flow2rgb::FeatureExtractor;
use crate::types::Frame;
use crate::{Error, Result, Scalar};
use nalgebra::{DMatrix, SymmetricEigen};
use std::path::Path;

/// Per-step root-mean-square pixel error between two equally long frame
/// sequences.
pub fn rmse_frames<S: Scalar>(pred: &[Frame<S>], gt: &[Frame<S>]) -> Result<Vec<S>> {
    if pred.len() != gt.len() || pred.is_empty() {
        return Err(Error::InvalidInput(format!(
            "sequence lengths differ: {} vs {}",
            pred.len(),
            gt.len()
        )));
    }
    pred.iter()
        .zip(gt.iter())
        .map(|(p, g)| {
            if p.height() != g.height() || p.width() != g.width() {
                return Err(Error::InvalidInput("frame dimensions differ".into()));
            }
            let n = S::of(p.pixels().len() as f64);
            let se = p
                .pixels()
                .iter()
                .zip(g.pixels().iter())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<S>();
            Ok((se / n).sqrt())
        })
        .collect()
}

/// Per-step RMSE between the flows estimated on the predicted sequence and
/// on the ground-truth sequence (pixel units; length M−1 for M frames).
pub fn rmse_flows<S: Scalar>(
    pred: &[Frame<S>],
    gt: &[Frame<S>],
    est: &FlowEstimator<S>,
) -> Result<Vec<S>> {
    if pred.len() != gt.len() || pred.len() < 2 {
        return Err(Error::InvalidInput(
            "need two equally long sequences of ≥ 2 frames".into(),
        ));
    }
    let mut out = Vec::with_capacity(pred.len() - 1);
    for t in 0..pred.len() - 1 {
        let fp = est
            .estimate_at(t, &pred[t], &pred[t + 1])
            .map_err(|e| Error::Eval(format!("step {t} (pred): {e}")))?;
        let fg = est
            .estimate_at(t, &gt[t], &gt[t + 1])
            .map_err(|e| Error::Eval(format!("step {t} (gt): {e}")))?;
        if fp.height() != fg.height() || fp.width() != fg.width() {
            return Err(Error::Eval("estimated flow sizes differ".into()));
        }
        let n = S::of((2 * fp.height() * fp.width()) as f64);
        let se = fp
            .u()
            .iter()
            .zip(fg.u().iter())
            .chain(fp.v().iter().zip(fg.v().iter()))
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<S>();
        out.push((se / n).sqrt());
    }
    Ok(out)
}

/// Feature-space distance: the sum over extractor stages of the mean squared
/// difference between unit-normalized stage features. Zero iff the stage
/// features coincide; symmetric.
pub fn perceptual_dissimilarity<S: Scalar>(
    pred: &Frame<S>,
    gt: &Frame<S>,
    extractor: &FeatureExtractor<S>,
) -> Result<S> {
    if pred.height() != gt.height() || pred.width() != gt.width() {
        return Err(Error::InvalidInput("frame dimensions differ".into()));
    }
    let k = extractor.stages();
    let pf = extractor.forward_stages(pred, k)?;
    let gf = extractor.forward_stages(gt, k)?;
    let mut total = S::zero();
    for (a, b) in pf.iter().zip(gf.iter()) {
        let na = a.iter().map(|&v| v * v).sum::<S>().sqrt();
        let nb = b.iter().map(|&v| v * v).sum::<S>().sqrt();
        let eps = S::of(1e-12);
        let (na, nb) = (na.max(eps), nb.max(eps));
        let m = S::of(a.len() as f64);
        let se = a
            .iter()
            .zip(b.iter())
            .map(|(&x, &y)| {
                let d = x / na - y / nb;
                d * d
            })
            .sum::<S>();
        total = total + se / m;
    }
    Ok(total)
}

/// Per-step mean/std of perceptual dissimilarity across samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityStats<S: Scalar> {
    pub mean: Vec<S>,
    pub std: Vec<S>,
}

/// Per-time-step mean and (population) standard deviation of
/// `perceptual_dissimilarity(sample_t, gt_t)` across the N sampled sequences.
pub fn diversity_stats<S: Scalar>(
    samples: &[Vec<Frame<S>>],
    gt: &[Frame<S>],
    extractor: &FeatureExtractor<S>,
) -> Result<DiversityStats<S>> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 samples".into()));
    }
    let m = gt.len();
    if m == 0 || samples.iter().any(|s| s.len() != m) {
        return Err(Error::InvalidInput("sample/gt lengths differ".into()));
    }
    let n = S::of(samples.len() as f64);
    let mut mean = Vec::with_capacity(m);
    let mut std = Vec::with_capacity(m);
    for t in 0..m {
        let vals = samples
            .iter()
            .map(|s| perceptual_dissimilarity(&s[t], &gt[t], extractor))
            .collect::<Result<Vec<S>>>()?;
        let mu = vals.iter().copied().sum::<S>() / n;
        // exact zero spread when all values coincide (guards fp rounding)
        let var = if vals.iter().all(|&v| v == vals[0]) {
            S::zero()
        } else {
            vals.iter().map(|&v| (v - mu) * (v - mu)).sum::<S>() / n
        };
        mean.push(mu);
        std.push(var.sqrt());
    }
    Ok(DiversityStats { mean, std })
}

/// A 2-D embedding coordinate for one sequence (or frame).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingPoint {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

/// Top-stage feature descriptor of a sequence: the flattened deepest-stage
/// features of every frame, concatenated in time order.
fn sequence_descriptor<S: Scalar>(
    seq: &[Frame<S>],
    extractor: &FeatureExtractor<S>,
) -> Result<Vec<f64>> {
    let k = extractor.stages();
    let mut out = Vec::new();
    for f in seq {
        let feat = extractor.forward_stages(f, k)?.pop().unwrap();
        out.extend(feat.iter().map(|&v| v.to_f64c()));
    }
    Ok(out)
}

/// Deterministic rank-2 principal-component projection via the Gram matrix.
/// Eigenvector signs are fixed so identical inputs give identical outputs.
fn pca2(descriptors: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    let n = descriptors.len();
    let d = descriptors[0].len();
    if descriptors.iter().any(|v| v.len() != d) {
        return Err(Error::InvalidInput("descriptor lengths differ".into()));
    }
    // center
    let mut mean = vec![0.0; d];
    for v in descriptors {
        for (m, &x) in mean.iter_mut().zip(v) {
            *m += x / n as f64;
        }
    }
    let x = DMatrix::from_fn(n, d, |i, j| descriptors[i][j] - mean[j]);
    let gram = &x * x.transpose(); // n×n
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
    });
    let mut coords = vec![(0.0, 0.0); n];
    for (axis, &ei) in order.iter().take(2).enumerate() {
        let lam = eig.eigenvalues[ei].max(0.0);
        let col = eig.eigenvectors.column(ei);
        // sign convention: largest-magnitude component positive
        let mut sign = 1.0;
        let mut best = 0.0;
        for &c in col.iter() {
            if c.abs() > best {
                best = c.abs();
                sign = if c < 0.0 { -1.0 } else { 1.0 };
            }
        }
        for (i, &c) in col.iter().enumerate() {
            let val = sign * c * lam.sqrt();
            if axis == 0 {
                coords[i].0 = val;
            } else {
                coords[i].1 = val;
            }
        }
    }
    Ok(coords)
}

/// Embeds each sequence as one 2-D point (principal-component projection of
/// the deep descriptors, fit on the given set).
pub fn embed_sequences<S: Scalar>(
    seqs: &[Vec<Frame<S>>],
    extractor: &FeatureExtractor<S>,
) -> Result<Vec<EmbeddingPoint>> {
    if seqs.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 sequences".into()));
    }
    let descriptors = seqs
        .iter()
        .map(|s| {
            if s.is_empty() {
                return Err(Error::InvalidInput("empty sequence".into()));
            }
            sequence_descriptor(s, extractor)
        })
        .collect::<Result<Vec<_>>>()?;
    let coords = pca2(&descriptors)?;
    Ok(coords
        .into_iter()
        .enumerate()
        .map(|(id, (x, y))| EmbeddingPoint { id, x, y })
        .collect())
}

/// Embeds each frame of one sequence as a 2-D point.
pub fn embed_frames<S: Scalar>(
    frames: &[Frame<S>],
    extractor: &FeatureExtractor<S>,
) -> Result<Vec<EmbeddingPoint>> {
    if frames.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 frames".into()));
    }
    let descriptors = frames
        .iter()
        .map(|f| sequence_descriptor(std::slice::from_ref(f), extractor))
        .collect::<Result<Vec<_>>>()?;
    let coords = pca2(&descriptors)?;
    Ok(coords
        .into_iter()
        .enumerate()
        .map(|(id, (x, y))| EmbeddingPoint { id, x, y })
        .collect())
}

/// Collected metric vectors keyed by (method, metric), serialized as CSV
/// with columns `method,metric,t,value`.
#[derive(Debug, Clone, Default)]
pub struct MetricsReport {
    rows: Vec<(String, String, usize, f64)>,
    metadata: Vec<(String, String)>,
}

impl MetricsReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_metadata(&mut self, key: &str, value: &str) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn add_vector<S: Scalar>(
        &mut self,
        method: &str,
        metric: &str,
        values: &[S],
    ) -> Result<()> {
        for (t, &v) in values.iter().enumerate() {
            let v = v.to_f64c();
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Eval(format!(
                    "{method}/{metric}[{t}] = {v} is not a valid metric value"
                )));
            }
            self.rows.push((method.to_string(), metric.to_string(), t, v));
        }
        Ok(())
    }

    pub fn rows(&self) -> &[(String, String, usize, f64)] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            s.push_str(&format!("# {k}={v}\n"));
        }
        s.push_str("method,metric,t,value\n");
        for (method, metric, t, v) in &self.rows {
            s.push_str(&format!("{method},{metric},{t},{v}\n"));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Embedding points as CSV (`id,x,y`).
pub fn embedding_to_csv(points: &[EmbeddingPoint]) -> String {
    let mut s = String::from("id,x,y\n");
    for p in points {
        s.push_str(&format!("{},{},{}\n", p.id, p.x, p.y));
    }
    s
}
