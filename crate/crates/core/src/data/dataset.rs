//! Dataset specification, deterministic splits and in-memory training sets.

use crate::types::{FlowField, FlowVolume, Frame, VideoClip};
use crate::{Error, Result, Scalar};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};

/// How videos are partitioned into train and test.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    /// Seeded shuffle, first `train_fraction` of videos go to training.
    Ratio { train_fraction: f64, seed: u64 },
    /// Explicit name prefixes (e.g. subject ranges).
    Explicit {
        train_prefixes: Vec<String>,
        test_prefixes: Vec<String>,
    },
}

/// On-disk dataset description: one subdirectory per video of zero-padded
/// PNG frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub root: PathBuf,
    pub split: SplitRule,
    pub height: usize,
    pub width: usize,
    /// Frames per training clip (M+1).
    pub clip_len: usize,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.clip_len < 2 {
            return Err(Error::Config("clip length must be at least 2".into()));
        }
        if let SplitRule::Ratio { train_fraction, .. } = &self.split {
            if !(0.0..=1.0).contains(train_fraction) {
                return Err(Error::Config(
                    "train fraction must lie in [0, 1]".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Deterministic train/test partition of the video directories under
/// `spec.root`, sorted by name before splitting.
pub fn scan_and_split(spec: &DatasetSpec) -> Result<(Vec<PathBuf>, Vec<PathBuf>)> {
    spec.validate()?;
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&spec.root)
        .map_err(|e| Error::Ingestion {
            path: spec.root.clone(),
            reason: e.to_string(),
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::Ingestion {
            path: spec.root.clone(),
            reason: "no video directories found".into(),
        });
    }
    match &spec.split {
        SplitRule::Ratio {
            train_fraction,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut shuffled = dirs;
            shuffled.shuffle(&mut rng);
            let n_train = ((shuffled.len() as f64) * train_fraction).round() as usize;
            let test = shuffled.split_off(n_train.min(shuffled.len()));
            Ok((shuffled, test))
        }
        SplitRule::Explicit {
            train_prefixes,
            test_prefixes,
        } => {
            let name = |p: &Path| {
                p.file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default()
            };
            let train = dirs
                .iter()
                .filter(|p| train_prefixes.iter().any(|pre| name(p).starts_with(pre)))
                .cloned()
                .collect();
            let test = dirs
                .iter()
                .filter(|p| test_prefixes.iter().any(|pre| name(p).starts_with(pre)))
                .cloned()
                .collect();
            Ok((train, test))
        }
    }
}

/// In-memory training corpus: clips paired with their backward flows.
#[derive(Debug, Clone)]
pub struct ClipSet<S: Scalar> {
    items: Vec<(VideoClip<S>, FlowVolume<S>)>,
}

/// One training example for the flow predictor: the crop's first frame and
/// its M subsequent backward flows.
pub struct FlowExample<'a, S: Scalar> {
    pub x0: &'a Frame<S>,
    pub flows: &'a [FlowField<S>],
}

/// One training triple for the frame generator.
pub struct FrameExample<'a, S: Scalar> {
    pub x_t: &'a Frame<S>,
    pub flow: &'a FlowField<S>,
    pub x_t1: &'a Frame<S>,
}

impl<S: Scalar> ClipSet<S> {
    pub fn new(items: Vec<(VideoClip<S>, FlowVolume<S>)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidInput("empty clip set".into()));
        }
        for (clip, flows) in &items {
            if flows.len() + 1 != clip.len() {
                return Err(Error::InvalidInput(format!(
                    "clip of {} frames needs {} flows, got {}",
                    clip.len(),
                    clip.len() - 1,
                    flows.len()
                )));
            }
            if flows.height() != clip.height() || flows.width() != clip.width() {
                return Err(Error::InvalidInput("flow/frame size mismatch".into()));
            }
        }
        Ok(Self { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[(VideoClip<S>, FlowVolume<S>)] {
        &self.items
    }

    /// Uniform random temporal crop of `m` steps from a uniform random clip.
    pub fn sample_flow_example<R: Rng>(&self, m: usize, rng: &mut R) -> Result<FlowExample<'_, S>> {
        let (clip, flows) = &self.items[rng.gen_range(0..self.items.len())];
        if clip.len() < m + 1 {
            return Err(Error::InvalidInput(format!(
                "clip of {} frames too short for {m}-step crops",
                clip.len()
            )));
        }
        let start = rng.gen_range(0..=clip.len() - (m + 1));
        Ok(FlowExample {
            x0: &clip.frames()[start],
            flows: &flows.flows()[start..start + m],
        })
    }

    /// Uniform random adjacent-frame triple.
    pub fn sample_frame_example<R: Rng>(&self, rng: &mut R) -> FrameExample<'_, S> {
        let (clip, flows) = &self.items[rng.gen_range(0..self.items.len())];
        let t = rng.gen_range(0..flows.len());
        FrameExample {
            x_t: &clip.frames()[t],
            flow: &flows.flows()[t],
            x_t1: &clip.frames()[t + 1],
        }
    }
}
