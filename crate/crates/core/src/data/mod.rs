//! Data plumbing: ingestion, datasets, flow estimation, synthetic clips and
//! flow-file I/O.

mod dataset;
mod estimator;
mod flo;
mod ingest;
mod synthetic;

pub use dataset::{scan_and_split, ClipSet, DatasetSpec, FlowExample, FrameExample, SplitRule};
pub use estimator::{estimate_backward_flow, FlowEstimator};
pub use flo::{read_flo, write_flo};
pub use ingest::{ingest_video, write_frame_png};
pub use synthetic::{
    make_synthetic, MotionKind, ProceduralTexture, SyntheticClip, SyntheticClipSpec,
};
