//! End-to-end orchestration: checkpoints, training loops and rollouts.

mod checkpoint;
mod predict;
mod train;

pub use checkpoint::{
    load_flow2rgb, load_flow_vae, save_flow2rgb, save_flow_vae, Checkpoint, KIND_FLOW2RGB,
    KIND_FLOW_VAE,
};
pub use predict::{
    baseline_copy, baseline_random_flow, predict_sequence, rollout_with_flows, PredictionResult,
    RolloutMode,
};
pub use train::{train_flow2rgb, train_flow_vae, StepLog, TrainConfig, TrainRun};
