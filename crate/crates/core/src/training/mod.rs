//! Optimizers, training recipes, the training loop and the LOSO driver.

pub mod data;
pub mod loso;
pub mod optim;
pub mod plan;
pub mod predictions;
pub mod trainer;

pub use data::{frame_batch, frame_samples, load_clips, sequence_batch};
pub use loso::{
    checkpoint_path, fold_dir, prediction_path, run_fold, run_loso, run_loso_with, Experiment, FoldOutput, FoldResult,
    TrainedNetwork,
};
pub use optim::{adadelta_step, adam_step, Optimizer, OptimizerConfig, OptimizerState};
pub use plan::{InitMode, PlanOverride, PlanSet, TrainPlan, REFERENCE_TIMESTEP};
pub use predictions::{accuracy, Prediction, PredictionFile};
pub use trainer::{derive_seed, predict_clips, pretrain_depth_cnn, train_network, TrainHistory, TrainSet};
