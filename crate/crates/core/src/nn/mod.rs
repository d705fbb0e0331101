//! Network descriptions, kernels, evaluation, fusion and weight transfer.

pub mod checkpoint;
pub mod fusion;
pub mod layers;
pub mod network;
pub mod params;
pub mod spec;
pub mod transfer;

pub use checkpoint::{Checkpoint, TrainingMeta};
pub use fusion::{fuse_scores_average, fuse_scores_max, predict, ScoreVector};
pub use network::{forward, Batch, LossAndGrad, Network};
pub use params::{init_parameters, Parameters};
pub use spec::{
    build_depth_cnn, build_depth_cnn_lstm, build_fl_concat, build_network, build_skeleton_lstm, Activation, ArchConfig,
    BranchSpec, FeatShape, InputKind, LayerKind, LayerShape, LayerSpec, NetworkKind, NetworkSpec, Widths,
};
pub use transfer::{transfer_conv_weights, warm_start_28, warm_start_fl};
