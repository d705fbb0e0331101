//! Dynamic hand-gesture recognition from depth sequences and 2D hand
//! skeletons: dataset access, preprocessing, CNN+LSTM and skeleton LSTM
//! networks, score- and feature-level fusion, LOSO training and metrics.
//!
//! The numeric core is generic over [`Scalar`]; training runs in `f32`,
//! gradient checks in `f64`. Concrete aliases live at the crate root.

pub mod commands;
pub mod config;
pub mod container;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod preprocess;
pub mod scalar;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::Tensor;

/// Training precision.
pub type Real = f32;
pub type Tensor32 = tensor::Tensor<f32>;
pub type Tensor64 = tensor::Tensor<f64>;
pub type Params32 = nn::Parameters<f32>;
pub type Params64 = nn::Parameters<f64>;
pub type Clip32 = preprocess::Clip<f32>;
pub type Checkpoint32 = nn::Checkpoint<f32>;
