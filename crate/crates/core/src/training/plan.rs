//! Training recipes.

use serde::{Deserialize, Serialize};

use super::optim::OptimizerConfig;
use crate::error::{Error, Result};
use crate::nn::NetworkKind;

/// How a network's parameters start out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Random,
    /// Conv layers copied from the fold's pretrained per-frame CNN.
    Transfer,
    /// Branch trunks copied from the fold's trained single-modality networks.
    Warm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainPlan {
    pub network: NetworkKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub timestep: usize,
    pub optimizer: OptimizerConfig,
    pub init: InitMode,
}

pub const REFERENCE_TIMESTEP: usize = 32;

impl TrainPlan {
    /// The published recipe for `network`.
    pub fn reference(network: NetworkKind) -> Self {
        let (epochs, batch_size, optimizer, init) = match network {
            NetworkKind::DepthCnn => (20, 32, OptimizerConfig::adadelta(), InitMode::Random),
            NetworkKind::DepthCnnLstm => (100, 16, OptimizerConfig::adadelta(), InitMode::Transfer),
            NetworkKind::SkeletonLstm => (100, 32, OptimizerConfig::adam(), InitMode::Random),
            NetworkKind::FlConcat => (100, 16, OptimizerConfig::adadelta(), InitMode::Warm),
        };
        Self {
            network,
            epochs,
            batch_size,
            timestep: REFERENCE_TIMESTEP,
            optimizer,
            init,
        }
    }

    /// Shrink the epoch budget by `scale` (rounded, at least one epoch).
    pub fn scaled(mut self, scale: f64) -> Self {
        self.epochs = ((self.epochs as f64 * scale).round() as usize).max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.timestep == 0 {
            return Err(Error::Config(format!(
                "{}: epochs, batch_size and timestep must be positive",
                self.network
            )));
        }
        if self.init == InitMode::Transfer && !self.network.uses_depth() {
            return Err(Error::Config(format!("{}: conv transfer needs a depth network", self.network)));
        }
        self.optimizer.validate()
    }
}

/// Optional per-network changes layered over a preset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanOverride {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub init: Option<InitMode>,
}

impl PlanOverride {
    pub fn apply(&self, mut plan: TrainPlan) -> TrainPlan {
        if let Some(e) = self.epochs {
            plan.epochs = e;
        }
        if let Some(b) = self.batch_size {
            plan.batch_size = b;
        }
        if let Some(lr) = self.lr {
            plan.optimizer = plan.optimizer.with_lr(lr);
        }
        if let Some(i) = self.init {
            plan.init = i;
        }
        plan
    }
}

/// Plans for all four networks, as used by one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanSet {
    pub depth_cnn: TrainPlan,
    pub depth_cnn_lstm: TrainPlan,
    pub skeleton_lstm: TrainPlan,
    pub fl_concat: TrainPlan,
}

impl PlanSet {
    pub fn reference() -> Self {
        Self {
            depth_cnn: TrainPlan::reference(NetworkKind::DepthCnn),
            depth_cnn_lstm: TrainPlan::reference(NetworkKind::DepthCnnLstm),
            skeleton_lstm: TrainPlan::reference(NetworkKind::SkeletonLstm),
            fl_concat: TrainPlan::reference(NetworkKind::FlConcat),
        }
    }

    /// Reference presets with epochs scaled and the timestep replaced.
    pub fn scaled(scale: f64, timestep: usize) -> Self {
        let mut s = Self::reference();
        for p in s.iter_mut() {
            *p = p.scaled(scale);
            p.timestep = timestep;
        }
        s
    }

    pub fn get(&self, kind: NetworkKind) -> &TrainPlan {
        match kind {
            NetworkKind::DepthCnn => &self.depth_cnn,
            NetworkKind::DepthCnnLstm => &self.depth_cnn_lstm,
            NetworkKind::SkeletonLstm => &self.skeleton_lstm,
            NetworkKind::FlConcat => &self.fl_concat,
        }
    }

    pub fn get_mut(&mut self, kind: NetworkKind) -> &mut TrainPlan {
        match kind {
            NetworkKind::DepthCnn => &mut self.depth_cnn,
            NetworkKind::DepthCnnLstm => &mut self.depth_cnn_lstm,
            NetworkKind::SkeletonLstm => &mut self.skeleton_lstm,
            NetworkKind::FlConcat => &mut self.fl_concat,
        }
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut TrainPlan> {
        [&mut self.depth_cnn, &mut self.depth_cnn_lstm, &mut self.skeleton_lstm, &mut self.fl_concat].into_iter()
    }

    pub fn validate(&self) -> Result<()> {
        for k in NetworkKind::ALL {
            self.get(k).validate()?;
        }
        Ok(())
    }
}
