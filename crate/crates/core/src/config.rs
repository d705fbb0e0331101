//! Experiment configuration (TOML) and its resolution into an [`Experiment`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::ClassMode;
use crate::error::{Error, Result};
use crate::nn::{ArchConfig, NetworkKind, Widths};
use crate::preprocess::{DEFAULT_IMAGE_SIZE, DEFAULT_TIMESTEP};
use crate::training::{Experiment, PlanOverride, PlanSet};

pub const PRESET_REFERENCE: &str = "paper";

/// Documented keys:
///
/// ```toml
/// dataset = "data/dhg"
/// class_mode = "14"            # or "28"
/// seed = 0
/// scale = 1.0                  # (0, 1]; shrinks widths and epochs
/// timestep = 32
/// image_size = 227
/// networks = ["depth_cnn_lstm", "skeleton_lstm", "fl_concat"]
/// preset = "paper"
/// out = "out"
/// eval_batch = 32
///
/// [overrides.skeleton_lstm]
/// epochs = 50
/// batch_size = 32
/// lr = 0.001
/// init = "random"
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub class_mode: ClassMode,
    pub seed: u64,
    pub scale: f64,
    pub timestep: usize,
    pub image_size: usize,
    pub networks: Vec<NetworkKind>,
    pub preset: String,
    pub out: PathBuf,
    /// Fixed run directory name; derived from the config when absent.
    pub run_id: Option<String>,
    pub eval_batch: usize,
    pub warm_28_from: Option<PathBuf>,
    pub overrides: BTreeMap<NetworkKind, PlanOverride>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("data"),
            class_mode: ClassMode::C14,
            seed: 0,
            scale: 1.0,
            timestep: DEFAULT_TIMESTEP,
            image_size: DEFAULT_IMAGE_SIZE,
            networks: vec![NetworkKind::DepthCnnLstm, NetworkKind::SkeletonLstm, NetworkKind::FlConcat],
            preset: PRESET_REFERENCE.into(),
            out: PathBuf::from("out"),
            run_id: None,
            eval_batch: 32,
            warm_28_from: None,
            overrides: BTreeMap::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::Config(format!("scale must be in (0, 1], got {}", self.scale)));
        }
        if self.timestep < 1 {
            return Err(Error::Config("timestep must be at least 1".into()));
        }
        if self.image_size < 8 {
            return Err(Error::Config(format!("image_size must be at least 8, got {}", self.image_size)));
        }
        if self.preset != PRESET_REFERENCE {
            return Err(Error::Config(format!("unknown preset '{}' (available: {PRESET_REFERENCE})", self.preset)));
        }
        if self.networks.is_empty() {
            return Err(Error::Config("select at least one network".into()));
        }
        if self.eval_batch == 0 {
            return Err(Error::Config("eval_batch must be positive".into()));
        }
        self.experiment()?.validate()
    }

    pub fn plans(&self) -> PlanSet {
        let mut plans = PlanSet::scaled(self.scale, self.timestep);
        for (k, o) in &self.overrides {
            let p = plans.get_mut(*k);
            *p = o.apply(*p);
        }
        plans
    }

    pub fn arch(&self) -> ArchConfig {
        ArchConfig {
            widths: Widths::default().scaled(self.scale),
            timestep: self.timestep,
            image_size: self.image_size,
        }
    }

    pub fn experiment(&self) -> Result<Experiment> {
        let mut networks = self.networks.clone();
        networks.sort();
        networks.dedup();
        Ok(Experiment {
            networks,
            plans: self.plans(),
            arch: self.arch(),
            class_mode: self.class_mode,
            seed: self.seed,
            eval_batch: self.eval_batch,
            warm_28_from: self.warm_28_from.clone(),
        })
    }
}
