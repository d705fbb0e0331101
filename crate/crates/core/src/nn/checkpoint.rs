//! Checkpoint files: spec fingerprint, parameters, optimizer slots, metadata.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::Parameters;
use super::spec::NetworkSpec;
use crate::container;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainingMeta {
    pub epoch: usize,
    pub seed: u64,
    /// Optimizer description and step counter, free-form.
    pub optimizer: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub spec: NetworkSpec,
    pub params: Parameters<T>,
    /// Optimizer slot tensors, keyed `"<slot>/<param name>"`.
    pub optimizer_state: Parameters<T>,
    pub meta: TrainingMeta,
}

#[derive(Serialize, Deserialize)]
struct Header {
    fingerprint: String,
    spec: NetworkSpec,
    meta: TrainingMeta,
    n_params: usize,
}

const PARAM_PREFIX: &str = "param:";
const STATE_PREFIX: &str = "state:";

impl<T: Scalar> Checkpoint<T> {
    pub fn save(&self, path: &Path) -> Result<()> {
        self.params.check_against(&self.spec)?;
        let header = Header {
            fingerprint: self.spec.fingerprint(),
            spec: self.spec.clone(),
            meta: self.meta.clone(),
            n_params: self.params.len(),
        };
        let meta = serde_json::to_value(&header).map_err(|e| Error::Format(e.to_string()))?;
        let names: Vec<String> = self
            .params
            .names()
            .map(|n| format!("{PARAM_PREFIX}{n}"))
            .chain(self.optimizer_state.names().map(|n| format!("{STATE_PREFIX}{n}")))
            .collect();
        let tensors: Vec<&Tensor<T>> = self
            .params
            .iter()
            .map(|(_, t)| t)
            .chain(self.optimizer_state.iter().map(|(_, t)| t))
            .collect();
        let pairs: Vec<(&str, &Tensor<T>)> = names.iter().map(String::as_str).zip(tensors).collect();
        container::write_file(path, &meta, &pairs)
    }

    /// Load any checkpoint, trusting the embedded spec.
    pub fn load_any(path: &Path) -> Result<Self> {
        let decoded = container::read_file::<T>(path)?;
        let header: Header =
            serde_json::from_value(decoded.meta).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if header.spec.fingerprint() != header.fingerprint {
            return Err(Error::Format(format!("{}: embedded spec does not match its fingerprint", path.display())));
        }
        let mut params = Parameters::new();
        let mut optimizer_state = Parameters::new();
        for (name, t) in decoded.tensors {
            if let Some(n) = name.strip_prefix(PARAM_PREFIX) {
                params.insert(n, t);
            } else if let Some(n) = name.strip_prefix(STATE_PREFIX) {
                optimizer_state.insert(n, t);
            } else {
                return Err(Error::Format(format!("{}: unexpected tensor {name}", path.display())));
            }
        }
        params.check_against(&header.spec)?;
        Ok(Self {
            spec: header.spec,
            params,
            optimizer_state,
            meta: header.meta,
        })
    }

    /// Load, rejecting checkpoints written for a different network.
    pub fn load(path: &Path, expected: &NetworkSpec) -> Result<Self> {
        let ckpt = Self::load_any(path)?;
        if ckpt.spec.fingerprint() != expected.fingerprint() {
            return Err(Error::Format(format!(
                "{}: checkpoint fingerprint {} does not match expected {} ({})",
                path.display(),
                ckpt.spec.fingerprint(),
                expected.fingerprint(),
                expected.kind
            )));
        }
        Ok(ckpt)
    }
}
