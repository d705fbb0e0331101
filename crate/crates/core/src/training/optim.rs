//! Adadelta and Adam.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Parameters;
use crate::scalar::{c, Scalar};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerConfig {
    Adadelta { lr: f64, rho: f64, epsilon: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, epsilon: f64 },
}

impl OptimizerConfig {
    pub const fn adadelta() -> Self {
        OptimizerConfig::Adadelta {
            lr: 1.0,
            rho: 0.95,
            epsilon: 1e-8,
        }
    }

    pub const fn adam() -> Self {
        OptimizerConfig::Adam {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerConfig::Adadelta { .. } => "adadelta",
            OptimizerConfig::Adam { .. } => "adam",
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            OptimizerConfig::Adadelta { lr, .. } | OptimizerConfig::Adam { lr, .. } => lr,
        }
    }

    pub fn with_lr(self, new: f64) -> Self {
        match self {
            OptimizerConfig::Adadelta { rho, epsilon, .. } => OptimizerConfig::Adadelta { lr: new, rho, epsilon },
            OptimizerConfig::Adam { beta1, beta2, epsilon, .. } => OptimizerConfig::Adam {
                lr: new,
                beta1,
                beta2,
                epsilon,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            OptimizerConfig::Adadelta { lr, rho, epsilon } => lr > 0.0 && (0.0..1.0).contains(&rho) && epsilon > 0.0,
            OptimizerConfig::Adam { lr, beta1, beta2, epsilon } => {
                lr > 0.0 && (0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && epsilon > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// Per-parameter accumulators.
///
/// Adadelta: `first` = running E[g^2], `second` = running E[dx^2].
/// Adam: `first` = m, `second` = v. Missing entries are zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T> {
    pub step: u64,
    pub first: Parameters<T>,
    pub second: Parameters<T>,
}

impl<T: Scalar> Default for OptimizerState<T> {
    fn default() -> Self {
        Self {
            step: 0,
            first: Parameters::new(),
            second: Parameters::new(),
        }
    }
}

impl<T: Scalar> OptimizerState<T> {
    /// Flatten into one map (`first/<name>`, `second/<name>`) for checkpoints.
    pub fn to_slots(&self) -> Parameters<T> {
        let mut out = Parameters::new();
        for (k, v) in self.first.iter() {
            out.insert(format!("first/{k}"), v.clone());
        }
        for (k, v) in self.second.iter() {
            out.insert(format!("second/{k}"), v.clone());
        }
        out
    }

    pub fn from_slots(step: u64, slots: &Parameters<T>) -> Result<Self> {
        let mut s = Self {
            step,
            ..Self::default()
        };
        for (k, v) in slots.iter() {
            if let Some(n) = k.strip_prefix("first/") {
                s.first.insert(n, v.clone());
            } else if let Some(n) = k.strip_prefix("second/") {
                s.second.insert(n, v.clone());
            } else {
                return Err(Error::Format(format!("unknown optimizer slot {k}")));
            }
        }
        Ok(s)
    }
}

fn check_grads<T: Scalar>(params: &Parameters<T>, grads: &Parameters<T>) -> Result<()> {
    for (name, g) in grads.iter() {
        let p = params.get(name)?;
        if p.shape() != g.shape() {
            return Err(Error::shape(name.as_str(), format!("gradient {:?} vs parameter {:?}", g.shape(), p.shape())));
        }
        if g.has_non_finite() {
            return Err(Error::Numeric(format!("non-finite gradient for {name}")));
        }
    }
    Ok(())
}

fn slot<'a, T: Scalar>(map: &'a mut Parameters<T>, name: &str, shape: &[usize]) -> &'a mut Tensor<T> {
    if !map.contains(name) {
        map.insert(name, Tensor::zeros(shape));
    }
    map.get_mut(name).expect("slot just inserted")
}

/// One Adadelta update with learning-rate scaling:
///
/// ```text
/// v  <- rho v + (1 - rho) g^2
/// dx <- sqrt(u + eps) / sqrt(v + eps) * g
/// u  <- rho u + (1 - rho) dx^2
/// w  <- w - lr dx
/// ```
pub fn adadelta_step<T: Scalar>(
    params: &mut Parameters<T>,
    grads: &Parameters<T>,
    state: &mut OptimizerState<T>,
    lr: f64,
    rho: f64,
    epsilon: f64,
) -> Result<()> {
    check_grads(params, grads)?;
    let (lr, rho, eps) = (c::<T>(lr), c::<T>(rho), c::<T>(epsilon));
    let one = T::one();
    for (name, g) in grads.iter() {
        let w = params.get_mut(name).expect("checked");
        let v = slot(&mut state.first, name, g.shape());
        let u = slot(&mut state.second, name, g.shape());
        for i in 0..g.len() {
            let gi = g.data()[i];
            let vi = rho * v.data()[i] + (one - rho) * gi * gi;
            let dx = (u.data()[i] + eps).sqrt() / (vi + eps).sqrt() * gi;
            v.data_mut()[i] = vi;
            u.data_mut()[i] = rho * u.data()[i] + (one - rho) * dx * dx;
            w.data_mut()[i] -= lr * dx;
        }
    }
    state.step += 1;
    Ok(())
}

/// One Adam update with bias correction:
///
/// ```text
/// m <- b1 m + (1 - b1) g
/// v <- b2 v + (1 - b2) g^2
/// w <- w - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
/// ```
pub fn adam_step<T: Scalar>(
    params: &mut Parameters<T>,
    grads: &Parameters<T>,
    state: &mut OptimizerState<T>,
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
) -> Result<()> {
    check_grads(params, grads)?;
    let t = (state.step + 1) as i32;
    let bc1 = c::<T>(1.0 - beta1.powi(t));
    let bc2 = c::<T>(1.0 - beta2.powi(t));
    let (lr, b1, b2, eps) = (c::<T>(lr), c::<T>(beta1), c::<T>(beta2), c::<T>(epsilon));
    let one = T::one();
    for (name, g) in grads.iter() {
        let w = params.get_mut(name).expect("checked");
        let m = slot(&mut state.first, name, g.shape());
        let v = slot(&mut state.second, name, g.shape());
        for i in 0..g.len() {
            let gi = g.data()[i];
            let mi = b1 * m.data()[i] + (one - b1) * gi;
            let vi = b2 * v.data()[i] + (one - b2) * gi * gi;
            m.data_mut()[i] = mi;
            v.data_mut()[i] = vi;
            w.data_mut()[i] -= lr * (mi / bc1) / ((vi / bc2).sqrt() + eps);
        }
    }
    state.step += 1;
    Ok(())
}

/// Config plus accumulated state.
#[derive(Clone, Debug)]
pub struct Optimizer<T> {
    pub config: OptimizerConfig,
    pub state: OptimizerState<T>,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(config: OptimizerConfig) -> Self {
        Self {
            config,
            state: OptimizerState::default(),
        }
    }

    pub fn step(&mut self, params: &mut Parameters<T>, grads: &Parameters<T>) -> Result<()> {
        match self.config {
            OptimizerConfig::Adadelta { lr, rho, epsilon } => adadelta_step(params, grads, &mut self.state, lr, rho, epsilon),
            OptimizerConfig::Adam { lr, beta1, beta2, epsilon } => {
                adam_step(params, grads, &mut self.state, lr, beta1, beta2, epsilon)
            }
        }
    }
}
