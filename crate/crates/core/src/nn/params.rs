//! Named parameter tensors and seeded initialization.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::layers::fan_in_limit;
use super::spec::{Activation, LayerKind, LayerShape, NetworkSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Flat map `"<layer>.<tensor>" -> tensor`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Parameters<T> {
    tensors: BTreeMap<String, Tensor<T>>,
}

impl<T: Scalar> Parameters<T> {
    pub fn new() -> Self {
        Self {
            tensors: BTreeMap::new(),
        }
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::shape(name, "missing parameter tensor"))
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.tensors.get_mut(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor<T>) {
        self.tensors.insert(name.into(), t);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor<T>)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor<T>)> {
        self.tensors.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.tensors.keys()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn n_scalars(&self) -> usize {
        self.tensors.values().map(|t| t.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            tensors: self
                .tensors
                .iter()
                .map(|(k, v)| (k.clone(), Tensor::zeros(v.shape())))
                .collect(),
        }
    }

    /// Add `t` into the tensor `name`, creating it if absent.
    pub fn accumulate(&mut self, name: &str, t: Tensor<T>) {
        match self.tensors.get_mut(name) {
            Some(acc) => acc.add_assign(&t),
            None => {
                self.tensors.insert(name.to_string(), t);
            }
        }
    }

    /// Tensors whose name starts with `"<layer>."`.
    pub fn layer_tensors<'a>(&'a self, layer: &'a str) -> impl Iterator<Item = (&'a String, &'a Tensor<T>)> + 'a {
        self.tensors
            .iter()
            .filter(move |(k, _)| k.strip_prefix(layer).is_some_and(|r| r.starts_with('.')))
    }

    pub fn cast<U: Scalar>(&self) -> Parameters<U> {
        Parameters {
            tensors: self.tensors.iter().map(|(k, v)| (k.clone(), v.cast())).collect(),
        }
    }

    /// Check names and shapes against `spec`.
    pub fn check_against(&self, spec: &NetworkSpec) -> Result<()> {
        let expected = param_shapes(spec)?;
        for p in &expected {
            let t = self.get(&p.name)?;
            if t.shape() != p.shape.as_slice() {
                return Err(Error::shape(
                    &p.layer,
                    format!("parameter {} has shape {:?}, expected {:?}", p.name, t.shape(), p.shape),
                ));
            }
        }
        if expected.len() != self.tensors.len() {
            let known: std::collections::BTreeSet<&str> = expected.iter().map(|p| p.name.as_str()).collect();
            let extra: Vec<&String> = self.tensors.keys().filter(|k| !known.contains(k.as_str())).collect();
            return Err(Error::shape("parameters", format!("unexpected tensors {extra:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Init {
    /// Uniform in +-sqrt(gain / fan_in).
    FanIn { fan_in: usize, gain: f64 },
    Zeros,
    /// LSTM bias: zeros except the forget-gate block set to one.
    ForgetOne { hidden: usize },
}

#[derive(Clone, Debug)]
pub(crate) struct ParamInfo {
    pub layer: String,
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

fn layer_params(ls: &LayerShape) -> Vec<ParamInfo> {
    let l = &ls.layer;
    let p = |suffix: &str, shape: Vec<usize>, init: Init| ParamInfo {
        layer: l.name.clone(),
        name: format!("{}.{suffix}", l.name),
        shape,
        init,
    };
    let gain = if l.activation == Activation::Relu { 6.0 } else { 3.0 };
    match l.kind {
        LayerKind::Conv3x3 => {
            let ci = ls.input.dims[2];
            vec![
                p("weight", vec![3, 3, ci, l.width], Init::FanIn { fan_in: 9 * ci, gain }),
                p("bias", vec![l.width], Init::Zeros),
            ]
        }
        LayerKind::ProjectFc | LayerKind::Fc => {
            let d = ls.input.dims[0];
            vec![
                p("weight", vec![d, l.width], Init::FanIn { fan_in: d, gain }),
                p("bias", vec![l.width], Init::Zeros),
            ]
        }
        LayerKind::Lstm => {
            let d = ls.input.dims[0];
            let h = l.width;
            vec![
                p("w_input", vec![d, 4 * h], Init::FanIn { fan_in: d, gain: 1.0 }),
                p("w_hidden", vec![h, 4 * h], Init::FanIn { fan_in: h, gain: 1.0 }),
                p("bias", vec![4 * h], Init::ForgetOne { hidden: h }),
            ]
        }
        _ => Vec::new(),
    }
}

pub(crate) fn param_shapes(spec: &NetworkSpec) -> Result<Vec<ParamInfo>> {
    let (branches, head) = spec.infer_shapes()?;
    Ok(branches
        .iter()
        .flatten()
        .chain(head.iter())
        .flat_map(layer_params)
        .collect())
}

fn tensor_seed(seed: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

pub(crate) fn init_tensor<T: Scalar>(info: &ParamInfo, seed: u64) -> Tensor<T> {
    match info.init {
        Init::Zeros => Tensor::zeros(&info.shape),
        Init::ForgetOne { hidden } => {
            let mut t = Tensor::zeros(&info.shape);
            t.data_mut()[hidden..2 * hidden].iter_mut().for_each(|v| *v = T::one());
            t
        }
        Init::FanIn { fan_in, gain } => {
            let limit: T = fan_in_limit(fan_in, gain);
            let limit = limit.as_f64();
            let mut rng = ChaCha8Rng::seed_from_u64(tensor_seed(seed, &info.name));
            let n: usize = info.shape.iter().product();
            let data = (0..n).map(|_| T::from_f64_lossy(rng.gen_range(-limit..=limit))).collect();
            Tensor::from_vec(&info.shape, data).expect("shape")
        }
    }
}

/// Fresh parameters for `spec`. Each tensor draws from its own stream
/// keyed by `(seed, name)`, so the result does not depend on layer order.
pub fn init_parameters<T: Scalar>(spec: &NetworkSpec, seed: u64) -> Result<Parameters<T>> {
    let mut params = Parameters::new();
    for info in param_shapes(spec)? {
        params.insert(info.name.clone(), init_tensor(&info, seed));
    }
    Ok(params)
}
