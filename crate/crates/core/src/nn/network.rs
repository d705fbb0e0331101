//! Evaluation and backpropagation of a [`NetworkSpec`].

use super::layers::*;
use super::params::Parameters;
use super::spec::{InputKind, LayerKind, LayerShape, LayerSpec, NetworkSpec};
use crate::dataset::SKELETON_DIM;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Network input.
///
/// Frame networks read `depth: [N, S, S, 1]`. Sequence networks read
/// `depth: [B, T, S, S, 1]` and/or `skeleton: [B, T, 44]` together with the
/// number of valid leading steps of every sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch<T> {
    pub depth: Option<Tensor<T>>,
    pub skeleton: Option<Tensor<T>>,
    pub lengths: Vec<usize>,
}

impl<T: Scalar> Batch<T> {
    pub fn frames(depth: Tensor<T>) -> Self {
        Self {
            depth: Some(depth),
            skeleton: None,
            lengths: Vec::new(),
        }
    }
}

enum Cache<T> {
    Conv { x: Tensor<T>, y: Tensor<T> },
    Pool { in_shape: Vec<usize>, argmax: Vec<usize> },
    Flatten { in_shape: Vec<usize> },
    Dense { x: Tensor<T>, y: Tensor<T> },
    Lstm { x: Tensor<T>, state: LstmCache<T> },
    LastStep { rows: usize },
    Skip,
}

struct BranchOut<T> {
    out: Tensor<T>,
    caches: Vec<Cache<T>>,
    lengths: Vec<usize>,
}

/// Result of a training forward/backward pass.
pub struct LossAndGrad<T> {
    pub loss: T,
    pub probs: Tensor<T>,
    pub grads: Parameters<T>,
}

/// Shape-checked evaluator for one spec.
#[derive(Clone, Debug)]
pub struct Network {
    spec: NetworkSpec,
    branch_shapes: Vec<Vec<LayerShape>>,
    head_shapes: Vec<LayerShape>,
}

fn relabel(layer: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Shape { msg, .. } => Error::shape(layer, msg),
        other => other,
    }
}

impl Network {
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        let (branch_shapes, head_shapes) = spec.infer_shapes()?;
        if spec.head.last().map(|l| l.kind) != Some(LayerKind::Softmax) {
            return Err(Error::shape("head", "network must end in softmax"));
        }
        if spec.head[..spec.head.len() - 1].iter().any(|l| l.kind == LayerKind::Softmax) {
            return Err(Error::shape("head", "softmax must be the last layer"));
        }
        Ok(Self {
            spec,
            branch_shapes,
            head_shapes,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    /// Static per-layer shapes: one list per branch, plus the head.
    pub fn shapes(&self) -> (&[Vec<LayerShape>], &[LayerShape]) {
        (&self.branch_shapes, &self.head_shapes)
    }

    fn pack_input<T: Scalar>(&self, input: InputKind, batch: &Batch<T>) -> Result<(Tensor<T>, Vec<usize>)> {
        let s = self.spec.image_size;
        let t_max = self.spec.timestep;
        let (tensor, frame_shape): (&Tensor<T>, Vec<usize>) = match input {
            InputKind::DepthFrame => {
                let d = batch.depth.as_ref().ok_or_else(|| Error::shape("input", "depth frames missing"))?;
                if d.shape().len() != 4 || d.shape()[1..] != [s, s, 1] {
                    return Err(Error::shape("input", format!("depth frames {:?}, expected [N, {s}, {s}, 1]", d.shape())));
                }
                return Ok((d.clone(), Vec::new()));
            }
            InputKind::DepthSequence => {
                let d = batch.depth.as_ref().ok_or_else(|| Error::shape("input", "depth clip missing"))?;
                if d.shape().len() != 5 || d.shape()[1..] != [t_max, s, s, 1] {
                    return Err(Error::shape(
                        "input",
                        format!("depth clip {:?}, expected [B, {t_max}, {s}, {s}, 1]", d.shape()),
                    ));
                }
                (d, vec![s, s, 1])
            }
            InputKind::SkeletonSequence => {
                let k = batch.skeleton.as_ref().ok_or_else(|| Error::shape("input", "skeleton clip missing"))?;
                if k.shape() != [k.rows(), t_max, SKELETON_DIM] {
                    return Err(Error::shape(
                        "input",
                        format!("skeleton clip {:?}, expected [B, {t_max}, {SKELETON_DIM}]", k.shape()),
                    ));
                }
                (k, vec![SKELETON_DIM])
            }
        };
        let b = tensor.rows();
        if batch.lengths.len() != b {
            return Err(Error::shape("input", format!("{} lengths for batch of {b}", batch.lengths.len())));
        }
        if batch.lengths.iter().any(|&l| l == 0 || l > t_max) {
            return Err(Error::shape("input", format!("valid lengths must be in 1..={t_max}")));
        }
        let per: usize = frame_shape.iter().product();
        let total: usize = batch.lengths.iter().sum();
        let mut data = Vec::with_capacity(total * per);
        for (i, &len) in batch.lengths.iter().enumerate() {
            let base = i * t_max * per;
            data.extend_from_slice(&tensor.data()[base..base + len * per]);
        }
        let mut shape = vec![total];
        shape.extend(frame_shape);
        Ok((Tensor::from_vec(&shape, data)?, batch.lengths.clone()))
    }

    fn layer_forward<T: Scalar>(
        l: &LayerSpec,
        params: &Parameters<T>,
        x: Tensor<T>,
        lengths: &[usize],
        keep: bool,
    ) -> Result<(Tensor<T>, Cache<T>)> {
        let p = |s: &str| params.get(&format!("{}.{s}", l.name));
        let relabel = relabel(&l.name);
        Ok(match l.kind {
            LayerKind::Conv3x3 => {
                let y = relu_forward(&conv3x3_forward(&x, p("weight")?, p("bias")?).map_err(&relabel)?);
                let cache = if keep { Cache::Conv { x, y: y.clone() } } else { Cache::Skip };
                (y, cache)
            }
            LayerKind::MaxPool2x2 => {
                let (y, argmax) = maxpool2x2_forward(&x).map_err(&relabel)?;
                let cache = if keep {
                    Cache::Pool {
                        in_shape: x.shape().to_vec(),
                        argmax,
                    }
                } else {
                    Cache::Skip
                };
                (y, cache)
            }
            LayerKind::Flatten => {
                let in_shape = x.shape().to_vec();
                let rows = x.rows();
                let k = x.row_len();
                (x.reshape(&[rows, k])?, Cache::Flatten { in_shape })
            }
            LayerKind::ProjectFc | LayerKind::Fc => {
                let mut y = dense_forward(&x, p("weight")?, p("bias")?).map_err(&relabel)?;
                if l.activation == super::spec::Activation::Relu {
                    y = relu_forward(&y);
                }
                let cache = if keep { Cache::Dense { x, y: y.clone() } } else { Cache::Skip };
                (y, cache)
            }
            LayerKind::Lstm => {
                let state = lstm_forward(&x, p("w_input")?, p("w_hidden")?, p("bias")?, lengths).map_err(&relabel)?;
                let y = state.hidden.clone();
                let cache = if keep { Cache::Lstm { x, state } } else { Cache::Skip };
                (y, cache)
            }
            LayerKind::LastStep => {
                let rows = x.rows();
                (last_step_forward(&x, lengths).map_err(&relabel)?, Cache::LastStep { rows })
            }
            LayerKind::Softmax => (softmax(&x), Cache::Skip),
            LayerKind::Concat => return Err(Error::shape(&l.name, "concat inside a layer stack")),
        })
    }

    fn layer_backward<T: Scalar>(
        l: &LayerSpec,
        params: &Parameters<T>,
        cache: Cache<T>,
        grad: Tensor<T>,
        lengths: &[usize],
        grads: &mut Parameters<T>,
    ) -> Result<Tensor<T>> {
        let name = |s: &str| format!("{}.{s}", l.name);
        Ok(match cache {
            Cache::Conv { x, y } => {
                let g = relu_backward(&y, &grad);
                let (gx, gw, gb) = conv3x3_backward(&x, params.get(&name("weight"))?, &g)?;
                grads.accumulate(&name("weight"), gw);
                grads.accumulate(&name("bias"), gb);
                gx
            }
            Cache::Pool { in_shape, argmax } => maxpool2x2_backward(&in_shape, &argmax, &grad)?,
            Cache::Flatten { in_shape } => grad.reshape(&in_shape)?,
            Cache::Dense { x, y } => {
                let g = if l.activation == super::spec::Activation::Relu {
                    relu_backward(&y, &grad)
                } else {
                    grad
                };
                let (gx, gw, gb) = dense_backward(&x, params.get(&name("weight"))?, &g)?;
                grads.accumulate(&name("weight"), gw);
                grads.accumulate(&name("bias"), gb);
                gx
            }
            Cache::Lstm { x, state } => {
                let (gx, gwx, gwh, gb) = lstm_backward(
                    &x,
                    params.get(&name("w_input"))?,
                    params.get(&name("w_hidden"))?,
                    &state,
                    lengths,
                    &grad,
                )?;
                grads.accumulate(&name("w_input"), gwx);
                grads.accumulate(&name("w_hidden"), gwh);
                grads.accumulate(&name("bias"), gb);
                gx
            }
            Cache::LastStep { rows } => last_step_backward(rows, lengths, &grad)?,
            Cache::Skip => return Err(Error::Invalid(format!("{}: no cached activations", l.name))),
        })
    }

    fn run_branch<T: Scalar>(&self, idx: usize, params: &Parameters<T>, batch: &Batch<T>, keep: bool) -> Result<BranchOut<T>> {
        let branch = &self.spec.branches[idx];
        let (mut x, lengths) = self.pack_input(branch.input, batch)?;
        let mut caches = Vec::with_capacity(branch.layers.len());
        for l in &branch.layers {
            let (y, c) = Self::layer_forward(l, params, x, &lengths, keep)?;
            x = y;
            caches.push(c);
        }
        Ok(BranchOut { out: x, caches, lengths })
    }

    fn branch_outputs<T: Scalar>(&self, params: &Parameters<T>, batch: &Batch<T>, keep: bool) -> Result<(Vec<BranchOut<T>>, Tensor<T>)> {
        let outs = (0..self.spec.branches.len())
            .map(|i| self.run_branch(i, params, batch, keep))
            .collect::<Result<Vec<_>>>()?;
        let joined = if outs.len() == 1 {
            outs[0].out.clone()
        } else {
            let parts: Vec<&Tensor<T>> = outs.iter().map(|o| &o.out).collect();
            concat_forward(&parts)?
        };
        Ok((outs, joined))
    }

    /// Class probabilities `[B, C]`. Pure: parameters are not modified.
    pub fn forward<T: Scalar>(&self, params: &Parameters<T>, batch: &Batch<T>) -> Result<Tensor<T>> {
        params.check_against(&self.spec)?;
        let (_, mut x) = self.branch_outputs(params, batch, false)?;
        for l in &self.spec.head {
            x = Self::layer_forward(l, params, x, &[], false)?.0;
        }
        Ok(x)
    }

    /// Concatenated branch features `[B, D]` (before the head).
    pub fn features<T: Scalar>(&self, params: &Parameters<T>, batch: &Batch<T>) -> Result<Tensor<T>> {
        params.check_against(&self.spec)?;
        Ok(self.branch_outputs(params, batch, false)?.1)
    }

    /// Mean cross-entropy against zero-based `targets`, with gradients for
    /// every parameter.
    pub fn loss_and_grad<T: Scalar>(&self, params: &Parameters<T>, batch: &Batch<T>, targets: &[usize]) -> Result<LossAndGrad<T>> {
        self.loss_and_grad_detached(params, batch, targets, &[])
    }

    /// Like [`loss_and_grad`](Self::loss_and_grad) but gradients do not flow
    /// into branches flagged in `detach` (their parameters get zero gradient).
    pub fn loss_and_grad_detached<T: Scalar>(
        &self,
        params: &Parameters<T>,
        batch: &Batch<T>,
        targets: &[usize],
        detach: &[bool],
    ) -> Result<LossAndGrad<T>> {
        params.check_against(&self.spec)?;
        let (branches, mut x) = self.branch_outputs(params, batch, true)?;
        let n_head = self.spec.head.len() - 1;
        let mut head_caches = Vec::with_capacity(n_head);
        for l in &self.spec.head[..n_head] {
            let (y, c) = Self::layer_forward(l, params, x, &[], true)?;
            x = y;
            head_caches.push(c);
        }
        let (loss, probs, mut g) = softmax_cross_entropy(&x, targets)?;
        let mut grads = params.zeros_like();
        for (l, c) in self.spec.head[..n_head].iter().zip(head_caches).rev() {
            g = Self::layer_backward(l, params, c, g, &[], &mut grads)?;
        }
        let branch_grads = if branches.len() == 1 {
            vec![g]
        } else {
            let widths: Vec<usize> = branches.iter().map(|b| b.out.row_len()).collect();
            concat_backward(&widths, &g)?
        };
        for (i, (b, mut g)) in branches.into_iter().zip(branch_grads).enumerate() {
            if detach.get(i).copied().unwrap_or(false) {
                continue;
            }
            let layers = &self.spec.branches[i].layers;
            for (l, c) in layers.iter().zip(b.caches).rev() {
                g = Self::layer_backward(l, params, c, g, &b.lengths, &mut grads)?;
            }
        }
        Ok(LossAndGrad { loss, probs, grads })
    }
}

/// One-shot convenience: build the evaluator and run it.
pub fn forward<T: Scalar>(spec: &NetworkSpec, params: &Parameters<T>, batch: &Batch<T>) -> Result<Tensor<T>> {
    Network::new(spec.clone())?.forward(params, batch)
}
