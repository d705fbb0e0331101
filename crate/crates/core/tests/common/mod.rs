//! Oracles, generators and fixtures shared by the integration tests and the
//! acceptance run. Everything here is written independently of the library
//! code it checks.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use hgr_core::commands::cmd_synth;
use hgr_core::config::ExperimentConfig;
use hgr_core::dataset::{
    ClassId, ClassMode, DepthFrame, GestureClass, Joints2d, Roi, SequenceKey, SequenceRecord, SyntheticSpec, Trim,
    NUM_JOINTS,
};
use hgr_core::nn::layers::*;
use hgr_core::nn::{ArchConfig, Batch, NetworkKind, Parameters, Widths};
use hgr_core::training::{OptimizerConfig, PlanOverride, Prediction, PredictionFile};
use hgr_core::{Result, Tensor};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap()
}

fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
// finite differences

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_TOL: f64 = 1e-4;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

/// Largest relative error between `analytic` and central differences of `f`.
pub fn max_rel_error(theta: &[f64], analytic: &[f64], f: impl Fn(&[f64]) -> f64) -> f64 {
    assert_eq!(theta.len(), analytic.len());
    let mut th = theta.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..th.len() {
        let x0 = th[i];
        th[i] = x0 + FD_STEP;
        let up = f(&th);
        th[i] = x0 - FD_STEP;
        let down = f(&th);
        th[i] = x0;
        worst = worst.max(rel_err((up - down) / (2.0 * FD_STEP), analytic[i]));
    }
    worst
}

fn flatten(ts: &[Tensor<f64>]) -> Vec<f64> {
    ts.iter().flat_map(|t| t.data().iter().copied()).collect()
}

fn unflatten(theta: &[f64], shapes: &[Vec<usize>]) -> Vec<Tensor<f64>> {
    let mut off = 0;
    shapes
        .iter()
        .map(|s| {
            let n: usize = s.iter().product();
            let t = Tensor::from_vec(s, theta[off..off + n].to_vec()).unwrap();
            off += n;
            t
        })
        .collect()
}

/// Gradient check over a list of differentiable tensors.
fn check(
    vars: Vec<Tensor<f64>>,
    loss: impl Fn(&[Tensor<f64>]) -> f64,
    grads: impl Fn(&[Tensor<f64>]) -> Vec<Tensor<f64>>,
) -> f64 {
    let shapes: Vec<Vec<usize>> = vars.iter().map(|t| t.shape().to_vec()).collect();
    let g = grads(&vars);
    for (a, b) in g.iter().zip(&vars) {
        assert_eq!(a.shape(), b.shape(), "gradient shape");
    }
    max_rel_error(&flatten(&vars), &flatten(&g), |th| loss(&unflatten(th, &shapes)))
}

pub fn conv_case(seed: u64) -> f64 {
    let mut r = rng(seed);
    let x = uniform(&mut r, &[2, 4, 5, 2], 1.0);
    let w = uniform(&mut r, &[3, 3, 2, 3], 0.5);
    let b = uniform(&mut r, &[3], 0.5);
    let proj = uniform(&mut r, &[2, 4, 5, 3], 1.0);
    check(
        vec![x, w, b],
        |v| dot(&conv3x3_forward(&v[0], &v[1], &v[2]).unwrap(), &proj),
        |v| {
            let (gx, gw, gb) = conv3x3_backward(&v[0], &v[1], &proj).unwrap();
            vec![gx, gw, gb]
        },
    )
}

/// Odd spatial sizes exercise the floor rule; values are well separated so
/// no window is near a tie.
pub fn pool_case(seed: u64) -> f64 {
    let mut r = rng(seed);
    let shape = [2, 5, 3, 3];
    let n: usize = shape.iter().product();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut r);
    let data = order.iter().map(|&k| 0.01 * k as f64 + r.gen_range(-0.002..0.002)).collect();
    let x = Tensor::from_vec(&shape, data).unwrap();
    let proj = uniform(&mut r, &[2, 2, 1, 3], 1.0);
    check(
        vec![x],
        |v| dot(&maxpool2x2_forward(&v[0]).unwrap().0, &proj),
        |v| {
            let (_, argmax) = maxpool2x2_forward(&v[0]).unwrap();
            vec![maxpool2x2_backward(v[0].shape(), &argmax, &proj).unwrap()]
        },
    )
}

/// Fully connected layer with its ReLU.
pub fn fc_case(seed: u64) -> f64 {
    let mut r = rng(seed);
    let x = uniform(&mut r, &[3, 4], 1.0);
    let w = uniform(&mut r, &[4, 5], 0.8);
    let b = uniform(&mut r, &[5], 0.5);
    let proj = uniform(&mut r, &[3, 5], 1.0);
    check(
        vec![x, w, b],
        |v| dot(&relu_forward(&dense_forward(&v[0], &v[1], &v[2]).unwrap()), &proj),
        |v| {
            let y = relu_forward(&dense_forward(&v[0], &v[1], &v[2]).unwrap());
            let gz = relu_backward(&y, &proj);
            let (gx, gw, gb) = dense_backward(&v[0], &v[1], &gz).unwrap();
            vec![gx, gw, gb]
        },
    )
}

/// LSTM over packed sequences, read both at every step and at the last
/// valid step.
pub fn lstm_case(seed: u64) -> f64 {
    let mut r = rng(seed);
    let lengths = [3usize, 1, 2];
    let rows: usize = lengths.iter().sum();
    let x = uniform(&mut r, &[rows, 3], 1.0);
    let wx = uniform(&mut r, &[3, 8], 0.8);
    let wh = uniform(&mut r, &[2, 8], 0.8);
    let b = uniform(&mut r, &[8], 0.5);
    let all = uniform(&mut r, &[rows, 2], 1.0);
    let last = uniform(&mut r, &[lengths.len(), 2], 1.0);
    let every_step = check(
        vec![x.clone(), wx.clone(), wh.clone(), b.clone()],
        |v| dot(&lstm_forward(&v[0], &v[1], &v[2], &v[3], &lengths).unwrap().hidden, &all),
        |v| {
            let cache = lstm_forward(&v[0], &v[1], &v[2], &v[3], &lengths).unwrap();
            let (gx, gwx, gwh, gb) = lstm_backward(&v[0], &v[1], &v[2], &cache, &lengths, &all).unwrap();
            vec![gx, gwx, gwh, gb]
        },
    );
    let last_step = check(
        vec![x, wx, wh, b],
        |v| {
            let h = lstm_forward(&v[0], &v[1], &v[2], &v[3], &lengths).unwrap().hidden;
            dot(&last_step_forward(&h, &lengths).unwrap(), &last)
        },
        |v| {
            let cache = lstm_forward(&v[0], &v[1], &v[2], &v[3], &lengths).unwrap();
            let gh = last_step_backward(rows, &lengths, &last).unwrap();
            let (gx, gwx, gwh, gb) = lstm_backward(&v[0], &v[1], &v[2], &cache, &lengths, &gh).unwrap();
            vec![gx, gwx, gwh, gb]
        },
    );
    every_step.max(last_step)
}

pub fn concat_case(seed: u64) -> f64 {
    let mut r = rng(seed);
    let a = uniform(&mut r, &[2, 3], 1.0);
    let b = uniform(&mut r, &[2, 4], 1.0);
    let proj = uniform(&mut r, &[2, 7], 1.0);
    check(
        vec![a, b],
        |v| dot(&concat_forward(&[&v[0], &v[1]]).unwrap(), &proj),
        |_| concat_backward(&[3, 4], &proj).unwrap(),
    )
}

pub fn softmax_ce_case(seed: u64) -> f64 {
    let mut r = rng(seed);
    let logits = uniform(&mut r, &[3, 5], 2.0);
    let targets = [0usize, 4, 2];
    check(
        vec![logits],
        |v| softmax_cross_entropy(&v[0], &targets).unwrap().0,
        |v| vec![softmax_cross_entropy(&v[0], &targets).unwrap().2],
    )
}

pub type LayerCase = (&'static str, fn(u64) -> f64);

pub const LAYER_CASES: [LayerCase; 6] = [
    ("conv3x3", conv_case),
    ("maxpool2x2", pool_case),
    ("fc", fc_case),
    ("lstm", lstm_case),
    ("concat", concat_case),
    ("softmax_ce", softmax_ce_case),
];

/// Worst relative error of each layer kind over `draws` seeds.
pub fn layer_gradient_errors(draws: u64) -> Vec<(&'static str, f64)> {
    LAYER_CASES
        .iter()
        .map(|(name, case)| (*name, (0..draws).map(case).fold(0.0, f64::max)))
        .collect()
}

/// Central differences of a network loss with respect to the named
/// parameters.
pub fn network_fd(
    params: &Parameters<f64>,
    names: &[String],
    loss: impl Fn(&Parameters<f64>) -> f64,
) -> Vec<f64> {
    let mut p = params.clone();
    let mut out = Vec::new();
    for name in names {
        let n = params.get(name).unwrap().len();
        for i in 0..n {
            let x0 = params.get(name).unwrap().data()[i];
            p.get_mut(name).unwrap().data_mut()[i] = x0 + FD_STEP;
            let up = loss(&p);
            p.get_mut(name).unwrap().data_mut()[i] = x0 - FD_STEP;
            let down = loss(&p);
            p.get_mut(name).unwrap().data_mut()[i] = x0;
            out.push((up - down) / (2.0 * FD_STEP));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// tiny networks

pub fn tiny_arch() -> ArchConfig {
    ArchConfig {
        widths: Widths {
            conv: [2, 2, 2],
            projection: 4,
            depth_lstm: 3,
            skeleton_lstm: 3,
            fc: 4,
        },
        timestep: 3,
        image_size: 8,
    }
}

/// Random batch for any network kind built from [`tiny_arch`]-like specs.
pub fn random_batch(r: &mut ChaCha8Rng, kind: NetworkKind, arch: &ArchConfig, lengths: &[usize]) -> Batch<f64> {
    let (b, t, s) = (lengths.len(), arch.timestep, arch.image_size);
    let mut pad = |shape: &[usize], per: usize| {
        let mut x = uniform(r, shape, 1.0);
        for (i, &len) in lengths.iter().enumerate() {
            x.data_mut()[(i * t + len) * per..(i + 1) * t * per].iter_mut().for_each(|v| *v = 0.0);
        }
        x
    };
    let depth = kind.uses_depth().then(|| pad(&[b, t, s, s, 1], s * s));
    let skeleton = kind.uses_skeleton().then(|| pad(&[b, t, 44], 44));
    Batch {
        depth,
        skeleton,
        lengths: lengths.to_vec(),
    }
}

/// Randomize every parameter, including zero-initialized biases.
pub fn randomize(params: &mut Parameters<f64>, r: &mut ChaCha8Rng, scale: f64) {
    for (_, t) in params.iter_mut() {
        t.data_mut().iter_mut().for_each(|v| *v = r.gen_range(-scale..scale));
    }
}

/// Direct evaluation of `conv(c1) -> conv(c2) -> pool -> flatten -> lstm(h)
/// -> last step -> fc(C) -> softmax` for one depth clip `[T][S][S]`.
pub fn tiny_graph_oracle(params: &Parameters<f64>, clip: &[Vec<Vec<f64>>], valid: usize) -> Vec<f64> {
    fn conv_relu(input: &[Vec<Vec<f64>>], w: &Tensor<f64>, b: &Tensor<f64>) -> Vec<Vec<Vec<f64>>> {
        let (ci, co) = (w.shape()[2], w.shape()[3]);
        let (h, wd) = (input.len() as i64, input[0].len() as i64);
        let mut out = vec![vec![vec![0.0; co]; wd as usize]; h as usize];
        for y in 0..h {
            for x in 0..wd {
                for o in 0..co {
                    let mut acc = b.data()[o];
                    for ky in 0..3i64 {
                        for kx in 0..3i64 {
                            let (yy, xx) = (y + ky - 1, x + kx - 1);
                            if yy < 0 || xx < 0 || yy >= h || xx >= wd {
                                continue;
                            }
                            for c in 0..ci {
                                let widx = ((ky as usize * 3 + kx as usize) * ci + c) * co + o;
                                acc += input[yy as usize][xx as usize][c] * w.data()[widx];
                            }
                        }
                    }
                    out[y as usize][x as usize][o] = acc.max(0.0);
                }
            }
        }
        out
    }
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    let p = |n: &str| params.get(n).unwrap();
    let hdim = p("lstm1.w_hidden").shape()[0];
    let (mut hs, mut cs) = (vec![0.0; hdim], vec![0.0; hdim]);
    for frame in clip.iter().take(valid) {
        let img: Vec<Vec<Vec<f64>>> = frame.iter().map(|row| row.iter().map(|&v| vec![v]).collect()).collect();
        let a = conv_relu(&img, p("conv1.weight"), p("conv1.bias"));
        let a = conv_relu(&a, p("conv2.weight"), p("conv2.bias"));
        let mut feat = Vec::new();
        for y in 0..a.len() / 2 {
            for x in 0..a[0].len() / 2 {
                for c in 0..a[0][0].len() {
                    let m = [a[2 * y][2 * x][c], a[2 * y][2 * x + 1][c], a[2 * y + 1][2 * x][c], a[2 * y + 1][2 * x + 1][c]];
                    feat.push(m.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                }
            }
        }
        let (wx, wh, b) = (p("lstm1.w_input"), p("lstm1.w_hidden"), p("lstm1.bias"));
        let gate = |g: usize, j: usize| {
            let col = g * hdim + j;
            let mut z = b.data()[col];
            for (d, &f) in feat.iter().enumerate() {
                z += f * wx.data()[d * 4 * hdim + col];
            }
            for (k, &hv) in hs.iter().enumerate() {
                z += hv * wh.data()[k * 4 * hdim + col];
            }
            z
        };
        let mut nh = vec![0.0; hdim];
        let mut nc = vec![0.0; hdim];
        for j in 0..hdim {
            let (i, f, g, o) = (sig(gate(0, j)), sig(gate(1, j)), gate(2, j).tanh(), sig(gate(3, j)));
            nc[j] = f * cs[j] + i * g;
            nh[j] = o * nc[j].tanh();
        }
        hs = nh;
        cs = nc;
    }
    let (w, b) = (p("out.weight"), p("out.bias"));
    let n_out = b.len();
    let logits: Vec<f64> = (0..n_out)
        .map(|k| b.data()[k] + hs.iter().enumerate().map(|(d, &hv)| hv * w.data()[d * n_out + k]).sum::<f64>())
        .collect();
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

// ---------------------------------------------------------------------------
// optimizers

/// `0.5 / m * |A x - y|^2` with `A` 20x10.
pub struct LeastSquares {
    pub a: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl LeastSquares {
    pub fn random(seed: u64) -> Self {
        let mut r = rng(seed);
        Self {
            a: (0..20).map(|_| (0..10).map(|_| r.gen_range(-1.0..1.0)).collect()).collect(),
            y: (0..20).map(|_| r.gen_range(-2.0..2.0)).collect(),
        }
    }

    pub fn loss(&self, x: &[f64]) -> f64 {
        let m = self.a.len() as f64;
        self.a
            .iter()
            .zip(&self.y)
            .map(|(row, y)| (row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - y).powi(2))
            .sum::<f64>()
            * 0.5
            / m
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let m = self.a.len() as f64;
        let mut g = vec![0.0; x.len()];
        for (row, y) in self.a.iter().zip(&self.y) {
            let res = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - y;
            for (gi, a) in g.iter_mut().zip(row) {
                *gi += res * a / m;
            }
        }
        g
    }
}

/// Scalar reference optimizers, one parameter at a time.
pub enum RefOptimizer {
    Adadelta { lr: f64, rho: f64, eps: f64, acc_g: Vec<f64>, acc_dx: Vec<f64> },
    Adam { lr: f64, b1: f64, b2: f64, eps: f64, m: Vec<f64>, v: Vec<f64>, t: i32 },
}

impl RefOptimizer {
    pub fn new(cfg: OptimizerConfig, n: usize) -> Self {
        match cfg {
            OptimizerConfig::Adadelta { lr, rho, epsilon } => RefOptimizer::Adadelta {
                lr,
                rho,
                eps: epsilon,
                acc_g: vec![0.0; n],
                acc_dx: vec![0.0; n],
            },
            OptimizerConfig::Adam { lr, beta1, beta2, epsilon } => RefOptimizer::Adam {
                lr,
                b1: beta1,
                b2: beta2,
                eps: epsilon,
                m: vec![0.0; n],
                v: vec![0.0; n],
                t: 0,
            },
        }
    }

    pub fn step(&mut self, x: &mut [f64], g: &[f64]) {
        match self {
            RefOptimizer::Adadelta { lr, rho, eps, acc_g, acc_dx } => {
                for i in 0..x.len() {
                    acc_g[i] = *rho * acc_g[i] + (1.0 - *rho) * g[i] * g[i];
                    let rms_dx = (acc_dx[i] + *eps).sqrt();
                    let rms_g = (acc_g[i] + *eps).sqrt();
                    let update = rms_dx / rms_g * g[i];
                    acc_dx[i] = *rho * acc_dx[i] + (1.0 - *rho) * update * update;
                    x[i] -= *lr * update;
                }
            }
            RefOptimizer::Adam { lr, b1, b2, eps, m, v, t } => {
                *t += 1;
                for i in 0..x.len() {
                    m[i] = *b1 * m[i] + (1.0 - *b1) * g[i];
                    v[i] = *b2 * v[i] + (1.0 - *b2) * g[i] * g[i];
                    let m_hat = m[i] / (1.0 - b1.powi(*t));
                    let v_hat = v[i] / (1.0 - b2.powi(*t));
                    x[i] -= *lr * m_hat / (v_hat.sqrt() + *eps);
                }
            }
        }
    }
}

pub struct OptimizerTrace {
    pub max_deviation: f64,
    pub first_loss: f64,
    pub last_loss: f64,
}

/// Run the library optimizer (parameters split over two tensors) and the
/// reference side by side; each follows its own trajectory.
pub fn optimizer_trace(cfg: OptimizerConfig, steps: usize, seed: u64) -> Result<OptimizerTrace> {
    let problem = LeastSquares::random(seed);
    let mut r = rng(seed ^ 0x5eed);
    let x0: Vec<f64> = (0..10).map(|_| r.gen_range(-1.0..1.0)).collect();
    let mut reference = x0.clone();
    let mut ref_opt = RefOptimizer::new(cfg, 10);
    let mut params = Parameters::<f64>::new();
    params.insert("a", Tensor::from_vec(&[4], x0[..4].to_vec())?);
    params.insert("b", Tensor::from_vec(&[2, 3], x0[4..].to_vec())?);
    let mut opt = hgr_core::training::Optimizer::<f64>::new(cfg);
    let joined = |p: &Parameters<f64>| -> Vec<f64> {
        let mut v = p.get("a").unwrap().data().to_vec();
        v.extend_from_slice(p.get("b").unwrap().data());
        v
    };
    let first_loss = problem.loss(&x0);
    let mut max_deviation: f64 = 0.0;
    for _ in 0..steps {
        let g = problem.grad(&joined(&params));
        let mut grads = Parameters::new();
        grads.insert("a", Tensor::from_vec(&[4], g[..4].to_vec())?);
        grads.insert("b", Tensor::from_vec(&[2, 3], g[4..].to_vec())?);
        opt.step(&mut params, &grads)?;
        let rg = problem.grad(&reference);
        ref_opt.step(&mut reference, &rg);
        for (a, b) in joined(&params).iter().zip(&reference) {
            max_deviation = max_deviation.max((a - b).abs());
        }
    }
    Ok(OptimizerTrace {
        max_deviation,
        first_loss,
        last_loss: problem.loss(&joined(&params)),
    })
}

// ---------------------------------------------------------------------------
// fusion

pub fn simplex(raw: &[f64]) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

/// Lowest class holding the largest value anywhere in either vector.
pub fn brute_force_max_class(a: &[f64], b: &[f64]) -> usize {
    let top = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    (0..a.len()).find(|&j| a[j] == top || b[j] == top).unwrap() + 1
}

/// Every fusion property for one pair; `Err` names the first violation.
pub fn check_fusion_pair(a: &[f64], b: &[f64]) -> std::result::Result<(), String> {
    use hgr_core::nn::{fuse_scores_average, fuse_scores_max, predict, ScoreVector};
    let (sa, sb) = (ScoreVector(a.to_vec()), ScoreVector(b.to_vec()));
    let avg = fuse_scores_average(&sa, &sb).map_err(|e| e.to_string())?;
    let oracle: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x + y) / 2.0).collect();
    if avg.0 != oracle {
        return Err("average differs from elementwise mean".into());
    }
    if (avg.0.iter().sum::<f64>() - 1.0).abs() > 1e-12 || avg.0.iter().any(|&v| v < 0.0) {
        return Err("average is not a probability vector".into());
    }
    if fuse_scores_average(&sb, &sa).unwrap() != avg {
        return Err("average not commutative".into());
    }
    let mx = fuse_scores_max(&sa, &sb).map_err(|e| e.to_string())?;
    if fuse_scores_max(&sb, &sa).unwrap() != mx {
        return Err("max not commutative".into());
    }
    if mx.0.iter().zip(a.iter().zip(b)).any(|(m, (x, y))| m < x || m < y) {
        return Err("max below an input".into());
    }
    let got = predict(&mx.0).unwrap().get() as usize;
    if got != brute_force_max_class(a, b) {
        return Err(format!("argmax {got} vs brute force {}", brute_force_max_class(a, b)));
    }
    if fuse_scores_max(&sa, &sa).unwrap() != sa || fuse_scores_average(&sa, &sa).unwrap() != sa {
        return Err("fusion of a vector with itself changed it".into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// metrics fixtures

pub fn pred(truth: u16, predicted: u16, n_classes: usize) -> Prediction {
    let mut scores = vec![0.0; n_classes];
    scores[predicted as usize - 1] = 1.0;
    Prediction {
        sequence_id: format!("t{truth}_p{predicted}"),
        subject: 1,
        truth: ClassId(truth),
        predicted: ClassId(predicted),
        scores,
    }
}

/// 20 predictions: 14 correct, 3 wrong only in the finger count, 3 wrong
/// gesture. LAWRFD = 17/20 - 14/20 = 3/20.
pub fn lawrfd_toy() -> Vec<Prediction> {
    let mut v = Vec::new();
    for k in 0..14u16 {
        v.push(pred(2 * k + 1, 2 * k + 1, 28));
    }
    // same gesture, other finger configuration
    v.push(pred(1, 2, 28));
    v.push(pred(8, 7, 28));
    v.push(pred(27, 28, 28));
    // different gesture
    v.push(pred(1, 3, 28));
    v.push(pred(10, 25, 28));
    v.push(pred(20, 2, 28));
    v
}

pub fn intra_pair_errors(preds: &[Prediction]) -> usize {
    preds
        .iter()
        .filter(|p| p.truth != p.predicted && (p.truth.get() - 1) / 2 == (p.predicted.get() - 1) / 2)
        .count()
}

pub fn random_predictions_28(r: &mut ChaCha8Rng, n: usize) -> Vec<Prediction> {
    (0..n)
        .map(|i| {
            let t = r.gen_range(1..=28u16);
            let p = match r.gen_range(0..3) {
                0 => t,
                1 => (t - 1) / 2 * 2 + 1 + (t % 2),
                _ => r.gen_range(1..=28u16),
            };
            let mut scores: Vec<f64> = (0..28).map(|_| r.gen_range(0.0..0.01)).collect();
            scores[p as usize - 1] = 1.0;
            let s: f64 = scores.iter().sum();
            Prediction {
                sequence_id: format!("r{i}"),
                subject: 1,
                truth: ClassId(t),
                predicted: ClassId(p),
                scores: scores.iter().map(|v| v / s).collect(),
            }
        })
        .collect()
}

/// Two folds of fixed 28-class predictions for two networks.
pub fn toy_28(dir: &Path) -> Vec<PathBuf> {
    let mut paths = Vec::new();
    for (net, shift) in [("depth_cnn_lstm", 0u16), ("skeleton_lstm", 1)] {
        for s in [1u32, 2] {
            let mut rows = Vec::new();
            for t in 1..=28u16 {
                let p = match (t + shift + s as u16) % 5 {
                    0 => if t % 2 == 1 { t + 1 } else { t - 1 },
                    1 => t % 28 + 1,
                    _ => t,
                };
                rows.push(Prediction {
                    sequence_id: format!("c{t:02}_s{s:02}"),
                    subject: s,
                    ..pred(t, p, 28)
                });
            }
            let f = PredictionFile {
                class_mode: ClassMode::C28,
                network: net.into(),
                fingerprint: "00000000000000aa".into(),
                fold: s,
                folds: vec![1, 2],
                rows,
            };
            let p = dir.join(format!("{net}_{s}.pred.csv"));
            f.write(&p).unwrap();
            paths.push(p);
        }
    }
    paths
}

pub fn golden_report() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/report.txt")
}

// ---------------------------------------------------------------------------
// preprocessing fixtures

/// Arbitrary record: full-range depth, joints anywhere in the frame, a ROI
/// per frame and a trim inside the sequence.
pub fn random_record(r: &mut ChaCha8Rng) -> SequenceRecord {
    let n = r.gen_range(1..=60usize);
    let (w, h) = (r.gen_range(4..=24u32), r.gen_range(4..=24u32));
    let depth_frames = (0..n)
        .map(|_| DepthFrame::new(w, h, (0..w * h).map(|_| r.gen::<u16>()).collect()).unwrap())
        .collect();
    let skeleton_2d = (0..n)
        .map(|_| {
            let mut j: Joints2d = [[0.0; 2]; NUM_JOINTS];
            for p in j.iter_mut() {
                *p = [r.gen_range(0.0..640.0), r.gen_range(0.0..480.0)];
            }
            j
        })
        .collect();
    let roi = (0..n)
        .map(|_| {
            let (x, y) = (r.gen_range(0..w), r.gen_range(0..h));
            Roi {
                x,
                y,
                width: r.gen_range(1..=w - x),
                height: r.gen_range(1..=h - y),
            }
        })
        .collect();
    let start = r.gen_range(0..n);
    let end = r.gen_range(start..n);
    SequenceRecord {
        key: SequenceKey {
            class: GestureClass::new(r.gen_range(1..=14), r.gen_range(1..=2)).unwrap(),
            subject: r.gen_range(1..=20),
            trial: r.gen_range(1..=5),
        },
        depth_frames,
        skeleton_2d,
        roi,
        trim: Trim { start, end },
    }
}

pub fn translated(rec: &SequenceRecord, dx: f64, dy: f64) -> SequenceRecord {
    let mut out = rec.clone();
    for frame in out.skeleton_2d.iter_mut() {
        for p in frame.iter_mut() {
            p[0] += dx;
            p[1] += dy;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// pipeline fixtures

pub fn synth(dir: &Path, subjects: u32, trials: u32, seed: u64, frames: (usize, usize), image: (u32, u32)) {
    let spec = SyntheticSpec {
        n_subjects: subjects,
        n_trials: trials,
        frame_len_range: frames,
        image_size: image,
        seed,
    };
    cmd_synth(&spec, dir).unwrap();
}

/// Reduced config: widths at `scale`, every network's epochs set explicitly.
pub fn small_config(
    dataset: &Path,
    out: &Path,
    mode: ClassMode,
    networks: &[NetworkKind],
    scale: f64,
    epochs: &[(NetworkKind, usize)],
) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        dataset: dataset.to_path_buf(),
        out: out.to_path_buf(),
        class_mode: mode,
        scale,
        networks: networks.to_vec(),
        seed: 7,
        ..ExperimentConfig::default()
    };
    for &(k, e) in epochs {
        cfg.overrides.insert(
            k,
            PlanOverride {
                epochs: Some(e),
                ..PlanOverride::default()
            },
        );
    }
    cfg
}
