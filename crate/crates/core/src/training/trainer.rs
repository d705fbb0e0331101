//! Mini-batch training loop and evaluation.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::data::{frame_batch, frame_samples, sequence_batch, target};
use super::optim::Optimizer;
use super::plan::TrainPlan;
use super::predictions::Prediction;
use crate::dataset::ClassMode;
use crate::error::{Error, Result};
use crate::nn::{predict, Network, NetworkKind, Parameters};
use crate::preprocess::Clip;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Independent seed for a named purpose.
pub fn derive_seed(seed: u64, tag: &str, k: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    h.update(k.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Training clips of one fold.
pub struct TrainSet<'a, T> {
    pub clips: Vec<&'a Clip<T>>,
    pub mode: ClassMode,
    /// Subject whose sequences must never reach a gradient step.
    pub held_out: Option<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean cross-entropy per epoch.
    pub epoch_losses: Vec<f64>,
    /// Running accuracy over each epoch's batches.
    pub epoch_accuracy: Vec<f64>,
    pub samples_per_epoch: usize,
    pub steps_per_epoch: usize,
    /// Subjects that contributed to at least one gradient step.
    pub subjects_seen: BTreeSet<u32>,
}

fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Train `params` in place for `plan.epochs` epochs.
///
/// The per-frame CNN draws samples from every valid frame; all other
/// networks draw whole clips. Shuffling is seeded per epoch.
pub fn train_network<T: Scalar>(
    net: &Network,
    params: &mut Parameters<T>,
    optimizer: &mut Optimizer<T>,
    data: &TrainSet<T>,
    plan: &TrainPlan,
    seed: u64,
) -> Result<TrainHistory> {
    plan.validate()?;
    let spec = net.spec();
    if plan.network != spec.kind {
        return Err(Error::Config(format!("plan for {} used with a {} network", plan.network, spec.kind)));
    }
    if spec.n_classes != data.mode.n_classes() {
        return Err(Error::Config(format!(
            "network has {} classes but the data is in {}-class mode",
            spec.n_classes, data.mode
        )));
    }
    if data.clips.is_empty() {
        return Err(Error::Invalid(format!("{}: empty training set", spec.kind)));
    }
    let per_frame = spec.kind == NetworkKind::DepthCnn;
    let frames = if per_frame { frame_samples(&data.clips) } else { Vec::new() };
    let n = if per_frame { frames.len() } else { data.clips.len() };

    let mut hist = TrainHistory {
        samples_per_epoch: n,
        steps_per_epoch: n.div_ceil(plan.batch_size),
        ..TrainHistory::default()
    };
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..plan.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "shuffle", epoch as u64));
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (step, chunk) in order.chunks(plan.batch_size).enumerate() {
            let (batch, clip_ids): (_, Vec<usize>) = if per_frame {
                let picked: Vec<(usize, usize)> = chunk.iter().map(|&i| frames[i]).collect();
                (frame_batch(&data.clips, &picked)?, picked.iter().map(|p| p.0).collect())
            } else {
                let picked: Vec<_> = chunk.iter().map(|&i| data.clips[i]).collect();
                (sequence_batch(&picked, spec.kind)?, chunk.to_vec())
            };
            let mut targets = Vec::with_capacity(clip_ids.len());
            for &c in &clip_ids {
                let clip = data.clips[c];
                if Some(clip.subject_id()) == data.held_out {
                    return Err(Error::Leakage {
                        subject: clip.subject_id(),
                    });
                }
                hist.subjects_seen.insert(clip.subject_id());
                targets.push(target(clip, data.mode));
            }
            let lg = net.loss_and_grad(params, &batch, &targets)?;
            let loss = lg.loss.as_f64();
            let diverged = || Error::Diverged {
                epoch: epoch + 1,
                step: step + 1,
                loss,
            };
            if !loss.is_finite() {
                return Err(diverged());
            }
            correct += targets
                .iter()
                .enumerate()
                .filter(|&(r, &t)| argmax(lg.probs.row(r)) == t)
                .count();
            loss_sum += loss * targets.len() as f64;
            optimizer.step(params, &lg.grads).map_err(|e| match e {
                Error::Numeric(_) => diverged(),
                other => other,
            })?;
        }
        let (l, a) = (loss_sum / n as f64, correct as f64 / n as f64);
        log::debug!("{} epoch {}/{}: loss {l:.5} acc {a:.4}", spec.kind, epoch + 1, plan.epochs);
        hist.epoch_losses.push(l);
        hist.epoch_accuracy.push(a);
    }
    Ok(hist)
}

/// Train the per-frame depth CNN that later seeds the CNN+LSTM conv layers.
pub fn pretrain_depth_cnn<T: Scalar>(
    net: &Network,
    params: &mut Parameters<T>,
    data: &TrainSet<T>,
    plan: &TrainPlan,
    seed: u64,
) -> Result<TrainHistory> {
    if net.spec().kind != NetworkKind::DepthCnn {
        return Err(Error::Config("pretraining needs a depth_cnn network".into()));
    }
    let mut opt = Optimizer::new(plan.optimizer);
    train_network(net, params, &mut opt, data, plan, seed)
}

/// Rank-1 predictions for whole sequences. The per-frame CNN scores every
/// valid frame and averages the frame scores before the argmax.
pub fn predict_clips<T: Scalar>(
    net: &Network,
    params: &Parameters<T>,
    clips: &[&Clip<T>],
    mode: ClassMode,
    batch_size: usize,
) -> Result<Vec<Prediction>> {
    let spec = net.spec();
    let c = mode.n_classes();
    if spec.n_classes != c {
        return Err(Error::Config(format!("network has {} classes, data {c}", spec.n_classes)));
    }
    let batch_size = batch_size.max(1);
    let mut scores: Vec<Vec<f64>> = Vec::with_capacity(clips.len());
    if spec.kind == NetworkKind::DepthCnn {
        for clip in clips {
            let one = [*clip];
            let frames = frame_samples(&one);
            let mut acc = vec![0.0f64; c];
            for chunk in frames.chunks(batch_size) {
                let probs = net.forward(params, &frame_batch(&one, chunk)?)?;
                for r in 0..probs.rows() {
                    for (a, p) in acc.iter_mut().zip(probs.row(r)) {
                        *a += p.as_f64();
                    }
                }
            }
            let k = frames.len() as f64;
            scores.push(acc.into_iter().map(|v| v / k).collect());
        }
    } else {
        for chunk in clips.chunks(batch_size) {
            let probs: Tensor<T> = net.forward(params, &sequence_batch(chunk, spec.kind)?)?;
            for r in 0..probs.rows() {
                scores.push(probs.row(r).iter().map(|p| p.as_f64()).collect());
            }
        }
    }
    clips
        .iter()
        .zip(scores)
        .map(|(clip, s)| {
            Ok(Prediction {
                sequence_id: clip.key.sequence_id(),
                subject: clip.subject_id(),
                truth: clip.label().class_id(mode),
                predicted: predict(&s)?,
                scores: s,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synthesize_record, GestureClass, SequenceKey, SyntheticSpec};
    use crate::nn::{build_network, init_parameters, ArchConfig, Widths};
    use crate::preprocess::{build_clip, ClipConfig};
    use crate::training::plan::TrainPlan;

    fn clips(subjects: &[u32], with_depth: bool) -> Vec<Clip<f32>> {
        let spec = SyntheticSpec {
            frame_len_range: (10, 16),
            image_size: (16, 16),
            seed: 5,
            ..SyntheticSpec::default()
        };
        let cfg = ClipConfig {
            timestep: 6,
            image_size: 8,
            with_depth,
        };
        let mut out = Vec::new();
        for &subject in subjects {
            for g in [1u8, 9] {
                for trial in 1..=2 {
                    let key = SequenceKey {
                        class: GestureClass::new(g, 1).unwrap(),
                        subject,
                        trial,
                    };
                    out.push(build_clip(&synthesize_record(&spec, key).unwrap(), &cfg).unwrap());
                }
            }
        }
        out
    }

    fn arch() -> ArchConfig {
        ArchConfig {
            widths: Widths::default().scaled(0.05),
            timestep: 6,
            image_size: 8,
        }
    }

    #[test]
    fn per_frame_pretraining_counts_epochs_and_steps() {
        let data = clips(&[1], true);
        let set = TrainSet {
            clips: data.iter().collect(),
            mode: ClassMode::C14,
            held_out: Some(2),
        };
        let spec = build_network(NetworkKind::DepthCnn, 14, &arch()).unwrap();
        let net = Network::new(spec.clone()).unwrap();
        let mut params = init_parameters(&spec, 1).unwrap();
        let plan = TrainPlan {
            epochs: 5,
            ..TrainPlan::reference(NetworkKind::DepthCnn)
        };
        let h = pretrain_depth_cnn(&net, &mut params, &set, &plan, 3).unwrap();
        let frames: usize = data.iter().map(|c| c.valid_len()).sum();
        assert_eq!(h.epoch_losses.len(), 5);
        assert_eq!(h.samples_per_epoch, frames);
        assert_eq!(h.steps_per_epoch, frames.div_ceil(32));
        for w in h.epoch_losses.windows(2) {
            assert!(w[1] < w[0], "{:?}", h.epoch_losses);
        }
        let preds = predict_clips(&net, &params, &set.clips, ClassMode::C14, 7).unwrap();
        assert_eq!(preds.len(), data.len());
        assert!(preds.iter().all(|p| (p.scores.iter().sum::<f64>() - 1.0).abs() < 1e-5));
    }

    #[test]
    fn held_out_subject_in_training_is_leakage() {
        let data = clips(&[1, 2], false);
        let set = TrainSet {
            clips: data.iter().collect(),
            mode: ClassMode::C14,
            held_out: Some(2),
        };
        let spec = build_network(NetworkKind::SkeletonLstm, 14, &arch()).unwrap();
        let net = Network::new(spec.clone()).unwrap();
        let mut params = init_parameters(&spec, 1).unwrap();
        let plan = TrainPlan {
            epochs: 1,
            ..TrainPlan::reference(NetworkKind::SkeletonLstm)
        };
        let mut opt = Optimizer::new(plan.optimizer);
        let e = train_network(&net, &mut params, &mut opt, &set, &plan, 0).unwrap_err();
        assert!(matches!(e, Error::Leakage { subject: 2 }), "{e}");
    }

    #[test]
    fn training_is_deterministic() {
        let data = clips(&[1], false);
        let set = TrainSet {
            clips: data.iter().collect(),
            mode: ClassMode::C14,
            held_out: None,
        };
        let spec = build_network(NetworkKind::SkeletonLstm, 14, &arch()).unwrap();
        let net = Network::new(spec.clone()).unwrap();
        let plan = TrainPlan {
            epochs: 3,
            batch_size: 3,
            ..TrainPlan::reference(NetworkKind::SkeletonLstm)
        };
        let run = || {
            let mut p: Parameters<f32> = init_parameters(&spec, 4).unwrap();
            let mut opt = Optimizer::new(plan.optimizer);
            let h = train_network(&net, &mut p, &mut opt, &set, &plan, 8).unwrap();
            (p, h)
        };
        assert_eq!(run(), run());
    }
}
