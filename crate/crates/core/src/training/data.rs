//! Clip loading and mini-batch assembly.

use crate::dataset::{load_sequence, ClassMode, SequenceEntry, SKELETON_DIM};
use crate::error::{Error, Result};
use crate::nn::{Batch, NetworkKind};
use crate::preprocess::{build_clip, Clip, ClipConfig};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Load and preprocess every entry, in order.
pub fn load_clips<T: Scalar>(entries: &[SequenceEntry], cfg: &ClipConfig) -> Result<Vec<Clip<T>>> {
    let mut out = Vec::with_capacity(entries.len());
    for e in entries {
        let record = load_sequence(e)?;
        out.push(build_clip(&record, cfg)?);
    }
    log::info!("preprocessed {} clips (T = {}, depth = {})", out.len(), cfg.timestep, cfg.with_depth);
    Ok(out)
}

/// Zero-based training target.
pub fn target<T: Scalar>(clip: &Clip<T>, mode: ClassMode) -> usize {
    clip.label().class_id(mode).zero_based()
}

/// Stack whole clips into a sequence batch for `kind`.
pub fn sequence_batch<T: Scalar>(clips: &[&Clip<T>], kind: NetworkKind) -> Result<Batch<T>> {
    let first = clips.first().ok_or_else(|| Error::Invalid("empty batch".into()))?;
    let t = first.timestep();
    let depth = if kind.uses_depth() {
        if clips.iter().any(|c| !c.has_depth()) {
            return Err(Error::Invalid(format!("{kind} needs depth clips")));
        }
        let rows: Vec<&[T]> = clips.iter().map(|c| c.depth.data()).collect();
        Some(Tensor::stack(&rows, first.depth.shape())?)
    } else {
        None
    };
    let skeleton = if kind.uses_skeleton() {
        let rows: Vec<&[T]> = clips.iter().map(|c| c.skeleton.data()).collect();
        Some(Tensor::stack(&rows, &[t, SKELETON_DIM])?)
    } else {
        None
    };
    Ok(Batch {
        depth,
        skeleton,
        lengths: clips.iter().map(|c| c.valid_len()).collect(),
    })
}

/// Every valid frame of every clip, as `(clip index, frame index)`.
pub fn frame_samples<T: Scalar>(clips: &[&Clip<T>]) -> Vec<(usize, usize)> {
    clips
        .iter()
        .enumerate()
        .flat_map(|(i, c)| (0..c.valid_len()).map(move |f| (i, f)))
        .collect()
}

/// Stack single depth frames into `[N, S, S, 1]`.
pub fn frame_batch<T: Scalar>(clips: &[&Clip<T>], samples: &[(usize, usize)]) -> Result<Batch<T>> {
    let first = clips.first().ok_or_else(|| Error::Invalid("empty batch".into()))?;
    if !first.has_depth() {
        return Err(Error::Invalid("per-frame CNN needs depth clips".into()));
    }
    let frame_shape = &first.depth.shape()[1..];
    let per: usize = frame_shape.iter().product();
    let rows: Vec<&[T]> = samples
        .iter()
        .map(|&(c, f)| &clips[c].depth.data()[f * per..(f + 1) * per])
        .collect();
    Ok(Batch::frames(Tensor::stack(&rows, frame_shape)?))
}
