//! Fixed-timestep clips and the on-disk clip cache.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::depth::{crop_and_resize, normalize_depth_frame};
use super::sequence::{normalize_skeleton, resample_timesteps, trim_sequence};
use crate::container;
use crate::dataset::{GestureClass, SequenceKey, SequenceRecord, SKELETON_DIM};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const DEFAULT_TIMESTEP: usize = 32;
pub const DEFAULT_IMAGE_SIZE: usize = 227;
const CACHE_VERSION: u32 = 1;

/// Parameters that determine clip contents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipConfig {
    pub timestep: usize,
    pub image_size: usize,
    /// Build the depth stream (the skeleton-only network does not need it).
    pub with_depth: bool,
}

impl Default for ClipConfig {
    fn default() -> Self {
        Self {
            timestep: DEFAULT_TIMESTEP,
            image_size: DEFAULT_IMAGE_SIZE,
            with_depth: true,
        }
    }
}

/// Preprocessed network input for one sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Clip<T> {
    pub key: SequenceKey,
    /// `[T, S, S, 1]`, values in [0, 1]; empty `[0]` when depth was skipped.
    pub depth: Tensor<T>,
    /// `[T, 44]` palm-relative pixel offsets.
    pub skeleton: Tensor<T>,
    pub mask: Vec<bool>,
}

impl<T: Scalar> Clip<T> {
    pub fn label(&self) -> GestureClass {
        self.key.class
    }

    pub fn subject_id(&self) -> u32 {
        self.key.subject
    }

    pub fn timestep(&self) -> usize {
        self.mask.len()
    }

    /// Number of real (unpadded) frames.
    pub fn valid_len(&self) -> usize {
        self.mask.iter().take_while(|&&m| m).count()
    }

    pub fn has_depth(&self) -> bool {
        !self.depth.is_empty()
    }
}

/// trim -> (depth: normalize, crop, resize | skeleton: palm-relative) -> resample.
pub fn build_clip<T: Scalar>(record: &SequenceRecord, cfg: &ClipConfig) -> Result<Clip<T>> {
    record.validate()?;
    let trimmed = trim_sequence(record);
    let skeleton = normalize_skeleton::<T>(&trimmed)?;
    let (skeleton, mask) = resample_timesteps(&skeleton, cfg.timestep)?;

    let depth = if cfg.with_depth {
        let s = cfg.image_size;
        let keep = trimmed.len().min(cfg.timestep);
        let mut data = Vec::with_capacity(cfg.timestep * s * s);
        for (frame, roi) in trimmed.depth_frames.iter().zip(&trimmed.roi).take(keep) {
            let norm = normalize_depth_frame::<T>(frame);
            data.extend_from_slice(crop_and_resize(&norm, *roi, s)?.data());
        }
        data.resize(cfg.timestep * s * s, T::zero());
        Tensor::from_vec(&[cfg.timestep, s, s, 1], data)?
    } else {
        Tensor::zeros(&[0])
    };
    Ok(Clip {
        key: record.key,
        depth,
        skeleton,
        mask,
    })
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct CacheHeader {
    version: u32,
    config: ClipConfig,
    truncation: String,
    key: SequenceKey,
    mask: Vec<bool>,
}

pub fn write_clip_cache<T: Scalar>(path: &Path, clip: &Clip<T>, cfg: &ClipConfig) -> Result<()> {
    let header = CacheHeader {
        version: CACHE_VERSION,
        config: *cfg,
        truncation: "first".into(),
        key: clip.key,
        mask: clip.mask.clone(),
    };
    let meta = serde_json::to_value(&header).map_err(|e| Error::Format(e.to_string()))?;
    container::write_file(path, &meta, &[("depth", &clip.depth), ("skeleton", &clip.skeleton)])
}

/// Read a cached clip, rejecting caches built with different parameters.
pub fn read_clip_cache<T: Scalar>(path: &Path, cfg: &ClipConfig) -> Result<Clip<T>> {
    let decoded = container::read_file::<T>(path)?;
    let header: CacheHeader =
        serde_json::from_value(decoded.meta).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if header.version != CACHE_VERSION || header.config != *cfg || header.truncation != "first" {
        return Err(Error::Format(format!(
            "{}: stale clip cache (built with {:?}, v{})",
            path.display(),
            header.config,
            header.version
        )));
    }
    let mut tensors = decoded.tensors.into_iter();
    let (Some((_, depth)), Some((_, skeleton))) = (tensors.next(), tensors.next()) else {
        return Err(Error::Format(format!("{}: missing tensors", path.display())));
    };
    if skeleton.shape() != [cfg.timestep, SKELETON_DIM] {
        return Err(Error::Format(format!("{}: bad skeleton shape", path.display())));
    }
    Ok(Clip {
        key: header.key,
        depth,
        skeleton,
        mask: header.mask,
    })
}
