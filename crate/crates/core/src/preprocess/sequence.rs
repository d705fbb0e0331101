//! Per-sequence operations: trimming, palm-relative skeletons, fixed timesteps.

use crate::dataset::{SequenceRecord, Trim, SKELETON_DIM};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Index of the palm joint in the 22-joint ordering (0 is the wrist).
pub const PALM_JOINT: usize = 1;

/// Restrict every per-frame stream to the inclusive trim range.
pub fn trim_sequence(record: &SequenceRecord) -> SequenceRecord {
    let Trim { start, end } = record.trim;
    SequenceRecord {
        key: record.key,
        depth_frames: record.depth_frames[start..=end].to_vec(),
        skeleton_2d: record.skeleton_2d[start..=end].to_vec(),
        roi: record.roi[start..=end].to_vec(),
        trim: Trim {
            start: 0,
            end: end - start,
        },
    }
}

/// Subtract the first frame's palm position from every joint of every frame.
/// Output shape `[N, 44]`, laid out `x0, y0, x1, y1, ...`.
pub fn normalize_skeleton<T: Scalar>(record: &SequenceRecord) -> Result<Tensor<T>> {
    let first = record
        .skeleton_2d
        .first()
        .ok_or_else(|| Error::Dataset(format!("{}: empty skeleton stream", record.key)))?;
    let [px, py] = first[PALM_JOINT];
    let mut data = Vec::with_capacity(record.skeleton_2d.len() * SKELETON_DIM);
    for joints in &record.skeleton_2d {
        for &[x, y] in joints {
            data.push(T::from_f64_lossy(x - px));
            data.push(T::from_f64_lossy(y - py));
        }
    }
    Tensor::from_vec(&[record.skeleton_2d.len(), SKELETON_DIM], data)
}

/// Truncate (keep the first `timestep` rows) or zero-pad a stream of shape
/// `[N, ...]` to `[timestep, ...]`. The mask marks real rows.
pub fn resample_timesteps<T: Scalar>(stream: &Tensor<T>, timestep: usize) -> Result<(Tensor<T>, Vec<bool>)> {
    let n = stream.rows();
    if n == 0 || stream.shape().is_empty() {
        return Err(Error::Invalid("resample_timesteps: empty input".into()));
    }
    if timestep == 0 {
        return Err(Error::Invalid("timestep must be at least 1".into()));
    }
    let k = stream.row_len();
    let keep = n.min(timestep);
    let mut data = Vec::with_capacity(timestep * k);
    data.extend_from_slice(&stream.data()[..keep * k]);
    data.resize(timestep * k, T::zero());
    let mut shape = stream.shape().to_vec();
    shape[0] = timestep;
    let mask = (0..timestep).map(|t| t < keep).collect();
    Ok((Tensor::from_vec(&shape, data)?, mask))
}
