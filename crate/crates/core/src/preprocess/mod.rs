//! Record-to-clip preprocessing.

pub mod clip;
pub mod depth;
pub mod sequence;

pub use clip::{build_clip, read_clip_cache, write_clip_cache, Clip, ClipConfig, DEFAULT_IMAGE_SIZE, DEFAULT_TIMESTEP};
pub use depth::{crop_and_resize, normalize_depth_frame};
pub use sequence::{normalize_skeleton, resample_timesteps, trim_sequence, PALM_JOINT};
