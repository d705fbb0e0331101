//! In-memory sequence records.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::gesture::GestureClass;
use crate::error::{Error, Result};

pub const NUM_JOINTS: usize = 22;
/// Flattened 2D skeleton width (22 joints x (x, y)).
pub const SKELETON_DIM: usize = NUM_JOINTS * 2;

/// 22 joints, each `[x, y]` in pixels.
pub type Joints2d = [[f64; 2]; NUM_JOINTS];

/// Single-channel 16-bit depth image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthFrame {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u16>,
}

impl DepthFrame {
    pub fn new(width: u32, height: u32, pixels: Vec<u16>) -> Result<Self> {
        if pixels.len() != (width as usize) * (height as usize) {
            return Err(Error::Invalid(format!(
                "depth frame {width}x{height} needs {} pixels, got {}",
                width as usize * height as usize,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, value: u16) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.pixels[(y * self.width + x) as usize]
    }
}

/// Axis-aligned pixel box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Roi {
    pub fn full(width: u32, height: u32) -> Self {
        Self {
            x: 0,
            y: 0,
            width,
            height,
        }
    }

    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        self.x as u64 + self.width as u64 <= width as u64
            && self.y as u64 + self.height as u64 <= height as u64
    }
}

/// Inclusive frame range `[start, end]` holding the gesture motion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trim {
    pub start: usize,
    pub end: usize,
}

impl Trim {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn check(&self, n_frames: usize) -> Result<()> {
        if self.start > self.end || self.end >= n_frames {
            return Err(Error::Dataset(format!(
                "trim ({}, {}) invalid for {} frames",
                self.start, self.end, n_frames
            )));
        }
        Ok(())
    }
}

/// Identity of one recorded performance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SequenceKey {
    pub class: GestureClass,
    pub subject: u32,
    pub trial: u32,
}

impl SequenceKey {
    pub fn sequence_id(&self) -> String {
        format!(
            "g{:02}_f{}_s{:02}_e{}",
            self.class.gesture_id(),
            self.class.finger_config(),
            self.subject,
            self.trial
        )
    }
}

impl fmt::Display for SequenceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.sequence_id())
    }
}

/// One gesture performance with both streams.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceRecord {
    pub key: SequenceKey,
    pub depth_frames: Vec<DepthFrame>,
    pub skeleton_2d: Vec<Joints2d>,
    pub roi: Vec<Roi>,
    pub trim: Trim,
}

impl SequenceRecord {
    pub fn len(&self) -> usize {
        self.depth_frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth_frames.is_empty()
    }

    pub fn label(&self) -> GestureClass {
        self.key.class
    }

    pub fn subject_id(&self) -> u32 {
        self.key.subject
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.depth_frames.len();
        if n == 0 {
            return Err(Error::Dataset(format!("{}: no frames", self.key)));
        }
        if self.skeleton_2d.len() != n {
            return Err(Error::Dataset(format!(
                "{}: {} depth frames but {} skeleton frames",
                self.key,
                n,
                self.skeleton_2d.len()
            )));
        }
        if self.roi.len() != n {
            return Err(Error::Dataset(format!(
                "{}: {} depth frames but {} roi boxes",
                self.key,
                n,
                self.roi.len()
            )));
        }
        self.trim.check(n)?;
        for (i, (frame, roi)) in self.depth_frames.iter().zip(&self.roi).enumerate() {
            if !roi.fits_in(frame.width, frame.height) {
                return Err(Error::Dataset(format!(
                    "{}: roi {:?} of frame {} exceeds {}x{}",
                    self.key, roi, i, frame.width, frame.height
                )));
            }
        }
        Ok(())
    }
}
