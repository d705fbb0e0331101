//! Deterministic synthetic datasets in the on-disk benchmark layout.
//!
//! Each class gets a distinct palm trajectory and finger articulation
//! pattern, rendered both as a 16-bit depth image of a hand-shaped blob and
//! as 22 projected joints. Subjects differ by hand scale, placement and
//! speed; trials differ by small noise, so classes stay separable across
//! held-out subjects.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gesture::{GestureClass, N_GESTURES};
use super::layout::{write_sequence, write_trim_table};
use super::record::{DepthFrame, Joints2d, Roi, SequenceKey, SequenceRecord, Trim, NUM_JOINTS};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_subjects: u32,
    pub n_trials: u32,
    /// Inclusive range of sequence lengths in frames.
    pub frame_len_range: (usize, usize),
    /// (height, width) of depth frames.
    pub image_size: (u32, u32),
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_subjects: 3,
            n_trials: 2,
            frame_len_range: (7, 149),
            image_size: (48, 64),
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.frame_len_range;
        if lo < 1 || lo > hi {
            return Err(Error::Invalid(format!("frame_len_range ({lo}, {hi}) must satisfy 1 <= min <= max")));
        }
        if self.n_subjects == 0 || self.n_trials == 0 {
            return Err(Error::Invalid("n_subjects and n_trials must be positive".into()));
        }
        let (h, w) = self.image_size;
        if h < 16 || w < 16 {
            return Err(Error::Invalid(format!("image size {h}x{w} too small (min 16x16)")));
        }
        Ok(())
    }

    /// Sequence keys in layout order.
    pub fn keys(&self) -> Vec<SequenceKey> {
        let mut keys = Vec::new();
        for class in GestureClass::all() {
            for subject in 1..=self.n_subjects {
                for trial in 1..=self.n_trials {
                    keys.push(SequenceKey { class, subject, trial });
                }
            }
        }
        keys
    }
}

/// Summary of one generated sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratedSequence {
    pub key: SequenceKey,
    pub n_frames: usize,
    pub trim: Trim,
}

fn mix(parts: &[u64]) -> u64 {
    // splitmix64 over the parts
    let mut h = 0x9E37_79B9_7F4A_7C15u64;
    for &p in parts {
        h ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

struct SubjectStyle {
    scale: f64,
    offset: (f64, f64),
    speed: f64,
    depth_offset: f64,
}

fn subject_style(seed: u64, subject: u32) -> SubjectStyle {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, 0x5u64, subject as u64]));
    SubjectStyle {
        scale: rng.gen_range(0.92..1.08),
        offset: (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
        speed: rng.gen_range(0.9..1.1),
        depth_offset: rng.gen_range(-800.0..800.0),
    }
}

/// Palm displacement in amplitude units for phase `u` in [0, 1].
fn trajectory(gesture: u8, u: f64) -> (f64, f64) {
    let lerp = |a: (f64, f64), b: (f64, f64), t: f64| (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t);
    let piecewise = |pts: &[(f64, f64)], u: f64| {
        let segs = (pts.len() - 1) as f64;
        let x = (u * segs).min(segs - 1e-9);
        let i = x.floor() as usize;
        lerp(pts[i], pts[i + 1], x - i as f64)
    };
    match gesture {
        2 => (0.0, 0.35 * (PI * u).sin()),
        7 => (-1.0 + 2.0 * u, 0.0),
        8 => (1.0 - 2.0 * u, 0.0),
        9 => (0.0, 1.0 - 2.0 * u),
        10 => (0.0, -1.0 + 2.0 * u),
        11 => piecewise(&[(-1.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0)], u),
        12 => piecewise(&[(-1.0, -1.0), (0.0, 1.0), (1.0, -1.0)], u),
        13 => piecewise(&[(-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0)], u),
        14 => (0.6 * (4.0 * PI * u).sin(), 0.0),
        _ => (0.0, 0.0),
    }
}

/// Hand pose at phase `u`: (rotation, per-finger extension, pinch closure).
fn articulation(gesture: u8, finger_config: u8, u: f64) -> (f64, [f64; 5], f64) {
    let mut ext = if finger_config == 1 {
        [0.35, 1.0, 0.35, 0.35, 0.35]
    } else {
        [1.0; 5]
    };
    let mut rotation = 0.0;
    let mut pinch = 0.0;
    match gesture {
        1 => ext.iter_mut().for_each(|e| *e *= 1.0 - 0.65 * u),
        3 => ext.iter_mut().for_each(|e| *e *= 0.35 + 0.65 * u),
        4 => pinch = u,
        5 => rotation = 0.5 * PI * u,
        6 => rotation = -0.5 * PI * u,
        _ => {}
    }
    (rotation, ext, pinch)
}

const FINGER_ANGLES: [f64; 5] = [-1.15, -0.45, 0.0, 0.4, 0.8];

fn hand_joints(palm: (f64, f64), size: f64, rotation: f64, ext: [f64; 5], pinch: f64) -> Joints2d {
    let mut joints = [[0.0; 2]; NUM_JOINTS];
    let rot = |dx: f64, dy: f64| {
        let (s, c) = rotation.sin_cos();
        (dx * c - dy * s, dx * s + dy * c)
    };
    let (wx, wy) = rot(0.0, 0.9 * size);
    joints[0] = [palm.0 + wx, palm.1 + wy];
    joints[1] = [palm.0, palm.1];
    for (f, (&base, &e)) in FINGER_ANGLES.iter().zip(&ext).enumerate() {
        // thumb and index converge while pinching
        let angle = match f {
            0 => base + 0.6 * pinch,
            1 => base - 0.25 * pinch,
            _ => base,
        } - PI / 2.0;
        for k in 0..4 {
            let r = size * (0.5 + 0.32 * (k as f64 + 1.0) * e);
            let (dx, dy) = rot(r * angle.cos(), r * angle.sin());
            joints[2 + 4 * f + k] = [palm.0 + dx, palm.1 + dy];
        }
    }
    joints
}

fn seg_dist2(p: (f64, f64), a: [f64; 2], b: [f64; 2]) -> f64 {
    let (vx, vy) = (b[0] - a[0], b[1] - a[1]);
    let (wx, wy) = (p.0 - a[0], p.1 - a[1]);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 { ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (dx, dy) = (wx - t * vx, wy - t * vy);
    dx * dx + dy * dy
}

fn render_depth(
    w: u32,
    h: u32,
    joints: &Joints2d,
    size: f64,
    hand_depth: f64,
    background: f64,
    rng: &mut ChaCha8Rng,
) -> DepthFrame {
    let palm = (joints[1][0], joints[1][1]);
    let palm_r2 = (0.55 * size).powi(2);
    let finger_r2 = (0.16 * size).max(0.9).powi(2);
    let mut pixels = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let p = (x as f64 + 0.5, y as f64 + 0.5);
            let dp = (p.0 - palm.0).powi(2) + (p.1 - palm.1).powi(2);
            let mut on_hand = dp <= palm_r2 || seg_dist2(p, joints[0], joints[1]) <= finger_r2 * 2.0;
            if !on_hand {
                'fingers: for f in 0..5 {
                    let mut prev = joints[1];
                    for k in 0..4 {
                        let j = joints[2 + 4 * f + k];
                        if seg_dist2(p, prev, j) <= finger_r2 {
                            on_hand = true;
                            break 'fingers;
                        }
                        prev = j;
                    }
                }
            }
            let base = if on_hand { hand_depth + 0.4 * dp.sqrt() * 10.0 } else { background };
            let v = base + rng.gen_range(-40.0..40.0);
            pixels.push(v.round().clamp(0.0, 65535.0) as u16);
        }
    }
    DepthFrame {
        width: w,
        height: h,
        pixels,
    }
}

/// Ground-truth record for one key.
pub fn synthesize_record(spec: &SyntheticSpec, key: SequenceKey) -> Result<SequenceRecord> {
    spec.validate()?;
    let (h, w) = spec.image_size;
    let style = subject_style(spec.seed, key.subject);
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[
        spec.seed,
        key.class.gesture_id() as u64,
        key.class.finger_config() as u64,
        key.subject as u64,
        key.trial as u64,
    ]));
    let (lo, hi) = spec.frame_len_range;
    let n = rng.gen_range(lo..=hi);
    let lead = rng.gen_range(0..=(n - 1) / 5);
    let tail = rng.gen_range(0..=(n - 1 - lead) / 5);
    let trim = Trim {
        start: lead,
        end: n - 1 - tail,
    };

    let short = h.min(w) as f64;
    let amplitude = 0.22 * short;
    let size = 0.16 * short * style.scale;
    let center = (
        w as f64 / 2.0 + style.offset.0 + rng.gen_range(-1.0..1.0),
        h as f64 / 2.0 + style.offset.1 + rng.gen_range(-1.0..1.0),
    );
    let background = 42000.0 + style.depth_offset;
    let hand_depth = 21000.0 + style.depth_offset;
    let span = (trim.end - trim.start).max(1) as f64;

    let margin_x = (w as f64 * 0.06).round() as u32;
    let margin_y = (h as f64 * 0.06).round() as u32;
    let roi = Roi {
        x: margin_x,
        y: margin_y,
        width: w - 2 * margin_x,
        height: h - 2 * margin_y,
    };

    let mut depth_frames = Vec::with_capacity(n);
    let mut skeleton_2d = Vec::with_capacity(n);
    for t in 0..n {
        let raw = (t as f64 - trim.start as f64) / span;
        let u = (raw * style.speed).clamp(0.0, 1.0);
        let (tx, ty) = trajectory(key.class.gesture_id(), u);
        let (rotation, ext, pinch) = articulation(key.class.gesture_id(), key.class.finger_config(), u);
        let tap_depth = if key.class.gesture_id() == 2 { -3000.0 * (PI * u).sin() } else { 0.0 };
        let palm = (center.0 + amplitude * tx, center.1 + amplitude * ty);
        let mut joints = hand_joints(palm, size, rotation, ext, pinch);
        for j in joints.iter_mut() {
            for c in j.iter_mut() {
                let noisy = *c + rng.gen_range(-0.25..0.25);
                *c = (noisy * 1000.0).round() / 1000.0;
            }
        }
        depth_frames.push(render_depth(w, h, &joints, size, hand_depth + tap_depth, background, &mut rng));
        skeleton_2d.push(joints);
    }

    let record = SequenceRecord {
        key,
        depth_frames,
        skeleton_2d,
        roi: vec![roi; n],
        trim,
    };
    record.validate()?;
    Ok(record)
}

/// Write a full synthetic dataset under `out_path`.
pub fn generate_synthetic(spec: &SyntheticSpec, out_path: &Path) -> Result<Vec<GeneratedSequence>> {
    spec.validate()?;
    debug_assert_eq!(N_GESTURES, 14);
    fs::create_dir_all(out_path).map_err(|e| Error::io(out_path, e))?;
    let mut trims = BTreeMap::new();
    let mut out = Vec::new();
    for key in spec.keys() {
        let record = synthesize_record(spec, key)?;
        write_sequence(out_path, &record)?;
        trims.insert(key, record.trim);
        out.push(GeneratedSequence {
            key,
            n_frames: record.len(),
            trim: record.trim,
        });
    }
    write_trim_table(out_path, &trims)?;
    Ok(out)
}
