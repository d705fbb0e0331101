//! On-disk dataset layout.
//!
//! ```text
//! root/
//!   informations_troncage_sequences.txt      G F S E start end
//!   gesture_G/finger_F/subject_S/essai_E/
//!     depth_0.png ... depth_{N-1}.png         16-bit grayscale
//!     skeleton_image.txt                      N lines x 44 numbers
//!     skeleton_world.txt                      optional, ignored
//!     general_informations.txt                optional: frame x y w h
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma};

use super::gesture::{ClassMode, GestureClass};
use super::record::{DepthFrame, Joints2d, Roi, SequenceKey, SequenceRecord, Trim, NUM_JOINTS, SKELETON_DIM};
use crate::error::{Error, Result};

pub const TRIM_TABLE: &str = "informations_troncage_sequences.txt";
pub const SKELETON_FILE: &str = "skeleton_image.txt";
pub const INFO_FILE: &str = "general_informations.txt";

/// Lazily-loadable reference to one sequence directory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceEntry {
    pub key: SequenceKey,
    pub dir: PathBuf,
    pub n_frames: usize,
    pub trim: Trim,
}

#[derive(Clone, Debug)]
pub struct DatasetIndex {
    pub root: PathBuf,
    pub entries: Vec<SequenceEntry>,
    pub subjects: Vec<u32>,
    pub class_mode: ClassMode,
}

impl DatasetIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when the index has the full benchmark's shape:
    /// 2800 sequences, 20 subjects, 5 trials per (subject, gesture, finger).
    pub fn is_complete_benchmark(&self) -> bool {
        let mut per_triple: BTreeMap<(GestureClass, u32), usize> = BTreeMap::new();
        for e in &self.entries {
            *per_triple.entry((e.key.class, e.key.subject)).or_default() += 1;
        }
        self.entries.len() == 2800
            && self.subjects.len() == 20
            && per_triple.len() == 560
            && per_triple.values().all(|&n| n == 5)
    }
}

fn numbered(name: &str, prefix: &str) -> Option<u32> {
    name.strip_prefix(prefix)?.parse().ok()
}

fn numbered_subdirs(dir: &Path, prefix: &str) -> Result<Vec<(u32, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        if let Some(n) = path.file_name().and_then(|s| s.to_str()).and_then(|s| numbered(s, prefix)) {
            out.push((n, path));
        }
    }
    out.sort();
    Ok(out)
}

fn count_depth_frames(dir: &Path) -> Result<usize> {
    let mut max_index: Option<usize> = None;
    let mut count = 0usize;
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(idx) = name.strip_prefix("depth_").and_then(|s| s.strip_suffix(".png")) {
            if let Ok(i) = idx.parse::<usize>() {
                count += 1;
                max_index = Some(max_index.map_or(i, |m| m.max(i)));
            }
        }
    }
    match max_index {
        None => Err(Error::Dataset(format!("{}: no depth_*.png frames", dir.display()))),
        Some(m) if m + 1 != count => Err(Error::Dataset(format!(
            "{}: depth frames are not numbered contiguously from 0",
            dir.display()
        ))),
        Some(_) => Ok(count),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_trim_table(path: &Path) -> Result<BTreeMap<SequenceKey, Trim>> {
    if !path.is_file() {
        return Err(Error::Dataset(format!("missing trim table {}", path.display())));
    }
    let text = read_text(path)?;
    let mut table = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(path, i + 1, format!("bad integer: {e}")))?;
        if nums.len() != 6 {
            return Err(Error::parse(path, i + 1, format!("expected 6 fields, got {}", nums.len())));
        }
        let class = GestureClass::new(nums[0] as u8, nums[1] as u8)
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        let key = SequenceKey {
            class,
            subject: nums[2] as u32,
            trial: nums[3] as u32,
        };
        table.insert(
            key,
            Trim {
                start: nums[4],
                end: nums[5],
            },
        );
    }
    Ok(table)
}

/// Enumerate every sequence directory under `root` without decoding images.
pub fn scan_dataset(root: &Path, class_mode: ClassMode) -> Result<DatasetIndex> {
    if !root.is_dir() {
        return Err(Error::Dataset(format!("{} is not a directory", root.display())));
    }
    let gestures = numbered_subdirs(root, "gesture_")?;
    if gestures.is_empty() {
        return Err(Error::Dataset("no gesture directories found".into()));
    }
    let trim_path = root.join(TRIM_TABLE);
    let trims = read_trim_table(&trim_path)?;

    let mut entries = Vec::new();
    for (g, gdir) in gestures {
        for (f, fdir) in numbered_subdirs(&gdir, "finger_")? {
            let class = GestureClass::new(g as u8, f as u8)?;
            for (s, sdir) in numbered_subdirs(&fdir, "subject_")? {
                for (e, edir) in numbered_subdirs(&sdir, "essai_")? {
                    let key = SequenceKey {
                        class,
                        subject: s,
                        trial: e,
                    };
                    let trim = *trims.get(&key).ok_or_else(|| {
                        Error::Dataset(format!("{}: no entry for {key} in {}", edir.display(), trim_path.display()))
                    })?;
                    let n_frames = count_depth_frames(&edir)?;
                    trim.check(n_frames)
                        .map_err(|err| Error::Dataset(format!("{}: {err}", edir.display())))?;
                    entries.push(SequenceEntry {
                        key,
                        dir: edir,
                        n_frames,
                        trim,
                    });
                }
            }
        }
    }
    entries.sort_by_key(|e| e.key);
    let subjects: BTreeSet<u32> = entries.iter().map(|e| e.key.subject).collect();
    Ok(DatasetIndex {
        root: root.to_path_buf(),
        entries,
        subjects: subjects.into_iter().collect(),
        class_mode,
    })
}

fn read_depth_png(path: &Path) -> Result<DepthFrame> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    match img {
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            DepthFrame::new(w, h, buf.into_raw())
        }
        other => Err(Error::Image {
            path: path.to_path_buf(),
            msg: format!("expected 16-bit single-channel depth, got {:?}", other.color()),
        }),
    }
}

pub fn parse_skeleton(path: &Path) -> Result<Vec<Joints2d>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(path, i + 1, format!("bad number: {e}")))?;
        if vals.len() != SKELETON_DIM {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected {SKELETON_DIM} values, got {}", vals.len()),
            ));
        }
        let mut joints = [[0.0; 2]; NUM_JOINTS];
        for (j, p) in joints.iter_mut().enumerate() {
            *p = [vals[2 * j], vals[2 * j + 1]];
        }
        out.push(joints);
    }
    Ok(out)
}

fn parse_rois(path: &Path, n_frames: usize) -> Result<Vec<Roi>> {
    let text = read_text(path)?;
    let mut rois: Vec<Option<Roi>> = vec![None; n_frames];
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(path, i + 1, format!("bad integer: {e}")))?;
        if vals.len() != 5 || vals.iter().any(|&v| v < 0) {
            return Err(Error::parse(path, i + 1, "expected 'frame x y w h' with non-negative values"));
        }
        let frame = vals[0] as usize;
        if frame >= n_frames {
            return Err(Error::parse(path, i + 1, format!("frame {frame} beyond {n_frames} frames")));
        }
        rois[frame] = Some(Roi {
            x: vals[1] as u32,
            y: vals[2] as u32,
            width: vals[3] as u32,
            height: vals[4] as u32,
        });
    }
    rois.into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or_else(|| Error::Dataset(format!("{}: no roi for frame {i}", path.display()))))
        .collect()
}

/// Decode one sequence: depth frames, 2D skeleton, ROI, trim.
pub fn load_sequence(entry: &SequenceEntry) -> Result<SequenceRecord> {
    let depth_frames = (0..entry.n_frames)
        .map(|i| read_depth_png(&entry.dir.join(format!("depth_{i}.png"))))
        .collect::<Result<Vec<_>>>()?;
    let skeleton_path = entry.dir.join(SKELETON_FILE);
    let skeleton_2d = parse_skeleton(&skeleton_path)?;
    if skeleton_2d.len() != depth_frames.len() {
        return Err(Error::Dataset(format!(
            "{}: {} depth frames but {} skeleton lines",
            entry.dir.display(),
            depth_frames.len(),
            skeleton_2d.len()
        )));
    }
    let info_path = entry.dir.join(INFO_FILE);
    let roi = if info_path.is_file() {
        parse_rois(&info_path, depth_frames.len())?
    } else {
        depth_frames.iter().map(|f| Roi::full(f.width, f.height)).collect()
    };
    let record = SequenceRecord {
        key: entry.key,
        depth_frames,
        skeleton_2d,
        roi,
        trim: entry.trim,
    };
    record.validate()?;
    Ok(record)
}

pub fn sequence_dir(root: &Path, key: &SequenceKey) -> PathBuf {
    root.join(format!("gesture_{}", key.class.gesture_id()))
        .join(format!("finger_{}", key.class.finger_config()))
        .join(format!("subject_{}", key.subject))
        .join(format!("essai_{}", key.trial))
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Write one record in the dataset layout under `root`.
pub fn write_sequence(root: &Path, record: &SequenceRecord) -> Result<PathBuf> {
    record.validate()?;
    let dir = sequence_dir(root, &record.key);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (i, frame) in record.depth_frames.iter().enumerate() {
        let path = dir.join(format!("depth_{i}.png"));
        let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
            ImageBuffer::from_raw(frame.width, frame.height, frame.pixels.clone())
                .ok_or_else(|| Error::Invalid("depth buffer size".into()))?;
        buf.save_with_format(&path, image::ImageFormat::Png).map_err(|e| Error::Image {
            path: path.clone(),
            msg: e.to_string(),
        })?;
    }

    let path = dir.join(SKELETON_FILE);
    let mut w = create_file(&path)?;
    for joints in &record.skeleton_2d {
        let line: Vec<String> = joints.iter().flat_map(|p| [p[0].to_string(), p[1].to_string()]).collect();
        writeln!(w, "{}", line.join(" ")).map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(INFO_FILE);
    let mut w = create_file(&path)?;
    for (i, r) in record.roi.iter().enumerate() {
        writeln!(w, "{i} {} {} {} {}", r.x, r.y, r.width, r.height).map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(dir)
}

pub fn write_trim_table(root: &Path, trims: &BTreeMap<SequenceKey, Trim>) -> Result<()> {
    let path = root.join(TRIM_TABLE);
    let mut w = create_file(&path)?;
    for (k, t) in trims {
        writeln!(
            w,
            "{} {} {} {} {} {}",
            k.class.gesture_id(),
            k.class.finger_config(),
            k.subject,
            k.trial,
            t.start,
            t.end
        )
        .map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}
