//! Gesture vocabulary of the 14/28-class dynamic hand gesture benchmark.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_GESTURES: u8 = 14;
pub const N_FINGER_CONFIGS: u8 = 2;

/// Gesture grain category.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grain {
    Fine,
    Coarse,
}

impl fmt::Display for Grain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grain::Fine => "Fine",
            Grain::Coarse => "Coarse",
        })
    }
}

/// (name, tag, grain) indexed by `gesture_id - 1`.
const GESTURES: [(&str, &str, Grain); 14] = [
    ("Grab", "G", Grain::Fine),
    ("Tap", "T", Grain::Coarse),
    ("Expand", "E", Grain::Fine),
    ("Pinch", "P", Grain::Fine),
    ("Rotation Clockwise", "R-CW", Grain::Fine),
    ("Rotation Counter-clockwise", "R-CCW", Grain::Fine),
    ("Swipe Right", "S-R", Grain::Coarse),
    ("Swipe Left", "S-L", Grain::Coarse),
    ("Swipe Up", "S-U", Grain::Coarse),
    ("Swipe Down", "S-D", Grain::Coarse),
    ("Swipe X", "S-X", Grain::Coarse),
    ("Swipe V", "S-V", Grain::Coarse),
    ("Swipe +", "S-+", Grain::Coarse),
    ("Shake", "Sh", Grain::Coarse),
];

/// Grain of a gesture id (1..=14).
pub fn grain_of(gesture_id: u8) -> Grain {
    GESTURES[(gesture_id - 1) as usize].2
}

/// Whether the problem distinguishes finger configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassMode {
    #[serde(rename = "14")]
    C14,
    #[serde(rename = "28")]
    C28,
}

impl ClassMode {
    pub fn n_classes(self) -> usize {
        match self {
            ClassMode::C14 => 14,
            ClassMode::C28 => 28,
        }
    }

    pub fn from_n_classes(n: usize) -> Result<Self> {
        match n {
            14 => Ok(ClassMode::C14),
            28 => Ok(ClassMode::C28),
            _ => Err(Error::Invalid(format!("class count must be 14 or 28, got {n}"))),
        }
    }
}

impl fmt::Display for ClassMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.n_classes())
    }
}

impl FromStr for ClassMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "14" | "c14" => Ok(ClassMode::C14),
            "28" | "c28" => Ok(ClassMode::C28),
            other => Err(Error::Invalid(format!("unknown class mode '{other}'"))),
        }
    }
}

/// One-based class label, valid within a given [`ClassMode`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassId(pub u16);

impl ClassId {
    pub fn from_zero_based(i: usize) -> Self {
        ClassId(i as u16 + 1)
    }

    pub fn zero_based(self) -> usize {
        self.0 as usize - 1
    }

    pub fn get(self) -> u16 {
        self.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A gesture performed with a given finger configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GestureClass {
    gesture_id: u8,
    finger_config: u8,
}

impl GestureClass {
    pub fn new(gesture_id: u8, finger_config: u8) -> Result<Self> {
        if !(1..=N_GESTURES).contains(&gesture_id) {
            return Err(Error::Invalid(format!("gesture id {gesture_id} outside 1..=14")));
        }
        if !(1..=N_FINGER_CONFIGS).contains(&finger_config) {
            return Err(Error::Invalid(format!(
                "finger configuration {finger_config} outside 1..=2"
            )));
        }
        Ok(Self {
            gesture_id,
            finger_config,
        })
    }

    /// All 28 (gesture, finger) classes in class-index order.
    pub fn all() -> impl Iterator<Item = GestureClass> {
        (1..=N_GESTURES).flat_map(|g| {
            (1..=N_FINGER_CONFIGS).map(move |f| GestureClass {
                gesture_id: g,
                finger_config: f,
            })
        })
    }

    pub fn gesture_id(self) -> u8 {
        self.gesture_id
    }

    pub fn finger_config(self) -> u8 {
        self.finger_config
    }

    pub fn grain(self) -> Grain {
        grain_of(self.gesture_id)
    }

    pub fn name(self) -> &'static str {
        GESTURES[(self.gesture_id - 1) as usize].0
    }

    pub fn tag(self) -> &'static str {
        GESTURES[(self.gesture_id - 1) as usize].1
    }

    /// Class label under `mode`: the gesture id for 14 classes,
    /// `(gesture_id - 1) * 2 + finger_config` for 28.
    pub fn class_id(self, mode: ClassMode) -> ClassId {
        match mode {
            ClassMode::C14 => ClassId(self.gesture_id as u16),
            ClassMode::C28 => ClassId((self.gesture_id as u16 - 1) * 2 + self.finger_config as u16),
        }
    }

    /// Inverse of [`class_id`](Self::class_id) for 28 classes.
    pub fn from_class_id_28(id: ClassId) -> Result<Self> {
        if !(1..=28).contains(&id.0) {
            return Err(Error::Invalid(format!("28-class id {} out of range", id.0)));
        }
        let z = id.0 - 1;
        Self::new((z / 2 + 1) as u8, (z % 2 + 1) as u8)
    }

    /// Short label, e.g. `G` (14 classes) or `G-1` (28 classes).
    pub fn label(self, mode: ClassMode) -> String {
        match mode {
            ClassMode::C14 => self.tag().to_string(),
            ClassMode::C28 => format!("{}-{}", self.tag(), self.finger_config),
        }
    }
}

/// Gesture id a class label refers to (collapses finger configuration).
pub fn gesture_of(id: ClassId, mode: ClassMode) -> u8 {
    match mode {
        ClassMode::C14 => id.0 as u8,
        ClassMode::C28 => ((id.0 - 1) / 2 + 1) as u8,
    }
}

/// Grain of a class label.
pub fn grain_of_class(id: ClassId, mode: ClassMode) -> Grain {
    grain_of(gesture_of(id, mode))
}

/// Display labels for every class of `mode`, in class order.
pub fn class_labels(mode: ClassMode) -> Vec<String> {
    match mode {
        ClassMode::C14 => GESTURES.iter().map(|g| g.1.to_string()).collect(),
        ClassMode::C28 => GestureClass::all().map(|c| c.label(mode)).collect(),
    }
}
