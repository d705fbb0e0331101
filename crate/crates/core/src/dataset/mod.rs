//! Dataset records, on-disk layout, synthetic generation and LOSO splits.

pub mod gesture;
pub mod layout;
pub mod loso;
pub mod record;
pub mod synth;

pub use gesture::{ClassId, ClassMode, GestureClass, Grain};
pub use layout::{load_sequence, scan_dataset, DatasetIndex, SequenceEntry};
pub use loso::{split_loso, LosoFold};
pub use record::{DepthFrame, Joints2d, Roi, SequenceKey, SequenceRecord, Trim, NUM_JOINTS, SKELETON_DIM};
pub use synth::{generate_synthetic, synthesize_record, GeneratedSequence, SyntheticSpec};
