//! Confusion matrices, grain statistics, fold aggregation and LAWRFD.

pub mod confusion;
pub mod grain;
pub mod report;

pub use confusion::{
    collapse_28_to_14, collapse_predictions, confusion_matrix, lawrfd, per_class_accuracy, ConfusionMatrix,
};
pub use grain::{fold_grain_report, gesture_grain_report, grain_summary, GrainReport, GrainStats, Unit};
pub use report::{
    aggregate_folds, decompose_drop, grain_table_csv, render_grain_table, render_summary, CollapseReport,
    DropDecomposition, FoldPredictions, OverallReport,
};
