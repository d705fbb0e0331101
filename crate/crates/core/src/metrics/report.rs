//! Cross-fold aggregation and report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::confusion::{collapse_28_to_14, confusion_matrix, lawrfd, per_class_accuracy, ConfusionMatrix};
use super::grain::{fold_grain_report, gesture_grain_report, GrainReport, GrainStats};
use crate::dataset::ClassMode;
use crate::error::{Error, Result};
use crate::training::{accuracy, Prediction};

/// Predictions of one network on one held-out subject.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldPredictions {
    pub fold: u32,
    pub predictions: Vec<Prediction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub accuracy_28: f64,
    pub collapsed_accuracy: f64,
    pub lawrfd: f64,
    pub collapsed: ConfusionMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverallReport {
    pub network: String,
    pub class_mode: ClassMode,
    pub pooled: ConfusionMatrix,
    pub pooled_accuracy: f64,
    pub fold_accuracies: Vec<(u32, f64)>,
    pub per_class_accuracy: Vec<Option<f64>>,
    /// Canonical reading: units are folds.
    pub fold_grain: GrainReport,
    /// Alternative reading: units are classes of the pooled matrix.
    pub gesture_grain: GrainReport,
    pub collapse: Option<CollapseReport>,
}

/// Pool a network's folds. Every fold in `expected` must be present exactly
/// once and nothing else may appear.
pub fn aggregate_folds(network: &str, mode: ClassMode, folds: &[FoldPredictions], expected: &[u32]) -> Result<OverallReport> {
    let mut by_fold: BTreeMap<u32, &FoldPredictions> = BTreeMap::new();
    for f in folds {
        if by_fold.insert(f.fold, f).is_some() {
            return Err(Error::Invalid(format!("{network}: fold {} given twice", f.fold)));
        }
    }
    for s in expected {
        if !by_fold.contains_key(s) {
            return Err(Error::Invalid(format!("{network}: missing fold {s}")));
        }
    }
    if let Some(extra) = by_fold.keys().find(|k| !expected.contains(k)) {
        return Err(Error::Invalid(format!("{network}: unexpected fold {extra}")));
    }
    if by_fold.is_empty() {
        return Err(Error::Invalid(format!("{network}: no folds")));
    }
    let mut pooled = ConfusionMatrix::zeros(mode);
    let mut fold_accuracies = Vec::new();
    for (s, f) in &by_fold {
        pooled.add(&confusion_matrix(&f.predictions, mode)?)?;
        fold_accuracies.push((*s, accuracy(&f.predictions)));
    }
    let slices: Vec<&[Prediction]> = by_fold.values().map(|f| f.predictions.as_slice()).collect();
    let collapse = if mode == ClassMode::C28 {
        let c = collapse_28_to_14(&pooled)?;
        Some(CollapseReport {
            accuracy_28: pooled.accuracy(),
            collapsed_accuracy: c.accuracy(),
            lawrfd: lawrfd(&pooled)?,
            collapsed: c,
        })
    } else {
        None
    };
    Ok(OverallReport {
        network: network.to_string(),
        class_mode: mode,
        pooled_accuracy: pooled.accuracy(),
        per_class_accuracy: per_class_accuracy(&pooled),
        fold_grain: fold_grain_report(&slices, mode)?,
        gesture_grain: gesture_grain_report(&pooled)?,
        pooled,
        fold_accuracies,
        collapse,
    })
}

/// 14-to-28 accuracy drop split into the finger-confusion part (LAWRFD)
/// and the remainder. All values are fractions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropDecomposition {
    pub accuracy_14: f64,
    pub accuracy_28: f64,
    pub total_drop: f64,
    pub intra_gesture: f64,
    pub residual: f64,
}

pub fn decompose_drop(accuracy_14: f64, report_28: &OverallReport) -> Result<DropDecomposition> {
    let c = report_28
        .collapse
        .as_ref()
        .ok_or_else(|| Error::Invalid("drop decomposition needs a 28-class report".into()))?;
    let total = accuracy_14 - c.accuracy_28;
    Ok(DropDecomposition {
        accuracy_14,
        accuracy_28: c.accuracy_28,
        total_drop: total,
        intra_gesture: c.lawrfd,
        residual: total - c.lawrfd,
    })
}

fn group(s: &Option<GrainStats>) -> String {
    match s {
        Some(s) => format!(" {:>6.2} {:>6.2} {:>15} ", s.best, s.worst, format!("{:.2} ± {:.2}", s.mean, s.std)),
        None => format!(" {:>6} {:>6} {:>15} ", "n/a", "n/a", "n/a"),
    }
}

/// Recognition-rate table with one row per method and Fine / Coarse / Both
/// column groups of Best, Worst, Avg ± Std (percent).
pub fn render_grain_table(rows: &[(&str, &GrainReport)]) -> String {
    const GW: usize = 32;
    let name_w = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0).max(6);
    let rule = format!("+{}+{}+{}+{}+\n", "-".repeat(name_w + 2), "-".repeat(GW), "-".repeat(GW), "-".repeat(GW));
    let mut s = String::new();
    s.push_str(&rule);
    let _ = writeln!(s, "| {:<name_w$} | {:<30} | {:<30} | {:<30} |", "Method", "Fine", "Coarse", "Both");
    let sub = format!(" {:>6} {:>6} {:>15} ", "Best", "Worst", "Avg ± Std");
    let _ = writeln!(s, "| {:<name_w$} |{sub}|{sub}|{sub}|", "");
    s.push_str(&rule);
    for (name, r) in rows {
        let _ = writeln!(s, "| {:<name_w$} |{}|{}|{}|", name, group(&r.fine), group(&r.coarse), group(&r.both));
    }
    s.push_str(&rule);
    s
}

/// Machine-readable companion of [`render_grain_table`].
pub fn grain_table_csv(rows: &[(&str, &GrainReport)]) -> String {
    let mut s = String::from("method,unit,grain,best,worst,mean,std,n_units\n");
    for (name, r) in rows {
        for (g, st) in [("fine", &r.fine), ("coarse", &r.coarse), ("both", &r.both)] {
            let unit = serde_json::to_value(r.unit).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            match st {
                Some(st) => {
                    let _ = writeln!(
                        s,
                        "{name},{unit},{g},{:.4},{:.4},{:.4},{:.4},{}",
                        st.best, st.worst, st.mean, st.std, st.n_units
                    );
                }
                None => {
                    let _ = writeln!(s, "{name},{unit},{g},,,,,0");
                }
            }
        }
    }
    s
}

/// Human-readable summary of one network's run.
pub fn render_summary(r: &OverallReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "network: {}", r.network);
    let _ = writeln!(s, "classes: {}", r.class_mode);
    let _ = writeln!(s, "pooled accuracy: {:.2}%", 100.0 * r.pooled_accuracy);
    let _ = writeln!(s, "per-fold accuracy:");
    for (f, a) in &r.fold_accuracies {
        let _ = writeln!(s, "  subject {f:>2}: {:.2}%", 100.0 * a);
    }
    let _ = writeln!(s, "per-class accuracy:");
    for (label, a) in r.pooled.labels().iter().zip(&r.per_class_accuracy) {
        match a {
            Some(a) => {
                let _ = writeln!(s, "  {label:<6} {:.2}%", 100.0 * a);
            }
            None => {
                let _ = writeln!(s, "  {label:<6} n/a");
            }
        }
    }
    if let Some(c) = &r.collapse {
        let _ = writeln!(s, "28-class accuracy: {:.2}%", 100.0 * c.accuracy_28);
        let _ = writeln!(s, "collapsed 14-class accuracy: {:.2}%", 100.0 * c.collapsed_accuracy);
        let _ = writeln!(s, "lawrfd: {:.5}", c.lawrfd);
    }
    s
}
