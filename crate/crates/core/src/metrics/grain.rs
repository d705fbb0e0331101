//! Best / worst / mean ± std summaries per gesture grain.

use serde::{Deserialize, Serialize};

use super::confusion::{per_class_accuracy, ConfusionMatrix};
use crate::dataset::gesture::grain_of_class;
use crate::dataset::{ClassId, ClassMode, Grain};
use crate::error::{Error, Result};
use crate::training::Prediction;

/// Summary of a set of accuracies, in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrainStats {
    pub best: f64,
    pub worst: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n_units: usize,
}

pub fn grain_summary(values: &[f64]) -> Result<GrainStats> {
    if values.is_empty() {
        return Err(Error::Invalid("grain summary over an empty group".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(GrainStats {
        best: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        worst: values.iter().copied().fold(f64::INFINITY, f64::min),
        mean,
        std: var.sqrt(),
        n_units: values.len(),
    })
}

/// What one accuracy value in a [`GrainReport`] was computed over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Fold,
    Gesture,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrainReport {
    pub unit: Unit,
    /// `None` when no unit holds a sequence of that grain.
    pub fine: Option<GrainStats>,
    pub coarse: Option<GrainStats>,
    pub both: Option<GrainStats>,
}

fn pct(correct: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| 100.0 * correct as f64 / n as f64)
}

fn subset_accuracy(preds: &[Prediction], keep: impl Fn(ClassId) -> bool) -> Option<f64> {
    let sel: Vec<&Prediction> = preds.iter().filter(|p| keep(p.truth)).collect();
    pct(sel.iter().filter(|p| p.is_correct()).count(), sel.len())
}

/// Units are folds: each fold contributes its accuracy restricted to fine
/// sequences, to coarse sequences, and overall. Folds without any sequence
/// of a grain do not contribute to that grain.
pub fn fold_grain_report(folds: &[&[Prediction]], mode: ClassMode) -> Result<GrainReport> {
    let mut fine = Vec::new();
    let mut coarse = Vec::new();
    let mut both = Vec::new();
    for f in folds {
        fine.extend(subset_accuracy(f, |c| grain_of_class(c, mode) == Grain::Fine));
        coarse.extend(subset_accuracy(f, |c| grain_of_class(c, mode) == Grain::Coarse));
        both.extend(subset_accuracy(f, |_| true));
    }
    Ok(GrainReport {
        unit: Unit::Fold,
        fine: grain_summary(&fine).ok(),
        coarse: grain_summary(&coarse).ok(),
        both: grain_summary(&both).ok(),
    })
}

/// Units are classes of the pooled matrix (classes without samples skipped).
pub fn gesture_grain_report(cm: &ConfusionMatrix) -> Result<GrainReport> {
    let mut fine = Vec::new();
    let mut coarse = Vec::new();
    let mut both = Vec::new();
    for (i, acc) in per_class_accuracy(cm).into_iter().enumerate() {
        let Some(a) = acc else { continue };
        let a = 100.0 * a;
        match grain_of_class(ClassId::from_zero_based(i), cm.mode) {
            Grain::Fine => fine.push(a),
            Grain::Coarse => coarse.push(a),
        }
        both.push(a);
    }
    Ok(GrainReport {
        unit: Unit::Gesture,
        fine: grain_summary(&fine).ok(),
        coarse: grain_summary(&coarse).ok(),
        both: grain_summary(&both).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_formula() {
        let s = grain_summary(&[70.0, 80.0, 90.0]).unwrap();
        assert_eq!((s.best, s.worst, s.mean), (90.0, 70.0, 80.0));
        assert!((s.std - (200.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((s.std - 8.165).abs() < 1e-3);
        let one = grain_summary(&[42.0]).unwrap();
        assert_eq!((one.best, one.worst, one.mean, one.std), (42.0, 42.0, 42.0, 0.0));
        assert!(grain_summary(&[]).is_err());
    }
}
