//! Score-level fusion and rank-1 prediction.

use serde::{Deserialize, Serialize};

use crate::dataset::ClassId;
use crate::error::{Error, Result};

/// Per-class scores of one sequence. Softmax outputs sum to one; fused
/// maxima do not.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector(pub Vec<f64>);

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn is_probability(&self, tol: f64) -> bool {
        self.0.iter().all(|&v| v >= 0.0) && (self.0.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}

fn check_lengths(a: &ScoreVector, b: &ScoreVector) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Invalid(format!("score vectors of length {} and {}", a.len(), b.len())));
    }
    Ok(())
}

/// Elementwise mean of two score vectors.
pub fn fuse_scores_average(a: &ScoreVector, b: &ScoreVector) -> Result<ScoreVector> {
    check_lengths(a, b)?;
    Ok(ScoreVector(a.0.iter().zip(&b.0).map(|(&x, &y)| 0.5 * (x + y)).collect()))
}

/// Elementwise maximum. Only meaningful for argmax; not renormalized.
pub fn fuse_scores_max(a: &ScoreVector, b: &ScoreVector) -> Result<ScoreVector> {
    check_lengths(a, b)?;
    Ok(ScoreVector(a.0.iter().zip(&b.0).map(|(&x, &y)| x.max(y)).collect()))
}

/// Rank-1 class (one-based). Ties go to the lowest class index.
pub fn predict(scores: &[f64]) -> Result<ClassId> {
    if scores.is_empty() {
        return Err(Error::Invalid("cannot predict from an empty score vector".into()));
    }
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate().skip(1) {
        if v > scores[best] {
            best = i;
        }
    }
    Ok(ClassId::from_zero_based(best))
}
