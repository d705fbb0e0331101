//! Confusion matrices: counting, rates, collapse, export.

use std::path::Path;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::dataset::gesture::{class_labels, gesture_of};
use crate::dataset::{ClassId, ClassMode};
use crate::error::{Error, Result};
use crate::training::Prediction;

/// Rows are true classes, columns predicted classes (both one-based ids in
/// index order).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub mode: ClassMode,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(mode: ClassMode) -> Self {
        let c = mode.n_classes();
        Self {
            mode,
            counts: vec![vec![0; c]; c],
        }
    }

    pub fn from_counts(mode: ClassMode, counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = mode.n_classes();
        if counts.len() != c || counts.iter().any(|r| r.len() != c) {
            return Err(Error::Invalid(format!("confusion counts must be {c}x{c}")));
        }
        Ok(Self { mode, counts })
    }

    pub fn from_pairs(mode: ClassMode, pairs: impl IntoIterator<Item = (ClassId, ClassId)>) -> Result<Self> {
        let mut cm = Self::zeros(mode);
        for (t, p) in pairs {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, truth: ClassId, predicted: ClassId) -> Result<()> {
        let c = self.n_classes();
        for id in [truth, predicted] {
            if id.get() == 0 || id.get() as usize > c {
                return Err(Error::Invalid(format!("label {id} outside 1..={c}")));
            }
        }
        self.counts[truth.zero_based()][predicted.zero_based()] += 1;
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: ClassId, predicted: ClassId) -> u64 {
        self.counts[truth.zero_based()][predicted.zero_based()]
    }

    pub fn labels(&self) -> Vec<String> {
        class_labels(self.mode)
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Overall accuracy as a fraction; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            self.correct() as f64 / t as f64
        }
    }

    /// Row-normalized percentages; `None` for classes with no test samples.
    pub fn percent(&self) -> Vec<Option<Vec<f64>>> {
        self.counts
            .iter()
            .map(|row| {
                let s: u64 = row.iter().sum();
                (s > 0).then(|| row.iter().map(|&v| 100.0 * v as f64 / s as f64).collect())
            })
            .collect()
    }

    /// Elementwise sum (pooling across folds).
    pub fn add(&mut self, other: &Self) -> Result<()> {
        if other.mode != self.mode {
            return Err(Error::Invalid(format!(
                "cannot pool {}-class and {}-class matrices",
                self.mode, other.mode
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    /// Integer table: a header row of predicted labels, then one row per
    /// true class.
    pub fn to_counts_csv(&self) -> String {
        self.table(|i, j| self.counts[i][j].to_string())
    }

    /// Row-percent table with two decimals; empty rows are left blank.
    pub fn to_percent_csv(&self) -> String {
        let pct = self.percent();
        self.table(|i, j| pct[i].as_ref().map(|r| format!("{:.2}", r[j])).unwrap_or_default())
    }

    fn table(&self, cell: impl Fn(usize, usize) -> String) -> String {
        let labels = self.labels();
        let mut s = String::from("true\\pred");
        for l in &labels {
            s.push(',');
            s.push_str(l);
        }
        s.push('\n');
        for (i, l) in labels.iter().enumerate() {
            s.push_str(l);
            for j in 0..labels.len() {
                s.push(',');
                s.push_str(&cell(i, j));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_counts_csv(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(origin, 1, "empty confusion table"))?;
        let labels: Vec<&str> = header.split(',').skip(1).collect();
        let mode = ClassMode::from_n_classes(labels.len()).map_err(|e| Error::parse(origin, 1, e.to_string()))?;
        if labels != class_labels(mode) {
            return Err(Error::parse(origin, 1, "column labels do not match the class list"));
        }
        let mut counts = Vec::new();
        for (ln, line) in lines {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != labels.len() + 1 {
                return Err(Error::parse(origin, ln + 1, format!("{} cells, expected {}", cells.len(), labels.len() + 1)));
            }
            let row = cells[1..]
                .iter()
                .map(|c| c.trim().parse::<u64>().map_err(|e| Error::parse(origin, ln + 1, e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            counts.push(row);
        }
        Self::from_counts(mode, counts).map_err(|e| Error::parse(origin, 1, e.to_string()))
    }

    /// Heatmap of row percentages: true class on the vertical axis (top =
    /// class 1), predicted class on the horizontal axis (left = class 1).
    /// White is 0%, dark blue 100%; rows without samples are grey.
    pub fn heatmap(&self, cell: u32) -> RgbImage {
        let c = self.n_classes() as u32;
        let pct = self.percent();
        let mut img = RgbImage::from_pixel(c * cell, c * cell, Rgb([160, 160, 160]));
        for (i, row) in pct.iter().enumerate() {
            let Some(row) = row else { continue };
            for (j, &p) in row.iter().enumerate() {
                let px = heat_color(p / 100.0);
                for dy in 0..cell {
                    for dx in 0..cell {
                        img.put_pixel(j as u32 * cell + dx, i as u32 * cell + dy, px);
                    }
                }
            }
        }
        img
    }

    pub fn write_heatmap(&self, path: &Path, cell: u32) -> Result<()> {
        self.heatmap(cell)
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::Image {
                path: path.to_path_buf(),
                msg: e.to_string(),
            })
    }
}

/// Linear white -> (8, 48, 107) ramp.
pub fn heat_color(v: f64) -> Rgb<u8> {
    let v = v.clamp(0.0, 1.0);
    let mix = |hi: f64| (255.0 + (hi - 255.0) * v).round() as u8;
    Rgb([mix(8.0), mix(48.0), mix(107.0)])
}

pub fn confusion_matrix(preds: &[Prediction], mode: ClassMode) -> Result<ConfusionMatrix> {
    if preds.is_empty() {
        return Err(Error::Invalid("no predictions".into()));
    }
    ConfusionMatrix::from_pairs(mode, preds.iter().map(|p| (p.truth, p.predicted)))
}

/// Per-class recall as a fraction; `None` where a class has no samples.
pub fn per_class_accuracy(cm: &ConfusionMatrix) -> Vec<Option<f64>> {
    (0..cm.n_classes())
        .map(|i| {
            let s = cm.row_sum(i);
            (s > 0).then(|| cm.counts()[i][i] as f64 / s as f64)
        })
        .collect()
}

/// Merge the two finger configurations of each gesture.
pub fn collapse_28_to_14(cm: &ConfusionMatrix) -> Result<ConfusionMatrix> {
    if cm.mode != ClassMode::C28 {
        return Err(Error::Invalid("collapse needs a 28-class matrix".into()));
    }
    let mut out = ConfusionMatrix::zeros(ClassMode::C14);
    for i in 0..28 {
        for j in 0..28 {
            out.counts[i / 2][j / 2] += cm.counts[i][j];
        }
    }
    Ok(out)
}

/// Map 28-class predictions to gestures. Scores of the two finger
/// configurations are summed.
pub fn collapse_predictions(preds: &[Prediction]) -> Result<Vec<Prediction>> {
    preds
        .iter()
        .map(|p| {
            if p.scores.len() != 28 {
                return Err(Error::Invalid(format!("{}: expected 28 scores", p.sequence_id)));
            }
            let g = |id: ClassId| ClassId(gesture_of(id, ClassMode::C28) as u16);
            Ok(Prediction {
                sequence_id: p.sequence_id.clone(),
                subject: p.subject,
                truth: g(p.truth),
                predicted: g(p.predicted),
                scores: p.scores.chunks(2).map(|c| c[0] + c[1]).collect(),
            })
        })
        .collect()
}

/// Loss of accuracy when removing finger differentiation: collapsed
/// accuracy minus 28-class accuracy, as a fraction.
pub fn lawrfd(cm_28: &ConfusionMatrix) -> Result<f64> {
    Ok(collapse_28_to_14(cm_28)?.accuracy() - cm_28.accuracy())
}
