//! Per-sequence predictions and their CSV files.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, ClassMode};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sequence_id: String,
    pub subject: u32,
    pub truth: ClassId,
    pub predicted: ClassId,
    pub scores: Vec<f64>,
}

impl Prediction {
    pub fn is_correct(&self) -> bool {
        self.truth == self.predicted
    }
}

/// Fraction of correct predictions (0 for an empty slice).
pub fn accuracy(preds: &[Prediction]) -> f64 {
    if preds.is_empty() {
        return 0.0;
    }
    preds.iter().filter(|p| p.is_correct()).count() as f64 / preds.len() as f64
}

/// One `(network, fold)` prediction file.
///
/// ```text
/// # class_mode=14
/// # network=skeleton_lstm
/// # fingerprint=0123abcd4567ef89
/// # fold=2
/// # folds=1,2,3
/// sequence_id,subject,true,pred,score_1,...,score_C
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionFile {
    pub class_mode: ClassMode,
    pub network: String,
    pub fingerprint: String,
    pub fold: u32,
    /// Every fold of the run, so aggregation can detect missing ones.
    pub folds: Vec<u32>,
    pub rows: Vec<Prediction>,
}

impl PredictionFile {
    pub fn to_csv(&self) -> Result<String> {
        let c = self.class_mode.n_classes();
        let mut head = String::new();
        let folds: Vec<String> = self.folds.iter().map(u32::to_string).collect();
        writeln!(head, "# class_mode={}", c).unwrap();
        writeln!(head, "# network={}", self.network).unwrap();
        writeln!(head, "# fingerprint={}", self.fingerprint).unwrap();
        writeln!(head, "# fold={}", self.fold).unwrap();
        writeln!(head, "# folds={}", folds.join(",")).unwrap();

        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["sequence_id".to_string(), "subject".into(), "true".into(), "pred".into()];
        header.extend((1..=c).map(|i| format!("score_{i}")));
        w.write_record(&header).map_err(csv_err)?;
        for p in &self.rows {
            if p.scores.len() != c {
                return Err(Error::Format(format!("{}: {} scores, expected {c}", p.sequence_id, p.scores.len())));
            }
            let mut rec = vec![
                p.sequence_id.clone(),
                p.subject.to_string(),
                p.truth.get().to_string(),
                p.predicted.get().to_string(),
            ];
            rec.extend(p.scores.iter().map(f64::to_string));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| Error::Format(e.to_string()))?)
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(head + &body)
    }

    pub fn from_csv(text: &str, origin: &Path) -> Result<Self> {
        let mut class_mode = None;
        let mut network = None;
        let mut fingerprint = None;
        let mut fold = None;
        let mut folds = None;
        let mut n_header = 0;
        for (i, line) in text.lines().enumerate() {
            let Some(rest) = line.strip_prefix('#') else { break };
            n_header += 1;
            let (k, v) = rest
                .trim()
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, i + 1, "header line must be '# key=value'"))?;
            let bad = |m: String| Error::parse(origin, i + 1, m);
            match k {
                "class_mode" => class_mode = Some(v.parse::<ClassMode>().map_err(|e| bad(e.to_string()))?),
                "network" => network = Some(v.to_string()),
                "fingerprint" => fingerprint = Some(v.to_string()),
                "fold" => fold = Some(v.parse::<u32>().map_err(|e| bad(e.to_string()))?),
                "folds" => {
                    folds = Some(
                        v.split(',')
                            .filter(|s| !s.is_empty())
                            .map(|s| s.parse::<u32>().map_err(|e| bad(e.to_string())))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                _ => return Err(bad(format!("unknown header key '{k}'"))),
            }
        }
        let missing = |k: &str| Error::parse(origin, n_header + 1, format!("missing '# {k}=' header"));
        let class_mode = class_mode.ok_or_else(|| missing("class_mode"))?;
        let c = class_mode.n_classes();

        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let line = n_header + r + 2;
            let rec = rec.map_err(|e| Error::parse(origin, line, e.to_string()))?;
            if rec.len() != 4 + c {
                return Err(Error::parse(origin, line, format!("{} fields, expected {}", rec.len(), 4 + c)));
            }
            let num = |j: usize| -> Result<u32> {
                rec[j]
                    .parse::<u32>()
                    .map_err(|e| Error::parse(origin, line, format!("field {}: {e}", j + 1)))
            };
            let class = |j: usize| -> Result<ClassId> {
                let v = num(j)?;
                if v == 0 || v as usize > c {
                    return Err(Error::parse(origin, line, format!("class {v} outside 1..={c}")));
                }
                Ok(ClassId(v as u16))
            };
            let scores = (4..4 + c)
                .map(|j| {
                    rec[j]
                        .parse::<f64>()
                        .map_err(|e| Error::parse(origin, line, format!("field {}: {e}", j + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(Prediction {
                sequence_id: rec[0].to_string(),
                subject: num(1)?,
                truth: class(2)?,
                predicted: class(3)?,
                scores,
            });
        }
        Ok(Self {
            class_mode,
            network: network.ok_or_else(|| missing("network"))?,
            fingerprint: fingerprint.ok_or_else(|| missing("fingerprint"))?,
            fold: fold.ok_or_else(|| missing("fold"))?,
            folds: folds.ok_or_else(|| missing("folds"))?,
            rows,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, path)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
