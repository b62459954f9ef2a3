//! Binary classification metrics over real/fake labels.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::Label;
use crate::error::DatasetError;

/// One-vs-rest confusion counts for a single class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ClassCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `2PR/(P+R)`, zero when `P+R = 0`.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub real: ClassCounts,
    pub fake: ClassCounts,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub f1_real: f64,
    pub f1_fake: f64,
}

pub fn compute_metrics(predictions: &[Label], labels: &[Label]) -> Result<MetricsReport, DatasetError> {
    if predictions.len() != labels.len() {
        return Err(DatasetError::Metrics(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(DatasetError::Metrics("no items to score".into()));
    }
    let counts = |class: Label| {
        let mut c = ClassCounts::default();
        for (&p, &y) in predictions.iter().zip(labels) {
            match (p == class, y == class) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    };
    let real = counts(Label::Real);
    let fake = counts(Label::Fake);
    let correct = predictions.iter().zip(labels).filter(|(p, y)| p == y).count();
    let (f1_real, f1_fake) = (real.f1(), fake.f1());
    Ok(MetricsReport {
        n: labels.len(),
        real,
        fake,
        accuracy: correct as f64 / labels.len() as f64,
        macro_f1: (f1_real + f1_fake) / 2.0,
        f1_real,
        f1_fake,
    })
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<10}{:>8}", "items", self.n);
        for (name, v) in [
            ("macF1", self.macro_f1),
            ("accuracy", self.accuracy),
            ("F1_real", self.f1_real),
            ("F1_fake", self.f1_fake),
        ] {
            let _ = writeln!(s, "{name:<10}{v:>8.4}");
        }
        let _ = writeln!(s, "{:<10}{:>6}{:>6}{:>6}{:>6}", "class", "tp", "fp", "fn", "tn");
        for (name, c) in [("real", self.real), ("fake", self.fake)] {
            let _ = writeln!(s, "{name:<10}{:>6}{:>6}{:>6}{:>6}", c.tp, c.fp, c.fn_, c.tn);
        }
        s
    }
}

/// One row of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub label: Option<Label>,
    pub prediction: Label,
    pub p_fake: f64,
}

pub fn write_predictions(path: &Path, records: &[PredictionRecord]) -> std::io::Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, out)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| DatasetError::Malformed {
                count: 1,
                first_line: n + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
