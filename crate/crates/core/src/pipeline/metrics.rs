use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::Network;
use crate::signal::{ClassLabel, Dataset};

const K: usize = ClassLabel::COUNT;

/// Counts indexed `[true][predicted]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; K]; K],
}

impl ConfusionMatrix {
    pub fn from_predictions(truth: &[ClassLabel], predicted: &[ClassLabel]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::shape(
                format!("{} predictions", truth.len()),
                format!("{}", predicted.len()),
            ));
        }
        let mut m = ConfusionMatrix::default();
        for (t, p) in truth.iter().zip(predicted) {
            m.counts[t.code()][p.code()] += 1;
        }
        Ok(m)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..K).map(|c| self.counts[c][c]).sum()
    }

    pub fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn column_sum(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }

    /// `None` when no samples were counted.
    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.correct(), self.total())
    }

    /// `None` when the class was never predicted.
    pub fn precision(&self, class: ClassLabel) -> Option<f64> {
        let c = class.code();
        ratio(self.counts[c][c], self.column_sum(c))
    }

    /// `None` when the class never occurs.
    pub fn recall(&self, class: ClassLabel) -> Option<f64> {
        let c = class.code();
        ratio(self.counts[c][c], self.row_sum(c))
    }

    /// Header `true_label,pred_0,pred_1,pred_2`, one row per true class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true_label");
        for c in 0..K {
            out.push_str(&format!(",pred_{c}"));
        }
        out.push('\n');
        for (t, row) in self.counts.iter().enumerate() {
            out.push_str(&t.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: usize,
    pub name: &'static str,
    pub support: u64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub n_samples: u64,
    pub accuracy: f64,
    pub confusion_matrix: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
}

impl Evaluation {
    pub fn from_confusion(cm: ConfusionMatrix) -> Result<Self> {
        let accuracy = cm
            .accuracy()
            .ok_or_else(|| Error::EmptyInput("no samples to evaluate".into()))?;
        let per_class = ClassLabel::ALL
            .iter()
            .map(|&c| ClassMetrics {
                label: c.code(),
                name: c.name(),
                support: cm.row_sum(c.code()),
                precision: cm.precision(c),
                recall: cm.recall(c),
            })
            .collect();
        Ok(Evaluation {
            n_samples: cm.total(),
            accuracy,
            confusion_matrix: cm,
            per_class,
        })
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("evaluation serializes");
        s.push('\n');
        s
    }
}

pub fn dataset_matrix(ds: &Dataset) -> Matrix {
    Matrix::from_rows(ds.rows()).expect("dataset rows share a width")
}

/// Eval-mode predictions on already standardized features.
pub fn predict(net: &Network, ds: &Dataset) -> Result<Vec<ClassLabel>> {
    if ds.is_empty() {
        return Err(Error::EmptyInput("no rows to predict".into()));
    }
    net.predict(&dataset_matrix(ds))
}

/// Confusion matrix and derived metrics on a standardized test set.
pub fn evaluate(net: &Network, test: &Dataset) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::EmptyInput("empty test set".into()));
    }
    let predicted = predict(net, test)?;
    Evaluation::from_confusion(ConfusionMatrix::from_predictions(
        test.labels(),
        &predicted,
    )?)
}
