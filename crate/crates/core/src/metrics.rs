//! Confusion matrices and support-weighted F1.
//!
//! A class with no predictions has precision 0, one with no support has
//! recall 0, and F1 is 0 whenever precision + recall is 0.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// `counts[true][pred]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn from_predictions(preds: &[usize], labels: &[usize], n_classes: usize) -> Result<Self> {
        if preds.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} predictions for {} labels",
                preds.len(),
                labels.len()
            )));
        }
        let mut m = Self::new(n_classes);
        for (&p, &l) in preds.iter().zip(labels) {
            m.record(l, p)?;
        }
        Ok(m)
    }

    pub fn record(&mut self, label: usize, pred: usize) -> Result<()> {
        let n = self.n_classes;
        if label >= n || pred >= n {
            return Err(Error::Data(format!(
                "class id out of range: label {label}, prediction {pred}, {n} classes"
            )));
        }
        self.counts[label * n + pred] += 1;
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn get(&self, label: usize, pred: usize) -> u64 {
        self.counts[label * self.n_classes + pred]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.n_classes).map(|r| r.to_vec()).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn support(&self) -> Vec<u64> {
        (0..self.n_classes)
            .map(|c| (0..self.n_classes).map(|p| self.get(c, p)).sum())
            .collect()
    }

    pub fn predicted(&self) -> Vec<u64> {
        (0..self.n_classes)
            .map(|p| (0..self.n_classes).map(|c| self.get(c, p)).sum())
            .collect()
    }

    pub fn per_class_f1(&self) -> Vec<f64> {
        let support = self.support();
        let predicted = self.predicted();
        (0..self.n_classes)
            .map(|c| {
                let tp = self.get(c, c) as f64;
                let precision = if predicted[c] == 0 { 0.0 } else { tp / predicted[c] as f64 };
                let recall = if support[c] == 0 { 0.0 } else { tp / support[c] as f64 };
                if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                }
            })
            .collect()
    }

    /// `sum_c support_c / N * F1_c`; 0 for an empty matrix.
    pub fn weighted_f1(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.per_class_f1()
            .iter()
            .zip(self.support())
            .map(|(f, s)| f * s as f64 / total as f64)
            .sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (0..self.n_classes).map(|c| self.get(c, c)).sum::<u64>() as f64 / total as f64
    }
}

pub fn weighted_f1(preds: &[usize], labels: &[usize], n_classes: usize) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::Data("weighted F1 of an empty stream".into()));
    }
    Ok(ConfusionMatrix::from_predictions(preds, labels, n_classes)?.weighted_f1())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub per_class_f1: Vec<f64>,
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub confusion: Vec<Vec<u64>>,
    pub support: Vec<u64>,
}

impl EvalReport {
    pub fn from_confusion(m: &ConfusionMatrix) -> Self {
        Self {
            per_class_f1: m.per_class_f1(),
            weighted_f1: m.weighted_f1(),
            accuracy: m.accuracy(),
            confusion: m.rows(),
            support: m.support(),
        }
    }
}
