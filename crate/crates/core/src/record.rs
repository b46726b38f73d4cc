//! A single classifier output: one probability vector plus the true label.

use crate::error::{Error, Result};

/// Validated per-sample prediction. Construction enforces the invariants, so
/// downstream code can index `probs[label]` without rechecking:
///
/// - every probability is finite and in [0, 1],
/// - the vector sums to 1 within the given tolerance (renormalized exactly
///   to sum 1 when it deviates),
/// - `label` indexes a class.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    probs: Vec<f64>,
    label: usize,
}

impl PredictionRecord {
    /// Validates and, when the raw sum deviates from 1 within tolerance,
    /// renormalizes by the sum. A sum farther out than `sum_tolerance` is an
    /// error rather than silently scaled away.
    pub fn new(mut probs: Vec<f64>, label: usize, sum_tolerance: f64) -> Result<Self> {
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::ValueOutOfRange { index, value });
            }
        }
        if label >= probs.len() {
            return Err(Error::LabelOutOfRange {
                label,
                classes: probs.len(),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > sum_tolerance {
            return Err(Error::SumOutOfTolerance { sum });
        }
        if sum != 1.0 {
            // Entries stay within [0, 1]: the sum dominates every entry.
            for p in &mut probs {
                *p /= sum;
            }
        }
        Ok(PredictionRecord { probs, label })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn n_classes(&self) -> usize {
        self.probs.len()
    }

    /// Probability the model assigned to the true class.
    pub fn correct_class_prob(&self) -> f64 {
        self.probs[self.label]
    }

    /// Index of the highest probability; ties break to the lowest index.
    pub fn predicted_class(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn is_correct(&self) -> bool {
        self.predicted_class() == self.label
    }
}
