//! Evaluation configuration shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Knobs controlling flooring, binning, and numeric tolerances.
///
/// `gamma` floors probabilities and fractions before any mean is taken, so
/// negative-order means stay finite on sparse data. `bins` is the target
/// number of equal-population bins for the measured-side procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Probability floor, `0 <= gamma < 1`.
    pub gamma: f64,
    /// Target bin count, at least 1.
    pub bins: usize,
    /// Accepted deviation of a record's probability sum from 1.
    pub prob_sum_tolerance: f64,
    /// Magnitude below which float differences are treated as ties.
    pub value_epsilon: f64,
    /// Restrict the reported metrics to records whose prediction is correct.
    /// Off by default: every record contributes its true-class probability.
    #[serde(default)]
    pub correct_decisions_only: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            gamma: 0.005,
            bins: 20,
            prob_sum_tolerance: 1e-4,
            value_epsilon: 1e-12,
            correct_decisions_only: false,
        }
    }
}

impl EvalConfig {
    /// Checks every field against its documented range.
    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!(
                "gamma must lie in [0, 1), got {}",
                self.gamma
            )));
        }
        if self.bins == 0 {
            return Err(Error::InvalidConfig("bins must be at least 1".into()));
        }
        if !self.prob_sum_tolerance.is_finite() || self.prob_sum_tolerance <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "prob_sum_tolerance must be positive, got {}",
                self.prob_sum_tolerance
            )));
        }
        if !self.value_epsilon.is_finite() || self.value_epsilon < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "value_epsilon must be non-negative, got {}",
                self.value_epsilon
            )));
        }
        Ok(())
    }
}
