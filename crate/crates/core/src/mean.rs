//! Power-mean kernel and the reported (self-assessed) metrics.
//!
//! A single family covers all three quality metrics: the generalized mean of
//! order `rho` over the true-class probabilities. Order 1 is the arithmetic
//! mean (decisiveness), order 0 the geometric mean (geometric accuracy, the
//! limit of the family), and order -2/3 an inverse-leaning mean that punishes
//! confident mistakes (robustness). Probabilities are floored at `gamma`
//! first so the negative order stays finite.

use serde::{Deserialize, Serialize};

use crate::config::EvalConfig;
use crate::error::{Error, Result};
use crate::record::PredictionRecord;

/// Exponent of a generalized mean. Finite by construction; the canonical
/// orders are exposed as constants so call sites share one bit pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeanOrder(f64);

impl MeanOrder {
    /// Order -2/3: dominated by the smallest probabilities.
    pub const ROBUSTNESS: MeanOrder = MeanOrder(-2.0 / 3.0);
    /// Order 0 (limit): the geometric mean.
    pub const GEOMETRIC: MeanOrder = MeanOrder(0.0);
    /// Order 1: the arithmetic mean.
    pub const DECISIVENESS: MeanOrder = MeanOrder(1.0);

    pub fn new(rho: f64) -> Result<Self> {
        if !rho.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "mean order must be finite, got {rho}"
            )));
        }
        Ok(MeanOrder(rho))
    }

    pub fn rho(&self) -> f64 {
        self.0
    }
}

/// The three quality metrics at their canonical orders. The power-mean
/// inequality guarantees `robustness <= geometric <= decisiveness` for any
/// shared input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub robustness: f64,
    pub geometric: f64,
    pub decisiveness: f64,
}

impl MetricTriple {
    /// Computes all three metrics over one set of (already floored) values.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Ok(MetricTriple {
            robustness: generalized_mean(values, MeanOrder::ROBUSTNESS)?,
            geometric: generalized_mean(values, MeanOrder::GEOMETRIC)?,
            decisiveness: generalized_mean(values, MeanOrder::DECISIVENESS)?,
        })
    }

    /// Weighted variant; weights are normalized by their sum internally.
    pub fn from_weighted_values(values: &[f64], weights: &[f64]) -> Result<Self> {
        Ok(MetricTriple {
            robustness: generalized_mean_weighted(values, weights, MeanOrder::ROBUSTNESS)?,
            geometric: generalized_mean_weighted(values, weights, MeanOrder::GEOMETRIC)?,
            decisiveness: generalized_mean_weighted(values, weights, MeanOrder::DECISIVENESS)?,
        })
    }
}

/// Compensated (Kahan) summation, fixed left-to-right, so results are
/// bit-reproducible across runs and platforms with the same float semantics.
pub(crate) fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Replaces every value below `gamma` with `gamma`. Values must lie in
/// [0, 1]; `gamma` must lie in [0, 1).
pub fn floor_gamma(values: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if !gamma.is_finite() || !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidConfig(format!(
            "gamma must lie in [0, 1), got {gamma}"
        )));
    }
    let mut out = Vec::with_capacity(values.len());
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(Error::ValueOutOfRange { index, value });
        }
        out.push(value.max(gamma));
    }
    Ok(out)
}

/// Generalized mean of order `rho` with uniform weights:
/// `((1/N) * sum(x_i^rho))^(1/rho)`, and the geometric mean at `rho == 0`.
///
/// Zeros are admitted for every order; at `rho <= 0` any zero value forces
/// the limit result 0.
pub fn generalized_mean(values: &[f64], order: MeanOrder) -> Result<f64> {
    mean_impl(values, None, order)
}

/// Weighted generalized mean `(sum(w_i * x_i^rho) / sum(w_i))^(1/rho)`.
/// Uniform weights reproduce [`generalized_mean`] exactly. Zero-weight
/// entries are ignored, including for the zero-value limit rule.
pub fn generalized_mean_weighted(values: &[f64], weights: &[f64], order: MeanOrder) -> Result<f64> {
    mean_impl(values, Some(weights), order)
}

fn mean_impl(values: &[f64], weights: Option<&[f64]>, order: MeanOrder) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("generalized mean of no values"));
    }
    if let Some(w) = weights {
        if w.len() != values.len() {
            return Err(Error::WeightLengthMismatch {
                values: values.len(),
                weights: w.len(),
            });
        }
        for (index, &value) in w.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidWeight { index, value });
            }
        }
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::ValueOutOfRange { index, value });
        }
    }
    let weight_at = |i: usize| weights.map_or(1.0, |w| w[i]);
    let weight_sum = kahan_sum((0..values.len()).map(weight_at));
    if weight_sum <= 0.0 {
        return Err(Error::ZeroWeights);
    }

    let rho = order.rho();
    if rho <= 0.0 {
        // Limit of the family: one zero with positive weight pins the mean
        // at zero. Returning early keeps infinities out of the accumulator.
        if values
            .iter()
            .enumerate()
            .any(|(i, &v)| v == 0.0 && weight_at(i) > 0.0)
        {
            return Ok(0.0);
        }
    }
    // Zero-weight terms must contribute exactly zero; multiplying through
    // would turn w=0 against ln(0) or 0^rho into NaN.
    let term = |i: usize, x: f64| {
        let w = weight_at(i);
        if w == 0.0 {
            0.0
        } else {
            w * x
        }
    };
    if rho == 0.0 {
        let log_mean =
            kahan_sum(values.iter().enumerate().map(|(i, &v)| term(i, v.ln()))) / weight_sum;
        Ok(log_mean.exp())
    } else {
        let power_mean = kahan_sum(
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| term(i, v.powf(rho))),
        ) / weight_sum;
        Ok(power_mean.powf(1.0 / rho))
    }
}

/// Fraction of records whose argmax (lowest index on ties) equals the label.
pub fn prediction_accuracy(records: &[PredictionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("prediction accuracy of no records"));
    }
    let correct = records.iter().filter(|r| r.is_correct()).count();
    Ok(correct as f64 / records.len() as f64)
}

/// Mean negative log of the (gamma-floored) true-class probabilities,
/// natural base. With `gamma == 0` and a zero true-class probability the
/// result is positive infinity; callers flag that in their reports.
pub fn cross_entropy(records: &[PredictionRecord], gamma: f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("cross-entropy of no records"));
    }
    let probs: Vec<f64> = records.iter().map(|r| r.correct_class_prob()).collect();
    cross_entropy_probs(&probs, gamma)
}

/// [`cross_entropy`] over an already-extracted true-class probability
/// vector, for consumers that stream records and keep only these values.
pub fn cross_entropy_probs(correct_probs: &[f64], gamma: f64) -> Result<f64> {
    if correct_probs.is_empty() {
        return Err(Error::EmptyInput("cross-entropy of no records"));
    }
    if !gamma.is_finite() || !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidConfig(format!(
            "gamma must lie in [0, 1), got {gamma}"
        )));
    }
    if correct_probs.iter().any(|&p| p.max(gamma) == 0.0) {
        return Ok(f64::INFINITY);
    }
    // Same accumulation as the geometric mean over the same floored values,
    // so exp(-H) reproduces that metric bit for bit. Subtracting from +0.0
    // instead of negating keeps a perfect classifier's entropy at +0.0.
    let log_mean =
        kahan_sum(correct_probs.iter().map(|&p| p.max(gamma).ln())) / correct_probs.len() as f64;
    Ok(0.0 - log_mean)
}

/// True-class probabilities in record order, optionally restricted to
/// correctly decided records.
pub fn correct_class_probs(records: &[PredictionRecord], correct_only: bool) -> Vec<f64> {
    records
        .iter()
        .filter(|r| !correct_only || r.is_correct())
        .map(|r| r.correct_class_prob())
        .collect()
}

/// The reported (self-assessed) metric triple: floor the true-class
/// probabilities at `config.gamma`, then take the three canonical means.
pub fn reported_metrics(records: &[PredictionRecord], config: &EvalConfig) -> Result<MetricTriple> {
    let probs = correct_class_probs(records, config.correct_decisions_only);
    reported_metrics_probs(&probs, config)
}

/// [`reported_metrics`] over an already-extracted (and, when the config
/// asks for correct decisions only, already-filtered) probability vector.
pub fn reported_metrics_probs(correct_probs: &[f64], config: &EvalConfig) -> Result<MetricTriple> {
    config.validate()?;
    if correct_probs.is_empty() {
        return Err(Error::EmptyInput(
            "reported metrics need at least one contributing record",
        ));
    }
    let floored = floor_gamma(correct_probs, config.gamma)?;
    MetricTriple::from_values(&floored)
}
