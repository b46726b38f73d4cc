//! Crate-wide error type and result alias.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reason a row was rejected during ingestion. Rendered in kebab-case so the
/// rejection table in [`crate::ingest::DatasetSummary`] has stable keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    WrongColumnCount,
    ParseError,
    ProbOutOfRange,
    SumOutOfTolerance,
    LabelOutOfRange,
    ClassCountMismatch,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::WrongColumnCount => "wrong-column-count",
            RejectReason::ParseError => "parse-error",
            RejectReason::ProbOutOfRange => "prob-out-of-range",
            RejectReason::SumOutOfTolerance => "sum-out-of-tolerance",
            RejectReason::LabelOutOfRange => "label-out-of-range",
            RejectReason::ClassCountMismatch => "class-count-mismatch",
        }
    }
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("value at index {index} is {value}, outside [0, 1]")]
    ValueOutOfRange { index: usize, value: f64 },

    #[error("weight at index {index} is {value}; weights must be finite and non-negative")]
    InvalidWeight { index: usize, value: f64 },

    #[error("weights length {weights} does not match values length {values}")]
    WeightLengthMismatch { values: usize, weights: usize },

    #[error("weights sum to zero; at least one weight must be positive")]
    ZeroWeights,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("probabilities sum to {sum}, outside tolerance around 1")]
    SumOutOfTolerance { sum: f64 },

    #[error(
        "{bins} bins cannot hold {singularities} singularity bins plus at least one quantile bin"
    )]
    TooFewBins { bins: usize, singularities: usize },

    #[error("gamma must be positive when singular values are present (zero-width bins)")]
    ZeroGammaSingularity,

    #[error("record {index}: {source}")]
    InvalidRecord {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid synthesis spec: {0}")]
    InvalidSynthSpec(String),

    #[error("line {line}: rejected row ({reason})")]
    InvalidRow { line: u64, reason: RejectReason },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("report (de)serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
