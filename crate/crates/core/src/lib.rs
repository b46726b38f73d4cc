//! Quality metrics for probabilistic classifiers, built on generalized
//! means of the probability each prediction assigned to the class that
//! turned out to be true.
//!
//! Three points on the power-mean family summarize a prediction set:
//!
//! - robustness (order -2/3), dragged down hardest by confident mistakes;
//! - geometric accuracy (order 0), the exponential of the negative
//!   cross-entropy;
//! - decisiveness (order 1), the plain average.
//!
//! Each comes in two variants: *reported*, straight from the model's own
//! probabilities, and *measured*, with every probability replaced by the
//! empirically observed fraction correct of its reliability bin. Comparing
//! the two spans yields a confidence slope and a calibrated /
//! overconfident / underconfident verdict.
//!
//! The crate covers the full pipeline: ingesting prediction files
//! ([`ingest`]), the means and reported metrics ([`mean`]), reliability
//! binning and measured metrics ([`binning`]), synthetic prediction
//! generators ([`synth`]), report assembly and serialization ([`report`]),
//! and a reliability-diagram renderer ([`svg`]).
//!
//! All computation is deterministic: summation uses compensated
//! (Kahan) accumulation in fixed left-to-right order, so identical inputs
//! produce bit-identical outputs on every run.

pub mod binning;
pub mod config;
pub mod error;
mod float_serde;
pub mod ingest;
pub mod mean;
pub mod record;
pub mod report;
pub mod svg;
pub mod synth;

pub use binning::{
    build_bins, detect_singularities, fill_counts, slope, truth_metrics, BinStats, BinTable,
    SlopeResult, Verdict,
};
pub use config::EvalConfig;
pub use error::{Error, RejectReason, Result};
pub use ingest::{read_predictions, write_predictions, DatasetSummary, Format, RecordReader};
pub use mean::{
    cross_entropy, generalized_mean, generalized_mean_weighted, prediction_accuracy, MeanOrder,
    MetricTriple,
};
pub use record::PredictionRecord;
pub use report::{
    evaluate, evaluate_path, gamma_sweep, read_report, sweep_path, write_report, write_sweep,
    GammaSweep, MetricReport, ReportFormat, SweepRow,
};
pub use svg::{reliability_svg, render_reliability_svg};
pub use synth::{generate, generator, SynthKind, SynthSpec};
