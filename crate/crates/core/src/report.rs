//! Report assembly: one evaluation = one [`MetricReport`].
//!
//! [`evaluate`] works on in-memory records; [`evaluate_path`] streams a
//! prediction file in two passes (one to collect the true-class
//! probability vector and the streaming statistics, one to fill the bin
//! counts), so peak memory stays at O(N) floats plus the bin table even
//! when the file holds an N x K matrix far larger than that. Both produce
//! bit-identical reports for the same data because every metric is
//! computed from the same extracted vectors by the same routines.
//!
//! [`gamma_sweep`] and [`sweep_path`] rebuild the bins for every gamma in
//! the list, since singularity carve-out widths depend on gamma, and emit
//! one reported/measured triple pair per gamma in the order given.
//!
//! Reports serialize to JSON (lossless round-trip, stable key order) or to
//! a flat TSV mirror of the summary table; see [`write_report`].

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::binning::{build_bins, fill_counts, slope, truth_metrics, BinTable, SlopeResult};
use crate::config::EvalConfig;
use crate::error::{Error, Result};
use crate::float_serde;
use crate::ingest::{DatasetSummary, Format, RecordReader};
use crate::mean::{cross_entropy_probs, reported_metrics_probs, MetricTriple};
use crate::record::PredictionRecord;

/// Everything one evaluation produces. Reproducible from (records, config)
/// alone; serializing and re-reading the report loses nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Optional label for titles and summaries (the CLI uses the input
    /// file stem). `null` when evaluated from in-memory records.
    pub dataset_name: Option<String>,
    /// Fraction of records whose argmax class is the label.
    pub prediction_accuracy: f64,
    /// Natural-log cross-entropy of the gamma-floored true-class
    /// probabilities; `"Infinity"` in JSON when gamma is 0 and a true-class
    /// probability is exactly 0.
    #[serde(with = "float_serde")]
    pub cross_entropy: f64,
    /// Metrics over the model's own probabilities.
    pub reported: MetricTriple,
    /// Metrics over per-bin measured fractions (weights = bin population).
    pub truth: MetricTriple,
    pub slope: SlopeResult,
    pub bin_table: BinTable,
    /// Probabilities that fell outside every bin (echo of the table's
    /// tally; only incorrect-class mass can land there).
    pub out_of_range_incorrect: u64,
    pub config: EvalConfig,
    pub dataset: DatasetSummary,
}

/// One gamma's worth of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub reported: MetricTriple,
    pub truth: MetricTriple,
}

/// Gamma-sensitivity table: rows follow the requested gamma order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSweep {
    pub dataset_name: Option<String>,
    /// Base configuration; each row overrides only `gamma`.
    pub config: EvalConfig,
    pub rows: Vec<SweepRow>,
}

/// Serialization format for [`write_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Tsv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<ReportFormat> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "tsv" => Ok(ReportFormat::Tsv),
            other => Err(Error::Format(format!(
                "unknown report format {other:?}: expected \"json\" or \"tsv\""
            ))),
        }
    }
}

/// The streaming statistics of pass one.
struct PassOne {
    all_probs: Vec<f64>,
    /// Probabilities feeding the reported triple; equals `all_probs`
    /// unless the config restricts to correctly decided records.
    reported_probs: Vec<f64>,
    n_correct: u64,
    n_records: u64,
}

impl PassOne {
    fn new() -> PassOne {
        PassOne {
            all_probs: Vec::new(),
            reported_probs: Vec::new(),
            n_correct: 0,
            n_records: 0,
        }
    }

    fn observe(&mut self, record: &PredictionRecord, correct_only: bool) {
        let p = record.correct_class_prob();
        self.all_probs.push(p);
        let correct = record.is_correct();
        if correct {
            self.n_correct += 1;
        }
        if !correct_only || correct {
            self.reported_probs.push(p);
        }
        self.n_records += 1;
    }

    fn accuracy(&self) -> f64 {
        self.n_correct as f64 / self.n_records as f64
    }
}

/// Everything except the bin counts, which the caller fills in a second
/// pass over the records.
fn assemble(
    dataset_name: Option<String>,
    pass: &PassOne,
    table: BinTable,
    config: &EvalConfig,
    dataset: DatasetSummary,
) -> Result<MetricReport> {
    let reported = reported_metrics_probs(&pass.reported_probs, config)?;
    let truth = truth_metrics(&table, config)?;
    let slope = slope(&reported, &truth, config);
    Ok(MetricReport {
        dataset_name,
        prediction_accuracy: pass.accuracy(),
        cross_entropy: cross_entropy_probs(&pass.all_probs, config.gamma)?,
        reported,
        truth,
        slope,
        out_of_range_incorrect: table.out_of_range_incorrect,
        bin_table: table,
        config: config.clone(),
        dataset,
    })
}

fn check_consistent_widths(records: &[PredictionRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyInput("evaluation needs at least one record"));
    }
    let k = records[0].n_classes();
    for (i, r) in records.iter().enumerate() {
        if r.n_classes() != k {
            return Err(Error::Format(format!(
                "record {i} has {} classes, records before it have {k}",
                r.n_classes()
            )));
        }
    }
    Ok(())
}

/// Synthesized tally for in-memory evaluation: everything accepted,
/// nothing rejected. Matches what a clean-file read reports.
fn in_memory_summary(records: &[PredictionRecord]) -> DatasetSummary {
    DatasetSummary {
        n_records: records.len() as u64,
        n_classes: records[0].n_classes(),
        ..DatasetSummary::default()
    }
}

/// Evaluates in-memory records into a full report.
pub fn evaluate(records: &[PredictionRecord], config: &EvalConfig) -> Result<MetricReport> {
    config.validate()?;
    check_consistent_widths(records)?;
    let mut pass = PassOne::new();
    for record in records {
        pass.observe(record, config.correct_decisions_only);
    }
    let mut table = build_bins(&pass.all_probs, config)?;
    fill_counts(&mut table, records);
    assemble(None, &pass, table, config, in_memory_summary(records))
}

fn open_reader(
    path: &Path,
    format: Option<Format>,
    config: &EvalConfig,
    strict: bool,
) -> Result<(RecordReader<BufReader<File>>, Format)> {
    let format = match format {
        Some(f) => f,
        None => Format::from_path(path)?,
    };
    let reader = RecordReader::new(BufReader::new(File::open(path)?), format, config, strict)?;
    Ok((reader, format))
}

/// Evaluates a prediction file in two streaming passes. `format` falls
/// back to the path extension; `dataset_name` labels the report. The file
/// must not change between passes; both passes apply the same row
/// validation, so the accepted record sequence is identical.
pub fn evaluate_path(
    path: &Path,
    format: Option<Format>,
    config: &EvalConfig,
    strict: bool,
    dataset_name: Option<String>,
) -> Result<MetricReport> {
    config.validate()?;
    let (mut reader, format) = open_reader(path, format, config, strict)?;
    let mut pass = PassOne::new();
    for record in &mut reader {
        pass.observe(&record?, config.correct_decisions_only);
    }
    let dataset = reader.into_summary();
    if pass.n_records == 0 {
        return Err(Error::EmptyInput("evaluation needs at least one record"));
    }
    let mut table = build_bins(&pass.all_probs, config)?;

    let (second, _) = open_reader(path, Some(format), config, strict)?;
    table.reset_counts();
    for record in second {
        table.accumulate_record(&record?);
    }
    table.finalize_counts();
    assemble(dataset_name, &pass, table, config, dataset)
}

fn validated_gammas(gammas: &[f64]) -> Result<()> {
    if gammas.is_empty() {
        return Err(Error::InvalidConfig(
            "gamma sweep needs at least one gamma".into(),
        ));
    }
    for &g in gammas {
        if !g.is_finite() || !(0.0..1.0).contains(&g) {
            return Err(Error::InvalidConfig(format!(
                "sweep gamma must lie in [0, 1), got {g}"
            )));
        }
    }
    Ok(())
}

/// Reported and measured triples at every gamma in `gammas` (any order;
/// rows come back in the same order). Bins are rebuilt per gamma.
pub fn gamma_sweep(
    records: &[PredictionRecord],
    config: &EvalConfig,
    gammas: &[f64],
) -> Result<GammaSweep> {
    config.validate()?;
    validated_gammas(gammas)?;
    check_consistent_widths(records)?;
    let mut pass = PassOne::new();
    for record in records {
        pass.observe(record, config.correct_decisions_only);
    }
    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let row_config = EvalConfig {
            gamma,
            ..config.clone()
        };
        let mut table = build_bins(&pass.all_probs, &row_config)?;
        fill_counts(&mut table, records);
        rows.push(SweepRow {
            gamma,
            reported: reported_metrics_probs(&pass.reported_probs, &row_config)?,
            truth: truth_metrics(&table, &row_config)?,
        });
    }
    Ok(GammaSweep {
        dataset_name: None,
        config: config.clone(),
        rows,
    })
}

/// [`gamma_sweep`] over a file: one collection pass, then a single counting
/// pass that fills every gamma's table together.
pub fn sweep_path(
    path: &Path,
    format: Option<Format>,
    config: &EvalConfig,
    strict: bool,
    gammas: &[f64],
    dataset_name: Option<String>,
) -> Result<GammaSweep> {
    config.validate()?;
    validated_gammas(gammas)?;
    let (mut reader, format) = open_reader(path, format, config, strict)?;
    let mut pass = PassOne::new();
    for record in &mut reader {
        pass.observe(&record?, config.correct_decisions_only);
    }
    if pass.n_records == 0 {
        return Err(Error::EmptyInput("evaluation needs at least one record"));
    }
    let row_configs: Vec<EvalConfig> = gammas
        .iter()
        .map(|&gamma| EvalConfig {
            gamma,
            ..config.clone()
        })
        .collect();
    let mut tables = Vec::with_capacity(gammas.len());
    for row_config in &row_configs {
        let mut table = build_bins(&pass.all_probs, row_config)?;
        table.reset_counts();
        tables.push(table);
    }
    let (second, _) = open_reader(path, Some(format), config, strict)?;
    for record in second {
        let record = record?;
        for table in &mut tables {
            table.accumulate_record(&record);
        }
    }
    let mut rows = Vec::with_capacity(gammas.len());
    for (row_config, mut table) in row_configs.iter().zip(tables) {
        table.finalize_counts();
        rows.push(SweepRow {
            gamma: row_config.gamma,
            reported: reported_metrics_probs(&pass.reported_probs, row_config)?,
            truth: truth_metrics(&table, row_config)?,
        });
    }
    Ok(GammaSweep {
        dataset_name,
        config: config.clone(),
        rows,
    })
}

/// Writes the report, returning the bytes written. JSON is the full
/// structure, pretty-printed, lossless. TSV is the flat summary: header
/// `metric\treported\tmeasured`, one row per metric (accuracy has no
/// measured variant), and a slope row whose measured cell is the verdict.
/// TSV floats carry 17 significant digits so they re-parse exactly.
pub fn write_report<W: Write>(
    report: &MetricReport,
    format: ReportFormat,
    mut sink: W,
) -> Result<u64> {
    let text = match format {
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(report)?;
            text.push('\n');
            text
        }
        ReportFormat::Tsv => {
            let f = |v: f64| format!("{v:.16e}");
            let mut text = String::from("metric\treported\tmeasured\n");
            text.push_str(&format!(
                "prediction_accuracy\t{}\t\n",
                f(report.prediction_accuracy)
            ));
            for (name, r, t) in [
                (
                    "geometric",
                    report.reported.geometric,
                    report.truth.geometric,
                ),
                (
                    "robustness",
                    report.reported.robustness,
                    report.truth.robustness,
                ),
                (
                    "decisiveness",
                    report.reported.decisiveness,
                    report.truth.decisiveness,
                ),
            ] {
                text.push_str(&format!("{name}\t{}\t{}\n", f(r), f(t)));
            }
            text.push_str(&format!(
                "slope\t{}\t{}\n",
                f(report.slope.slope),
                report.slope.verdict
            ));
            text
        }
    };
    sink.write_all(text.as_bytes())?;
    sink.flush()?;
    Ok(text.len() as u64)
}

/// Reads a JSON report back; the inverse of the JSON side of
/// [`write_report`].
pub fn read_report(path: &Path) -> Result<MetricReport> {
    let file = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(file)?)
}

/// Writes a sweep table as pretty-printed JSON, returning the bytes
/// written.
pub fn write_sweep<W: Write>(sweep: &GammaSweep, mut sink: W) -> Result<u64> {
    let mut text = serde_json::to_string_pretty(sweep)?;
    text.push('\n');
    sink.write_all(text.as_bytes())?;
    sink.flush()?;
    Ok(text.len() as u64)
}
