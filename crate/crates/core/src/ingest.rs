//! Streaming readers and writers for prediction files.
//!
//! Two formats are supported:
//!
//! - CSV: a mandatory header `label,p0,p1,...,p{K-1}` followed by one data
//!   row per sample, comma separated, floats in decimal or scientific
//!   notation. The header fixes the class count.
//! - JSONL: one object per line with exactly the keys `label` (integer) and
//!   `probs` (array of numbers). The first accepted row fixes the class
//!   count.
//!
//! Labels are 0-based in both formats: `label` is an index into `probs`,
//! so a 10-class file uses labels 0 through 9. Lines starting with `#`
//! before the header (or before the first JSONL row) are comments and are
//! skipped; a `#` later in the file is treated as a malformed row.
//!
//! Rows that fail validation (bad float, wrong column count, probability
//! outside [0, 1], sum outside tolerance, label out of range) are rejected.
//! A strict read fails at the first rejected row with its 1-based line
//! number; a lenient read skips the row and tallies the reason in
//! [`DatasetSummary`]. Vectors whose sum is inside the tolerance but not
//! exactly 1 are renormalized by dividing by the sum, since low-precision
//! serialization routinely perturbs softmax outputs by around 1e-5.
//!
//! [`RecordReader`] yields records one at a time, so consumers that only
//! need streaming statistics never hold the full probability matrix.

use std::borrow::Borrow;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::EvalConfig;
use crate::error::{Error, RejectReason, Result};
use crate::record::PredictionRecord;

/// Prediction file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// Infers the format from a path's extension (`.csv` or `.jsonl`).
    pub fn from_path(path: &Path) -> Result<Format> {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Ok(Format::Csv),
            Some(ext) if ext.eq_ignore_ascii_case("jsonl") => Ok(Format::Jsonl),
            _ => Err(Error::Format(format!(
                "cannot infer format from {}: expected a .csv or .jsonl extension",
                path.display()
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::Format(format!(
                "unknown format {other:?}: expected \"csv\" or \"jsonl\""
            ))),
        }
    }
}

/// Tally of what a read accepted and rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    /// Accepted rows.
    pub n_records: u64,
    /// Class count shared by every accepted row (0 until known).
    pub n_classes: usize,
    /// Rejected rows (lenient reads only; a strict read fails instead).
    pub n_rejected: u64,
    /// Rejected-row counts keyed by reason.
    pub rejection_reasons: BTreeMap<RejectReason, u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRow {
    label: usize,
    probs: Vec<f64>,
}

enum Source<R> {
    Csv {
        reader: csv::Reader<R>,
        row: csv::StringRecord,
        /// File lines consumed before the csv reader took over (comments
        /// plus the header), added to csv positions for absolute numbers.
        line_offset: u64,
    },
    Jsonl {
        reader: R,
        line: u64,
        buf: String,
    },
}

/// One parsed row before validation: the (label, probabilities) pair, or
/// the reason the row was rejected.
type RawRow = std::result::Result<(usize, Vec<f64>), RejectReason>;

/// Streaming prediction reader: an iterator of validated
/// [`PredictionRecord`]s plus a running [`DatasetSummary`].
pub struct RecordReader<R> {
    source: Source<R>,
    sum_tolerance: f64,
    strict: bool,
    n_classes: Option<usize>,
    summary: DatasetSummary,
    done: bool,
}

/// Consumes leading `#` comment lines, returning how many were skipped.
fn skip_comments<R: BufRead>(reader: &mut R) -> Result<u64> {
    let mut skipped = 0;
    let mut line = String::new();
    loop {
        let buf = reader.fill_buf()?;
        if buf.first() != Some(&b'#') {
            return Ok(skipped);
        }
        line.clear();
        reader.read_line(&mut line)?;
        skipped += 1;
    }
}

fn trim_newline(line: &str) -> &str {
    line.trim_end_matches('\n').trim_end_matches('\r')
}

impl<R: BufRead> RecordReader<R> {
    /// Opens a reader over `input`. For CSV this consumes and validates the
    /// header immediately, so a malformed header fails here rather than on
    /// the first row.
    pub fn new(mut input: R, format: Format, config: &EvalConfig, strict: bool) -> Result<Self> {
        config.validate()?;
        let mut comment_lines = skip_comments(&mut input)?;
        let mut summary = DatasetSummary::default();
        let mut n_classes = None;
        let source = match format {
            Format::Csv => {
                let mut header = String::new();
                if input.read_line(&mut header)? == 0 {
                    return Err(Error::Format(
                        "missing CSV header: expected `label,p0,p1,...`".into(),
                    ));
                }
                comment_lines += 1;
                let classes = parse_header(trim_newline(&header))?;
                summary.n_classes = classes;
                n_classes = Some(classes);
                let reader = csv::ReaderBuilder::new()
                    .has_headers(false)
                    .flexible(true)
                    .from_reader(input);
                Source::Csv {
                    reader,
                    row: csv::StringRecord::new(),
                    line_offset: comment_lines,
                }
            }
            Format::Jsonl => Source::Jsonl {
                reader: input,
                line: comment_lines,
                buf: String::new(),
            },
        };
        Ok(RecordReader {
            source,
            sum_tolerance: config.prob_sum_tolerance,
            strict,
            n_classes,
            summary,
            done: false,
        })
    }

    /// The running tally; complete once the iterator is exhausted.
    pub fn summary(&self) -> &DatasetSummary {
        &self.summary
    }

    pub fn into_summary(self) -> DatasetSummary {
        self.summary
    }

    /// Pulls the next raw row: `Ok(None)` at end of input, otherwise the
    /// absolute 1-based line number and the parse attempt.
    fn next_raw(&mut self) -> Result<Option<(u64, RawRow)>> {
        match &mut self.source {
            Source::Csv {
                reader,
                row,
                line_offset,
            } => {
                let line = *line_offset + reader.position().line();
                match reader.read_record(row) {
                    Ok(false) => Ok(None),
                    Ok(true) => Ok(Some((line, parse_csv_row(row, self.n_classes)))),
                    // Reader-level errors (bad UTF-8 and the like) are
                    // attached to the row, not the stream.
                    Err(e) if e.is_io_error() => match e.into_kind() {
                        csv::ErrorKind::Io(io) => Err(Error::Io(io)),
                        _ => unreachable!("is_io_error guarantees an io kind"),
                    },
                    Err(_) => Ok(Some((line, Err(RejectReason::ParseError)))),
                }
            }
            Source::Jsonl { reader, line, buf } => loop {
                buf.clear();
                if reader.read_line(buf)? == 0 {
                    return Ok(None);
                }
                *line += 1;
                let text = trim_newline(buf);
                if text.trim().is_empty() {
                    continue;
                }
                return Ok(Some((*line, parse_json_row(text, self.n_classes))));
            },
        }
    }

    /// Validates one parsed row, updating the tallies. `None` means the row
    /// was rejected leniently and the caller should continue.
    fn admit(
        &mut self,
        line: u64,
        parsed: std::result::Result<(usize, Vec<f64>), RejectReason>,
    ) -> Option<Result<PredictionRecord>> {
        let reason = match parsed {
            Ok((label, probs)) => match PredictionRecord::new(probs, label, self.sum_tolerance) {
                Ok(record) => {
                    self.summary.n_records += 1;
                    if self.n_classes.is_none() {
                        self.n_classes = Some(record.n_classes());
                        self.summary.n_classes = record.n_classes();
                    }
                    return Some(Ok(record));
                }
                Err(e) => reject_reason(&e),
            },
            Err(reason) => reason,
        };
        if self.strict {
            self.done = true;
            return Some(Err(Error::InvalidRow { line, reason }));
        }
        self.summary.n_rejected += 1;
        *self.summary.rejection_reasons.entry(reason).or_insert(0) += 1;
        None
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<PredictionRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            match self.next_raw() {
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
                Ok(None) => break,
                Ok(Some((line, parsed))) => {
                    if let Some(item) = self.admit(line, parsed) {
                        return Some(item);
                    }
                }
            }
        }
        None
    }
}

fn parse_header(header: &str) -> Result<usize> {
    let fields: Vec<&str> = header.split(',').collect();
    let err = || {
        Error::Format(format!(
            "malformed CSV header {header:?}: expected `label,p0,p1,...`"
        ))
    };
    if fields.len() < 2 || fields[0] != "label" {
        return Err(err());
    }
    for (i, field) in fields[1..].iter().enumerate() {
        if field.strip_prefix('p') != Some(i.to_string().as_str()) {
            return Err(err());
        }
    }
    Ok(fields.len() - 1)
}

fn parse_csv_row(
    row: &csv::StringRecord,
    n_classes: Option<usize>,
) -> std::result::Result<(usize, Vec<f64>), RejectReason> {
    let classes = n_classes.expect("CSV class count is fixed by the header");
    if row.len() != classes + 1 {
        return Err(RejectReason::WrongColumnCount);
    }
    let label: usize = row[0].parse().map_err(|_| RejectReason::ParseError)?;
    let mut probs = Vec::with_capacity(classes);
    for field in row.iter().skip(1) {
        probs.push(field.parse().map_err(|_| RejectReason::ParseError)?);
    }
    Ok((label, probs))
}

fn parse_json_row(
    text: &str,
    n_classes: Option<usize>,
) -> std::result::Result<(usize, Vec<f64>), RejectReason> {
    let row: JsonRow = serde_json::from_str(text).map_err(|_| RejectReason::ParseError)?;
    if let Some(classes) = n_classes {
        if row.probs.len() != classes {
            return Err(RejectReason::ClassCountMismatch);
        }
    }
    Ok((row.label, row.probs))
}

/// Maps a record validation error onto its rejection bucket.
fn reject_reason(e: &Error) -> RejectReason {
    match e {
        Error::ValueOutOfRange { .. } => RejectReason::ProbOutOfRange,
        Error::SumOutOfTolerance { .. } => RejectReason::SumOutOfTolerance,
        Error::LabelOutOfRange { .. } => RejectReason::LabelOutOfRange,
        _ => RejectReason::ParseError,
    }
}

/// Reads a whole prediction file into memory. Streaming consumers should
/// use [`RecordReader`] directly.
pub fn read_predictions<R: BufRead>(
    input: R,
    format: Format,
    config: &EvalConfig,
    strict: bool,
) -> Result<(Vec<PredictionRecord>, DatasetSummary)> {
    let mut reader = RecordReader::new(input, format, config, strict)?;
    let mut records = Vec::new();
    for item in &mut reader {
        records.push(item?);
    }
    Ok((records, reader.into_summary()))
}

/// Writes records in the given format, returning how many were written.
/// Floats render with Rust's shortest round-trip formatting, so a strict
/// re-read reproduces each probability to well under 1e-15.
pub fn write_predictions<W, I>(records: I, mut sink: W, format: Format) -> Result<u64>
where
    W: Write,
    I: IntoIterator,
    I::Item: Borrow<PredictionRecord>,
{
    let mut count = 0u64;
    let mut n_classes = None;
    let mut line = String::new();
    for item in records {
        let record = item.borrow();
        match n_classes {
            None => {
                n_classes = Some(record.n_classes());
                if format == Format::Csv {
                    sink.write_all(csv_header(record.n_classes()).as_bytes())?;
                }
            }
            Some(k) if k != record.n_classes() => {
                return Err(Error::Format(format!(
                    "record {count} has {} classes, previous records had {k}",
                    record.n_classes()
                )));
            }
            Some(_) => {}
        }
        line.clear();
        match format {
            Format::Csv => {
                write!(line, "{}", record.label()).expect("writing to a String cannot fail");
                for &p in record.probs() {
                    write!(line, ",{p}").expect("writing to a String cannot fail");
                }
                line.push('\n');
            }
            Format::Jsonl => {
                line.push_str(&serde_json::to_string(&serde_json::json!({
                    "label": record.label(),
                    "probs": record.probs(),
                }))?);
                line.push('\n');
            }
        }
        sink.write_all(line.as_bytes())?;
        count += 1;
    }
    if count == 0 && format == Format::Csv {
        // No records means no class count; emit the bare label column.
        sink.write_all(b"label\n")?;
    }
    sink.flush()?;
    Ok(count)
}

fn csv_header(n_classes: usize) -> String {
    let mut header = String::from("label");
    for i in 0..n_classes {
        write!(header, ",p{i}").expect("writing to a String cannot fail");
    }
    header.push('\n');
    header
}
