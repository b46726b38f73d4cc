//! Equal-population binning of true-class probabilities and the measured
//! (truth) metrics derived from per-bin correctness fractions.
//!
//! The measured side replaces each reported probability with an empirical
//! estimate: bin the true-class probabilities into roughly equal-population
//! bins, count how much correct and incorrect probability mass falls into
//! each bin, and read off the fraction correct. Heavily repeated values
//! (more than a bin's worth of identical probabilities, the typical spike at
//! exactly 1.0) would defeat quantile edges, so they are carved out first
//! into dedicated width-`gamma` "singularity" bins.
//!
//! Interval conventions, fixed for determinism and mirrored by the tests'
//! independent oracle:
//! - bins are half-open `(lo, hi]`; the table's lowest bin is closed at `lo`
//!   so the minimum observed value is admitted;
//! - quantile edges sit at the midpoint of the neighboring members, so a
//!   value equal to an edge lands in the lower bin;
//! - the outermost edges clip to the observed min/max member, while edges
//!   adjacent to a singularity snap to that singularity's boundary;
//! - values between singularities are chunked per maximal run ("segment"),
//!   with the quantile-bin budget spread over segments by a highest-averages
//!   rule (each nonempty segment keeps at least one bin);
//! - a chunk emptied by ties at its edge is merged into its lower neighbor.

use serde::{Deserialize, Serialize};

use crate::config::EvalConfig;
use crate::error::{Error, Result};
use crate::float_serde;
use crate::mean::{floor_gamma, MetricTriple};
use crate::record::PredictionRecord;

/// One bin of the reliability table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    /// Lower edge; exclusive except for the table's lowest bin.
    pub lo: f64,
    /// Upper edge, inclusive.
    pub hi: f64,
    /// True-class probabilities that fell in this bin.
    pub n_correct: u64,
    /// Other-class probabilities that fell in this bin.
    pub n_incorrect: u64,
    /// `n_correct / (n_correct + n_incorrect)`: the measured accuracy for
    /// predictions reporting a probability in this bin.
    pub fraction: f64,
    /// Weight used by the measured metrics; equals `n_correct`.
    pub weight: f64,
    /// Whether this bin is a width-`gamma` carve-out for a repeated value.
    pub is_singularity: bool,
    /// Mean of the true-class probabilities inside the bin (plot x-center).
    pub mean_reported: f64,
}

impl BinStats {
    fn new(lo: f64, hi: f64, is_singularity: bool) -> Self {
        BinStats {
            lo,
            hi,
            n_correct: 0,
            n_incorrect: 0,
            fraction: 0.0,
            weight: 0.0,
            is_singularity,
            mean_reported: 0.0,
        }
    }
}

/// The full reliability table plus conservation tallies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinTable {
    /// Bins ordered by `(lo, hi)`, pairwise disjoint.
    pub bins: Vec<BinStats>,
    pub total_correct: u64,
    pub total_incorrect: u64,
    /// Probabilities that matched no bin: below the lowest edge, above the
    /// highest, or in a gap between singularities. For a table built from
    /// the same records only incorrect-class mass can land here.
    pub out_of_range_incorrect: u64,
    #[serde(skip)]
    reported_sums: Vec<f64>,
}

impl BinTable {
    /// Wraps externally specified bins (deserialized reports, hand-built
    /// tables in tests). Counts start at zero.
    pub fn from_bins(bins: Vec<BinStats>) -> Self {
        BinTable {
            bins,
            total_correct: 0,
            total_incorrect: 0,
            out_of_range_incorrect: 0,
            reported_sums: Vec::new(),
        }
    }

    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn singularity_count(&self) -> usize {
        self.bins.iter().filter(|b| b.is_singularity).count()
    }

    fn contains(&self, idx: usize, x: f64) -> bool {
        let b = &self.bins[idx];
        (b.lo < x || (idx == 0 && x == b.lo)) && x <= b.hi
    }

    /// Index of the bin containing `x`, honoring the closed lowest edge.
    pub fn bin_index(&self, x: f64) -> Option<usize> {
        let idx = self.bins.partition_point(|b| b.hi < x);
        (idx < self.bins.len() && self.contains(idx, x)).then_some(idx)
    }

    /// Clears all counts so the table can be refilled.
    pub fn reset_counts(&mut self) {
        for b in &mut self.bins {
            b.n_correct = 0;
            b.n_incorrect = 0;
            b.fraction = 0.0;
            b.weight = 0.0;
            b.mean_reported = 0.0;
        }
        self.total_correct = 0;
        self.total_incorrect = 0;
        self.out_of_range_incorrect = 0;
        self.reported_sums = vec![0.0; self.bins.len()];
    }

    /// Routes every class probability of one record into its bin.
    pub fn accumulate_record(&mut self, record: &PredictionRecord) {
        if self.reported_sums.len() != self.bins.len() {
            self.reported_sums = vec![0.0; self.bins.len()];
        }
        let label = record.label();
        for (class, &p) in record.probs().iter().enumerate() {
            match self.bin_index(p) {
                Some(idx) => {
                    if class == label {
                        self.bins[idx].n_correct += 1;
                        self.reported_sums[idx] += p;
                        self.total_correct += 1;
                    } else {
                        self.bins[idx].n_incorrect += 1;
                        self.total_incorrect += 1;
                    }
                }
                None => self.out_of_range_incorrect += 1,
            }
        }
    }

    /// Derives fractions, weights, and per-bin means from the raw counts.
    pub fn finalize_counts(&mut self) {
        for (i, b) in self.bins.iter_mut().enumerate() {
            let total = b.n_correct + b.n_incorrect;
            b.fraction = if total == 0 {
                0.0
            } else {
                b.n_correct as f64 / total as f64
            };
            b.weight = b.n_correct as f64;
            b.mean_reported = if b.n_correct == 0 {
                0.0
            } else {
                self.reported_sums[i] / b.n_correct as f64
            };
        }
    }
}

/// Values appearing more often than one equal-population bin could hold
/// (strictly more than `ceil(N / bins)` times), grouped within
/// `value_epsilon` and returned ascending (one representative per group,
/// the group's maximum).
pub fn detect_singularities(correct_probs: &[f64], config: &EvalConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let sorted = validated_sorted(correct_probs)?;
    Ok(singular_values(&sorted, config))
}

fn validated_sorted(correct_probs: &[f64]) -> Result<Vec<f64>> {
    if correct_probs.is_empty() {
        return Err(Error::EmptyInput("binning needs at least one probability"));
    }
    for (index, &value) in correct_probs.iter().enumerate() {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(Error::ValueOutOfRange { index, value });
        }
    }
    let mut sorted = correct_probs.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(sorted)
}

fn singular_values(sorted: &[f64], config: &EvalConfig) -> Vec<f64> {
    let capacity = sorted.len().div_ceil(config.bins);
    let mut out = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        // Chain values whose adjacent gaps stay within epsilon.
        while end < sorted.len() && sorted[end] - sorted[end - 1] <= config.value_epsilon {
            end += 1;
        }
        if end - start > capacity {
            out.push(sorted[end - 1]);
        }
        start = end;
    }
    out
}

/// Spreads `quantile_bins` over the segment populations: one bin per
/// nonempty segment, extras by highest average `pop / (alloc + 1)`, capped
/// at one bin per member. Ties resolve to the lower segment.
fn allocate_bins(quantile_bins: usize, pops: &[usize]) -> Vec<usize> {
    let mut alloc = vec![1usize; pops.len()];
    let mut extras = quantile_bins.saturating_sub(pops.len());
    while extras > 0 {
        let mut best: Option<usize> = None;
        for (i, &p) in pops.iter().enumerate() {
            if alloc[i] >= p {
                continue;
            }
            let take = match best {
                None => true,
                Some(b) => {
                    (p as f64 / (alloc[i] + 1) as f64) > (pops[b] as f64 / (alloc[b] + 1) as f64)
                }
            };
            if take {
                best = Some(i);
            }
        }
        match best {
            Some(i) => alloc[i] += 1,
            None => break, // every segment capped at its population
        }
        extras -= 1;
    }
    alloc
}

/// Builds the bin intervals from the true-class probabilities and counts the
/// correct-side members. Incorrect-side counts stay zero until
/// [`fill_counts`] runs.
pub fn build_bins(correct_probs: &[f64], config: &EvalConfig) -> Result<BinTable> {
    config.validate()?;
    let sorted = validated_sorted(correct_probs)?;
    let singulars = singular_values(&sorted, config);
    let n_sing = singulars.len();
    if n_sing > 0 {
        if config.gamma == 0.0 {
            return Err(Error::ZeroGammaSingularity);
        }
        // Detection caps the singularity count below the bin budget
        // (each singular value uses more than an equal share of N), so this
        // is defensive only.
        if config.bins <= n_sing {
            return Err(Error::TooFewBins {
                bins: config.bins,
                singularities: n_sing,
            });
        }
    }

    // Width-gamma intervals, clipped at 0 and at the previous interval.
    let mut sing_iv: Vec<(f64, f64)> = Vec::with_capacity(n_sing);
    for &v in &singulars {
        let mut lo = (v - config.gamma).max(0.0);
        if let Some(&(_, prev_hi)) = sing_iv.last() {
            lo = lo.max(prev_hi);
        }
        sing_iv.push((lo, v));
    }
    let in_singularity = |lo: f64, hi: f64, x: f64| {
        if lo < hi {
            lo < x && x <= hi
        } else {
            x == hi // interval fully clipped (singular value at 0)
        }
    };

    // Segment i holds values below singularity i (and above i-1); the last
    // segment holds values above every singularity.
    let mut segments: Vec<Vec<f64>> = vec![Vec::new(); n_sing + 1];
    'next_value: for &x in &sorted {
        for (j, &(lo, hi)) in sing_iv.iter().enumerate() {
            if x <= hi {
                if !in_singularity(lo, hi, x) {
                    segments[j].push(x);
                }
                continue 'next_value;
            }
        }
        segments[n_sing].push(x);
    }

    let mut bins: Vec<BinStats> = sing_iv
        .iter()
        .map(|&(lo, hi)| BinStats::new(lo, hi, true))
        .collect();

    let nonempty: Vec<usize> = (0..segments.len())
        .filter(|&i| !segments[i].is_empty())
        .collect();
    if !nonempty.is_empty() {
        let pops: Vec<usize> = nonempty.iter().map(|&i| segments[i].len()).collect();
        let alloc = allocate_bins(config.bins - n_sing, &pops);
        for (k, &seg_idx) in nonempty.iter().enumerate() {
            let seg = &segments[seg_idx];
            let seg_lo = if seg_idx == 0 {
                seg[0]
            } else {
                sing_iv[seg_idx - 1].1
            };
            let seg_hi = if seg_idx == n_sing {
                *seg.last().unwrap()
            } else {
                sing_iv[seg_idx].0
            };
            let n_chunks = alloc[k];
            let base = seg.len() / n_chunks;
            let extra = seg.len() % n_chunks;
            let mut lo = seg_lo;
            let mut start = 0usize;
            for c in 0..n_chunks {
                let end = start + base + usize::from(c < extra);
                let hi = if end == seg.len() {
                    seg_hi
                } else {
                    (seg[end - 1] + seg[end]) / 2.0
                };
                bins.push(BinStats::new(lo, hi, false));
                lo = hi;
                start = end;
            }
        }
    }

    bins.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));

    let mut table = BinTable::from_bins(bins);
    // Count members by interval membership (ties at an edge belong to the
    // lower bin, so actual counts can differ from the chunk sizes).
    let mut idx = 0usize;
    for &x in &sorted {
        while idx < table.bins.len() && table.bins[idx].hi < x {
            idx += 1;
        }
        debug_assert!(idx < table.bins.len() && table.contains(idx, x));
        table.bins[idx].n_correct += 1;
        table.total_correct += 1;
    }

    // Fold chunks emptied by edge ties into their lower neighbor.
    let mut merged: Vec<BinStats> = Vec::with_capacity(table.bins.len());
    for b in table.bins.drain(..) {
        if b.n_correct == 0 && !b.is_singularity {
            let prev = merged
                .last_mut()
                .expect("the lowest bin always holds the minimum value");
            prev.hi = prev.hi.max(b.hi);
            continue;
        }
        merged.push(b);
    }
    table.bins = merged;
    for b in &mut table.bins {
        b.fraction = 1.0;
        b.weight = b.n_correct as f64;
    }
    Ok(table)
}

/// Routes every class probability of every record into the table and
/// derives fractions. Counts are rebuilt from scratch.
pub fn fill_counts(table: &mut BinTable, records: &[PredictionRecord]) {
    table.reset_counts();
    for record in records {
        table.accumulate_record(record);
    }
    table.finalize_counts();
}

/// Measured metric triple: gamma-floored per-bin fractions combined by the
/// weighted generalized means, weights proportional to each bin's correct
/// population.
pub fn truth_metrics(table: &BinTable, config: &EvalConfig) -> Result<MetricTriple> {
    config.validate()?;
    if table.bins.is_empty() {
        return Err(Error::EmptyInput("truth metrics need at least one bin"));
    }
    let fractions: Vec<f64> = table.bins.iter().map(|b| b.fraction).collect();
    let weights: Vec<f64> = table.bins.iter().map(|b| b.weight).collect();
    let floored = floor_gamma(&fractions, config.gamma)?;
    MetricTriple::from_weighted_values(&floored, &weights)
}

/// Calibration verdict from the confidence slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Calibrated,
    Overconfident,
    Underconfident,
    Undefined,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Calibrated => "calibrated",
            Verdict::Overconfident => "overconfident",
            Verdict::Underconfident => "underconfident",
            Verdict::Undefined => "undefined",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Slope of the measured decisiveness-robustness span against the reported
/// one. A slope below 1 means the self-assessed spread overstates the
/// measured spread: overconfidence. NaN when the reported span is within
/// `value_epsilon` of zero (verdict `undefined`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeResult {
    #[serde(with = "float_serde")]
    pub slope: f64,
    pub reported_decisiveness: f64,
    pub reported_robustness: f64,
    pub truth_decisiveness: f64,
    pub truth_robustness: f64,
    pub verdict: Verdict,
}

/// Computes the over/under-confidence slope from the two metric triples.
pub fn slope(reported: &MetricTriple, truth: &MetricTriple, config: &EvalConfig) -> SlopeResult {
    let denominator = reported.decisiveness - reported.robustness;
    let numerator = truth.decisiveness - truth.robustness;
    let (s, verdict) = if denominator.abs() <= config.value_epsilon {
        (f64::NAN, Verdict::Undefined)
    } else {
        let s = numerator / denominator;
        let verdict = if s > 1.0 + config.value_epsilon {
            Verdict::Underconfident
        } else if s < 1.0 - config.value_epsilon {
            Verdict::Overconfident
        } else {
            Verdict::Calibrated
        };
        (s, verdict)
    };
    SlopeResult {
        slope: s,
        reported_decisiveness: reported.decisiveness,
        reported_robustness: reported.robustness,
        truth_decisiveness: truth.decisiveness,
        truth_robustness: truth.robustness,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(gamma: f64, bins: usize) -> EvalConfig {
        EvalConfig {
            gamma,
            bins,
            ..EvalConfig::default()
        }
    }

    fn rec(probs: Vec<f64>, label: usize) -> PredictionRecord {
        PredictionRecord::new(probs, label, 1e-4).unwrap()
    }

    fn ten_value_fixture() -> Vec<f64> {
        let mut v = vec![0.1, 0.2, 0.3, 0.8];
        v.extend([1.0; 6]);
        v
    }

    #[test]
    fn detects_overfull_repeated_value() {
        let sing = detect_singularities(&ten_value_fixture(), &cfg(0.005, 2)).unwrap();
        assert_eq!(sing, vec![1.0]);
    }

    #[test]
    fn distinct_values_have_no_singularities() {
        let values = [0.1, 0.25, 0.4, 0.55, 0.7, 0.85, 0.9, 0.95, 0.99, 1.0];
        assert!(detect_singularities(&values, &cfg(0.005, 2))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn small_capacity_makes_pairs_singular() {
        // bins > N: a lone duplicate pair already exceeds ceil(4/4) = 1.
        let sing = detect_singularities(&[0.5, 0.5, 0.3, 0.9], &cfg(0.005, 4)).unwrap();
        assert_eq!(sing, vec![0.5]);
    }

    #[test]
    fn near_values_group_within_epsilon() {
        let e = 5e-13; // below the default grouping epsilon
        let values = [0.5, 0.5 + e, 0.5 + 2.0 * e, 0.1];
        let sing = detect_singularities(&values, &cfg(0.005, 4)).unwrap();
        assert_eq!(sing, vec![0.5 + 2.0 * e]);
    }

    #[test]
    fn builds_singularity_plus_quantile_bin() {
        let table = build_bins(&ten_value_fixture(), &cfg(0.005, 2)).unwrap();
        assert_eq!(table.n_bins(), 2);
        let q = &table.bins[0];
        assert_eq!(
            (q.lo, q.hi, q.n_correct, q.is_singularity),
            (0.1, 0.995, 4, false)
        );
        let s = &table.bins[1];
        assert_eq!(
            (s.lo, s.hi, s.n_correct, s.is_singularity),
            (0.995, 1.0, 6, true)
        );
        assert!((s.hi - s.lo - 0.005).abs() < 1e-15);
        assert_eq!(table.total_correct, 10);
    }

    #[test]
    fn quantile_edges_sit_at_member_midpoints() {
        let table = build_bins(&[0.1, 0.2, 0.3, 0.4], &cfg(0.005, 2)).unwrap();
        assert_eq!(table.n_bins(), 2);
        assert_eq!((table.bins[0].lo, table.bins[0].hi), (0.1, 0.25));
        assert_eq!((table.bins[1].lo, table.bins[1].hi), (0.25, 0.4));
        assert_eq!(table.bins[0].n_correct, 2);
        assert_eq!(table.bins[1].n_correct, 2);
    }

    #[test]
    fn lone_bin_holds_identical_values() {
        // A single bin is never overfull relative to itself.
        let table = build_bins(&[0.5, 0.5, 0.5, 0.5], &cfg(0.005, 1)).unwrap();
        assert_eq!(table.n_bins(), 1);
        let b = &table.bins[0];
        assert_eq!(
            (b.lo, b.hi, b.n_correct, b.is_singularity),
            (0.5, 0.5, 4, false)
        );
    }

    #[test]
    fn zero_gamma_with_singularity_is_an_error() {
        let err = build_bins(&ten_value_fixture(), &cfg(0.0, 2)).unwrap_err();
        assert!(matches!(err, Error::ZeroGammaSingularity));
    }

    #[test]
    fn edge_ties_go_to_the_lower_bin() {
        // Chunks split {0.3, 0.5} | {0.5, 0.9}; the midpoint edge equals the
        // tied value, so both copies of 0.5 land below.
        let table = build_bins(&[0.3, 0.5, 0.5, 0.9], &cfg(0.005, 2)).unwrap();
        assert_eq!(table.n_bins(), 2);
        assert_eq!(table.bins[0].n_correct, 3);
        assert_eq!(table.bins[1].n_correct, 1);
        assert_eq!(table.bins[0].hi, 0.5);
    }

    #[test]
    fn emptied_chunk_merges_into_lower_neighbor() {
        // {0.3, 0.4, 0.5} | {0.5, 0.5}: the upper chunk is all copies of the
        // edge value, so it empties out and folds into the lower bin.
        let table = build_bins(&[0.3, 0.4, 0.5, 0.5, 0.5], &cfg(0.005, 2)).unwrap();
        assert_eq!(table.n_bins(), 1);
        assert_eq!(table.bins[0].n_correct, 5);
        assert_eq!((table.bins[0].lo, table.bins[0].hi), (0.3, 0.5));
    }

    #[test]
    fn singularity_at_zero_clips_to_point_bin() {
        let mut values = vec![0.0; 6];
        values.extend([0.3, 0.6, 0.7, 0.9]);
        let table = build_bins(&values, &cfg(0.005, 2)).unwrap();
        let b = &table.bins[0];
        assert!(b.is_singularity);
        assert_eq!((b.lo, b.hi), (0.0, 0.0));
        assert_eq!(b.n_correct, 6);
        assert_eq!(table.bin_index(0.0), Some(0));
    }

    #[test]
    fn interior_singularity_splits_segments() {
        let mut values = vec![0.5; 7];
        values.extend([0.1, 0.2, 0.8, 0.9]);
        let table = build_bins(&values, &cfg(0.005, 3)).unwrap();
        // One singularity at 0.5, one quantile bin per side.
        assert_eq!(table.singularity_count(), 1);
        assert_eq!(table.n_bins(), 3);
        assert_eq!((table.bins[0].lo, table.bins[0].hi), (0.1, 0.495));
        assert_eq!((table.bins[1].lo, table.bins[1].hi), (0.495, 0.5));
        assert_eq!((table.bins[2].lo, table.bins[2].hi), (0.5, 0.9));
        assert_eq!(
            [2, 7, 2],
            [
                table.bins[0].n_correct,
                table.bins[1].n_correct,
                table.bins[2].n_correct
            ]
        );
    }

    #[test]
    fn fill_counts_routes_both_classes() {
        let mut table = BinTable::from_bins(vec![BinStats::new(0.0, 1.0, false)]);
        fill_counts(&mut table, &[rec(vec![0.8, 0.2], 0)]);
        let b = &table.bins[0];
        assert_eq!((b.n_correct, b.n_incorrect), (1, 1));
        assert_eq!(b.fraction, 0.5);
        assert_eq!(b.weight, 1.0);
        assert!((b.mean_reported - 0.8).abs() < 1e-15);
        assert_eq!(table.out_of_range_incorrect, 0);
    }

    #[test]
    fn sharp_correct_classifier_has_unit_fractions() {
        let records: Vec<_> = (0..12).map(|_| rec(vec![1.0, 0.0, 0.0], 0)).collect();
        for bins in [1, 2, 5] {
            let probs: Vec<f64> = records.iter().map(|r| r.correct_class_prob()).collect();
            let mut table = build_bins(&probs, &cfg(0.005, bins)).unwrap();
            fill_counts(&mut table, &records);
            for b in &table.bins {
                assert_eq!(b.fraction, 1.0);
            }
            // The zero probabilities fall below every bin.
            assert_eq!(table.out_of_range_incorrect, 24);
            assert_eq!(
                table.total_correct + table.total_incorrect + table.out_of_range_incorrect,
                36
            );
        }
    }

    #[test]
    fn counts_are_conserved() {
        let records = vec![
            rec(vec![0.7, 0.2, 0.1], 0),
            rec(vec![0.3, 0.3, 0.4], 2),
            rec(vec![0.25, 0.5, 0.25], 1),
            rec(vec![0.01, 0.01, 0.98], 0),
        ];
        let probs: Vec<f64> = records.iter().map(|r| r.correct_class_prob()).collect();
        let mut table = build_bins(&probs, &cfg(0.005, 3)).unwrap();
        fill_counts(&mut table, &records);
        let in_bins: u64 = table.bins.iter().map(|b| b.n_correct + b.n_incorrect).sum();
        assert_eq!(in_bins + table.out_of_range_incorrect, 12);
        let correct: u64 = table.bins.iter().map(|b| b.n_correct).sum();
        assert_eq!(correct, 4);
    }

    #[test]
    fn truth_metrics_on_equal_weights() {
        let mut bins = vec![
            BinStats::new(0.0, 0.5, false),
            BinStats::new(0.5, 1.0, false),
        ];
        bins[0].fraction = 0.5;
        bins[0].weight = 2.0;
        bins[1].fraction = 1.0;
        bins[1].weight = 2.0;
        let table = BinTable::from_bins(bins);
        let t = truth_metrics(&table, &cfg(0.005, 2)).unwrap();
        assert!((t.decisiveness - 0.75).abs() < 1e-15);
        // ((0.5^(-2/3) + 1) / 2)^(-3/2), evaluated in 50-digit arithmetic.
        assert!((t.robustness - 0.6795937371150484).abs() < 1e-12);
        assert!(t.robustness <= t.geometric && t.geometric <= t.decisiveness);
    }

    #[test]
    fn truth_metrics_weight_by_bin_population() {
        let mut bins = vec![
            BinStats::new(0.0, 0.5, false),
            BinStats::new(0.5, 1.0, false),
        ];
        bins[0].fraction = 0.5;
        bins[0].weight = 1.0;
        bins[1].fraction = 1.0;
        bins[1].weight = 3.0;
        let table = BinTable::from_bins(bins);
        let t = truth_metrics(&table, &cfg(0.005, 2)).unwrap();
        assert!((t.decisiveness - 0.875).abs() < 1e-15);
    }

    #[test]
    fn truth_metrics_floor_fractions() {
        let mut bins = vec![BinStats::new(0.0, 1.0, false)];
        bins[0].fraction = 0.001;
        bins[0].weight = 5.0;
        let table = BinTable::from_bins(bins);
        let t = truth_metrics(&table, &cfg(0.005, 1)).unwrap();
        assert!((t.decisiveness - 0.005).abs() < 1e-15);
    }

    #[test]
    fn slope_matches_direct_ratio() {
        let reported = MetricTriple {
            robustness: 0.603,
            geometric: 0.913,
            decisiveness: 0.973,
        };
        let truth = MetricTriple {
            robustness: 0.679,
            geometric: 0.913,
            decisiveness: 0.962,
        };
        let s = slope(&reported, &truth, &EvalConfig::default());
        assert!((s.slope - 0.7648648648648646).abs() < 1e-15);
        assert_eq!(s.verdict, Verdict::Overconfident);
        assert_eq!(s.reported_robustness, 0.603);
        assert_eq!(s.truth_decisiveness, 0.962);
    }

    #[test]
    fn identical_triples_are_calibrated() {
        let t = MetricTriple {
            robustness: 0.4,
            geometric: 0.6,
            decisiveness: 0.9,
        };
        let s = slope(&t, &t, &EvalConfig::default());
        assert_eq!(s.slope, 1.0);
        assert_eq!(s.verdict, Verdict::Calibrated);
    }

    #[test]
    fn degenerate_reported_span_is_undefined() {
        let flat = MetricTriple {
            robustness: 1.0,
            geometric: 1.0,
            decisiveness: 1.0,
        };
        let s = slope(&flat, &flat, &EvalConfig::default());
        assert!(s.slope.is_nan());
        assert_eq!(s.verdict, Verdict::Undefined);
    }

    #[test]
    fn bin_lookup_handles_edges_and_gaps() {
        let table = BinTable::from_bins(vec![
            BinStats::new(0.1, 0.4, false),
            BinStats::new(0.6, 0.9, false),
        ]);
        assert_eq!(table.bin_index(0.1), Some(0)); // closed lowest edge
        assert_eq!(table.bin_index(0.4), Some(0)); // inclusive hi
        assert_eq!(table.bin_index(0.5), None); // gap
        assert_eq!(table.bin_index(0.61), Some(1));
        assert_eq!(table.bin_index(0.05), None); // below
        assert_eq!(table.bin_index(0.95), None); // above
    }

    #[test]
    fn equal_population_holds_on_distinct_values() {
        let values: Vec<f64> = (0..103).map(|i| 0.001 + 0.998 * i as f64 / 102.0).collect();
        for bins in [2, 5, 7, 20] {
            let table = build_bins(&values, &cfg(0.005, bins)).unwrap();
            let counts: Vec<u64> = table.bins.iter().map(|b| b.n_correct).collect();
            let max = *counts.iter().max().unwrap();
            let min = *counts.iter().min().unwrap();
            assert!(max - min <= 1, "bins={bins} counts={counts:?}");
            assert_eq!(counts.iter().sum::<u64>(), 103);
        }
    }

    #[test]
    fn bins_are_disjoint_and_ordered() {
        let mut values = ten_value_fixture();
        values.extend([0.15, 0.22, 0.91, 0.93]);
        let table = build_bins(&values, &cfg(0.005, 4)).unwrap();
        for pair in table.bins.windows(2) {
            assert!(pair[0].hi <= pair[1].lo);
            assert!(pair[0].lo <= pair[1].lo);
        }
        let total: u64 = table.bins.iter().map(|b| b.n_correct).sum();
        assert_eq!(total as usize, values.len());
    }
}
