//! A deliberately plain re-implementation of the whole metric pipeline,
//! used as a cross-check oracle by the integration tests.
//!
//! It honors the same arithmetic contract as the library (left-to-right
//! compensated sums, the zero-value limit rule, ties to the lower bin,
//! lowest-index tie breaks) but shares none of its code: everything here
//! is flat loops over plain vectors, scanning every bin for every value.

#![allow(dead_code)]

use probeval::{EvalConfig, PredictionRecord, Verdict};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBin {
    pub lo: f64,
    pub hi: f64,
    pub singular: bool,
    pub n_correct: u64,
    pub n_incorrect: u64,
    pub fraction: f64,
    pub mean_reported: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveTable {
    pub bins: Vec<NaiveBin>,
    pub total_correct: u64,
    pub total_incorrect: u64,
    pub out_of_range_incorrect: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaiveError {
    ZeroGammaSingularity,
    TooFewBins,
}

pub fn bits_eq(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a.to_bits() == b.to_bits()
}

pub fn kahan(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for &v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Weighted generalized mean of order `rho` under the shared contract.
pub fn power_mean(values: &[f64], weights: &[f64], rho: f64) -> f64 {
    assert_eq!(values.len(), weights.len());
    let weight_sum = kahan(weights);
    assert!(weight_sum > 0.0, "oracle needs positive total weight");
    if rho <= 0.0 {
        for (&v, &w) in values.iter().zip(weights) {
            if v == 0.0 && w > 0.0 {
                return 0.0;
            }
        }
    }
    let mut terms = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        if w == 0.0 {
            terms.push(0.0);
        } else if rho == 0.0 {
            terms.push(w * v.ln());
        } else {
            terms.push(w * v.powf(rho));
        }
    }
    let mean = kahan(&terms) / weight_sum;
    if rho == 0.0 {
        mean.exp()
    } else {
        mean.powf(1.0 / rho)
    }
}

/// (robustness, geometric, decisiveness) of already-floored values.
pub fn triple(values: &[f64], weights: &[f64]) -> (f64, f64, f64) {
    (
        power_mean(values, weights, -2.0 / 3.0),
        power_mean(values, weights, 0.0),
        power_mean(values, weights, 1.0),
    )
}

pub fn floored(values: &[f64], gamma: f64) -> Vec<f64> {
    values
        .iter()
        .map(|&v| if v < gamma { gamma } else { v })
        .collect()
}

pub fn reported(correct_probs: &[f64], gamma: f64) -> (f64, f64, f64) {
    let ones = vec![1.0; correct_probs.len()];
    triple(&floored(correct_probs, gamma), &ones)
}

pub fn cross_entropy(correct_probs: &[f64], gamma: f64) -> f64 {
    let f = floored(correct_probs, gamma);
    if f.contains(&0.0) {
        return f64::INFINITY;
    }
    let logs: Vec<f64> = f.iter().map(|&v| v.ln()).collect();
    0.0 - kahan(&logs) / logs.len() as f64
}

pub fn accuracy(records: &[PredictionRecord]) -> f64 {
    let mut correct = 0usize;
    for r in records {
        let mut best = 0usize;
        for (i, &p) in r.probs().iter().enumerate() {
            if p > r.probs()[best] {
                best = i;
            }
        }
        if best == r.label() {
            correct += 1;
        }
    }
    correct as f64 / records.len() as f64
}

/// Bin geometry: (lo, hi, singular) triples, low to high.
pub fn bin_edges(
    correct_probs: &[f64],
    config: &EvalConfig,
) -> Result<Vec<(f64, f64, bool)>, NaiveError> {
    let mut sorted = correct_probs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let capacity = n / config.bins + usize::from(!n.is_multiple_of(config.bins));

    // Runs of values chained by gaps within epsilon; a run larger than one
    // equal-population share is a singularity, represented by its maximum.
    let mut singulars: Vec<f64> = Vec::new();
    let mut run_start = 0usize;
    for i in 1..=n {
        let run_breaks = i == n || sorted[i] - sorted[i - 1] > config.value_epsilon;
        if run_breaks {
            if i - run_start > capacity {
                singulars.push(sorted[i - 1]);
            }
            run_start = i;
        }
    }
    if !singulars.is_empty() {
        if config.gamma == 0.0 {
            return Err(NaiveError::ZeroGammaSingularity);
        }
        if config.bins <= singulars.len() {
            return Err(NaiveError::TooFewBins);
        }
    }

    // Carve (v - gamma, v], clipped at zero and at the previous carve-out.
    let mut carved: Vec<(f64, f64)> = Vec::new();
    for &v in &singulars {
        let mut lo = v - config.gamma;
        if lo < 0.0 {
            lo = 0.0;
        }
        if let Some(&(_, prev_hi)) = carved.last() {
            if lo < prev_hi {
                lo = prev_hi;
            }
        }
        carved.push((lo, v));
    }
    let in_carved = |lo: f64, hi: f64, x: f64| {
        if lo < hi {
            lo < x && x <= hi
        } else {
            x == hi
        }
    };

    // Segment j collects the values below carve-out j; the final segment
    // collects everything above the last carve-out.
    let mut segments: Vec<Vec<f64>> = vec![Vec::new(); singulars.len() + 1];
    for &x in &sorted {
        let mut placed = false;
        for (j, &(lo, hi)) in carved.iter().enumerate() {
            if x <= hi {
                if !in_carved(lo, hi, x) {
                    segments[j].push(x);
                }
                placed = true;
                break;
            }
        }
        if !placed {
            segments[singulars.len()].push(x);
        }
    }

    // One quantile bin per nonempty segment, extra bins by highest average
    // population per slot, never more bins than members, ties to the lower
    // segment.
    let nonempty: Vec<usize> = (0..segments.len())
        .filter(|&j| !segments[j].is_empty())
        .collect();
    let quota = config.bins - singulars.len();
    let mut alloc = vec![1usize; nonempty.len()];
    let mut extras = if quota > nonempty.len() {
        quota - nonempty.len()
    } else {
        0
    };
    while extras > 0 {
        let mut best: Option<usize> = None;
        for (slot, &j) in nonempty.iter().enumerate() {
            let pop = segments[j].len();
            if alloc[slot] >= pop {
                continue;
            }
            let score = pop as f64 / (alloc[slot] + 1) as f64;
            let beats = match best {
                None => true,
                Some(b) => score > segments[nonempty[b]].len() as f64 / (alloc[b] + 1) as f64,
            };
            if beats {
                best = Some(slot);
            }
        }
        let Some(slot) = best else { break };
        alloc[slot] += 1;
        extras -= 1;
    }

    let mut edges: Vec<(f64, f64, bool)> = carved.iter().map(|&(lo, hi)| (lo, hi, true)).collect();
    for (slot, &j) in nonempty.iter().enumerate() {
        let seg = &segments[j];
        let seg_lo = if j == 0 { seg[0] } else { carved[j - 1].1 };
        let seg_hi = if j == singulars.len() {
            seg[seg.len() - 1]
        } else {
            carved[j].0
        };
        let chunks = alloc[slot];
        let base = seg.len() / chunks;
        let extra = seg.len() % chunks;
        let mut lo = seg_lo;
        let mut taken = 0usize;
        for c in 0..chunks {
            let size = base + usize::from(c < extra);
            let end = taken + size;
            let hi = if end == seg.len() {
                seg_hi
            } else {
                (seg[end - 1] + seg[end]) / 2.0
            };
            edges.push((lo, hi, false));
            lo = hi;
            taken = end;
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    // Chunks emptied by edge ties (every member of a chunk can sit exactly
    // on its lower edge) merge into the bin below.
    let mut counts = vec![0u64; edges.len()];
    for &x in &sorted {
        let mut j = 0;
        while edges[j].1 < x {
            j += 1;
        }
        counts[j] += 1;
    }
    let mut merged: Vec<(f64, f64, bool)> = Vec::new();
    for (j, &e) in edges.iter().enumerate() {
        if counts[j] == 0 && !e.2 {
            let last = merged.last_mut().expect("lowest bin holds the minimum");
            if e.1 > last.1 {
                last.1 = e.1;
            }
            continue;
        }
        merged.push(e);
    }
    Ok(merged)
}

/// Builds and fills the table: every class probability of every record is
/// tested against every bin.
pub fn table(records: &[PredictionRecord], config: &EvalConfig) -> Result<NaiveTable, NaiveError> {
    let correct: Vec<f64> = records.iter().map(|r| r.correct_class_prob()).collect();
    let edges = bin_edges(&correct, config)?;
    let mut bins: Vec<NaiveBin> = edges
        .iter()
        .map(|&(lo, hi, singular)| NaiveBin {
            lo,
            hi,
            singular,
            n_correct: 0,
            n_incorrect: 0,
            fraction: 0.0,
            mean_reported: 0.0,
        })
        .collect();
    let mut sums = vec![0.0f64; bins.len()];
    let mut total_correct = 0u64;
    let mut total_incorrect = 0u64;
    let mut out_of_range = 0u64;
    for r in records {
        for (class, &p) in r.probs().iter().enumerate() {
            let mut placed = false;
            for (j, b) in bins.iter_mut().enumerate() {
                let inside = (b.lo < p || (j == 0 && p == b.lo)) && p <= b.hi;
                if inside {
                    if class == r.label() {
                        b.n_correct += 1;
                        sums[j] += p;
                        total_correct += 1;
                    } else {
                        b.n_incorrect += 1;
                        total_incorrect += 1;
                    }
                    placed = true;
                    break;
                }
            }
            if !placed {
                out_of_range += 1;
            }
        }
    }
    for (j, b) in bins.iter_mut().enumerate() {
        let members = b.n_correct + b.n_incorrect;
        b.fraction = if members == 0 {
            0.0
        } else {
            b.n_correct as f64 / members as f64
        };
        b.mean_reported = if b.n_correct == 0 {
            0.0
        } else {
            sums[j] / b.n_correct as f64
        };
    }
    Ok(NaiveTable {
        bins,
        total_correct,
        total_incorrect,
        out_of_range_incorrect: out_of_range,
    })
}

pub fn truth(table: &NaiveTable, gamma: f64) -> (f64, f64, f64) {
    let fractions: Vec<f64> = table.bins.iter().map(|b| b.fraction).collect();
    let weights: Vec<f64> = table.bins.iter().map(|b| b.n_correct as f64).collect();
    triple(&floored(&fractions, gamma), &weights)
}

pub fn slope(
    reported: (f64, f64, f64),
    truth: (f64, f64, f64),
    value_epsilon: f64,
) -> (f64, Verdict) {
    let den = reported.2 - reported.0;
    let num = truth.2 - truth.0;
    if den.abs() <= value_epsilon {
        return (f64::NAN, Verdict::Undefined);
    }
    let s = num / den;
    let verdict = if s > 1.0 + value_epsilon {
        Verdict::Underconfident
    } else if s < 1.0 - value_epsilon {
        Verdict::Overconfident
    } else {
        Verdict::Calibrated
    };
    (s, verdict)
}

/// Compares a library report against this oracle field by field, bit for
/// bit. Returns the first discrepancy as text.
pub fn check_report_against_naive(
    report: &probeval::MetricReport,
    records: &[PredictionRecord],
    config: &EvalConfig,
) -> Result<(), String> {
    let fail = |what: &str, lib: f64, naive: f64| {
        Err(format!("{what}: library {lib:?} vs oracle {naive:?}"))
    };

    let naive_table = table(records, config).map_err(|e| format!("oracle errored: {e:?}"))?;
    if report.bin_table.n_bins() != naive_table.bins.len() {
        return Err(format!(
            "bin count: library {} vs oracle {}",
            report.bin_table.n_bins(),
            naive_table.bins.len()
        ));
    }
    for (j, (lib, naive)) in report
        .bin_table
        .bins
        .iter()
        .zip(&naive_table.bins)
        .enumerate()
    {
        if !bits_eq(lib.lo, naive.lo) {
            return fail(&format!("bin {j} lo"), lib.lo, naive.lo);
        }
        if !bits_eq(lib.hi, naive.hi) {
            return fail(&format!("bin {j} hi"), lib.hi, naive.hi);
        }
        if lib.is_singularity != naive.singular {
            return Err(format!("bin {j} singularity flag differs"));
        }
        if lib.n_correct != naive.n_correct || lib.n_incorrect != naive.n_incorrect {
            return Err(format!(
                "bin {j} counts: library {}/{} vs oracle {}/{}",
                lib.n_correct, lib.n_incorrect, naive.n_correct, naive.n_incorrect
            ));
        }
        if !bits_eq(lib.fraction, naive.fraction) {
            return fail(&format!("bin {j} fraction"), lib.fraction, naive.fraction);
        }
        if !bits_eq(lib.mean_reported, naive.mean_reported) {
            return fail(
                &format!("bin {j} mean_reported"),
                lib.mean_reported,
                naive.mean_reported,
            );
        }
    }
    if report.bin_table.total_correct != naive_table.total_correct
        || report.bin_table.total_incorrect != naive_table.total_incorrect
        || report.out_of_range_incorrect != naive_table.out_of_range_incorrect
    {
        return Err("conservation totals differ".into());
    }

    let correct: Vec<f64> = records.iter().map(|r| r.correct_class_prob()).collect();
    let scoped: Vec<f64> = records
        .iter()
        .filter(|r| !config.correct_decisions_only || r.is_correct())
        .map(|r| r.correct_class_prob())
        .collect();
    let naive_reported = reported(&scoped, config.gamma);
    let naive_truth = truth(&naive_table, config.gamma);
    let lib_r = &report.reported;
    let lib_t = &report.truth;
    for (what, lib, naive) in [
        ("reported robustness", lib_r.robustness, naive_reported.0),
        ("reported geometric", lib_r.geometric, naive_reported.1),
        (
            "reported decisiveness",
            lib_r.decisiveness,
            naive_reported.2,
        ),
        ("truth robustness", lib_t.robustness, naive_truth.0),
        ("truth geometric", lib_t.geometric, naive_truth.1),
        ("truth decisiveness", lib_t.decisiveness, naive_truth.2),
        (
            "cross entropy",
            report.cross_entropy,
            cross_entropy(&correct, config.gamma),
        ),
        ("accuracy", report.prediction_accuracy, accuracy(records)),
    ] {
        if !bits_eq(lib, naive) {
            return fail(what, lib, naive);
        }
    }

    let (naive_s, naive_v) = slope(naive_reported, naive_truth, config.value_epsilon);
    if !bits_eq(report.slope.slope, naive_s) {
        return fail("slope", report.slope.slope, naive_s);
    }
    if report.slope.verdict != naive_v {
        return Err(format!(
            "verdict: library {:?} vs oracle {naive_v:?}",
            report.slope.verdict
        ));
    }
    Ok(())
}

/// Random record sets mixing continuous probability vectors with exact
/// one-hot spikes, so singular values and zero probabilities show up often.
pub fn random_records<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<PredictionRecord> {
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let label = rng.gen_range(0..k);
        let probs = match rng.gen_range(0..4u8) {
            // Exact one-hot on the label: correct probability exactly 1.
            0 => {
                let mut p = vec![0.0; k];
                p[label] = 1.0;
                p
            }
            // Exact one-hot off the label: correct probability exactly 0.
            1 => {
                let mut p = vec![0.0; k];
                let mut spike = rng.gen_range(0..k);
                if spike == label {
                    spike = (spike + 1) % k;
                }
                p[spike] = 1.0;
                p
            }
            // A handful of repeating coarse values to build singularities.
            2 => {
                let top: f64 = [0.5, 0.75, 0.9][rng.gen_range(0..3usize)];
                let mut p = vec![(1.0 - top) / (k - 1) as f64; k];
                p[label] = top;
                p
            }
            // Continuous: normalized positive draws.
            _ => {
                let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                raw.iter().map(|v| v / sum).collect()
            }
        };
        records.push(PredictionRecord::new(probs, label, 1e-6).expect("valid by construction"));
    }
    records
}
