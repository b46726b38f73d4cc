//! Seeded generators for synthetic prediction sets with known calibration.
//!
//! Every generator is a pure function of its [`SynthSpec`]: the RNG is
//! ChaCha8 seeded from its 64-bit seed, draws happen in a fixed order, and
//! records are produced sequentially, so identical `SynthSpec` values
//! yield byte-identical files on every platform.
//!
//! Three kinds are available:
//!
//! - `calibrated`: the reported top probability really is the chance the
//!   argmax class is the label, so the measured pipeline should see a slope
//!   near 1;
//! - `temperature(t)`: calibrated labels, but reported vectors sharpened
//!   (t < 1, overconfident) or softened (t > 1, underconfident) before
//!   emission;
//! - `one_hot(a)`: every record reports certainty 1.0 and is right with
//!   probability `a`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::record::PredictionRecord;

/// Generator family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthKind {
    /// Reported top probability equals the true correctness probability.
    Calibrated,
    /// Calibrated draws, reported vector raised to `1/t` and renormalized.
    Temperature(f64),
    /// Certainty 1.0 on one class; correct with the given probability.
    OneHot(f64),
}

impl std::fmt::Display for SynthKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SynthKind::Calibrated => write!(f, "calibrated"),
            SynthKind::Temperature(t) => write!(f, "temperature:{t}"),
            SynthKind::OneHot(a) => write!(f, "one-hot:{a}"),
        }
    }
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    /// Parses `calibrated`, `temperature:<t>`, or `one-hot:<a>`.
    fn from_str(s: &str) -> Result<SynthKind> {
        if s == "calibrated" {
            return Ok(SynthKind::Calibrated);
        }
        if let Some(t) = s.strip_prefix("temperature:") {
            let t: f64 = t
                .parse()
                .map_err(|_| Error::InvalidSynthSpec(format!("bad temperature in {s:?}")))?;
            return Ok(SynthKind::Temperature(t));
        }
        if let Some(a) = s.strip_prefix("one-hot:") {
            let a: f64 = a
                .parse()
                .map_err(|_| Error::InvalidSynthSpec(format!("bad accuracy in {s:?}")))?;
            return Ok(SynthKind::OneHot(a));
        }
        Err(Error::InvalidSynthSpec(format!(
            "unknown kind {s:?}: expected calibrated, temperature:<t>, or one-hot:<a>"
        )))
    }
}

/// Full description of a synthetic prediction set.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_records: usize,
    /// At least 2.
    pub n_classes: usize,
    pub seed: u64,
    pub kind: SynthKind,
    /// Beta(alpha, beta) shape for the top probability, stretched onto
    /// [1/K, 1]. (2, 2) gives a broad hump over the middle confidences.
    pub confidence_shape: (f64, f64),
}

impl SynthSpec {
    pub fn new(n_records: usize, n_classes: usize, seed: u64, kind: SynthKind) -> SynthSpec {
        SynthSpec {
            n_records,
            n_classes,
            seed,
            kind,
            confidence_shape: (2.0, 2.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::InvalidSynthSpec(format!(
                "n_classes is {}, need at least 2",
                self.n_classes
            )));
        }
        let (alpha, beta) = self.confidence_shape;
        if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidSynthSpec(format!(
                "confidence shape ({alpha}, {beta}) must be positive"
            )));
        }
        match self.kind {
            SynthKind::Temperature(t) if !(t.is_finite() && t > 0.0) => Err(
                Error::InvalidSynthSpec(format!("temperature {t} must be positive")),
            ),
            SynthKind::OneHot(a) if !(0.0..=1.0).contains(&a) => Err(Error::InvalidSynthSpec(
                format!("one-hot accuracy {a} must lie in [0, 1]"),
            )),
            _ => Ok(()),
        }
    }
}

/// Streaming record generator; see [`generator`].
pub struct Generator {
    rng: ChaCha8Rng,
    beta: Beta<f64>,
    kind: SynthKind,
    n_classes: usize,
    remaining: usize,
}

impl Generator {
    /// Draws a label given the top class and its probability: the top class
    /// with probability exactly `p`, otherwise a uniformly random other.
    fn draw_label(&mut self, top: usize, p: f64) -> usize {
        if self.rng.gen::<f64>() < p {
            return top;
        }
        let other = self.rng.gen_range(0..self.n_classes - 1);
        other + usize::from(other >= top)
    }
}

impl Iterator for Generator {
    type Item = PredictionRecord;

    fn next(&mut self) -> Option<PredictionRecord> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let k = self.n_classes;
        // Fixed draw order per record: top class, top probability (skipped
        // by one_hot), label coin, off-class pick (only when the coin says
        // wrong). Changing this order would change every seeded fixture.
        let record = match self.kind {
            SynthKind::OneHot(a) => {
                let top = self.rng.gen_range(0..k);
                let label = self.draw_label(top, a);
                let mut probs = vec![0.0; k];
                probs[top] = 1.0;
                (probs, label)
            }
            SynthKind::Calibrated | SynthKind::Temperature(_) => {
                let top = self.rng.gen_range(0..k);
                let x = self.beta.sample(&mut self.rng);
                let p = 1.0 / k as f64 + (1.0 - 1.0 / k as f64) * x;
                let label = self.draw_label(top, p);
                let mut probs = vec![(1.0 - p) / (k - 1) as f64; k];
                probs[top] = p;
                if let SynthKind::Temperature(t) = self.kind {
                    // t == 1 must reproduce calibrated output byte for byte,
                    // so the no-op transform is skipped outright.
                    if t != 1.0 {
                        sharpen(&mut probs, top, t);
                    }
                }
                (probs, label)
            }
        };
        let (probs, label) = record;
        Some(
            PredictionRecord::new(probs, label, 1e-6)
                .expect("synthetic records are valid by construction"),
        )
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

/// Raises each component to `1/t` and renormalizes. In the hard-sharpening
/// limit every component underflows, so the result falls back to certainty
/// on the argmax, which is the correct limit of the transform.
fn sharpen(probs: &mut [f64], top: usize, t: f64) {
    let inv_t = 1.0 / t;
    for p in probs.iter_mut() {
        *p = p.powf(inv_t);
    }
    let sum: f64 = probs.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        for p in probs.iter_mut() {
            *p /= sum;
        }
    } else {
        for p in probs.iter_mut() {
            *p = 0.0;
        }
        probs[top] = 1.0;
    }
}

/// Streaming generator over a [`SynthSpec`]. Fails on an invalid one; the
/// iterator itself is infallible.
pub fn generator(spec: &SynthSpec) -> Result<Generator> {
    spec.validate()?;
    let (alpha, beta) = spec.confidence_shape;
    let beta = Beta::new(alpha, beta)
        .map_err(|e| Error::InvalidSynthSpec(format!("confidence shape: {e}")))?;
    Ok(Generator {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        beta,
        kind: spec.kind,
        n_classes: spec.n_classes,
        remaining: spec.n_records,
    })
}

/// Materializes the whole synthetic set.
pub fn generate(spec: &SynthSpec) -> Result<Vec<PredictionRecord>> {
    Ok(generator(spec)?.collect())
}
