//! Region-level estimators of P² from N intensity records.
//!
//! All three share the spatial-average estimates of `a1` and `a4` and differ
//! only in how `|a2|²` is obtained. Every average uses 1/N normalization and
//! sums in index order.

use std::fmt;
use std::str::FromStr;

use crate::error::{DopError, Result};
use crate::speckle::IntensityRecord;
use crate::Complex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    /// `|a2|²` from the measured complex cross term.
    FourImage,
    /// Assumes `a2 = 0`.
    Osci,
    /// `|a2|²` from the empirical intensity covariance.
    CorrelatedPair,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] =
        [EstimatorKind::FourImage, EstimatorKind::Osci, EstimatorKind::CorrelatedPair];

    /// Short label used in figure column suffixes.
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::FourImage => "A",
            EstimatorKind::Osci => "OSCI",
            EstimatorKind::CorrelatedPair => "I",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::FourImage => "four_image",
            EstimatorKind::Osci => "osci",
            EstimatorKind::CorrelatedPair => "correlated_pair",
        }
    }

    pub fn needs_cross(self) -> bool {
        self == EstimatorKind::FourImage
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = DopError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "four_image" | "four-image" | "a" => Ok(EstimatorKind::FourImage),
            "osci" => Ok(EstimatorKind::Osci),
            "correlated_pair" | "correlated-pair" | "i" => Ok(EstimatorKind::CorrelatedPair),
            other => Err(DopError::InvalidArgument(format!(
                "unknown estimator {other:?}; expected four_image, osci or correlated_pair"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationResult {
    pub kind: EstimatorKind,
    pub a1_hat: f64,
    pub a4_hat: f64,
    /// Negative values are possible for [`EstimatorKind::CorrelatedPair`].
    pub a2_sq_hat: f64,
    /// Raw estimate; may fall outside [0, 1] at small N.
    pub p2_hat: f64,
    pub n: usize,
}

impl EstimationResult {
    /// `p2_hat` clamped to [0, 1], for display only.
    pub fn p2_display(&self) -> f64 {
        self.p2_hat.clamp(0.0, 1.0)
    }
}

/// Spatial averages `(â1, â4)`.
pub fn estimate_diagonal(records: &[IntensityRecord]) -> Result<(f64, f64)> {
    if records.is_empty() {
        return Err(DopError::TooFewSamples { needed: 1, got: 0 });
    }
    let n = records.len() as f64;
    let (s1, s4) = records.iter().fold((0.0, 0.0), |(s1, s4), r| (s1 + r.i1, s4 + r.i2));
    Ok((s1 / n, s4 / n))
}

/// `|(1/N) Σ A_X A_Y*|²`.
pub fn estimate_a2sq_four_image(records: &[IntensityRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(DopError::TooFewSamples { needed: 1, got: 0 });
    }
    let mut acc = Complex::new(0.0, 0.0);
    for (i, r) in records.iter().enumerate() {
        acc += r.cross.ok_or(DopError::MissingCross(i))?;
    }
    Ok((acc / records.len() as f64).norm_sqr())
}

/// `(1/N) Σ I1·I2 − ((1/N) Σ I1)·((1/N) Σ I2)`, returned unclamped.
pub fn estimate_a2sq_correlated_pair(records: &[IntensityRecord]) -> Result<f64> {
    if records.len() < 2 {
        return Err(DopError::TooFewSamples { needed: 2, got: records.len() });
    }
    let n = records.len() as f64;
    let (s1, s4, s14) = records
        .iter()
        .fold((0.0, 0.0, 0.0), |(s1, s4, s14), r| (s1 + r.i1, s4 + r.i2, s14 + r.i1 * r.i2));
    Ok(s14 / n - (s1 / n) * (s4 / n))
}

/// Plugs the per-kind estimates into `1 − 4(â1·â4 − |â2|²)/(â1 + â4)²`.
pub fn estimate_p2(records: &[IntensityRecord], kind: EstimatorKind) -> Result<EstimationResult> {
    let (a1_hat, a4_hat) = estimate_diagonal(records)?;
    let a2_sq_hat = match kind {
        EstimatorKind::FourImage => estimate_a2sq_four_image(records)?,
        EstimatorKind::Osci => 0.0,
        EstimatorKind::CorrelatedPair => estimate_a2sq_correlated_pair(records)?,
    };
    let p2_hat = p2_from_estimates(a1_hat, a4_hat, a2_sq_hat)?;
    Ok(EstimationResult { kind, a1_hat, a4_hat, a2_sq_hat, p2_hat, n: records.len() })
}

/// `1 − 4(a1·a4 − a2sq)/(a1 + a4)²` without any clamping.
pub fn p2_from_estimates(a1: f64, a4: f64, a2_sq: f64) -> Result<f64> {
    let total = a1 + a4;
    if total.is_nan() || total <= 0.0 {
        return Err(DopError::DarkRegion);
    }
    Ok(1.0 - 4.0 * (a1 * a4 - a2_sq) / (total * total))
}

/// Per-pixel orthogonal state contrast `(I1 − I2)/(I1 + I2)`; `None` on dark pixels.
pub fn osci_contrast(i1: f64, i2: f64) -> Option<f64> {
    let total = i1 + i2;
    (total > 0.0).then(|| (i1 - i2) / total)
}
