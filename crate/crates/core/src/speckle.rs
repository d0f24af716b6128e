//! Fully developed speckle: circular Gaussian Jones vectors with a prescribed
//! coherency matrix, and the intensity records a polarimeter would measure.

use std::fmt::Write as _;

use crate::error::{DopError, Result};
use crate::polcore::CoherencyMatrix;
use crate::rng::{NormalStream, SamplerConfig};
use crate::Complex;

/// Lower-triangular factor `L` with `Γ = L·L†`.
///
/// `l11` and `l22` are real and nonnegative; `l21` carries the phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CholeskyFactor {
    pub l11: f64,
    pub l21: Complex,
    pub l22: f64,
}

impl CholeskyFactor {
    /// Reassembles `L·L†` as a coherency matrix.
    pub fn product(&self) -> Result<CoherencyMatrix> {
        CoherencyMatrix::new(
            self.l11 * self.l11,
            self.l21.conj() * self.l11,
            self.l21.norm_sqr() + self.l22 * self.l22,
        )
    }

    /// `L·z` for a pair of unit circular normals.
    #[inline]
    pub fn color(&self, z1: Complex, z2: Complex) -> (Complex, Complex) {
        (z1 * self.l11, self.l21 * z1 + z2 * self.l22)
    }
}

/// Cholesky factor of a PSD coherency matrix. Rank-deficient input yields
/// `l22 = 0`; a zero `a1` puts all of `a4` in `l22`.
pub fn cholesky_factor(gamma: &CoherencyMatrix) -> Result<CholeskyFactor> {
    let a1 = gamma.a1();
    let a4 = gamma.a4();
    if a1 == 0.0 {
        return Ok(CholeskyFactor { l11: 0.0, l21: Complex::new(0.0, 0.0), l22: a4.sqrt() });
    }
    let l11 = a1.sqrt();
    let l21 = gamma.a2().conj() / l11;
    let rem = a4 - l21.norm_sqr();
    if rem < -1e-12 * gamma.trace() {
        return Err(DopError::NotPositiveSemidefinite(format!(
            "negative Schur complement {rem}"
        )));
    }
    Ok(CholeskyFactor { l11, l21, l22: rem.max(0.0).sqrt() })
}

/// Draws Jones vectors for one coherency matrix on one stream.
#[derive(Debug, Clone)]
pub struct JonesSampler {
    factor: CholeskyFactor,
    normals: NormalStream,
}

impl JonesSampler {
    pub fn new(gamma: &CoherencyMatrix, cfg: SamplerConfig) -> Result<Self> {
        Ok(Self { factor: cholesky_factor(gamma)?, normals: NormalStream::new(cfg) })
    }

    pub fn with_factor(factor: CholeskyFactor, cfg: SamplerConfig) -> Self {
        Self { factor, normals: NormalStream::new(cfg) }
    }

    #[inline]
    pub fn next_jones(&mut self) -> JonesVector {
        let z1 = self.normals.circular_normal();
        let z2 = self.normals.circular_normal();
        let (ax, ay) = self.factor.color(z1, z2);
        JonesVector { ax, ay }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    pub ax: Complex,
    pub ay: Complex,
}

impl JonesVector {
    pub fn to_record(&self, keep_cross: bool) -> IntensityRecord {
        IntensityRecord {
            i1: self.ax.norm_sqr(),
            i2: self.ay.norm_sqr(),
            cross: keep_cross.then(|| self.ax * self.ay.conj()),
        }
    }
}

/// An ordered, non-empty set of Jones vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct JonesEnsemble {
    samples: Vec<JonesVector>,
}

impl JonesEnsemble {
    pub fn new(samples: Vec<JonesVector>) -> Result<Self> {
        if samples.is_empty() {
            return Err(DopError::TooFewSamples { needed: 1, got: 0 });
        }
        let finite = |c: Complex| c.re.is_finite() && c.im.is_finite();
        if !samples.iter().all(|s| finite(s.ax) && finite(s.ay)) {
            return Err(DopError::NonFinite("Jones ensemble"));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[JonesVector] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Element-wise intensities; `keep_cross` simulates a four-image acquisition.
    pub fn to_intensity_records(&self, keep_cross: bool) -> Vec<IntensityRecord> {
        self.samples.iter().map(|s| s.to_record(keep_cross)).collect()
    }

    /// Text dump: `N <n>` then `AX.re AX.im AY.re AY.im` per line.
    pub fn to_dump(&self) -> String {
        let mut out = format!("N {}\n", self.samples.len());
        for s in &self.samples {
            let _ = writeln!(out, "{} {} {} {}", s.ax.re, s.ax.im, s.ay.re, s.ay.im);
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<Self> {
        let bad = |msg: String| DopError::InvalidArgument(format!("ensemble dump: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty input".into()))?;
        let n: usize = header
            .strip_prefix("N ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad(format!("bad header {header:?}")))?;
        let mut samples = Vec::with_capacity(n);
        for (i, line) in lines.enumerate() {
            let v: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("line {}: {e}", i + 2)))?;
            if v.len() != 4 {
                return Err(bad(format!("line {}: expected 4 fields, got {}", i + 2, v.len())));
            }
            samples.push(JonesVector {
                ax: Complex::new(v[0], v[1]),
                ay: Complex::new(v[2], v[3]),
            });
        }
        if samples.len() != n {
            return Err(bad(format!("header says {n} samples, found {}", samples.len())));
        }
        Self::new(samples)
    }
}

/// Intensities measured for one sample; `cross = A_X·A_Y*` only for four-image data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityRecord {
    pub i1: f64,
    pub i2: f64,
    pub cross: Option<Complex>,
}

impl IntensityRecord {
    pub fn two_image(i1: f64, i2: f64) -> Self {
        Self { i1, i2, cross: None }
    }

    pub fn four_image(i1: f64, i2: f64, cross: Complex) -> Self {
        Self { i1, i2, cross: Some(cross) }
    }

    pub fn without_cross(self) -> Self {
        Self { cross: None, ..self }
    }
}

/// `n` independent Jones vectors drawn from the circular Gaussian law with covariance Γ.
pub fn sample_jones(gamma: &CoherencyMatrix, n: usize, cfg: SamplerConfig) -> Result<JonesEnsemble> {
    if n == 0 {
        return Err(DopError::TooFewSamples { needed: 1, got: 0 });
    }
    let mut sampler = JonesSampler::new(gamma, cfg)?;
    JonesEnsemble::new((0..n).map(|_| sampler.next_jones()).collect())
}

/// Samples straight to intensity records without keeping the ensemble.
pub fn sample_records(
    gamma: &CoherencyMatrix,
    n: usize,
    cfg: SamplerConfig,
    keep_cross: bool,
) -> Result<Vec<IntensityRecord>> {
    if n == 0 {
        return Err(DopError::TooFewSamples { needed: 1, got: 0 });
    }
    let mut sampler = JonesSampler::new(gamma, cfg)?;
    Ok((0..n).map(|_| sampler.next_jones().to_record(keep_cross)).collect())
}
