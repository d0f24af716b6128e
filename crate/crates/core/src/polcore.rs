//! Closed-form polarimetry of a 2×2 Jones coherency matrix.
//!
//! The matrix is stored as `[[a1, a2], [a2*, a4]]`; only `a2` is kept for the
//! off-diagonal pair, so Hermitian symmetry holds by construction.

use crate::error::{DopError, Result};
use crate::Complex;

/// Relative (to trace²) slack on the determinant below which a matrix is
/// still accepted as positive semidefinite and its determinant read as zero.
pub const PSD_TOLERANCE: f64 = 1e-12;
/// Relative (to trace²) determinant threshold under which inversion refuses.
pub const SINGULAR_TOLERANCE: f64 = 1e-14;
const CLAMP_EPS: f64 = 1e-12;

/// Second-order statistics of a circular Gaussian Jones vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherencyMatrix {
    a1: f64,
    a2: Complex,
    a4: f64,
}

impl CoherencyMatrix {
    /// Builds `[[a1, a2], [a2*, a4]]`, rejecting non-finite or indefinite input.
    pub fn new(a1: f64, a2: Complex, a4: f64) -> Result<Self> {
        if !(a1.is_finite() && a4.is_finite() && a2.re.is_finite() && a2.im.is_finite()) {
            return Err(DopError::NonFinite("coherency matrix"));
        }
        if a1 < 0.0 || a4 < 0.0 {
            return Err(DopError::NotPositiveSemidefinite(format!(
                "negative diagonal entry (a1 = {a1}, a4 = {a4})"
            )));
        }
        let tr = a1 + a4;
        let det = a1 * a4 - a2.norm_sqr();
        if det < -PSD_TOLERANCE * tr * tr || (tr == 0.0 && a2.norm_sqr() > 0.0) {
            return Err(DopError::NotPositiveSemidefinite(format!(
                "negative determinant {det}"
            )));
        }
        Ok(Self { a1, a2, a4 })
    }

    pub fn diagonal(a1: f64, a4: f64) -> Result<Self> {
        Self::new(a1, Complex::new(0.0, 0.0), a4)
    }

    /// Text form `(a1, a2.re, a2.im, a4)`.
    pub fn from_tuple(t: (f64, f64, f64, f64)) -> Result<Self> {
        Self::new(t.0, Complex::new(t.1, t.2), t.3)
    }

    pub fn to_tuple(&self) -> (f64, f64, f64, f64) {
        (self.a1, self.a2.re, self.a2.im, self.a4)
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> Complex {
        self.a2
    }

    pub fn a4(&self) -> f64 {
        self.a4
    }

    pub fn trace(&self) -> f64 {
        self.a1 + self.a4
    }

    /// Determinant, with boundary round-off (within the PSD tolerance) read as 0.
    pub fn determinant(&self) -> f64 {
        (self.a1 * self.a4 - self.a2.norm_sqr()).max(0.0)
    }

    /// Returns `k·Γ`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(DopError::InvalidArgument(format!("scale factor {k} must be > 0")));
        }
        Self::new(k * self.a1, self.a2 * k, k * self.a4)
    }

    /// Squared degree of polarization, `1 − 4·det Γ / (tr Γ)²`.
    pub fn degree_of_polarization_squared(&self) -> Result<f64> {
        let tr = self.trace();
        if tr <= 0.0 {
            return Err(DopError::DegenerateMatrix);
        }
        let p2 = 1.0 - 4.0 * self.determinant() / (tr * tr);
        Ok(clamp_unit(p2))
    }

    /// Eigenvalues `(mu1, mu2)` with `mu1 ≥ mu2 ≥ 0`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        // half-difference form avoids cancellation in tr² − 4·det
        let mean = 0.5 * (self.a1 + self.a4);
        let half_diff = 0.5 * (self.a1 - self.a4);
        let radius = half_diff.hypot(self.a2.norm());
        let mu1 = mean + radius;
        if mu1 <= 0.0 {
            return (0.0, 0.0);
        }
        // product form for the small root: no cancellation
        (mu1, self.determinant() / mu1)
    }

    /// Inverse in the `(c1, c2, c4)` parameterization.
    pub fn invert(&self) -> Result<InverseCoefficients> {
        let tr = self.trace();
        let det = self.a1 * self.a4 - self.a2.norm_sqr();
        if tr <= 0.0 || det <= SINGULAR_TOLERANCE * tr * tr {
            return Err(DopError::SingularMatrix);
        }
        Ok(InverseCoefficients {
            c1: self.a4 / det,
            c2: -self.a2 / det,
            c4: self.a1 / det,
        })
    }

    /// `⟨I1 I2⟩` and its centered version for fully developed speckle.
    ///
    /// `⟨I1 I2⟩` is evaluated from the inverse-matrix closed form and checked
    /// against the Gaussian moment identity `a1·a4 + |a2|²`.
    pub fn theoretical_intensity_correlation(&self) -> Result<IntensityCorrelation> {
        let inv = self.invert()?;
        let from_inverse = inv.intensity_cross_moment(self.a1 * self.a4 - self.a2.norm_sqr());
        let from_moments = self.a1 * self.a4 + self.a2.norm_sqr();
        let scale = from_moments.abs().max(f64::MIN_POSITIVE);
        if (from_inverse - from_moments).abs() > 1e-10 * scale {
            return Err(DopError::Inconsistent(format!(
                "<I1 I2>: inverse form {from_inverse} vs moment form {from_moments}"
            )));
        }
        Ok(IntensityCorrelation {
            delta12: from_inverse,
            centered: from_inverse - self.a1 * self.a4,
        })
    }
}

/// Coefficients of `Γ⁻¹ = [[c1, c2], [c2*, c4]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseCoefficients {
    pub c1: f64,
    pub c2: Complex,
    pub c4: f64,
}

impl InverseCoefficients {
    /// Maps back to Γ.
    pub fn invert(&self) -> Result<CoherencyMatrix> {
        let det = self.c1 * self.c4 - self.c2.norm_sqr();
        if !(self.c1 > 0.0 && self.c4 > 0.0 && det > 0.0) {
            return Err(DopError::SingularMatrix);
        }
        CoherencyMatrix::new(self.c4 / det, -self.c2 / det, self.c1 / det)
    }

    /// `⟨I1 I2⟩` written in the inverse coefficients; `det_gamma` is det Γ.
    pub fn intensity_cross_moment(&self, det_gamma: f64) -> f64 {
        let c14 = self.c1 * self.c4;
        let r = self.c2.norm_sqr() / c14;
        let one_minus = 1.0 - r;
        (1.0 + r) / (one_minus * one_minus * one_minus) / (det_gamma * c14 * c14)
    }
}

/// Uncentered (`delta12`) and centered (`centered`) intensity cross moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityCorrelation {
    pub delta12: f64,
    pub centered: f64,
}

/// Adds the correlation correction to a squared orthogonal-state contrast.
pub fn osci_correction(eta_squared: f64, centered: f64, mean_i1: f64, mean_i2: f64) -> Result<f64> {
    let total = mean_i1 + mean_i2;
    if total.is_nan() || total <= 0.0 {
        return Err(DopError::ZeroIntensity);
    }
    Ok(eta_squared + 4.0 * centered / (total * total))
}

fn clamp_unit(x: f64) -> f64 {
    if x < 0.0 && x > -CLAMP_EPS {
        0.0
    } else if x > 1.0 && x < 1.0 + CLAMP_EPS {
        1.0
    } else {
        x
    }
}

/// The six test matrices `G1`..`G6` of the reference benchmark.
pub fn paper_matrices() -> Vec<(String, CoherencyMatrix)> {
    const RAW: [(f64, f64, f64, f64); 6] = [
        (15.0, 0.2, 0.5, 6.0),
        (16.0, 0.0, 0.0, 3.6),
        (82.0, 0.0, 13.0, 17.0),
        (18.0, 7.0, 8.0, 11.0),
        (30.0, 16.0, -8.0, 14.0),
        (1.25, 0.0, 5.5, 26.0),
    ];
    RAW.iter()
        .enumerate()
        .map(|(i, &t)| {
            let m = CoherencyMatrix::from_tuple(t).expect("reference matrices are PSD");
            (format!("G{}", i + 1), m)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn gamma(i: usize) -> CoherencyMatrix {
        paper_matrices()[i - 1].1
    }

    /// Independent route: Jacobi rotation on the 4×4 real embedding of Γ.
    fn embedded_eigen(m: &CoherencyMatrix) -> (f64, f64) {
        let (a1, re, im, a4) = m.to_tuple();
        let mut a = [
            [a1, re, 0.0, -im],
            [re, a4, im, 0.0],
            [0.0, im, a1, re],
            [-im, 0.0, re, a4],
        ];
        for _ in 0..100 {
            for p in 0..4 {
                for q in (p + 1)..4 {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let cs = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * cs;
                    for k in 0..4 {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = cs * akp - sn * akq;
                        a[k][q] = sn * akp + cs * akq;
                    }
                    for k in 0..4 {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = cs * apk - sn * aqk;
                        a[q][k] = sn * apk + cs * aqk;
                    }
                }
            }
        }
        let mut d: Vec<f64> = (0..4).map(|i| a[i][i]).collect();
        d.sort_by(|x, y| y.partial_cmp(x).unwrap());
        // each eigenvalue appears twice in the real embedding
        (d[0], d[3])
    }

    #[test]
    fn p2_trivial_cases() {
        let id = CoherencyMatrix::diagonal(1.0, 1.0).unwrap();
        assert_eq!(id.degree_of_polarization_squared().unwrap(), 0.0);
        let pol = CoherencyMatrix::diagonal(1.0, 0.0).unwrap();
        assert_eq!(pol.degree_of_polarization_squared().unwrap(), 1.0);
    }

    #[test]
    fn p2_matches_eigenvalue_ratio_on_reference_matrices() {
        let expected = [0.186_303_854_875_283_6, 0.400_249_895_876_718_1, 0.500_051_015_202_530_4,
            0.595_719_381_688_466_2, 0.793_388_429_752_066_2, 0.987_879_808_096_961_5];
        for (i, want) in expected.iter().enumerate() {
            let g = gamma(i + 1);
            let got = g.degree_of_polarization_squared().unwrap();
            let (m1, m2) = embedded_eigen(&g);
            let ratio = ((m1 - m2) / (m1 + m2)).powi(2);
            assert!((got - want).abs() < 1e-12, "G{}: {got}", i + 1);
            assert!((got - ratio).abs() < 1e-10, "G{}: {got} vs {ratio}", i + 1);
        }
    }

    #[test]
    fn zero_trace_is_degenerate() {
        let z = CoherencyMatrix::diagonal(0.0, 0.0).unwrap();
        assert_eq!(z.degree_of_polarization_squared(), Err(DopError::DegenerateMatrix));
    }

    #[test]
    fn rejects_indefinite_and_non_finite() {
        assert!(matches!(
            CoherencyMatrix::diagonal(-1.0, 2.0),
            Err(DopError::NotPositiveSemidefinite(_))
        ));
        assert!(matches!(
            CoherencyMatrix::new(1.0, c(2.0, 0.0), 1.0),
            Err(DopError::NotPositiveSemidefinite(_))
        ));
        assert!(matches!(
            CoherencyMatrix::new(f64::NAN, c(0.0, 0.0), 1.0),
            Err(DopError::NonFinite(_))
        ));
        // rank-1 boundary with round-off is accepted, det reads as 0
        let g = CoherencyMatrix::new(1.0, c(1.0 + 1e-14, 0.0), 1.0).unwrap();
        assert_eq!(g.determinant(), 0.0);
        assert_eq!(g.degree_of_polarization_squared().unwrap(), 1.0);
    }

    #[test]
    fn eigenvalue_examples() {
        let id = CoherencyMatrix::diagonal(1.0, 1.0).unwrap();
        assert_eq!(id.eigenvalues(), (1.0, 1.0));
        assert_eq!(gamma(2).eigenvalues(), (16.0, 3.6));
        let (m1, m2) = gamma(3).eigenvalues();
        let disc = (99.0f64 * 99.0 - 4.0 * 1225.0).sqrt();
        assert!((m1 - (99.0 + disc) / 2.0).abs() < 1e-12);
        assert!((m2 - (99.0 - disc) / 2.0).abs() < 1e-12);
        assert!((m1 + m2 - 99.0).abs() < 1e-12);
        assert!((m1 * m2 - 1225.0).abs() < 1e-9);
        assert!((m1 - 84.503_571_246_374_28).abs() < 1e-12);
        assert!((m2 - 14.496_428_753_625_72).abs() < 1e-12);
    }

    #[test]
    fn invert_examples() {
        let inv = CoherencyMatrix::diagonal(2.0, 4.0).unwrap().invert().unwrap();
        assert_eq!((inv.c1, inv.c2, inv.c4), (0.5, c(-0.0, -0.0), 0.25));
        let inv = gamma(1).invert().unwrap();
        let det = 89.71;
        assert!((inv.c1 - 6.0 / det).abs() < 1e-15);
        assert!((inv.c4 - 15.0 / det).abs() < 1e-15);
        assert!((inv.c2 - c(-0.2, -0.5) / det).norm() < 1e-15);
        let back = gamma(4).invert().unwrap().invert().unwrap();
        let g4 = gamma(4);
        assert!((back.a1() - g4.a1()).abs() < 1e-12 * g4.a1());
        assert!((back.a4() - g4.a4()).abs() < 1e-12 * g4.a4());
        assert!((back.a2() - g4.a2()).norm() < 1e-12 * g4.a2().norm());
    }

    #[test]
    fn invert_rejects_singular() {
        let pol = CoherencyMatrix::diagonal(1.0, 0.0).unwrap();
        assert_eq!(pol.invert(), Err(DopError::SingularMatrix));
        assert_eq!(
            pol.theoretical_intensity_correlation(),
            Err(DopError::SingularMatrix)
        );
    }

    #[test]
    fn intensity_correlation_examples() {
        let corr = gamma(2).theoretical_intensity_correlation().unwrap();
        assert!(corr.centered.abs() < 1e-12 * 57.6);
        let corr = gamma(5).theoretical_intensity_correlation().unwrap();
        assert!((corr.centered - 320.0).abs() < 1e-9);
        let corr = gamma(1).theoretical_intensity_correlation().unwrap();
        assert!((corr.delta12 - 90.29).abs() < 1e-10 * 90.29);
    }

    #[test]
    fn osci_correction_examples() {
        assert_eq!(osci_correction(0.4, 0.0, 16.0, 3.6).unwrap(), 0.4);
        let eta = ((30.0f64 - 14.0) / 44.0).powi(2);
        let got = osci_correction(eta, 320.0, 30.0, 14.0).unwrap();
        let truth = gamma(5).degree_of_polarization_squared().unwrap();
        assert!((got - truth).abs() < 1e-12);
        let eta = (9.0f64 / 21.0).powi(2);
        let got = osci_correction(eta, 0.29, 15.0, 6.0).unwrap();
        let truth = gamma(1).degree_of_polarization_squared().unwrap();
        assert!((got - truth).abs() < 1e-12);
        assert_eq!(osci_correction(0.1, 0.0, 0.0, 0.0), Err(DopError::ZeroIntensity));
    }
}
