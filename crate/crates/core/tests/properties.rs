use dop_core::estimators::{estimate_a2sq_four_image, estimate_p2, EstimatorKind};
use dop_core::polcore::{osci_correction, CoherencyMatrix};
use dop_core::speckle::IntensityRecord;
use dop_core::Complex;
use proptest::prelude::*;

/// PSD matrices with |correlation| ≤ `max_r`.
fn psd(max_r: f64) -> impl Strategy<Value = CoherencyMatrix> {
    (1e-2f64..1e3, 1e-2f64..1e3, 0.0..=max_r, 0.0..std::f64::consts::TAU).prop_map(
        |(a1, a4, r, phi)| {
            let a2 = Complex::from_polar(r * (a1 * a4).sqrt(), phi);
            CoherencyMatrix::new(a1, a2, a4).unwrap()
        },
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn p2_in_unit_interval(g in psd(1.0)) {
        let p2 = g.degree_of_polarization_squared().unwrap();
        prop_assert!((0.0..=1.0).contains(&p2));
    }

    #[test]
    fn p2_matches_eigenvalue_ratio(g in psd(0.999)) {
        let p2 = g.degree_of_polarization_squared().unwrap();
        let (m1, m2) = g.eigenvalues();
        prop_assert!(m1 >= m2 && m2 >= 0.0);
        let ratio = ((m1 - m2) / (m1 + m2)).powi(2);
        prop_assert!(rel(ratio, p2) < 1e-10 || (ratio - p2).abs() < 1e-14, "{} vs {}", ratio, p2);
    }

    #[test]
    fn p2_scale_invariant(g in psd(1.0), k in 1e-3f64..1e3) {
        let p = g.degree_of_polarization_squared().unwrap();
        let q = g.scaled(k).unwrap().degree_of_polarization_squared().unwrap();
        prop_assert!((p - q).abs() <= 1e-12 * p.max(1e-300) || (p - q).abs() < 1e-15);
    }

    #[test]
    fn moment_identity(g in psd(0.99)) {
        let inv = g.invert().unwrap();
        let c_form = inv.intensity_cross_moment(g.determinant());
        let moment = g.a1() * g.a4() + g.a2().norm_sqr();
        prop_assert!(rel(c_form, moment) < 1e-10);
        let corr = g.theoretical_intensity_correlation().unwrap();
        prop_assert!((corr.centered - g.a2().norm_sqr()).abs() <= 1e-9 * moment);
    }

    #[test]
    fn inverse_is_an_involution(g in psd(0.99)) {
        let back = g.invert().unwrap().invert().unwrap();
        prop_assert!(rel(back.a1(), g.a1()) < 1e-12);
        prop_assert!(rel(back.a4(), g.a4()) < 1e-12);
        prop_assert!((back.a2() - g.a2()).norm() <= 1e-12 * (g.a1() * g.a4()).sqrt());
    }

    #[test]
    fn correction_reproduces_closed_form(g in psd(1.0)) {
        let (a1, a4) = (g.a1(), g.a4());
        let eta2 = ((a1 - a4) / (a1 + a4)).powi(2);
        let corrected = osci_correction(eta2, g.a2().norm_sqr(), a1, a4).unwrap();
        let p2 = g.degree_of_polarization_squared().unwrap();
        prop_assert!((corrected - p2).abs() < 1e-12);
    }

    #[test]
    fn diagonal_osci_is_exact(a1 in 0.0f64..1e3, a4 in 1e-3f64..1e3) {
        let g = CoherencyMatrix::diagonal(a1, a4).unwrap();
        let eta2 = ((a1 - a4) / (a1 + a4)).powi(2);
        prop_assert!((eta2 - g.degree_of_polarization_squared().unwrap()).abs() < 1e-12);
    }
}

fn records() -> impl Strategy<Value = Vec<IntensityRecord>> {
    prop::collection::vec(
        (0.0f64..50.0, 0.0f64..50.0, -10.0f64..10.0, -10.0f64..10.0)
            .prop_map(|(a, b, re, im)| IntensityRecord::four_image(a, b, Complex::new(re, im))),
        2..64,
    )
    .prop_filter("lit region", |r| r.iter().any(|x| x.i1 + x.i2 > 1e-3))
}

proptest! {
    #[test]
    fn correction_term_links_osci_and_correlated_pair(recs in records()) {
        let osci = estimate_p2(&recs, EstimatorKind::Osci).unwrap();
        let pair = estimate_p2(&recs, EstimatorKind::CorrelatedPair).unwrap();
        let s = pair.a1_hat + pair.a4_hat;
        let term = 4.0 * pair.a2_sq_hat / (s * s);
        prop_assert!((pair.p2_hat - osci.p2_hat - term).abs() < 1e-12 * (1.0 + term.abs()));
    }

    #[test]
    fn estimates_are_scale_equivariant(recs in records(), k in 1e-2f64..1e2) {
        let scaled: Vec<_> = recs
            .iter()
            .map(|r| IntensityRecord::four_image(k * r.i1, k * r.i2, r.cross.unwrap() * k))
            .collect();
        for kind in EstimatorKind::ALL {
            let a = estimate_p2(&recs, kind).unwrap().p2_hat;
            let b = estimate_p2(&scaled, kind).unwrap().p2_hat;
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{kind}: {a} vs {b}");
        }
    }

    #[test]
    fn four_image_a2sq_is_nonnegative(recs in records()) {
        prop_assert!(estimate_a2sq_four_image(&recs).unwrap() >= 0.0);
    }

    #[test]
    fn result_satisfies_closed_form(recs in records()) {
        for kind in EstimatorKind::ALL {
            let r = estimate_p2(&recs, kind).unwrap();
            let s = r.a1_hat + r.a4_hat;
            prop_assert_eq!(r.p2_hat, 1.0 - 4.0 * (r.a1_hat * r.a4_hat - r.a2_sq_hat) / (s * s));
            prop_assert!(r.a1_hat >= 0.0 && r.a4_hat >= 0.0);
            prop_assert_eq!(r.n, recs.len());
        }
    }

    #[test]
    fn osci_equals_pair_without_empirical_covariance(
        i1 in 0.1f64..10.0, n in 2usize..20, i2s in prop::collection::vec(0.0f64..10.0, 20)
    ) {
        // I1 constant → empirical covariance is zero regardless of I2
        let recs: Vec<_> = i2s[..n].iter().map(|&b| IntensityRecord::two_image(i1, b)).collect();
        let osci = estimate_p2(&recs, EstimatorKind::Osci).unwrap();
        let pair = estimate_p2(&recs, EstimatorKind::CorrelatedPair).unwrap();
        prop_assert!((osci.p2_hat - pair.p2_hat).abs() < 1e-12);
    }
}
