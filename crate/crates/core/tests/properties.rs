use proptest::prelude::*;

use phasepredict::fractional::{psi_nn, rho, tau_all, u_n, u_n_product, FracOrder};
use phasepredict::linalg::{hermitian_inv_sqrt, hermitian_sqrt, max_abs_diff, CMat, C64};
use phasepredict::model::{FarimaModel, ModelOptions};
use phasepredict::rational::{convolve, invert_series, CoeffSeq, RationalEntry, RationalMatrix};
use phasepredict::report::{boundedness_verdict, fmt_complex, parse_complex};

fn order() -> impl Strategy<Value = FracOrder> {
    prop_oneof![-0.49f64..-0.01, 0.01f64..0.49].prop_map(|d| FracOrder::new(d).unwrap())
}

fn cmat(q: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), q * q)
        .prop_map(move |v| CMat::from_iterator(q, q, v.into_iter().map(|(re, im)| C64::new(re, im))))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn closed_form_variance_equals_durbin_levinson_product(d in order(), n in 0usize..300) {
        let a = u_n(d, n);
        let b = u_n_product(d, n);
        prop_assert!(((a - b) / a).abs() < 1e-12);
    }

    #[test]
    fn variance_decreases_to_one(d in order(), n in 0usize..300) {
        prop_assert!(u_n(d, n) > 1.0);
        prop_assert!(u_n(d, n + 1) < u_n(d, n));
        prop_assert!(psi_nn(d, n + 1).abs() < 1.0);
    }

    #[test]
    fn scalar_phase_decays_in_magnitude(d in order(), n in 1i64..10_000) {
        prop_assert!(rho(d, n + 1).abs() < rho(d, n).abs());
        prop_assert!(rho(d, -n - 1).abs() < rho(d, -n).abs());
    }

    #[test]
    fn tau_series_sums_to_arcsine(x in 0.0f64..0.8) {
        let tau = tau_all(400);
        let series: f64 = tau.iter().enumerate().map(|(k, t)| t * x.powi(k as i32)).sum();
        let a = x.asin() / std::f64::consts::PI;
        prop_assert!((series - (a + a * a)).abs() < 1e-12);
    }

    #[test]
    fn hermitian_square_roots(b in cmat(3), shift in 0.05f64..2.0) {
        let a = &b * b.adjoint() + CMat::identity(3, 3) * C64::new(shift, 0.0);
        let s = hermitian_sqrt(&a).unwrap();
        prop_assert!(max_abs_diff(&(&s * &s), &a) < 1e-10);
        let r = hermitian_inv_sqrt(&a).unwrap();
        prop_assert!(max_abs_diff(&(&r * &a * &r), &CMat::identity(3, 3)) < 1e-9);
    }

    #[test]
    fn series_inverse_identity(c in prop::collection::vec(cmat(2), 1..6), scale in 0.05f64..0.3) {
        let mut coeffs: Vec<CMat> = c.into_iter().map(|m| m * C64::new(scale, 0.0)).collect();
        coeffs[0] += CMat::identity(2, 2);
        let s = CoeffSeq::power(2, coeffs);
        let (inv, _) = invert_series(&s, 40).unwrap();
        let prod = convolve(&s, &inv, 40);
        for (k, m) in prod.coeffs.iter().enumerate() {
            let target = if k == 0 { CMat::identity(2, 2) } else { CMat::zeros(2, 2) };
            prop_assert!(max_abs_diff(m, &target) < 1e-9, "k={k}");
        }
    }

    #[test]
    fn complex_text_roundtrip(re in any::<f64>(), im in any::<f64>()) {
        prop_assume!(re.is_finite() && im.is_finite());
        let z = C64::new(re, im);
        prop_assert_eq!(parse_complex(&fmt_complex(z)), Some(z));
    }

    #[test]
    fn verdict_is_scale_invariant(values in prop::collection::vec(0.01f64..10.0, 1..12), c in 0.01f64..100.0) {
        let ns: Vec<usize> = (0..values.len()).map(|k| 8 << k).collect();
        let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
        prop_assert_eq!(
            boundedness_verdict(&ns, &values, 1.5).pass,
            boundedness_verdict(&ns, &scaled, 1.5).pass
        );
    }

    #[test]
    fn rational_json_roundtrip(num in prop::collection::vec(-2.0f64..2.0, 1..4), pole in -0.9f64..0.9) {
        let e = RationalEntry::new(
            num.iter().map(|&x| C64::new(x, 0.0)).collect(),
            vec![C64::new(1.0, 0.0), C64::new(-pole, 0.0)],
        );
        let g = RationalMatrix::new(1, vec![e]).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        let back: RationalMatrix = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn model_series_invert_each_other(c in -0.8f64..0.8, d in order()) {
        let m = FarimaModel::new(d.value(), RationalMatrix::lower_geometric(C64::new(c, 0.0)), &ModelOptions::default())
            .unwrap();
        prop_assert!(m.series_inverse_defect(500) < 1e-9);
        let (la, _) = m.ar_limits().unwrap();
        prop_assert!(la.iter().all(|z| z.is_finite()));
    }
}
