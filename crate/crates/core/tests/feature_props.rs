use emg_core::features::{
    band_mean, band_power, band_ratio, band_ratio_with, band_std, extract_features,
    extract_features_with, feature_names, RatioMode,
};
use emg_core::wavelet::{dwt_multilevel, make_filter};
use emg_core::ClassLabel;
use proptest::prelude::*;

fn band() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 1..300)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn variance_decomposes_power(c in band()) {
        let (m, p, s) = (band_mean(&c).unwrap(), band_power(&c).unwrap(), band_std(&c).unwrap());
        prop_assert!(close(s * s + m * m, p, 1e-10));
    }

    #[test]
    fn scaling_law(c in band(), d in band(), s in prop_oneof![-20.0f64..-0.05, 0.05f64..20.0]) {
        let sc: Vec<f64> = c.iter().map(|v| s * v).collect();
        let sd: Vec<f64> = d.iter().map(|v| s * v).collect();
        let tol = 1e-9;
        prop_assert!((band_mean(&sc).unwrap() - s * band_mean(&c).unwrap()).abs()
            <= tol * (1.0 + (s * band_mean(&c).unwrap()).abs()));
        prop_assert!(close(band_power(&sc).unwrap(), s * s * band_power(&c).unwrap(), tol));
        prop_assert!(close(band_std(&sc).unwrap(), s.abs() * band_std(&c).unwrap(), tol));
        prop_assert!(close(band_ratio(&sc, &sd).unwrap(), band_ratio(&c, &d).unwrap(), tol));
    }

    #[test]
    fn features_are_finite_and_ratios_positive(x in prop::collection::vec(-5.0f64..5.0, 8192..=8192)) {
        let f = make_filter("db4").unwrap();
        let d = dwt_multilevel(&x, &f, 6).unwrap();
        let fv = extract_features(&d, ClassLabel::Als).unwrap();
        prop_assert!(fv.values.iter().all(|v| v.is_finite()));
        prop_assert!(fv.values[21..].iter().all(|&v| v >= 0.0));
        prop_assert!(fv.values[14..21].iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn feature_layout_follows_bands() {
    let x: Vec<f64> = (0..8192)
        .map(|i| ((i * 37) % 101) as f64 / 10.0 - 5.0)
        .collect();
    let f = make_filter("db4").unwrap();
    let d = dwt_multilevel(&x, &f, 6).unwrap();
    let fv = extract_features(&d, ClassLabel::Normal).unwrap();
    let bands: Vec<&[f64]> = d.bands().collect();
    for (b, coeffs) in bands.iter().enumerate() {
        assert_eq!(fv.values[b], band_mean(coeffs).unwrap());
        assert_eq!(fv.values[7 + b], band_power(coeffs).unwrap());
        assert_eq!(fv.values[14 + b], band_std(coeffs).unwrap());
    }
    for r in 0..6 {
        assert_eq!(
            fv.values[21 + r],
            band_ratio(bands[r], bands[r + 1]).unwrap()
        );
    }
    let names = feature_names();
    assert_eq!(names.len(), 27);
    assert_eq!(names[0].0, "f01");
    assert_eq!(names[26].0, "f27");
}

#[test]
fn signed_ratio_mode_only_changes_ratios() {
    let x: Vec<f64> = (0..8192).map(|i| (i as f64 * 0.013).sin() + 0.1).collect();
    let f = make_filter("db4").unwrap();
    let d = dwt_multilevel(&x, &f, 6).unwrap();
    let a = extract_features_with(&d, ClassLabel::Normal, RatioMode::AbsoluteMean).unwrap();
    let s = extract_features_with(&d, ClassLabel::Normal, RatioMode::SignedMean).unwrap();
    assert_eq!(a.values[..21], s.values[..21]);
    let bands: Vec<&[f64]> = d.bands().collect();
    assert_eq!(
        s.values[21],
        band_ratio_with(bands[0], bands[1], RatioMode::SignedMean).unwrap()
    );
}
