use emg_core::linalg::{dot, Matrix};
use emg_core::mspca::{mspca_denoise, pca_denoise, pca_fit, MspcaConfig, RetentionRule};
use emg_core::synth::synth_dataset_windows;
use emg_core::Window;
use proptest::prelude::*;

fn matrix() -> impl Strategy<Value = Matrix> {
    (2usize..12, 1usize..10).prop_flat_map(|(n, d)| {
        prop::collection::vec(-10.0f64..10.0, n * d)
            .prop_map(move |v| Matrix::from_vec(n, d, v).unwrap())
    })
}

fn covariance_trace(m: &Matrix) -> f64 {
    let means = m.column_means();
    let n = m.rows() as f64;
    m.iter_rows()
        .map(|r| {
            r.iter()
                .zip(&means)
                .map(|(v, mu)| (v - mu).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        / (n - 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn components_are_orthonormal(m in matrix()) {
        let model = pca_fit(&m).unwrap();
        for i in 0..model.n_components() {
            for j in 0..model.n_components() {
                let ip = dot(&model.component(i), &model.component(j));
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((ip - expected).abs() <= 1e-9, "<{i},{j}> = {ip}");
            }
        }
    }

    #[test]
    fn eigenvalues_sum_to_total_variance(m in matrix()) {
        let model = pca_fit(&m).unwrap();
        let total: f64 = model.eigenvalues().iter().sum();
        let trace = covariance_trace(&m);
        prop_assert!((total - trace).abs() <= 1e-9 * trace.max(1.0));
        prop_assert!(model.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(model.eigenvalues().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn full_retention_is_identity(m in matrix()) {
        let model = pca_fit(&m).unwrap();
        let back = pca_denoise(&m, &model).unwrap();
        prop_assert!(back.frobenius_distance(&m) <= 1e-9 * (1.0 + m.frobenius_distance(&Matrix::zeros(m.rows(), m.cols()))));
    }

    #[test]
    fn truncated_projection_is_idempotent(m in matrix(), keep in 0usize..4) {
        let model = pca_fit(&m).unwrap();
        let k = keep.min(model.n_components());
        let model = model.with_retained(k).unwrap();
        let once = pca_denoise(&m, &model).unwrap();
        let twice = pca_denoise(&once, &model).unwrap();
        prop_assert!(once.frobenius_distance(&twice) <= 1e-8);
    }

    #[test]
    fn sign_rule_makes_first_nonzero_entry_positive(m in matrix()) {
        let model = pca_fit(&m).unwrap();
        for i in 0..model.n_components() {
            let c = model.component(i);
            if let Some(first) = c.iter().find(|v| v.abs() > 1e-12) {
                prop_assert!(*first > 0.0);
            }
        }
    }
}

#[test]
fn wide_and_tall_paths_agree_on_shared_spectrum() {
    // Same data seen as n x d and with padding columns that force the Gram
    // path: the non-null eigenvalues coincide.
    let tall = Matrix::from_fn(9, 4, |i, j| {
        ((i * 7 + j * 3) % 11) as f64 - 5.0 + (i * j) as f64 * 0.1
    });
    let wide = Matrix::from_fn(9, 12, |i, j| if j < 4 { tall[(i, j)] } else { 0.0 });
    let a = pca_fit(&tall).unwrap();
    let b = pca_fit(&wide).unwrap();
    for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
        assert!((x - y).abs() <= 1e-9 * x.max(1.0), "{x} vs {y}");
    }
}

#[test]
fn mspca_full_retention_returns_the_input() {
    let windows: Vec<Window> = synth_dataset_windows(4, 2).unwrap();
    let cfg = MspcaConfig {
        retention: RetentionRule::Fraction(1.0),
        ..MspcaConfig::default()
    };
    let out = mspca_denoise(&windows, &cfg).unwrap();
    for (a, b) in windows.iter().zip(&out) {
        assert_eq!(a.label(), b.label());
        let err = a
            .samples()
            .iter()
            .zip(b.samples())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(err <= 1e-8, "{err}");
    }
}
