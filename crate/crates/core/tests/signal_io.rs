use std::path::PathBuf;

use emg_core::signal::{
    load_signal, load_windows, save_signal, save_windows, segment, SignalFormat,
};
use emg_core::{ClassLabel, Dataset, Error, Signal, Window, N_FEATURES};
use proptest::prelude::*;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("emg-signal-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn segmentation_count_and_coverage(len in 1usize..400, w in 1usize..64, stride in 1usize..64) {
        let signal = Signal::new((0..len).map(|i| i as f64).collect(), 1.0).unwrap();
        match segment(&signal, w, stride) {
            Ok(windows) => {
                prop_assert!(len >= w);
                prop_assert_eq!(windows.len(), (len - w) / stride + 1);
                for (k, win) in windows.iter().enumerate() {
                    prop_assert_eq!(win.len(), w);
                    prop_assert_eq!(win.samples()[0], (k * stride) as f64);
                }
                // The uncovered tail is shorter than one stride.
                let last_end = (windows.len() - 1) * stride + w;
                prop_assert!(len - last_end < stride);
            }
            Err(e) => {
                prop_assert!(len < w);
                let is_empty_seg = matches!(e, Error::EmptySegmentation { .. });
                prop_assert!(is_empty_seg);
            }
        }
    }

    #[test]
    fn binary_signal_round_trip_is_exact(samples in prop::collection::vec(-1e6f64..1e6, 1..500), case in 0u32..1000) {
        let path = scratch(&format!("sig-{case}.bin"));
        let signal = Signal::new(samples, 4000.0).unwrap().with_label(Some(ClassLabel::Myopathy));
        save_signal(&signal, &path, SignalFormat::F64Binary).unwrap();
        let back = load_signal(&path, SignalFormat::F64Binary).unwrap();
        prop_assert_eq!(back.samples(), signal.samples());
        prop_assert_eq!(back.label(), Some(ClassLabel::Myopathy));
        prop_assert_eq!(back.sample_rate_hz(), 4000.0);
    }

    #[test]
    fn csv_signal_round_trip_is_exact(samples in prop::collection::vec(-1e6f64..1e6, 1..200), case in 0u32..1000) {
        let path = scratch(&format!("sig-{case}.csv"));
        let signal = Signal::new(samples, 1.0).unwrap();
        save_signal(&signal, &path, SignalFormat::Csv).unwrap();
        let back = load_signal(&path, SignalFormat::Csv).unwrap();
        prop_assert_eq!(back.samples(), signal.samples());
    }
}

#[test]
fn window_sets_round_trip_with_and_without_labels() {
    let windows = vec![
        Window::new(vec![1.0, -2.5, 3.25], Some(ClassLabel::Als)).unwrap(),
        Window::new(vec![0.0, f64::MIN_POSITIVE, 1e300], None).unwrap(),
    ];
    let path = scratch("set.emgwin");
    save_windows(&windows, &path).unwrap();
    assert_eq!(load_windows(&path).unwrap(), windows);
}

#[test]
fn truncated_window_set_is_rejected() {
    let windows = vec![Window::new(vec![1.0; 16], Some(ClassLabel::Normal)).unwrap()];
    let path = scratch("short.emgwin");
    save_windows(&windows, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(load_windows(&path).is_err());
}

#[test]
fn malformed_csv_reports_the_line() {
    let path = scratch("bad.csv");
    std::fs::write(&path, "1.0\n2.0\nnot-a-number\n").unwrap();
    match load_signal(&path, SignalFormat::Csv) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn dataset_csv_round_trip() {
    let rows = vec![[0.125; N_FEATURES], [-3.0e-7; N_FEATURES]];
    let ds = Dataset::new(rows, vec![ClassLabel::Normal, ClassLabel::Als]).unwrap();
    let path = scratch("features.csv");
    ds.save_csv(&path).unwrap();
    assert_eq!(Dataset::load_csv(&path).unwrap(), ds);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("f01,f02,"));
    assert!(text.lines().next().unwrap().ends_with("f27,label"));
}
