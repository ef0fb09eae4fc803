use std::path::PathBuf;

use emg_core::nn::load_model;
use emg_core::pipeline::{
    evaluate_scaled, features_from_windows, run_pipeline, split, train, PipelineConfig,
    PipelineInput, Standardizer, CONFUSION_FILE, CURVE_FILE, MANIFEST_FILE, METRICS_FILE,
    MODEL_FILE,
};
use emg_core::signal::{save_signal, save_windows, SignalFormat};
use emg_core::synth::{synth_dataset_windows, synth_generate};
use emg_core::{ClassLabel, Error, Signal};

fn out_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("emg-e2e-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn small_config(seed: u64) -> PipelineConfig {
    let mut c = PipelineConfig::with_seed(seed);
    c.per_class = 40;
    c.train.epochs = 5;
    c.train.batch_size = 30;
    c
}

#[test]
fn small_run_writes_every_artifact() {
    let dir = out_dir("small");
    let summary = run_pipeline(&PipelineInput::Synthetic, &small_config(3), &dir).unwrap();
    assert_eq!(summary.feature_shape, (120, 27));
    assert_eq!(summary.split_sizes.iter().sum::<usize>(), 120);
    assert_eq!(summary.band_reports.len(), 7);
    for f in [
        MODEL_FILE,
        METRICS_FILE,
        CURVE_FILE,
        CONFUSION_FILE,
        MANIFEST_FILE,
    ] {
        assert!(dir.join(f).is_file(), "{f} missing");
    }
    let model = load_model(&dir.join(MODEL_FILE)).unwrap();
    assert!(model.input_scaling.is_some());
    assert!(model.metadata.iter().any(|(k, v)| k == "seed" && v == "3"));

    let manifest = std::fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap();
    assert!(manifest.contains("feature_matrix = 120x27"));
    assert!(manifest.contains("denoise = on"));
    assert!(manifest.contains("model = model.emgnet sha256:"));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join(METRICS_FILE)).unwrap()).unwrap();
    assert_eq!(metrics["test"]["n_samples"], 24);
}

#[test]
fn signal_files_are_segmented_and_hashed() {
    let dir = out_dir("signals");
    std::fs::create_dir_all(&dir).unwrap();
    let mut paths = Vec::new();
    for class in ClassLabel::ALL {
        let samples: Vec<f64> = synth_generate(class, 12, 5)
            .unwrap()
            .into_iter()
            .flat_map(|w| w.into_samples())
            .collect();
        let path = dir.join(format!("{}.bin", class.name()));
        save_signal(
            &Signal::new(samples, 1.0).unwrap().with_label(Some(class)),
            &path,
            SignalFormat::F64Binary,
        )
        .unwrap();
        paths.push(path);
    }
    let mut cfg = small_config(1);
    cfg.denoise = false;
    let summary = run_pipeline(&PipelineInput::Signals(paths), &cfg, &dir.join("out")).unwrap();
    assert_eq!(summary.n_windows, 36);
    let manifest = std::fs::read_to_string(dir.join("out").join(MANIFEST_FILE)).unwrap();
    assert!(manifest.contains("normal.bin = "));
    assert!(manifest.contains("denoise = off"));
}

#[test]
fn window_files_feed_the_pipeline() {
    let dir = out_dir("windows");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("w.emgwin");
    save_windows(&synth_dataset_windows(20, 8).unwrap(), &path).unwrap();
    let summary = run_pipeline(
        &PipelineInput::Windows(vec![path]),
        &small_config(8),
        &dir.join("out"),
    )
    .unwrap();
    assert_eq!(summary.feature_shape.0, 60);
}

#[test]
fn failures_name_their_stage() {
    let mut cfg = small_config(0);
    cfg.per_class = 2;
    cfg.denoise = false;
    match run_pipeline(&PipelineInput::Synthetic, &cfg, &out_dir("tiny")) {
        Err(Error::Stage { stage, source }) => {
            assert_eq!(stage, "split");
            assert!(matches!(*source, Error::Stratification(_)));
        }
        other => panic!("expected a split failure, got {other:?}"),
    }
    let missing = PipelineInput::Signals(vec![PathBuf::from("/definitely/not/here.csv")]);
    match run_pipeline(&missing, &small_config(0), &out_dir("missing")) {
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "input"),
        other => panic!("expected an input failure, got {other:?}"),
    }
}

#[test]
fn separable_synthetic_set_trains_to_high_validation_accuracy() {
    // 600 windows per class, default training hyperparameters.
    let cfg = PipelineConfig::with_seed(4);
    let windows = synth_dataset_windows(600, 4).unwrap();
    let ds = features_from_windows(&windows, &cfg).unwrap();
    let parts = split(&ds, &cfg.split).unwrap();
    let scaler = Standardizer::fit(&parts.sub_train).unwrap();
    let out = train(
        &scaler.apply(&parts.sub_train),
        &scaler.apply(&parts.validation),
        &cfg.train,
    )
    .unwrap();
    let last_val = out
        .curve
        .points
        .iter()
        .rev()
        .find_map(|p| p.validation_accuracy)
        .unwrap();
    assert!(last_val >= 0.95, "final validation accuracy {last_val}");

    let mut net = out.network;
    net.input_scaling = Some(scaler.to_input_scaling());
    let eval = evaluate_scaled(&net, &parts.test).unwrap();
    assert!(eval.accuracy >= 0.95, "test accuracy {}", eval.accuracy);
}

#[test]
fn one_step_per_epoch_when_batch_covers_dataset() {
    let cfg = {
        let mut c = small_config(2);
        c.train.epochs = 1;
        c.train.batch_size = 10_000;
        c
    };
    let windows = synth_dataset_windows(20, 2).unwrap();
    let ds = features_from_windows(&windows, &cfg).unwrap();
    let parts = split(&ds, &cfg.split).unwrap();
    let out = train(&parts.sub_train, &parts.validation, &cfg.train).unwrap();
    assert_eq!(out.curve.points.len(), 1);
}

#[test]
fn unshuffled_runs_give_identical_curves() {
    let mut cfg = small_config(6);
    cfg.train.shuffle = false;
    let windows = synth_dataset_windows(20, 6).unwrap();
    let ds = features_from_windows(&windows, &cfg).unwrap();
    let parts = split(&ds, &cfg.split).unwrap();
    let a = train(&parts.sub_train, &parts.validation, &cfg.train).unwrap();
    let b = train(&parts.sub_train, &parts.validation, &cfg.train).unwrap();
    assert_eq!(a.curve, b.curve);
}
