use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{extract_features_with, RatioMode, FEATURE_LEVELS};
use crate::io::write_atomic;
use crate::mspca::{mspca_denoise_with_report, BandReport};
use crate::nn::{save_model, Network};
use crate::signal::{load_signal, load_windows, segment, Dataset, SignalFormat, Window};
use crate::synth::synth_dataset_windows;
use crate::wavelet::{dwt_multilevel, WaveletFilter};

use super::config::PipelineConfig;
use super::metrics::{evaluate, Evaluation};
use super::split::split;
use super::standardize::Standardizer;
use super::train::{train, BestSnapshot, TrainOutcome};

pub const MODEL_FILE: &str = "model.emgnet";
pub const METRICS_FILE: &str = "metrics.json";
pub const CURVE_FILE: &str = "learning_curve.csv";
pub const CONFUSION_FILE: &str = "confusion_matrix.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Where windows come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PipelineInput {
    /// Seeded synthetic windows, `per_class` of each class.
    Synthetic,
    /// Labelled signal files, segmented with the configured window and stride.
    Signals(Vec<PathBuf>),
    /// Pre-segmented window set files.
    Windows(Vec<PathBuf>),
}

/// Feature rows for labelled windows, db4 bands at [`FEATURE_LEVELS`].
pub fn features_from_windows(windows: &[Window], config: &PipelineConfig) -> Result<Dataset> {
    let filter = &config.mspca.filter;
    let mut rows = Vec::with_capacity(windows.len());
    let mut labels = Vec::with_capacity(windows.len());
    for w in windows {
        let label = w.require_label()?;
        let decomp = dwt_multilevel(w.samples(), filter, FEATURE_LEVELS)?;
        rows.push(extract_features_with(&decomp, label, config.ratio_mode)?.values);
        labels.push(label);
    }
    Dataset::new(rows, labels)
}

/// Feature rows of windows whose labels are unknown, for prediction.
pub fn features_unlabelled(
    windows: &[Window],
    filter: &WaveletFilter,
    ratio_mode: RatioMode,
) -> Result<Vec<[f64; crate::N_FEATURES]>> {
    windows
        .iter()
        .map(|w| {
            let decomp = dwt_multilevel(w.samples(), filter, FEATURE_LEVELS)?;
            Ok(extract_features_with(&decomp, crate::ClassLabel::Normal, ratio_mode)?.values)
        })
        .collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Input description and hashes for the manifest.
fn load_input(
    input: &PipelineInput,
    config: &PipelineConfig,
) -> Result<(Vec<Window>, Vec<(String, String)>)> {
    match input {
        PipelineInput::Synthetic => {
            let windows = synth_dataset_windows(config.per_class, config.seed)?;
            let desc = format!(
                "synthetic per_class={} seed={}",
                config.per_class, config.seed
            );
            Ok((windows, vec![(desc, "-".into())]))
        }
        PipelineInput::Signals(paths) | PipelineInput::Windows(paths) => {
            if paths.is_empty() {
                return Err(Error::EmptyInput("no input files".into()));
            }
            let mut windows = Vec::new();
            let mut hashes = Vec::new();
            for p in paths {
                let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
                hashes.push((p.display().to_string(), sha256_hex(&bytes)));
                if matches!(input, PipelineInput::Windows(_)) {
                    windows.extend(load_windows(p)?);
                } else {
                    let signal = load_signal(p, SignalFormat::from_path(p))?;
                    windows.extend(segment(&signal, config.window_len, config.stride)?);
                }
            }
            Ok((windows, hashes))
        }
    }
}

/// Standardizes on `sub_train`, trains, and returns the best-validation
/// network with the standardizer and config embedded.
pub fn fit_model(
    sub_train: &Dataset,
    validation: &Dataset,
    config: &PipelineConfig,
) -> Result<(Network, TrainOutcome, Standardizer)> {
    let scaler = Standardizer::fit(sub_train).map_err(|e| e.in_stage("standardize"))?;
    let outcome = train(
        &scaler.apply(sub_train),
        &scaler.apply(validation),
        &config.train,
    )
    .map_err(|e| e.in_stage("train"))?;
    let mut network = outcome.network.clone();
    network.input_scaling = Some(scaler.to_input_scaling());
    network.metadata = config
        .to_pairs()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    Ok((network, outcome, scaler))
}

/// Applies the network's embedded standardizer, if any, to raw features.
pub fn scale_for(network: &Network, ds: &Dataset) -> Result<Dataset> {
    match &network.input_scaling {
        Some(s) => Ok(Standardizer::from_input_scaling(s)?.apply(ds)),
        None => Ok(ds.clone()),
    }
}

/// [`evaluate`] on raw features, scaled with the network's standardizer.
pub fn evaluate_scaled(network: &Network, raw: &Dataset) -> Result<Evaluation> {
    evaluate(network, &scale_for(network, raw)?)
}

#[derive(Debug, Clone, Serialize)]
struct MetricsFile<'a> {
    test: &'a Evaluation,
    validation: &'a Evaluation,
    best_validation_accuracy: f64,
    best_epoch: usize,
    best_iteration: usize,
    split_sizes: [usize; 3],
}

/// Outcome of [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub n_windows: usize,
    pub feature_shape: (usize, usize),
    pub split_sizes: [usize; 3],
    pub band_reports: Vec<BandReport>,
    pub best: BestSnapshot,
    pub test: Evaluation,
    pub network: Network,
}

impl RunSummary {
    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// Synthesis or loading, optional MSPCA, features, split, standardization,
/// training and evaluation; artifacts land in `out_dir`.
pub fn run_pipeline(
    input: &PipelineInput,
    config: &PipelineConfig,
    out_dir: &Path,
) -> Result<RunSummary> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let (windows, input_hashes) = load_input(input, config).map_err(|e| e.in_stage("input"))?;
    let n_windows = windows.len();

    let (windows, band_reports) = if config.denoise {
        mspca_denoise_with_report(&windows, &config.mspca).map_err(|e| e.in_stage("denoise"))?
    } else {
        (windows, Vec::new())
    };

    let dataset = features_from_windows(&windows, config).map_err(|e| e.in_stage("features"))?;
    drop(windows);

    let parts = split(&dataset, &config.split).map_err(|e| e.in_stage("split"))?;
    let split_sizes = [
        parts.sub_train.len(),
        parts.validation.len(),
        parts.test.len(),
    ];
    let (network, outcome, scaler) = fit_model(&parts.sub_train, &parts.validation, config)?;
    let test_eval = evaluate_scaled(&network, &parts.test).map_err(|e| e.in_stage("evaluate"))?;
    let val_eval =
        evaluate_scaled(&network, &parts.validation).map_err(|e| e.in_stage("evaluate"))?;

    let write = |name: &str, bytes: &[u8]| write_atomic(&out_dir.join(name), bytes);
    let stage = |e: Error| e.in_stage("artifacts");
    save_model(&network, &out_dir.join(MODEL_FILE)).map_err(stage)?;
    let metrics = MetricsFile {
        test: &test_eval,
        validation: &val_eval,
        best_validation_accuracy: outcome.best.validation_accuracy,
        best_epoch: outcome.best.epoch,
        best_iteration: outcome.best.iteration,
        split_sizes,
    };
    let json = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    write(METRICS_FILE, format!("{json}\n").as_bytes()).map_err(stage)?;
    write(CURVE_FILE, outcome.curve.to_csv().as_bytes()).map_err(stage)?;
    write(
        CONFUSION_FILE,
        test_eval.confusion_matrix.to_csv().as_bytes(),
    )
    .map_err(stage)?;

    let mut manifest = String::from("# run manifest\n[config]\n");
    manifest.push_str(&config.to_text());
    manifest.push_str("\n[seeds]\n");
    manifest.push_str(&format!(
        "master = {}\nsplit = {}\ntrain = {}\n",
        config.seed, config.split.seed, config.train.seed
    ));
    manifest.push_str("\n[inputs]\n");
    for (name, hash) in &input_hashes {
        manifest.push_str(&format!("{name} = {hash}\n"));
    }
    manifest.push_str("\n[data]\n");
    manifest.push_str(&format!(
        "windows = {n_windows}\nfeature_matrix = {}x{}\ndenoise = {}\nsplit = {}/{}/{}\nzero_variance_features = {:?}\n",
        dataset.len(),
        crate::N_FEATURES,
        if config.denoise { "on" } else { "off" },
        split_sizes[0],
        split_sizes[1],
        split_sizes[2],
        scaler.flagged
    ));
    for r in &band_reports {
        manifest.push_str(&format!(
            "retained.{} = {}/{}\n",
            r.band, r.n_retained, r.n_components
        ));
    }
    manifest.push_str("\n[artifacts]\n");
    for (name, file) in [
        ("model", MODEL_FILE),
        ("metrics", METRICS_FILE),
        ("learning_curve", CURVE_FILE),
        ("confusion_matrix", CONFUSION_FILE),
    ] {
        let bytes = fs::read(out_dir.join(file)).map_err(|e| Error::io(out_dir.join(file), e))?;
        manifest.push_str(&format!("{name} = {file} sha256:{}\n", sha256_hex(&bytes)));
    }
    write(MANIFEST_FILE, manifest.as_bytes()).map_err(stage)?;

    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        n_windows,
        feature_shape: (dataset.len(), crate::N_FEATURES),
        split_sizes,
        band_reports,
        best: outcome.best,
        test: test_eval,
        network,
    })
}
