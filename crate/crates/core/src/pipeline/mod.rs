//! Everything after feature extraction: splitting, standardization,
//! training, evaluation and the end-to-end run that writes artifacts.

mod config;
mod metrics;
mod run;
mod split;
mod standardize;
mod train;

pub use config::PipelineConfig;
pub use metrics::{dataset_matrix, evaluate, predict, ClassMetrics, ConfusionMatrix, Evaluation};
pub use run::{
    evaluate_scaled, features_from_windows, features_unlabelled, fit_model, run_pipeline,
    scale_for, PipelineInput, RunSummary, CONFUSION_FILE, CURVE_FILE, MANIFEST_FILE, METRICS_FILE,
    MODEL_FILE,
};
pub use split::{split, Split, SplitIndices, SplitSpec};
pub use standardize::Standardizer;
pub use train::{
    train, BestSnapshot, CurvePoint, LearningCurve, TrainConfig, TrainOutcome, Trainer,
};
