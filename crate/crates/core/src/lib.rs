//! EMG window classification: segmentation, multiscale PCA denoising,
//! db4 sub-band features and a dense network trained with Adam.
//!
//! The stages, in pipeline order:
//!
//! - [`signal`]: signals, windows, datasets and their file formats
//! - [`synth`]: seeded synthetic windows for the three classes
//! - [`wavelet`]: periodic orthogonal DWT (analysis and synthesis)
//! - [`mspca`]: PCA per wavelet band across windows
//! - [`features`]: the 27 sub-band statistics
//! - [`nn`]: the 8-layer classifier, backpropagation and Adam
//! - [`pipeline`]: splits, standardization, training, metrics, artifacts

pub mod error;
pub mod features;
pub mod io;
pub mod linalg;
pub mod mspca;
pub mod nn;
pub mod pipeline;
pub mod signal;
pub mod synth;
pub mod wavelet;

pub use error::{Error, Result};
pub use signal::{ClassLabel, Dataset, Signal, Window, N_FEATURES, WINDOW_LEN};
