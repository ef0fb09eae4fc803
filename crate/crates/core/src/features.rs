//! The 27-element sub-band statistics descriptor.
//!
//! Column order for a 6-level decomposition with bands `D1..D6, A6`:
//!
//! | columns   | statistic                                  |
//! |-----------|--------------------------------------------|
//! | f01–f07   | band mean                                  |
//! | f08–f14   | band average power                         |
//! | f15–f21   | band standard deviation (population)       |
//! | f22–f27   | neighbouring-band mean ratio, D1/D2 … D6/A6 |

use crate::error::{Error, Result};
use crate::signal::{ClassLabel, N_FEATURES};
use crate::wavelet::WaveletDecomposition;

/// Levels of decomposition the descriptor is defined for.
pub const FEATURE_LEVELS: usize = 6;

/// Guard added to ratio denominators.
pub const RATIO_EPSILON: f64 = 1e-12;

/// How the neighbouring-band ratio features are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RatioMode {
    /// `mean|c_i| / (mean|c_j| + eps)`.
    #[default]
    AbsoluteMean,
    /// Signed means, `mean(c_i) / mean(c_j)`, with the denominator pushed
    /// away from zero by `eps` keeping its sign.
    SignedMean,
}

impl std::str::FromStr for RatioMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "abs" | "absolute" | "absolute_mean" => Ok(RatioMode::AbsoluteMean),
            "signed" | "signed_mean" => Ok(RatioMode::SignedMean),
            other => Err(Error::Config(format!("unknown ratio mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for RatioMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RatioMode::AbsoluteMean => "absolute_mean",
            RatioMode::SignedMean => "signed_mean",
        })
    }
}

fn non_empty(coeffs: &[f64]) -> Result<f64> {
    if coeffs.is_empty() {
        Err(Error::EmptyBand)
    } else {
        Ok(coeffs.len() as f64)
    }
}

pub fn band_mean(coeffs: &[f64]) -> Result<f64> {
    let n = non_empty(coeffs)?;
    Ok(coeffs.iter().sum::<f64>() / n)
}

/// Mean of squared coefficients.
pub fn band_power(coeffs: &[f64]) -> Result<f64> {
    let n = non_empty(coeffs)?;
    Ok(coeffs.iter().map(|c| c * c).sum::<f64>() / n)
}

/// Standard deviation with divisor `n`.
pub fn band_std(coeffs: &[f64]) -> Result<f64> {
    let mean = band_mean(coeffs)?;
    let n = coeffs.len() as f64;
    Ok((coeffs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n).sqrt())
}

fn mean_abs(coeffs: &[f64]) -> Result<f64> {
    let n = non_empty(coeffs)?;
    Ok(coeffs.iter().map(|c| c.abs()).sum::<f64>() / n)
}

/// Ratio of mean absolute values, `mean|num| / (mean|den| + eps)`.
pub fn band_ratio(numerator: &[f64], denominator: &[f64]) -> Result<f64> {
    band_ratio_with(numerator, denominator, RatioMode::AbsoluteMean)
}

pub fn band_ratio_with(numerator: &[f64], denominator: &[f64], mode: RatioMode) -> Result<f64> {
    match mode {
        RatioMode::AbsoluteMean => {
            Ok(mean_abs(numerator)? / (mean_abs(denominator)? + RATIO_EPSILON))
        }
        RatioMode::SignedMean => {
            let num = band_mean(numerator)?;
            let den = band_mean(denominator)?;
            let guarded = if den < 0.0 {
                den - RATIO_EPSILON
            } else {
                den + RATIO_EPSILON
            };
            Ok(num / guarded)
        }
    }
}

/// A labelled row of the feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; N_FEATURES],
    pub label: ClassLabel,
}

/// Descriptor of a 6-level decomposition using absolute-mean ratios.
pub fn extract_features(decomp: &WaveletDecomposition, label: ClassLabel) -> Result<FeatureVector> {
    extract_features_with(decomp, label, RatioMode::AbsoluteMean)
}

pub fn extract_features_with(
    decomp: &WaveletDecomposition,
    label: ClassLabel,
    mode: RatioMode,
) -> Result<FeatureVector> {
    if decomp.levels() != FEATURE_LEVELS {
        return Err(Error::BadDecomposition(format!(
            "feature extraction needs {FEATURE_LEVELS} levels, got {}",
            decomp.levels()
        )));
    }
    let bands: Vec<&[f64]> = decomp.bands().collect();
    let n_bands = bands.len();
    let mut values = [0.0; N_FEATURES];
    for (b, band) in bands.iter().enumerate() {
        values[b] = band_mean(band)?;
        values[n_bands + b] = band_power(band)?;
        values[2 * n_bands + b] = band_std(band)?;
    }
    for (b, pair) in bands.windows(2).enumerate() {
        values[3 * n_bands + b] = band_ratio_with(pair[0], pair[1], mode)?;
    }
    Ok(FeatureVector { values, label })
}

/// Column names `f01..f27`, with a short description of each.
pub fn feature_names() -> Vec<(String, String)> {
    let bands = ["D1", "D2", "D3", "D4", "D5", "D6", "A6"];
    let mut out = Vec::with_capacity(N_FEATURES);
    for stat in ["mean", "power", "std"] {
        for b in bands {
            out.push(format!("{stat}({b})"));
        }
    }
    for pair in bands.windows(2) {
        out.push(format!("ratio({}/{})", pair[0], pair[1]));
    }
    out.into_iter()
        .enumerate()
        .map(|(i, d)| (format!("f{:02}", i + 1), d))
        .collect()
}
