//! Multiscale PCA denoising.
//!
//! Every window is wavelet-decomposed; for each band the coefficients of all
//! windows are stacked into an `n_windows x band_len` matrix, PCA is fitted
//! across windows, only the dominant components are kept and the windows are
//! rebuilt by inverse transform.

mod pca;

pub use pca::{pca_denoise, pca_fit, PcaModel};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::signal::Window;
use crate::wavelet::{
    dwt_multilevel, idwt_multilevel, make_filter, WaveletDecomposition, WaveletFilter,
};

/// How many principal components of a band are kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RetentionRule {
    /// Components whose eigenvalue exceeds the mean eigenvalue of the band.
    Kaiser,
    /// Fewest leading components explaining at least this share of variance.
    Fraction(f64),
}

impl RetentionRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RetentionRule::Fraction(p) if !(p > 0.0 && p <= 1.0) => Err(Error::Config(format!(
                "retention fraction must lie in (0, 1], got {p}"
            ))),
            _ => Ok(()),
        }
    }

    /// Number of leading components to keep, given descending eigenvalues.
    pub fn select(&self, eigenvalues: &[f64]) -> usize {
        if eigenvalues.is_empty() {
            return 0;
        }
        match *self {
            RetentionRule::Kaiser => {
                let mean = eigenvalues.iter().sum::<f64>() / eigenvalues.len() as f64;
                eigenvalues.iter().take_while(|&&v| v > mean).count()
            }
            RetentionRule::Fraction(p) => {
                if p >= 1.0 {
                    return eigenvalues.len();
                }
                let total: f64 = eigenvalues.iter().sum();
                if total <= 0.0 {
                    return 0;
                }
                let mut acc = 0.0;
                for (i, v) in eigenvalues.iter().enumerate() {
                    acc += v;
                    if acc >= p * total {
                        return i + 1;
                    }
                }
                eigenvalues.len()
            }
        }
    }
}

impl fmt::Display for RetentionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RetentionRule::Kaiser => f.write_str("kaiser"),
            RetentionRule::Fraction(p) => write!(f, "fraction:{p}"),
        }
    }
}

impl FromStr for RetentionRule {
    type Err = Error;

    /// `kaiser`, `fraction:<p>` or a bare number `p`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let rule = if s == "kaiser" {
            RetentionRule::Kaiser
        } else {
            let p = s.strip_prefix("fraction:").unwrap_or(&s);
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("unknown retention rule `{s}`")))?;
            RetentionRule::Fraction(p)
        };
        rule.validate()?;
        Ok(rule)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MspcaConfig {
    pub filter: WaveletFilter,
    pub levels: usize,
    pub retention: RetentionRule,
}

impl Default for MspcaConfig {
    fn default() -> Self {
        MspcaConfig {
            filter: make_filter("db4").expect("db4 is built in"),
            levels: 6,
            retention: RetentionRule::Kaiser,
        }
    }
}

impl MspcaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::BadLevels);
        }
        self.retention.validate()
    }
}

/// Per-band summary of one denoising run.
#[derive(Debug, Clone, PartialEq)]
pub struct BandReport {
    pub band: String,
    pub n_components: usize,
    pub n_retained: usize,
}

/// Denoises `windows` jointly. Labels and window order are preserved.
pub fn mspca_denoise(windows: &[Window], config: &MspcaConfig) -> Result<Vec<Window>> {
    mspca_denoise_with_report(windows, config).map(|(w, _)| w)
}

pub fn mspca_denoise_with_report(
    windows: &[Window],
    config: &MspcaConfig,
) -> Result<(Vec<Window>, Vec<BandReport>)> {
    config.validate()?;
    if windows.len() < 2 {
        return Err(Error::TooFewRows(windows.len()));
    }
    let len = windows[0].len();
    if let Some(w) = windows.iter().find(|w| w.len() != len) {
        return Err(Error::BadInput(format!(
            "windows must share one length: {len} vs {}",
            w.len()
        )));
    }

    let mut decomps: Vec<WaveletDecomposition> = windows
        .iter()
        .map(|w| dwt_multilevel(w.samples(), &config.filter, config.levels))
        .collect::<Result<_>>()?;

    let names = decomps[0].band_names();
    let mut reports = Vec::with_capacity(names.len());
    for (b, name) in names.into_iter().enumerate() {
        let rows: Vec<&[f64]> = decomps
            .iter()
            .map(|d| d.bands().nth(b).expect("uniform band count"))
            .collect();
        let matrix = Matrix::from_rows(&rows)?;
        let mut model = pca_fit(&matrix)?;
        let keep = config.retention.select(model.eigenvalues());
        model.set_n_retained(keep)?;
        let cleaned = pca_denoise(&matrix, &model)?;

        for (i, d) in decomps.iter_mut().enumerate() {
            let band = d.bands_mut().nth(b).expect("uniform band count");
            band.copy_from_slice(cleaned.row(i));
        }
        reports.push(BandReport {
            band: name,
            n_components: model.n_components(),
            n_retained: keep,
        });
    }

    let out = decomps
        .iter()
        .zip(windows)
        .map(|(d, w)| Window::new(idwt_multilevel(d)?, w.label()))
        .collect::<Result<_>>()?;
    Ok((out, reports))
}
