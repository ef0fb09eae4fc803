//! Orthogonal periodic discrete wavelet transform.
//!
//! Convention (part of the public contract, golden vectors depend on it):
//! for an input `x` of even length `N`, lowpass taps `h` and highpass taps
//! `g[n] = (-1)^n h[L-1-n]`, one analysis step computes
//!
//! ```text
//! a[k] = sum_n h[n] * x[(2k + n) mod N]
//! d[k] = sum_n g[n] * x[(2k + n) mod N]      k = 0 .. N/2
//! ```
//!
//! and synthesis is its transpose. With an orthonormal filter the step is an
//! orthogonal matrix, so the multilevel transform preserves energy exactly
//! and synthesis reconstructs the input to rounding error.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Analysis/synthesis filter pair of an orthogonal wavelet.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    name: String,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

// Daubechies 8-tap lowpass (4 vanishing moments), h[0] first.
const DB4: [f64; 8] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_6,
    0.630_880_767_929_858_9,
    -0.027_983_769_416_859_854,
    -0.187_034_811_719_093_08,
    0.030_841_381_835_560_764,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_032,
];

impl WaveletFilter {
    /// Builds a filter from lowpass taps; the highpass is the quadrature mirror.
    pub fn from_lowpass(name: impl Into<String>, lowpass: Vec<f64>) -> Result<Self> {
        if lowpass.is_empty() || lowpass.len() % 2 != 0 {
            return Err(Error::BadInput(format!(
                "filter needs an even, non-zero tap count, got {}",
                lowpass.len()
            )));
        }
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[len - 1 - k]
            })
            .collect();
        Ok(WaveletFilter {
            name: name.into(),
            lowpass,
            highpass,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    pub fn taps(&self) -> usize {
        self.lowpass.len()
    }
}

/// Looks up a filter by name: `haar` (alias `db1`), `db2`, `db4`.
pub fn make_filter(name: &str) -> Result<WaveletFilter> {
    let lowpass = match name.trim().to_ascii_lowercase().as_str() {
        "haar" | "db1" => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
        "db2" => {
            let s3 = 3f64.sqrt();
            let norm = 4.0 * std::f64::consts::SQRT_2;
            vec![
                (1.0 + s3) / norm,
                (3.0 + s3) / norm,
                (3.0 - s3) / norm,
                (1.0 - s3) / norm,
            ]
        }
        "db4" => DB4.to_vec(),
        _ => return Err(Error::UnknownFilter(name.to_string())),
    };
    WaveletFilter::from_lowpass(name.trim().to_ascii_lowercase(), lowpass)
}

/// Detail bands `D1..Dn` (finest first) plus the final approximation `An`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    details: Vec<Vec<f64>>,
    approximation: Vec<f64>,
    filter: WaveletFilter,
    original_length: usize,
}

impl WaveletDecomposition {
    /// Assembles a decomposition, checking that band lengths match
    /// `original_length / 2^j`.
    pub fn new(
        details: Vec<Vec<f64>>,
        approximation: Vec<f64>,
        filter: WaveletFilter,
        original_length: usize,
    ) -> Result<Self> {
        let levels = details.len();
        if levels == 0 {
            return Err(Error::BadDecomposition("no detail bands".into()));
        }
        if levels >= usize::BITS as usize || original_length % (1usize << levels) != 0 {
            return Err(Error::BadDecomposition(format!(
                "original length {original_length} is not divisible by 2^{levels}"
            )));
        }
        for (j, band) in details.iter().enumerate() {
            let expected = original_length >> (j + 1);
            if band.len() != expected {
                return Err(Error::BadDecomposition(format!(
                    "D{} has {} coefficients, expected {expected}",
                    j + 1,
                    band.len()
                )));
            }
        }
        if approximation.len() != original_length >> levels {
            return Err(Error::BadDecomposition(format!(
                "A{levels} has {} coefficients, expected {}",
                approximation.len(),
                original_length >> levels
            )));
        }
        Ok(WaveletDecomposition {
            details,
            approximation,
            filter,
            original_length,
        })
    }

    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// `D(j+1)` for `j` in `0..levels`.
    pub fn details(&self) -> &[Vec<f64>] {
        &self.details
    }

    pub fn approximation(&self) -> &[f64] {
        &self.approximation
    }

    pub fn filter(&self) -> &WaveletFilter {
        &self.filter
    }

    pub fn original_length(&self) -> usize {
        self.original_length
    }

    /// All bands in the order `D1, ..., Dn, An`.
    pub fn bands(&self) -> impl Iterator<Item = &[f64]> {
        self.details
            .iter()
            .map(Vec::as_slice)
            .chain(std::iter::once(self.approximation.as_slice()))
    }

    pub fn band_names(&self) -> Vec<String> {
        (1..=self.levels())
            .map(|j| format!("D{j}"))
            .chain(std::iter::once(format!("A{}", self.levels())))
            .collect()
    }

    /// Mutable bands in the same order as [`bands`](Self::bands).
    pub fn bands_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.details
            .iter_mut()
            .chain(std::iter::once(&mut self.approximation))
    }

    /// Debug dump: one row per band, `band_name, c0, c1, ...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (name, band) in self.band_names().iter().zip(self.bands()) {
            out.push_str(name);
            for c in band {
                write!(out, ",{c}").expect("write to String");
            }
            out.push('\n');
        }
        out
    }
}

fn analysis_step(x: &[f64], filter: &WaveletFilter) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (tap, (&h, &g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            let v = x[(2 * k + tap) % n];
            a += h * v;
            d += g * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

fn synthesis_step(approx: &[f64], detail: &[f64], filter: &WaveletFilter) -> Vec<f64> {
    let n = approx.len() * 2;
    let mut x = vec![0.0; n];
    for (k, (&a, &d)) in approx.iter().zip(detail).enumerate() {
        for (tap, (&h, &g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            x[(2 * k + tap) % n] += h * a + g * d;
        }
    }
    x
}

/// Multilevel analysis. `signal.len()` must be divisible by `2^levels` and at
/// least the filter length.
pub fn dwt_multilevel(
    signal: &[f64],
    filter: &WaveletFilter,
    levels: usize,
) -> Result<WaveletDecomposition> {
    if levels == 0 {
        return Err(Error::BadLevels);
    }
    let len = signal.len();
    if levels >= usize::BITS as usize || len == 0 || len % (1usize << levels) != 0 {
        return Err(Error::BadLength {
            len,
            levels,
            reason: "length must be a positive multiple of 2^levels",
        });
    }
    if len < filter.taps() {
        return Err(Error::BadLength {
            len,
            levels,
            reason: "length must be at least the filter tap count",
        });
    }

    let mut details = Vec::with_capacity(levels);
    let mut approx = signal.to_vec();
    for _ in 0..levels {
        let (a, d) = analysis_step(&approx, filter);
        details.push(d);
        approx = a;
    }
    Ok(WaveletDecomposition {
        details,
        approximation: approx,
        filter: filter.clone(),
        original_length: len,
    })
}

/// Multilevel synthesis; exact inverse of [`dwt_multilevel`].
pub fn idwt_multilevel(decomp: &WaveletDecomposition) -> Result<Vec<f64>> {
    // Re-validate: fields may have been edited through `bands_mut`.
    let levels = decomp.levels();
    for (j, band) in decomp.details.iter().enumerate() {
        if band.len() != decomp.original_length >> (j + 1) {
            return Err(Error::BadDecomposition(format!(
                "D{} has {} coefficients, expected {}",
                j + 1,
                band.len(),
                decomp.original_length >> (j + 1)
            )));
        }
    }
    if levels == 0 || decomp.approximation.len() != decomp.original_length >> levels {
        return Err(Error::BadDecomposition(
            "approximation band length is inconsistent".into(),
        ));
    }

    let mut approx = decomp.approximation.clone();
    for detail in decomp.details.iter().rev() {
        approx = synthesis_step(&approx, detail, &decomp.filter);
    }
    Ok(approx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn haar() -> WaveletFilter {
        make_filter("haar").unwrap()
    }

    #[test]
    fn haar_taps() {
        let f = haar();
        let expected = [1.0 / SQRT_2, 1.0 / SQRT_2, 1.0 / SQRT_2, -1.0 / SQRT_2];
        let got = f.lowpass().iter().chain(f.highpass());
        for (g, e) in got.zip(expected) {
            assert!((g - e).abs() <= 1e-15);
        }
    }

    #[test]
    fn unknown_filter() {
        assert!(matches!(
            make_filter("db9999"),
            Err(Error::UnknownFilter(_))
        ));
    }

    #[test]
    fn haar_constant_pair() {
        let d = dwt_multilevel(&[1.0, 1.0], &haar(), 1).unwrap();
        assert!((d.approximation()[0] - SQRT_2).abs() < 1e-15);
        assert!(d.details()[0][0].abs() < 1e-15);
        let back = idwt_multilevel(&d).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-15 && (back[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn haar_alternating_pair() {
        let d = dwt_multilevel(&[1.0, -1.0], &haar(), 1).unwrap();
        assert!(d.approximation()[0].abs() < 1e-15);
        assert!((d.details()[0][0] - SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn haar_inverse_from_bands() {
        let d = WaveletDecomposition::new(vec![vec![0.0]], vec![SQRT_2], haar(), 2).unwrap();
        let x = idwt_multilevel(&d).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_bands_give_zero_signal() {
        let f = make_filter("db4").unwrap();
        let details = (1..=6).map(|j| vec![0.0; 8192 >> j]).collect();
        let d = WaveletDecomposition::new(details, vec![0.0; 128], f, 8192).unwrap();
        let x = idwt_multilevel(&d).unwrap();
        assert_eq!(x.len(), 8192);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_lengths_and_levels() {
        let f = make_filter("db4").unwrap();
        assert!(matches!(
            dwt_multilevel(&[0.0; 16], &f, 0),
            Err(Error::BadLevels)
        ));
        assert!(matches!(
            dwt_multilevel(&[0.0; 24], &f, 4),
            Err(Error::BadLength { .. })
        ));
        assert!(matches!(
            dwt_multilevel(&[0.0; 4], &f, 1),
            Err(Error::BadLength { .. })
        ));
    }

    #[test]
    fn inconsistent_bands_rejected() {
        let f = haar();
        assert!(matches!(
            WaveletDecomposition::new(vec![vec![0.0; 3]], vec![0.0; 4], f.clone(), 8),
            Err(Error::BadDecomposition(_))
        ));
        let mut d = dwt_multilevel(&[1.0; 8], &f, 2).unwrap();
        d.bands_mut().next().unwrap().push(0.0);
        assert!(matches!(
            idwt_multilevel(&d),
            Err(Error::BadDecomposition(_))
        ));
    }

    #[test]
    fn csv_dump_rows() {
        let d = dwt_multilevel(&[1.0, 2.0, 3.0, 4.0], &haar(), 2).unwrap();
        let csv = d.to_csv();
        let names: Vec<&str> = csv.lines().map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(names, ["D1", "D2", "A2"]);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 3);
    }
}
