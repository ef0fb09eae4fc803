use crate::error::{Error, Result};
use crate::nn::InputScaling;
use crate::signal::{Dataset, N_FEATURES};

const ZERO_VARIANCE_TOLERANCE: f64 = 1e-12;

/// Per-feature z-scoring fitted on sub-training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: [f64; N_FEATURES],
    /// Population standard deviation, with zero-variance columns forced to 1.
    pub std: [f64; N_FEATURES],
    /// Columns whose variance was zero.
    pub flagged: Vec<usize>,
}

impl Standardizer {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyInput(
                "cannot fit a standardizer on no rows".into(),
            ));
        }
        let n = train.len() as f64;
        let mut mean = [0.0; N_FEATURES];
        for row in train.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);

        let mut std = [0.0; N_FEATURES];
        for row in train.rows() {
            for ((s, v), m) in std.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let mut flagged = Vec::new();
        for (j, s) in std.iter_mut().enumerate() {
            *s = (*s / n).sqrt();
            // Rounding leaves a residue of a few ulps of the mean on
            // constant columns.
            if !(*s > ZERO_VARIANCE_TOLERANCE * (1.0 + mean[j].abs())) {
                *s = 1.0;
                flagged.push(j);
            }
        }
        Ok(Standardizer { mean, std, flagged })
    }

    pub fn apply(&self, ds: &Dataset) -> Dataset {
        let mut out = ds.clone();
        for row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        out
    }

    pub fn inverse(&self, ds: &Dataset) -> Dataset {
        let mut out = ds.clone();
        for row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * s + m;
            }
        }
        out
    }

    pub fn to_input_scaling(&self) -> InputScaling {
        InputScaling {
            mean: self.mean.to_vec(),
            std: self.std.to_vec(),
        }
    }

    pub fn from_input_scaling(scaling: &InputScaling) -> Result<Self> {
        let mean: [f64; N_FEATURES] = scaling
            .mean
            .as_slice()
            .try_into()
            .map_err(|_| Error::shape(N_FEATURES, scaling.mean.len()))?;
        let std: [f64; N_FEATURES] = scaling
            .std
            .as_slice()
            .try_into()
            .map_err(|_| Error::shape(N_FEATURES, scaling.std.len()))?;
        Ok(Standardizer {
            mean,
            std,
            flagged: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::ClassLabel;

    fn sample() -> Dataset {
        let rows = (0..10)
            .map(|i| {
                let mut r = [0.0; N_FEATURES];
                for (j, v) in r.iter_mut().enumerate() {
                    *v = (i * (j + 1)) as f64 * 0.37 - j as f64;
                }
                r[5] = 4.2;
                r
            })
            .collect();
        Dataset::new(rows, vec![ClassLabel::Normal; 10]).unwrap()
    }

    #[test]
    fn fitted_columns_are_standard() {
        let ds = sample();
        let st = Standardizer::fit(&ds).unwrap();
        let z = st.apply(&ds);
        let n = z.len() as f64;
        for j in 0..N_FEATURES {
            let mean = z.rows().iter().map(|r| r[j]).sum::<f64>() / n;
            assert!(mean.abs() <= 1e-10);
            if j != 5 {
                let var = z.rows().iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                assert!((var.sqrt() - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn constant_column_is_flagged_and_zeroed() {
        let ds = sample();
        let st = Standardizer::fit(&ds).unwrap();
        assert!(st.flagged.contains(&5));
        assert_eq!(st.std[5], 1.0);
        assert!(st.apply(&ds).rows().iter().all(|r| r[5].abs() <= 1e-12));
    }

    #[test]
    fn inverse_recovers_features() {
        let ds = sample();
        let st = Standardizer::fit(&ds).unwrap();
        let back = st.inverse(&st.apply(&ds));
        for (a, b) in back.rows().iter().zip(ds.rows()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn empty_fit_fails() {
        assert!(Standardizer::fit(&Dataset::empty()).is_err());
    }
}
