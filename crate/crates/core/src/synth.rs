//! Seeded synthetic EMG-like windows for desk-scale experiments.
//!
//! Each window is the sum of
//!
//! 1. a background built in the db4 wavelet domain: every band `D1..D6, A6`
//!    receives i.i.d. Gaussian coefficients whose standard deviation follows a
//!    per-class spectral envelope (jittered per window), followed by an
//!    inverse transform, and
//! 2. a train of biphasic MUAP-like spikes `A * (t/w) * exp((1 - (t/w)^2) / 2)`
//!    with a class-specific count, width `w` and amplitude `A`.
//!
//! Myopathy windows carry many short low-amplitude spikes and a
//! high-frequency envelope; ALS windows carry few long high-amplitude spikes
//! and a low-frequency envelope; normal windows sit in between.
//!
//! Randomness comes from ChaCha8 seeded with `seed` (via `seed_from_u64`)
//! on stream `class code`, so output depends only on `(class, n_windows,
//! seed)` and is identical across platforms.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::signal::{ClassLabel, Window, WINDOW_LEN};
use crate::wavelet::{idwt_multilevel, make_filter, WaveletDecomposition};

const LEVELS: usize = 6;

struct ClassProfile {
    /// Coefficient standard deviation for `D1..D6, A6`.
    envelope: [f64; LEVELS + 1],
    spike_count: usize,
    spike_width: f64,
    spike_amplitude: f64,
}

fn profile(class: ClassLabel) -> ClassProfile {
    match class {
        ClassLabel::Normal => ClassProfile {
            envelope: [0.10, 0.25, 0.50, 0.60, 0.45, 0.30, 0.20],
            spike_count: 12,
            spike_width: 6.0,
            spike_amplitude: 1.0,
        },
        ClassLabel::Myopathy => ClassProfile {
            envelope: [0.35, 0.55, 0.50, 0.35, 0.20, 0.12, 0.10],
            spike_count: 40,
            spike_width: 2.0,
            spike_amplitude: 0.6,
        },
        ClassLabel::Als => ClassProfile {
            envelope: [0.25, 0.30, 0.45, 0.70, 0.80, 0.60, 0.40],
            spike_count: 5,
            spike_width: 14.0,
            spike_amplitude: 4.0,
        },
    }
}

/// Log-normal spread of the overall window gain.
const GAIN_SPREAD: f64 = 0.15;
/// Log-normal spread of each band's envelope value.
const BAND_SPREAD: f64 = 0.10;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn one_window(class: ClassLabel, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let p = profile(class);
    let filter = make_filter("db4")?;
    let gain = (GAIN_SPREAD * normal(rng)).exp();

    let mut bands: Vec<Vec<f64>> = Vec::with_capacity(LEVELS + 1);
    for (b, &std) in p.envelope.iter().enumerate() {
        let len = if b < LEVELS {
            WINDOW_LEN >> (b + 1)
        } else {
            WINDOW_LEN >> LEVELS
        };
        let scale = gain * std * (BAND_SPREAD * normal(rng)).exp();
        bands.push((0..len).map(|_| scale * normal(rng)).collect());
    }
    let approximation = bands.pop().expect("approximation band");
    let decomp = WaveletDecomposition::new(bands, approximation, filter, WINDOW_LEN)?;
    let mut samples = idwt_multilevel(&decomp)?;

    let support = (4.0 * p.spike_width).ceil() as i64;
    for _ in 0..p.spike_count {
        let centre = rng.random_range(0..WINDOW_LEN) as i64;
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let amp = sign * gain * p.spike_amplitude * (0.2 * normal(rng)).exp();
        for offset in -support..=support {
            let t = centre + offset;
            if !(0..WINDOW_LEN as i64).contains(&t) {
                continue;
            }
            let u = offset as f64 / p.spike_width;
            samples[t as usize] += amp * u * (0.5 * (1.0 - u * u)).exp();
        }
    }
    Ok(samples)
}

/// Generates `n_windows` labelled windows of [`WINDOW_LEN`] samples.
pub fn synth_generate(class: ClassLabel, n_windows: usize, seed: u64) -> Result<Vec<Window>> {
    if n_windows == 0 {
        return Err(Error::BadInput("n_windows must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(class.code() as u64);
    (0..n_windows)
        .map(|_| Window::new(one_window(class, &mut rng)?, Some(class)))
        .collect()
}

/// `per_class` windows of every class, grouped by class in code order.
pub fn synth_dataset_windows(per_class: usize, seed: u64) -> Result<Vec<Window>> {
    let mut out = Vec::with_capacity(per_class * ClassLabel::COUNT);
    for class in ClassLabel::ALL {
        out.extend(synth_generate(class, per_class, seed)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::band_power;
    use crate::wavelet::dwt_multilevel;

    fn d1_power(w: &Window) -> f64 {
        let d = dwt_multilevel(w.samples(), &make_filter("db4").unwrap(), 1).unwrap();
        band_power(&d.details()[0]).unwrap()
    }

    #[test]
    fn deterministic() {
        let a = synth_generate(ClassLabel::Normal, 5, 42).unwrap();
        let b = synth_generate(ClassLabel::Normal, 5, 42).unwrap();
        assert_eq!(a, b);
        let c = synth_generate(ClassLabel::Normal, 5, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn als_has_more_d1_power_than_normal() {
        for seed in [0, 1, 7, 42, 1234] {
            let normal = &synth_generate(ClassLabel::Normal, 1, seed).unwrap()[0];
            let als = &synth_generate(ClassLabel::Als, 1, seed).unwrap()[0];
            assert!(d1_power(als) > d1_power(normal), "seed {seed}");
        }
    }

    #[test]
    fn window_shape_and_labels() {
        let w = synth_generate(ClassLabel::Myopathy, 3, 9).unwrap();
        assert_eq!(w.len(), 3);
        assert!(w.iter().all(|w| w.len() == WINDOW_LEN));
        assert!(w.iter().all(|w| w.label() == Some(ClassLabel::Myopathy)));
    }

    #[test]
    fn zero_windows_rejected() {
        assert!(synth_generate(ClassLabel::Als, 0, 1).is_err());
    }
}
