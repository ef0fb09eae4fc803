//! Signals, windows, labelled feature datasets and their file formats.
//!
//! File formats:
//!
//! - signal CSV: one amplitude per line, optional `amplitude` header line,
//!   `.` as decimal separator. Blank lines are ignored.
//! - signal binary: little-endian `f64` samples, no header.
//! - signal sidecar: optional `<signal file>.meta` next to either format,
//!   flat `key = value` lines with the keys `label`, `sample_rate_hz` and
//!   `source_id`.
//! - dataset CSV: header `f01,...,f27,label`, one window per row.
//! - window set: binary container written by [`save_windows`], see there.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;

/// Samples per analysis window used throughout the pipeline.
pub const WINDOW_LEN: usize = 8192;

/// Width of a feature row.
pub const N_FEATURES: usize = 27;

/// The three diagnostic groups with their fixed integer codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    Normal = 0,
    Myopathy = 1,
    Als = 2,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::Normal, ClassLabel::Myopathy, ClassLabel::Als];
    pub const COUNT: usize = 3;

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: i64) -> Result<Self> {
        match code {
            0 => Ok(ClassLabel::Normal),
            1 => Ok(ClassLabel::Myopathy),
            2 => Ok(ClassLabel::Als),
            other => Err(Error::BadLabel(other)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Normal => "normal",
            ClassLabel::Myopathy => "myopathy",
            ClassLabel::Als => "als",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    /// Accepts the integer code or the class name (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(code) = s.parse::<i64>() {
            return ClassLabel::from_code(code);
        }
        match s.to_ascii_lowercase().as_str() {
            "normal" | "control" => Ok(ClassLabel::Normal),
            "myopathy" => Ok(ClassLabel::Myopathy),
            "als" => Ok(ClassLabel::Als),
            _ => Err(Error::BadInput(format!("unknown class label `{s}`"))),
        }
    }
}

fn check_finite(samples: &[f64]) -> Result<()> {
    match samples.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidSignal(format!(
            "sample {i} is not finite ({})",
            samples[i]
        ))),
        None => Ok(()),
    }
}

/// A sampled single-channel recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    label: Option<ClassLabel>,
    source_id: String,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("signal has no samples".into()));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidSignal(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        check_finite(&samples)?;
        Ok(Signal {
            samples,
            sample_rate_hz,
            label: None,
            source_id: String::new(),
        })
    }

    pub fn with_label(mut self, label: Option<ClassLabel>) -> Self {
        self.label = label;
        self
    }

    pub fn with_source_id(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = source_id.into();
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn label(&self) -> Option<ClassLabel> {
        self.label
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }
}

/// A fixed-length slice of a signal. The pipeline uses [`WINDOW_LEN`]-sample
/// windows; other lengths are accepted for experimentation.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    samples: Vec<f64>,
    label: Option<ClassLabel>,
}

impl Window {
    pub fn new(samples: Vec<f64>, label: Option<ClassLabel>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("window has no samples".into()));
        }
        check_finite(&samples)?;
        Ok(Window { samples, label })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn label(&self) -> Option<ClassLabel> {
        self.label
    }

    /// Label required for anything that enters a [`Dataset`].
    pub fn require_label(&self) -> Result<ClassLabel> {
        self.label
            .ok_or_else(|| Error::BadInput("unlabelled window cannot enter a dataset".into()))
    }
}

/// Cuts `signal` into windows of `window_len` samples, advancing by `stride`.
///
/// Produces `(len - window_len) / stride + 1` windows; a trailing partial
/// window is dropped. Every window carries the signal's label.
pub fn segment(signal: &Signal, window_len: usize, stride: usize) -> Result<Vec<Window>> {
    if window_len == 0 || stride == 0 {
        return Err(Error::BadInput(
            "window length and stride must be positive".into(),
        ));
    }
    let len = signal.len();
    if len < window_len {
        return Err(Error::EmptySegmentation { len, window_len });
    }
    let count = (len - window_len) / stride + 1;
    Ok((0..count)
        .map(|i| {
            let start = i * stride;
            Window {
                samples: signal.samples[start..start + window_len].to_vec(),
                label: signal.label,
            }
        })
        .collect())
}

/// On-disk encodings of a single signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    Csv,
    F64Binary,
}

impl SignalFormat {
    /// Guesses the format from the file extension: `.bin`/`.f64` are binary,
    /// everything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("f64") => SignalFormat::F64Binary,
            _ => SignalFormat::Csv,
        }
    }
}

impl FromStr for SignalFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(SignalFormat::Csv),
            "f64" | "bin" | "binary" | "f64-binary" => Ok(SignalFormat::F64Binary),
            other => Err(Error::BadInput(format!("unknown signal format `{other}`"))),
        }
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

/// Sample rate assumed when no sidecar supplies one.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 1.0;

/// Reads a signal. Metadata (label, sample rate, source id) comes from the
/// optional `.meta` sidecar; the source id defaults to the file name.
pub fn load_signal(path: &Path, format: SignalFormat) -> Result<Signal> {
    let samples = match format {
        SignalFormat::Csv => read_csv_samples(path)?,
        SignalFormat::F64Binary => read_binary_samples(path)?,
    };
    if samples.is_empty() {
        return Err(Error::EmptyInput(format!(
            "{} has no samples",
            path.display()
        )));
    }

    let mut label = None;
    let mut sample_rate = DEFAULT_SAMPLE_RATE_HZ;
    let mut source_id = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();

    let meta = sidecar_path(path);
    if meta.exists() {
        let text = fs::read_to_string(&meta).map_err(|e| Error::io(&meta, e))?;
        for (key, value) in crate::io::parse_key_values(&text)? {
            match key.as_str() {
                "label" => label = Some(value.parse()?),
                "sample_rate_hz" => {
                    sample_rate = value.parse().map_err(|_| {
                        Error::BadInput(format!("bad sample_rate_hz `{value}` in sidecar"))
                    })?
                }
                "source_id" => source_id = value,
                _ => {}
            }
        }
    }

    Ok(Signal::new(samples, sample_rate)?
        .with_label(label)
        .with_source_id(source_id))
}

fn read_csv_samples(path: &Path) -> Result<Vec<f64>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let token = line.trim();
        if token.is_empty() || (idx == 0 && token.eq_ignore_ascii_case("amplitude")) {
            continue;
        }
        let value: f64 = token.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("`{token}` is not a number"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("`{token}` is not finite"),
            });
        }
        samples.push(value);
    }
    Ok(samples)
}

fn read_binary_samples(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Parse {
            line: bytes.len() / 8 + 1,
            message: format!("file size {} is not a multiple of 8 bytes", bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Writes the samples of `signal` (metadata is written to the sidecar).
pub fn save_signal(signal: &Signal, path: &Path, format: SignalFormat) -> Result<()> {
    let mut body = Vec::with_capacity(signal.len() * 8);
    match format {
        SignalFormat::Csv => {
            body.extend_from_slice(b"amplitude\n");
            for v in signal.samples() {
                writeln!(body, "{v}").expect("write to Vec");
            }
        }
        SignalFormat::F64Binary => {
            for v in signal.samples() {
                body.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    write_atomic(path, &body)?;

    let mut meta = format!(
        "sample_rate_hz = {}\nsource_id = {}\n",
        signal.sample_rate_hz, signal.source_id
    );
    if let Some(label) = signal.label {
        meta.push_str(&format!("label = {}\n", label.code()));
    }
    write_atomic(&sidecar_path(path), meta.as_bytes())
}

const WINDOWS_MAGIC: &[u8; 6] = b"EMGWIN";
const WINDOWS_VERSION: u32 = 1;
const UNLABELLED: u8 = 0xFF;

/// Writes a window set.
///
/// Layout (little-endian): magic `EMGWIN`, `u32` version (1), `u64` window
/// count, `u64` window length, then per window one label byte (`0..=2`, or
/// `0xFF` for unlabelled) followed by the `f64` samples.
pub fn save_windows(windows: &[Window], path: &Path) -> Result<()> {
    let window_len = windows.first().map_or(0, Window::len);
    if windows.iter().any(|w| w.len() != window_len) {
        return Err(Error::BadInput("windows differ in length".into()));
    }
    let mut out = Vec::with_capacity(22 + windows.len() * (1 + window_len * 8));
    out.extend_from_slice(WINDOWS_MAGIC);
    out.extend_from_slice(&WINDOWS_VERSION.to_le_bytes());
    out.extend_from_slice(&(windows.len() as u64).to_le_bytes());
    out.extend_from_slice(&(window_len as u64).to_le_bytes());
    for w in windows {
        out.push(w.label.map_or(UNLABELLED, |l| l.code() as u8));
        for v in &w.samples {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    write_atomic(path, &out)
}

pub fn load_windows(path: &Path) -> Result<Vec<Window>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let bad = |msg: &str| Error::BadInput(format!("{}: {msg}", path.display()));
    let mut read = |buf: &mut [u8]| -> Result<()> {
        reader
            .read_exact(buf)
            .map_err(|_| bad("truncated window file"))
    };

    let mut magic = [0u8; 6];
    read(&mut magic)?;
    if &magic != WINDOWS_MAGIC {
        return Err(bad("not a window file"));
    }
    let mut word = [0u8; 4];
    read(&mut word)?;
    if u32::from_le_bytes(word) != WINDOWS_VERSION {
        return Err(bad("unsupported window file version"));
    }
    let mut long = [0u8; 8];
    read(&mut long)?;
    let count = u64::from_le_bytes(long) as usize;
    read(&mut long)?;
    let window_len = u64::from_le_bytes(long) as usize;

    let mut windows = Vec::with_capacity(count);
    let mut raw = vec![0u8; window_len * 8];
    for _ in 0..count {
        let mut tag = [0u8; 1];
        read(&mut tag)?;
        let label = match tag[0] {
            UNLABELLED => None,
            code => Some(ClassLabel::from_code(code as i64)?),
        };
        read(&mut raw)?;
        let samples = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        windows.push(Window::new(samples, label)?);
    }
    Ok(windows)
}

/// Labelled feature rows, one per window.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<[f64; N_FEATURES]>,
    labels: Vec<ClassLabel>,
}

impl Dataset {
    pub fn new(rows: Vec<[f64; N_FEATURES]>, labels: Vec<ClassLabel>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::shape(
                format!("{} labels", rows.len()),
                format!("{} labels", labels.len()),
            ));
        }
        if let Some(i) = rows.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::BadInput(format!("row {i} has a non-finite feature")));
        }
        Ok(Dataset { rows, labels })
    }

    pub fn empty() -> Self {
        Dataset {
            rows: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn rows(&self) -> &[[f64; N_FEATURES]] {
        &self.rows
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn class_counts(&self) -> [usize; ClassLabel::COUNT] {
        let mut counts = [0; ClassLabel::COUNT];
        for l in &self.labels {
            counts[l.code()] += 1;
        }
        counts
    }

    pub(crate) fn rows_mut(&mut self) -> &mut [[f64; N_FEATURES]] {
        &mut self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * N_FEATURES * 20 + 256);
        for j in 1..=N_FEATURES {
            out.push_str(&format!("f{j:02},"));
        }
        out.push_str("label\n");
        for (row, label) in self.rows.iter().zip(&self.labels) {
            for v in row {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{}\n", label.code()));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::EmptyInput("dataset CSV is empty".into()))?;
        let expected: Vec<String> = (1..=N_FEATURES)
            .map(|j| format!("f{j:02}"))
            .chain(std::iter::once("label".to_string()))
            .collect();
        let got: Vec<&str> = header.split(',').map(str::trim).collect();
        if got != expected {
            return Err(Error::Parse {
                line: 1,
                message: "header must be f01,...,f27,label".into(),
            });
        }

        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (idx, line) in lines {
            let parse_err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != N_FEATURES + 1 {
                return Err(parse_err(format!(
                    "expected {} fields, found {}",
                    N_FEATURES + 1,
                    fields.len()
                )));
            }
            let mut row = [0.0; N_FEATURES];
            for (slot, tok) in row.iter_mut().zip(&fields) {
                *slot = tok
                    .parse()
                    .map_err(|_| parse_err(format!("`{tok}` is not a number")))?;
            }
            let code: i64 = fields[N_FEATURES]
                .parse()
                .map_err(|_| parse_err(format!("bad label `{}`", fields[N_FEATURES])))?;
            rows.push(row);
            labels.push(ClassLabel::from_code(code)?);
        }
        Dataset::new(rows, labels)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Dataset::from_csv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> Signal {
        Signal::new((0..n).map(|i| i as f64).collect(), 1000.0)
            .unwrap()
            .with_label(Some(ClassLabel::Myopathy))
    }

    #[test]
    fn segment_exact_fit() {
        let w = segment(&ramp(8192), 8192, 8192).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].samples()[8191], 8191.0);
    }

    #[test]
    fn segment_two_windows() {
        let w = segment(&ramp(16384), 8192, 8192).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[1].samples()[0], 8192.0);
        assert!(w.iter().all(|w| w.label() == Some(ClassLabel::Myopathy)));
    }

    #[test]
    fn segment_drops_partial_tail() {
        let w = segment(&ramp(20000), 8192, 8192).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(*w[1].samples().last().unwrap(), 16383.0);
    }

    #[test]
    fn segment_overlapping_stride() {
        let w = segment(&ramp(10), 4, 3).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w[2].samples(), &[6.0, 7.0, 8.0, 9.0]);
    }

    #[test]
    fn segment_short_signal_fails() {
        assert!(matches!(
            segment(&ramp(100), 8192, 8192),
            Err(Error::EmptySegmentation { len: 100, .. })
        ));
    }

    #[test]
    fn signal_rejects_non_finite() {
        assert!(Signal::new(vec![1.0, f64::NAN], 1.0).is_err());
        assert!(Signal::new(vec![], 1.0).is_err());
        assert!(Signal::new(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn label_parsing() {
        assert_eq!("2".parse::<ClassLabel>().unwrap(), ClassLabel::Als);
        assert_eq!(
            "Myopathy".parse::<ClassLabel>().unwrap(),
            ClassLabel::Myopathy
        );
        assert!(matches!(ClassLabel::from_code(3), Err(Error::BadLabel(3))));
    }

    #[test]
    fn dataset_csv_rejects_wrong_header() {
        assert!(matches!(
            Dataset::from_csv("a,b\n1,2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn dataset_csv_round_trip() {
        let mut row = [0.0; N_FEATURES];
        for (i, v) in row.iter_mut().enumerate() {
            *v = (i as f64).sqrt() * 0.1 - 0.3;
        }
        let ds = Dataset::new(vec![row, row], vec![ClassLabel::Normal, ClassLabel::Als]).unwrap();
        assert_eq!(Dataset::from_csv(&ds.to_csv()).unwrap(), ds);
    }

    #[test]
    fn dataset_rejects_label_count_mismatch() {
        assert!(Dataset::new(vec![[0.0; N_FEATURES]], vec![]).is_err());
    }
}
