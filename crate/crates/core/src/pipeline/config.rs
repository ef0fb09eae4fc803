use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::RatioMode;
use crate::io::parse_key_values;
use crate::mspca::MspcaConfig;
use crate::nn::AdamConfig;
use crate::signal::WINDOW_LEN;
use crate::wavelet::make_filter;

use super::split::SplitSpec;
use super::train::TrainConfig;

/// Every tunable of an end-to-end run. Read from flat `key = value` text;
/// unknown keys are rejected so typos do not silently fall back to defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Master seed. Split and training seeds default to it.
    pub seed: u64,
    /// Synthetic windows per class when no input is given.
    pub per_class: usize,
    pub window_len: usize,
    pub stride: usize,
    pub denoise: bool,
    pub mspca: MspcaConfig,
    pub ratio_mode: RatioMode,
    pub split: SplitSpec,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            per_class: 1200,
            window_len: WINDOW_LEN,
            stride: WINDOW_LEN,
            denoise: true,
            mspca: MspcaConfig::default(),
            ratio_mode: RatioMode::default(),
            split: SplitSpec::default(),
            train: TrainConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean {value:?} for {key}"))),
    }
}

impl PipelineConfig {
    pub fn with_seed(seed: u64) -> Self {
        let mut c = PipelineConfig::default();
        c.set_seed(seed);
        c
    }

    /// Sets the master seed and every derived seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.split.seed = seed;
        self.train.seed = seed;
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = PipelineConfig::default();
        let pairs = parse_key_values(text)?;
        // The master seed first, so explicit split/train seeds override it
        // wherever they appear.
        if let Some((k, v)) = pairs.iter().find(|(k, _)| k == "seed") {
            c.set_seed(parse(k, v)?);
        }
        for (k, v) in &pairs {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.train;
        match key {
            "seed" => self.seed = parse(key, value)?,
            "per_class" => self.per_class = parse(key, value)?,
            "window_len" => self.window_len = parse(key, value)?,
            "stride" => self.stride = parse(key, value)?,
            "denoise" => self.denoise = parse_bool(key, value)?,
            "wavelet" => self.mspca.filter = make_filter(value)?,
            "levels" => self.mspca.levels = parse(key, value)?,
            "retention" => self.mspca.retention = value.parse()?,
            "ratio_mode" => self.ratio_mode = value.parse()?,
            "test_fraction" => self.split.test_fraction = parse(key, value)?,
            "validation_fraction" => self.split.validation_fraction = parse(key, value)?,
            "stratified" => self.split.stratified = parse_bool(key, value)?,
            "split_seed" => self.split.seed = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "epochs" => t.epochs = parse(key, value)?,
            "learning_rate" => t.adam.learning_rate = parse(key, value)?,
            "beta1" => t.adam.beta1 = parse(key, value)?,
            "beta2" => t.adam.beta2 = parse(key, value)?,
            "adam_epsilon" => t.adam.epsilon = parse(key, value)?,
            "dropout" => t.dropout = parse(key, value)?,
            "l2" => t.l2 = parse(key, value)?,
            "shuffle" => t.shuffle = parse_bool(key, value)?,
            "validation_interval" => t.validation_interval = parse(key, value)?,
            "train_seed" => t.seed = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.stride == 0 {
            return Err(Error::Config(
                "window_len and stride must be positive".into(),
            ));
        }
        if self.per_class == 0 {
            return Err(Error::Config("per_class must be positive".into()));
        }
        self.mspca.validate()?;
        self.split.validate()?;
        self.train.validate()
    }

    /// Canonical `key = value` listing, parseable by [`PipelineConfig::from_text`].
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let t = &self.train;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = t.adam;
        vec![
            ("seed", self.seed.to_string()),
            ("per_class", self.per_class.to_string()),
            ("window_len", self.window_len.to_string()),
            ("stride", self.stride.to_string()),
            ("denoise", self.denoise.to_string()),
            ("wavelet", self.mspca.filter.name().to_string()),
            ("levels", self.mspca.levels.to_string()),
            ("retention", self.mspca.retention.to_string()),
            ("ratio_mode", self.ratio_mode.to_string()),
            ("test_fraction", self.split.test_fraction.to_string()),
            (
                "validation_fraction",
                self.split.validation_fraction.to_string(),
            ),
            ("stratified", self.split.stratified.to_string()),
            ("split_seed", self.split.seed.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("epochs", t.epochs.to_string()),
            ("learning_rate", learning_rate.to_string()),
            ("beta1", beta1.to_string()),
            ("beta2", beta2.to_string()),
            ("adam_epsilon", epsilon.to_string()),
            ("dropout", t.dropout.to_string()),
            ("l2", t.l2.to_string()),
            ("shuffle", t.shuffle.to_string()),
            ("validation_interval", t.validation_interval.to_string()),
            ("train_seed", t.seed.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mspca::RetentionRule;

    #[test]
    fn defaults_match_the_reference_setup() {
        let c = PipelineConfig::default();
        assert_eq!(c.train.batch_size, 150);
        assert_eq!(c.train.epochs, 100);
        assert_eq!(c.mspca.levels, 6);
        assert_eq!(c.mspca.filter.name(), "db4");
        assert_eq!(c.per_class * 3, 3600);
    }

    #[test]
    fn text_round_trip() {
        let mut c = PipelineConfig::with_seed(11);
        c.train.epochs = 7;
        c.denoise = false;
        c.mspca.retention = RetentionRule::Fraction(0.9);
        assert_eq!(PipelineConfig::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn master_seed_feeds_derived_seeds_unless_overridden() {
        let c = PipelineConfig::from_text("train_seed = 5\nseed = 9\n").unwrap();
        assert_eq!((c.seed, c.split.seed, c.train.seed), (9, 9, 5));
    }

    #[test]
    fn unknown_and_malformed_entries_fail() {
        assert!(matches!(
            PipelineConfig::from_text("epoch = 3"),
            Err(Error::Config(_))
        ));
        assert!(PipelineConfig::from_text("epochs = many").is_err());
        assert!(PipelineConfig::from_text("epochs = 0").is_err());
        assert!(PipelineConfig::from_text("wavelet = sym8").is_err());
    }
}
