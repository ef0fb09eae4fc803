use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{
    adam_step, argmax, AdamConfig, AdamState, Architecture, Network, DEFAULT_DROPOUT, DEFAULT_L2,
    DEFAULT_WIDTHS,
};
use crate::signal::{ClassLabel, Dataset};

use super::metrics::dataset_matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    pub dropout: f64,
    pub l2: f64,
    pub shuffle: bool,
    /// Validate every this many minibatches, and at every epoch end.
    pub validation_interval: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 150,
            epochs: 100,
            adam: AdamConfig::default(),
            dropout: DEFAULT_DROPOUT,
            l2: DEFAULT_L2,
            shuffle: true,
            validation_interval: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || self.validation_interval == 0 {
            return Err(Error::Config(
                "batch_size, epochs and validation_interval must be positive".into(),
            ));
        }
        self.adam.validate()?;
        self.architecture().map(|_| ())
    }

    pub fn architecture(&self) -> Result<Architecture> {
        Architecture::standard_with(&DEFAULT_WIDTHS, self.dropout, self.l2)
    }
}

/// One row per minibatch. Validation columns are filled only on
/// minibatches where validation ran.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub epoch: usize,
    /// 1-based index within the epoch.
    pub minibatch: usize,
    /// 1-based global step count.
    pub iteration: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_loss: Option<f64>,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
}

impl LearningCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "epoch,minibatch,iteration,train_loss,train_accuracy,validation_loss,validation_accuracy\n",
        );
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{:.17e},{:.17e},{},{}\n",
                p.epoch,
                p.minibatch,
                p.iteration,
                p.train_loss,
                p.train_accuracy,
                opt(p.validation_loss),
                opt(p.validation_accuracy)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestSnapshot {
    pub epoch: usize,
    pub iteration: usize,
    pub validation_accuracy: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the validation check with the highest accuracy,
    /// the earliest one on ties.
    pub network: Network,
    pub final_network: Network,
    pub curve: LearningCurve,
    pub best: BestSnapshot,
}

/// Stateful minibatch trainer. [`train`] is the one-call form; use this
/// directly to keep the learning curve after a failure.
pub struct Trainer {
    config: TrainConfig,
    network: Network,
    adam: AdamState,
    rng: ChaCha8Rng,
    curve: LearningCurve,
    best: Option<(BestSnapshot, Network)>,
}

fn accuracy(probabilities: &Matrix, labels: &[ClassLabel]) -> f64 {
    let hits = probabilities
        .iter_rows()
        .zip(labels)
        .filter(|(row, l)| argmax(row) == l.code())
        .count();
    hits as f64 / labels.len() as f64
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let network = Network::init(&config.architecture()?, config.seed)?;
        Ok(Trainer {
            adam: AdamState::new(config.adam)?,
            // Separate stream from initialization so shuffles and masks do
            // not reuse the weight draws.
            rng: {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(1);
                rng
            },
            network,
            config,
            curve: LearningCurve::default(),
            best: None,
        })
    }

    pub fn curve(&self) -> &LearningCurve {
        &self.curve
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    fn validate_on(
        &mut self,
        x: &Matrix,
        labels: &[ClassLabel],
        epoch: usize,
        iteration: usize,
    ) -> Result<(f64, f64)> {
        let probs = self.network.forward_eval(x)?;
        let loss = self.network.loss(&probs, labels)?;
        let acc = accuracy(&probs, labels);
        let improved = match &self.best {
            None => true,
            Some((b, _)) => acc > b.validation_accuracy,
        };
        if improved {
            let snapshot = BestSnapshot {
                epoch,
                iteration,
                validation_accuracy: acc,
                validation_loss: loss,
            };
            self.best = Some((snapshot, self.network.clone()));
        }
        Ok((loss, acc))
    }

    pub fn run(&mut self, train: &Dataset, validation: &Dataset) -> Result<TrainOutcome> {
        if train.is_empty() || validation.is_empty() {
            return Err(Error::EmptyInput(
                "training needs non-empty sub-train and validation sets".into(),
            ));
        }
        let x_val = dataset_matrix(validation);
        let mut order: Vec<usize> = (0..train.len()).collect();
        let batch = self.config.batch_size.min(train.len());
        let per_epoch = train.len().div_ceil(batch);
        let mut iteration = 0;

        for epoch in 1..=self.config.epochs {
            if self.config.shuffle {
                order.shuffle(&mut self.rng);
            }
            for (mb, idx) in order.chunks(batch).enumerate() {
                let minibatch = mb + 1;
                iteration += 1;
                let rows: Vec<_> = idx.iter().map(|&i| train.rows()[i]).collect();
                let labels: Vec<_> = idx.iter().map(|&i| train.labels()[i]).collect();
                let x = Matrix::from_rows(&rows)?;

                let cache = self.network.forward_train(&x, &mut self.rng)?;
                let loss = self.network.loss(cache.probabilities(), &labels)?;
                if !loss.is_finite() {
                    return Err(Error::TrainingDiverged { epoch, minibatch });
                }
                let train_accuracy = accuracy(cache.probabilities(), &labels);
                let grads = self.network.backward(&cache, &labels)?;
                if grads.tensors.iter().flatten().any(|g| !g.is_finite()) {
                    return Err(Error::TrainingDiverged { epoch, minibatch });
                }
                self.network.update_running_stats(&cache)?;
                adam_step(
                    &mut self.network.parameters_mut(),
                    &grads.tensors,
                    &mut self.adam,
                )?;

                let mut point = CurvePoint {
                    epoch,
                    minibatch,
                    iteration,
                    train_loss: loss,
                    train_accuracy,
                    validation_loss: None,
                    validation_accuracy: None,
                };
                if iteration % self.config.validation_interval == 0 || minibatch == per_epoch {
                    let (vl, va) =
                        self.validate_on(&x_val, validation.labels(), epoch, iteration)?;
                    point.validation_loss = Some(vl);
                    point.validation_accuracy = Some(va);
                }
                self.curve.points.push(point);
            }
        }
        let (best, network) = self
            .best
            .clone()
            .ok_or_else(|| Error::InvalidState("no validation check ran".into()))?;
        Ok(TrainOutcome {
            network,
            final_network: self.network.clone(),
            curve: self.curve.clone(),
            best,
        })
    }
}

/// Minibatch Adam on standardized features; returns the best-validation
/// network together with the full learning curve.
pub fn train(train: &Dataset, validation: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    Trainer::new(config.clone())?.run(train, validation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::N_FEATURES;
    use rand::RngExt;

    /// Three Gaussian blobs in feature space.
    fn blobs(per_class: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for class in ClassLabel::ALL {
            for _ in 0..per_class {
                let mut r = [0.0; N_FEATURES];
                for (j, v) in r.iter_mut().enumerate() {
                    let centre = if j % 3 == class.code() { 1.5 } else { 0.0 };
                    *v = centre + rng.random_range(-1.0..1.0);
                }
                rows.push(r);
                labels.push(class);
            }
        }
        Dataset::new(rows, labels).unwrap()
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            batch_size: 30,
            epochs: 8,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn learns_separable_blobs() {
        let out = train(&blobs(60, 1), &blobs(20, 2), &quick()).unwrap();
        assert!(out.best.validation_accuracy >= 0.9, "{:?}", out.best);
    }

    #[test]
    fn curve_is_ordered_and_validated_on_schedule() {
        let out = train(&blobs(60, 1), &blobs(20, 2), &quick()).unwrap();
        // 180 rows at 30 per batch: 6 minibatches per epoch.
        assert_eq!(out.curve.points.len(), 48);
        for w in out.curve.points.windows(2) {
            assert!((w[0].epoch, w[0].iteration) < (w[1].epoch, w[1].iteration));
        }
        for p in &out.curve.points {
            let expected = p.iteration % 10 == 0 || p.minibatch == 6;
            assert_eq!(p.validation_accuracy.is_some(), expected, "{p:?}");
        }
        let best_seen = out
            .curve
            .points
            .iter()
            .filter_map(|p| p.validation_accuracy)
            .fold(0.0, f64::max);
        assert_eq!(out.best.validation_accuracy, best_seen);
        let first = out
            .curve
            .points
            .iter()
            .find(|p| p.validation_accuracy == Some(best_seen))
            .unwrap();
        assert_eq!(first.iteration, out.best.iteration);
    }

    #[test]
    fn training_is_deterministic() {
        let a = train(&blobs(30, 1), &blobs(10, 2), &quick()).unwrap();
        let b = train(&blobs(30, 1), &blobs(10, 2), &quick()).unwrap();
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.network, b.network);
    }

    #[test]
    fn divergence_is_reported() {
        let mut rows = blobs(30, 1);
        rows.rows_mut()[0][0] = 1e300;
        let cfg = TrainConfig {
            adam: AdamConfig {
                learning_rate: 1e3,
                ..AdamConfig::default()
            },
            ..quick()
        };
        let mut t = Trainer::new(cfg).unwrap();
        let err = t.run(&rows, &blobs(10, 2)).unwrap_err();
        assert!(matches!(err, Error::TrainingDiverged { .. }), "{err}");
    }

    #[test]
    fn csv_has_blank_validation_cells_between_checks() {
        let out = train(
            &blobs(30, 1),
            &blobs(10, 2),
            &TrainConfig {
                epochs: 1,
                ..quick()
            },
        )
        .unwrap();
        let csv = out.curve.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].ends_with(",,"));
        assert!(!lines[3].ends_with(','));
    }

    #[test]
    fn empty_sets_are_rejected() {
        assert!(train(&Dataset::empty(), &blobs(5, 1), &quick()).is_err());
    }
}
