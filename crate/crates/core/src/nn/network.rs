use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::signal::{ClassLabel, N_FEATURES};

/// Hidden-unit nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu(slope) => {
                if x > 0.0 {
                    x
                } else {
                    slope * x
                }
            }
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(slope) => {
                if x > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
        }
    }
}

/// One hidden block: `dense -> [batch norm] -> activation -> [dropout]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenSpec {
    pub width: usize,
    pub batch_norm: bool,
    pub activation: Activation,
    pub dropout: Option<f64>,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub input: usize,
    pub hidden: Vec<HiddenSpec>,
    pub output: usize,
    pub output_l2: f64,
    pub bn_epsilon: f64,
    pub bn_momentum: f64,
}

pub const DEFAULT_L2: f64 = 1e-6;
pub const DEFAULT_DROPOUT: f64 = 0.5;
pub const LEAKY_SLOPE: f64 = 0.01;
pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;
pub const DEFAULT_WIDTHS: [usize; 6] = [N_FEATURES, 120, 90, 30, 5, ClassLabel::COUNT];

impl Architecture {
    /// The 27-120-90-30-5-3 classifier: batch norm after dense 1 and 3,
    /// dropout after dense 2, leaky ReLU on blocks 1-3, ReLU on block 4 and L2
    /// on dense 1-3.
    pub fn standard() -> Self {
        Architecture::standard_with(&DEFAULT_WIDTHS, DEFAULT_DROPOUT, DEFAULT_L2)
            .expect("default widths are valid")
    }

    /// Same block layout with other widths, dropout rate and L2 strength.
    pub fn standard_with(widths: &[usize], dropout: f64, l2: f64) -> Result<Self> {
        if widths.len() != 6 {
            return Err(Error::Config(format!(
                "the block layout needs 6 widths, got {}",
                widths.len()
            )));
        }
        let leaky = Activation::LeakyRelu(LEAKY_SLOPE);
        let block = |width, batch_norm, activation, dropout: Option<f64>, l2| HiddenSpec {
            width,
            batch_norm,
            activation,
            dropout,
            l2,
        };
        let arch = Architecture {
            input: widths[0],
            hidden: vec![
                block(widths[1], true, leaky, None, l2),
                block(widths[2], false, leaky, Some(dropout), l2),
                block(widths[3], true, leaky, None, l2),
                block(widths[4], false, Activation::Relu, None, 0.0),
            ],
            output: widths[5],
            output_l2: 0.0,
            bn_epsilon: BN_EPSILON,
            bn_momentum: BN_MOMENTUM,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.output == 0 || self.hidden.iter().any(|h| h.width == 0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        for h in &self.hidden {
            if let Some(rate) = h.dropout {
                if !(0.0..1.0).contains(&rate) {
                    return Err(Error::Config(format!("dropout rate {rate} not in [0, 1)")));
                }
            }
            if !(h.l2 >= 0.0) {
                return Err(Error::Config("l2 must be non-negative".into()));
            }
        }
        if !(self.output_l2 >= 0.0) {
            return Err(Error::Config("l2 must be non-negative".into()));
        }
        if !(self.bn_epsilon > 0.0) || !(self.bn_momentum > 0.0 && self.bn_momentum < 1.0) {
            return Err(Error::Config("bad batch-norm epsilon or momentum".into()));
        }
        Ok(())
    }

    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input)
            .chain(self.hidden.iter().map(|h| h.width))
            .chain(std::iter::once(self.output))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out x in`.
    pub weights: Matrix,
    pub biases: Vec<f64>,
    pub l2: f64,
}

impl DenseLayer {
    fn forward(&self, x: &Matrix) -> Matrix {
        let mut y = x.matmul_transposed(&self.weights);
        for i in 0..y.rows() {
            for (v, b) in y.row_mut(i).iter_mut().zip(&self.biases) {
                *v += b;
            }
        }
        y
    }

    fn penalty(&self) -> f64 {
        if self.l2 == 0.0 {
            return 0.0;
        }
        let sq: f64 = self
            .weights
            .as_slice()
            .iter()
            .chain(&self.biases)
            .map(|w| w * w)
            .sum();
        self.l2 * sq
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormLayer {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutLayer {
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(DenseLayer),
    BatchNorm(BatchNormLayer),
    Activation(Activation),
    Dropout(DropoutLayer),
}

/// Whether batch statistics and dropout are live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Per-feature input centring and scaling applied before the first layer.
#[derive(Debug, Clone, PartialEq)]
pub struct InputScaling {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl InputScaling {
    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }
}

/// A feed-forward classifier with a softmax head.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Architecture,
    layers: Vec<Layer>,
    /// Optional preprocessing stored alongside the weights; not applied by
    /// [`Network::forward_eval`], which expects already scaled input.
    pub input_scaling: Option<InputScaling>,
    /// Free-form key/value record of the training configuration.
    pub metadata: Vec<(String, String)>,
}

/// Builds a network for `widths` using the standard block layout.
pub fn init_network(seed: u64, widths: &[usize]) -> Result<Network> {
    Network::init(
        &Architecture::standard_with(widths, DEFAULT_DROPOUT, DEFAULT_L2)?,
        seed,
    )
}

pub(crate) enum LayerCache {
    Dense {
        input: Matrix,
    },
    BatchNorm {
        normalized: Matrix,
        inv_std: Vec<f64>,
        mean: Vec<f64>,
        var: Vec<f64>,
    },
    Activation {
        input: Matrix,
    },
    Dropout {
        mask: Matrix,
    },
}

/// Intermediates of a training-mode forward pass, consumed by backward.
pub struct ForwardCache {
    pub(crate) layers: Vec<LayerCache>,
    probabilities: Matrix,
}

impl ForwardCache {
    pub fn probabilities(&self) -> &Matrix {
        &self.probabilities
    }

    /// Dropout masks in layer order (entries are `0` or `1 / (1 - rate)`).
    pub fn dropout_masks(&self) -> Vec<Matrix> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                LayerCache::Dropout { mask } => Some(mask.clone()),
                _ => None,
            })
            .collect()
    }
}

/// Parameter gradients, in [`Network::parameters`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

fn softmax_rows(logits: &mut Matrix) {
    for i in 0..logits.rows() {
        let row = logits.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
}

/// Mean negative log-likelihood of the true classes.
pub fn cross_entropy(probabilities: &Matrix, labels: &[ClassLabel]) -> Result<f64> {
    if probabilities.rows() != labels.len() {
        return Err(Error::shape(
            format!("{} labels", probabilities.rows()),
            format!("{} labels", labels.len()),
        ));
    }
    if probabilities.cols() != ClassLabel::COUNT {
        return Err(Error::shape(
            format!("{} columns", ClassLabel::COUNT),
            format!("{} columns", probabilities.cols()),
        ));
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput("no rows to score".into()));
    }
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, l)| -probabilities[(i, l.code())].ln())
        .sum();
    Ok(total / labels.len() as f64)
}

/// Converts integer codes to labels, rejecting anything outside `0..=2`.
pub fn labels_from_codes(codes: &[i64]) -> Result<Vec<ClassLabel>> {
    codes.iter().map(|&c| ClassLabel::from_code(c)).collect()
}

impl Network {
    /// He-uniform dense weights, zero biases, unit gamma, zero beta.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dense = |fan_in: usize, fan_out: usize, l2: f64| {
            let limit = (6.0 / fan_in as f64).sqrt();
            let weights = Matrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-limit..limit));
            Layer::Dense(DenseLayer {
                weights,
                biases: vec![0.0; fan_out],
                l2,
            })
        };

        let mut layers = Vec::new();
        let mut fan_in = arch.input;
        for h in &arch.hidden {
            layers.push(dense(fan_in, h.width, h.l2));
            if h.batch_norm {
                layers.push(Layer::BatchNorm(BatchNormLayer {
                    gamma: vec![1.0; h.width],
                    beta: vec![0.0; h.width],
                    running_mean: vec![0.0; h.width],
                    running_var: vec![1.0; h.width],
                    momentum: arch.bn_momentum,
                    epsilon: arch.bn_epsilon,
                }));
            }
            layers.push(Layer::Activation(h.activation));
            if let Some(rate) = h.dropout {
                layers.push(Layer::Dropout(DropoutLayer { rate }));
            }
            fan_in = h.width;
        }
        layers.push(dense(fan_in, arch.output, arch.output_l2));

        Ok(Network {
            arch: arch.clone(),
            layers,
            input_scaling: None,
            metadata: Vec::new(),
        })
    }

    pub(crate) fn from_parts(arch: Architecture, layers: Vec<Layer>) -> Self {
        Network {
            arch,
            layers,
            input_scaling: None,
            metadata: Vec::new(),
        }
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.arch.input
    }

    pub fn output_width(&self) -> usize {
        self.arch.output
    }

    pub fn dense_layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Dense(d) => Some(d),
            _ => None,
        })
    }

    /// Trainable tensors: per dense layer weights then biases, per batch-norm
    /// layer gamma then beta, in layer order.
    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.push(d.weights.as_slice());
                    out.push(d.biases.as_slice());
                }
                Layer::BatchNorm(bn) => {
                    out.push(bn.gamma.as_slice());
                    out.push(bn.beta.as_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.push(d.weights.as_mut_slice());
                    out.push(d.biases.as_mut_slice());
                }
                Layer::BatchNorm(bn) => {
                    out.push(bn.gamma.as_mut_slice());
                    out.push(bn.beta.as_mut_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    /// Sum of `l2 * (w^2 + b^2)` over the regularized dense layers.
    pub fn l2_penalty(&self) -> f64 {
        self.dense_layers().map(DenseLayer::penalty).sum()
    }

    /// Cross-entropy plus the L2 penalty.
    pub fn loss(&self, probabilities: &Matrix, labels: &[ClassLabel]) -> Result<f64> {
        Ok(cross_entropy(probabilities, labels)? + self.l2_penalty())
    }

    fn check_input(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.arch.input {
            return Err(Error::shape(
                format!("{} columns", self.arch.input),
                format!("{} columns", batch.cols()),
            ));
        }
        if batch.rows() == 0 {
            return Err(Error::EmptyInput("empty batch".into()));
        }
        if !batch.is_finite() {
            return Err(Error::BadInput("batch has non-finite entries".into()));
        }
        Ok(())
    }

    /// Class probabilities using running batch-norm statistics and no dropout.
    pub fn forward_eval(&self, batch: &Matrix) -> Result<Matrix> {
        self.check_input(batch)?;
        let mut x = batch.clone();
        for layer in &self.layers {
            x = match layer {
                Layer::Dense(d) => d.forward(&x),
                Layer::BatchNorm(bn) => {
                    let scale: Vec<f64> = bn
                        .running_var
                        .iter()
                        .zip(&bn.gamma)
                        .map(|(v, g)| g / (v + bn.epsilon).sqrt())
                        .collect();
                    for i in 0..x.rows() {
                        for (j, v) in x.row_mut(i).iter_mut().enumerate() {
                            *v = (*v - bn.running_mean[j]) * scale[j] + bn.beta[j];
                        }
                    }
                    x
                }
                Layer::Activation(a) => {
                    x.map_inplace(|v| a.apply(v));
                    x
                }
                Layer::Dropout(_) => x,
            };
        }
        softmax_rows(&mut x);
        Ok(x)
    }

    /// Dispatches on `mode`; training mode draws dropout masks from `rng`.
    pub fn forward(&self, batch: &Matrix, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Matrix> {
        match mode {
            Mode::Eval => self.forward_eval(batch),
            Mode::Train => Ok(self.forward_train(batch, rng)?.probabilities),
        }
    }

    /// Training-mode pass with batch statistics and freshly drawn dropout
    /// masks (inverted scaling).
    pub fn forward_train(&self, batch: &Matrix, rng: &mut ChaCha8Rng) -> Result<ForwardCache> {
        self.check_input(batch)?;
        let mut masks = Vec::new();
        let mut width = self.arch.input;
        for layer in &self.layers {
            match layer {
                Layer::Dense(d) => width = d.biases.len(),
                Layer::Dropout(dr) => {
                    let keep = 1.0 / (1.0 - dr.rate);
                    masks.push(Matrix::from_fn(batch.rows(), width, |_, _| {
                        if rng.random::<f64>() < dr.rate {
                            0.0
                        } else {
                            keep
                        }
                    }));
                }
                _ => {}
            }
        }
        self.forward_train_with_masks(batch, &masks)
    }

    /// Training-mode pass with caller-supplied dropout masks, one per dropout
    /// layer, each shaped like that layer's activations.
    pub fn forward_train_with_masks(
        &self,
        batch: &Matrix,
        masks: &[Matrix],
    ) -> Result<ForwardCache> {
        self.check_input(batch)?;
        let n_dropout = self
            .layers
            .iter()
            .filter(|l| matches!(l, Layer::Dropout(_)))
            .count();
        if masks.len() != n_dropout {
            return Err(Error::shape(
                format!("{n_dropout} dropout masks"),
                format!("{}", masks.len()),
            ));
        }
        let mut masks = masks.iter();
        let n = batch.rows() as f64;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut x = batch.clone();
        for layer in &self.layers {
            x = match layer {
                Layer::Dense(d) => {
                    let y = d.forward(&x);
                    caches.push(LayerCache::Dense { input: x });
                    y
                }
                Layer::BatchNorm(bn) => {
                    let mean = x.column_means();
                    let mut var = vec![0.0; x.cols()];
                    for row in x.iter_rows() {
                        for ((acc, v), m) in var.iter_mut().zip(row).zip(&mean) {
                            *acc += (v - m) * (v - m);
                        }
                    }
                    var.iter_mut().for_each(|v| *v /= n);
                    let inv_std: Vec<f64> =
                        var.iter().map(|v| 1.0 / (v + bn.epsilon).sqrt()).collect();
                    let mut normalized = x;
                    for i in 0..normalized.rows() {
                        for (j, v) in normalized.row_mut(i).iter_mut().enumerate() {
                            *v = (*v - mean[j]) * inv_std[j];
                        }
                    }
                    let mut y = normalized.clone();
                    for i in 0..y.rows() {
                        for (j, v) in y.row_mut(i).iter_mut().enumerate() {
                            *v = bn.gamma[j] * *v + bn.beta[j];
                        }
                    }
                    caches.push(LayerCache::BatchNorm {
                        normalized,
                        inv_std,
                        mean,
                        var,
                    });
                    y
                }
                Layer::Activation(a) => {
                    let mut y = x.clone();
                    y.map_inplace(|v| a.apply(v));
                    caches.push(LayerCache::Activation { input: x });
                    y
                }
                Layer::Dropout(_) => {
                    let mask = masks.next().expect("mask count checked");
                    if mask.shape() != x.shape() {
                        return Err(Error::shape(
                            format!("{:?} dropout mask", x.shape()),
                            format!("{:?}", mask.shape()),
                        ));
                    }
                    let mut y = x;
                    for (v, m) in y.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                        *v *= m;
                    }
                    caches.push(LayerCache::Dropout { mask: mask.clone() });
                    y
                }
            };
        }
        softmax_rows(&mut x);
        Ok(ForwardCache {
            layers: caches,
            probabilities: x,
        })
    }

    /// Analytic gradients of [`Network::loss`] for the batch in `cache`.
    pub fn backward(&self, cache: &ForwardCache, labels: &[ClassLabel]) -> Result<Gradients> {
        if cache.layers.len() != self.layers.len() {
            return Err(Error::InvalidState(
                "forward cache does not belong to this network".into(),
            ));
        }
        let n = cache.probabilities.rows();
        if labels.len() != n {
            return Err(Error::InvalidState(format!(
                "cache holds {n} rows but {} labels were given",
                labels.len()
            )));
        }

        // Softmax + cross-entropy: d loss / d logits = (P - Y) / n.
        let mut grad = cache.probabilities.clone();
        for (i, l) in labels.iter().enumerate() {
            grad[(i, l.code())] -= 1.0;
        }
        grad.map_inplace(|v| v / n as f64);

        let mut tensors_rev: Vec<Vec<f64>> = Vec::new();
        for (layer, lc) in self.layers.iter().zip(&cache.layers).rev() {
            grad = match (layer, lc) {
                (Layer::Dense(d), LayerCache::Dense { input }) => {
                    let mut dw = grad.transposed_matmul(input);
                    let mut db = grad.column_sums();
                    if d.l2 != 0.0 {
                        for (g, w) in dw.as_mut_slice().iter_mut().zip(d.weights.as_slice()) {
                            *g += 2.0 * d.l2 * w;
                        }
                        for (g, b) in db.iter_mut().zip(&d.biases) {
                            *g += 2.0 * d.l2 * b;
                        }
                    }
                    let dx = grad.matmul(&d.weights);
                    tensors_rev.push(db);
                    tensors_rev.push(dw.into_vec());
                    dx
                }
                (
                    Layer::BatchNorm(bn),
                    LayerCache::BatchNorm {
                        normalized,
                        inv_std,
                        ..
                    },
                ) => {
                    let cols = grad.cols();
                    let mut dgamma = vec![0.0; cols];
                    let mut dbeta = vec![0.0; cols];
                    let mut sum_dxhat = vec![0.0; cols];
                    let mut sum_dxhat_xhat = vec![0.0; cols];
                    for i in 0..n {
                        for j in 0..cols {
                            let g = grad[(i, j)];
                            let xh = normalized[(i, j)];
                            dgamma[j] += g * xh;
                            dbeta[j] += g;
                            let dxh = g * bn.gamma[j];
                            sum_dxhat[j] += dxh;
                            sum_dxhat_xhat[j] += dxh * xh;
                        }
                    }
                    let nf = n as f64;
                    let mut dx = Matrix::zeros(n, cols);
                    for i in 0..n {
                        for j in 0..cols {
                            let dxh = grad[(i, j)] * bn.gamma[j];
                            dx[(i, j)] = inv_std[j] / nf
                                * (nf * dxh
                                    - sum_dxhat[j]
                                    - normalized[(i, j)] * sum_dxhat_xhat[j]);
                        }
                    }
                    tensors_rev.push(dbeta);
                    tensors_rev.push(dgamma);
                    dx
                }
                (Layer::Activation(a), LayerCache::Activation { input }) => {
                    for (g, x) in grad.as_mut_slice().iter_mut().zip(input.as_slice()) {
                        *g *= a.derivative(*x);
                    }
                    grad
                }
                (Layer::Dropout(_), LayerCache::Dropout { mask }) => {
                    for (g, m) in grad.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                        *g *= m;
                    }
                    grad
                }
                _ => {
                    return Err(Error::InvalidState(
                        "forward cache layout does not match the network".into(),
                    ))
                }
            };
        }
        tensors_rev.reverse();
        Ok(Gradients {
            tensors: tensors_rev,
        })
    }

    /// Folds the batch statistics of a training pass into the running
    /// estimates: `running = momentum * running + (1 - momentum) * batch`,
    /// using the unbiased batch variance.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) -> Result<()> {
        if cache.layers.len() != self.layers.len() {
            return Err(Error::InvalidState(
                "forward cache does not belong to this network".into(),
            ));
        }
        let n = cache.probabilities.rows() as f64;
        let unbias = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
        for (layer, lc) in self.layers.iter_mut().zip(&cache.layers) {
            if let (Layer::BatchNorm(bn), LayerCache::BatchNorm { mean, var, .. }) = (layer, lc) {
                let m = bn.momentum;
                for j in 0..mean.len() {
                    bn.running_mean[j] = m * bn.running_mean[j] + (1.0 - m) * mean[j];
                    bn.running_var[j] = m * bn.running_var[j] + (1.0 - m) * var[j] * unbias;
                }
            }
        }
        Ok(())
    }

    /// Predicted class per row; ties go to the lowest class index.
    pub fn predict(&self, batch: &Matrix) -> Result<Vec<ClassLabel>> {
        let probs = self.forward_eval(batch)?;
        probs
            .iter_rows()
            .map(|row| ClassLabel::from_code(argmax(row) as i64))
            .collect()
    }
}

/// Index of the largest entry, first one on ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
