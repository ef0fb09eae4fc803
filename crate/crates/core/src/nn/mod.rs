//! Dense classifier with batch normalization, dropout, softmax
//! cross-entropy, L2 regularization and Adam, all with hand-written
//! backpropagation in `f64`.

mod adam;
mod model_file;
mod network;


pub use adam::{adam_step, AdamConfig, AdamState};
pub use model_file::{
    decode_model, encode_model, load_model, save_model, MODEL_MAGIC, MODEL_VERSION,
};
pub use network::{
    argmax, cross_entropy, init_network, labels_from_codes, Activation, Architecture,
    BatchNormLayer, DenseLayer, DropoutLayer, ForwardCache, Gradients, HiddenSpec, InputScaling,
    Layer, Mode, Network, BN_EPSILON, BN_MOMENTUM, DEFAULT_DROPOUT, DEFAULT_L2, DEFAULT_WIDTHS,
    LEAKY_SLOPE,
};
