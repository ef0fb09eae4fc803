//! Binary model container.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "EMGNET"                 6-byte magic
//! u32 version              = 1
//! architecture             input u32, n_hidden u32, per hidden block
//!                          (width u32, batch_norm u8, activation u8
//!                          [0 relu, 1 leaky], slope f64, has_dropout u8,
//!                          rate f64, l2 f64), output u32, output_l2 f64,
//!                          bn_epsilon f64, bn_momentum f64
//! layer state              per dense layer: weights (row-major out x in),
//!                          biases; per batch-norm layer: gamma, beta,
//!                          running_mean, running_var (all f64)
//! input scaling            u8 flag, then mean[input] and std[input]
//! metadata                 u32 count, then (u32 len, utf-8) key and value
//! sha256                   32-byte digest of everything above
//! ```

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::network::{
    Activation, Architecture, BatchNormLayer, DenseLayer, DropoutLayer, HiddenSpec, InputScaling,
    Layer, Network,
};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::linalg::Matrix;

pub const MODEL_MAGIC: &[u8; 6] = b"EMGNET";
pub const MODEL_VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        vs.iter().for_each(|&v| self.f64(v));
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::ModelFormat(msg.into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| corrupt("unexpected end of file"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| corrupt("length overflow"))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| corrupt("metadata is not UTF-8"))
    }
}

pub fn encode_model(net: &Network) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MODEL_MAGIC);
    w.u32(MODEL_VERSION as usize);

    let arch = net.architecture();
    w.u32(arch.input);
    w.u32(arch.hidden.len());
    for h in &arch.hidden {
        w.u32(h.width);
        w.u8(h.batch_norm as u8);
        match h.activation {
            Activation::Relu => {
                w.u8(0);
                w.f64(0.0);
            }
            Activation::LeakyRelu(slope) => {
                w.u8(1);
                w.f64(slope);
            }
        }
        w.u8(h.dropout.is_some() as u8);
        w.f64(h.dropout.unwrap_or(0.0));
        w.f64(h.l2);
    }
    w.u32(arch.output);
    w.f64(arch.output_l2);
    w.f64(arch.bn_epsilon);
    w.f64(arch.bn_momentum);

    for layer in net.layers() {
        match layer {
            Layer::Dense(d) => {
                w.f64s(d.weights.as_slice());
                w.f64s(&d.biases);
            }
            Layer::BatchNorm(bn) => {
                w.f64s(&bn.gamma);
                w.f64s(&bn.beta);
                w.f64s(&bn.running_mean);
                w.f64s(&bn.running_var);
            }
            _ => {}
        }
    }

    match &net.input_scaling {
        Some(s) => {
            w.u8(1);
            w.f64s(&s.mean);
            w.f64s(&s.std);
        }
        None => w.u8(0),
    }

    w.u32(net.metadata.len());
    for (k, v) in &net.metadata {
        w.str(k);
        w.str(v);
    }

    let digest = Sha256::digest(&w.0);
    w.0.extend_from_slice(&digest);
    w.0
}

pub fn decode_model(bytes: &[u8]) -> Result<Network> {
    if bytes.len() < MODEL_MAGIC.len() + 4 + 32 {
        return Err(corrupt("file too short"));
    }
    if &bytes[..MODEL_MAGIC.len()] != MODEL_MAGIC {
        return Err(corrupt("missing EMGNET magic"));
    }
    let version = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes"));
    if version != MODEL_VERSION {
        return Err(corrupt(format!(
            "unsupported format version {version} (expected {MODEL_VERSION})"
        )));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(corrupt("checksum mismatch (truncated or corrupted file)"));
    }

    let mut r = Reader {
        bytes: body,
        pos: 10,
    };
    let input = r.u32()?;
    let n_hidden = r.u32()?;
    let mut hidden = Vec::with_capacity(n_hidden.min(1024));
    for _ in 0..n_hidden {
        let width = r.u32()?;
        let batch_norm = r.u8()? != 0;
        let activation = match (r.u8()?, r.f64()?) {
            (0, _) => Activation::Relu,
            (1, slope) => Activation::LeakyRelu(slope),
            (tag, _) => return Err(corrupt(format!("unknown activation tag {tag}"))),
        };
        let has_dropout = r.u8()? != 0;
        let rate = r.f64()?;
        let l2 = r.f64()?;
        hidden.push(HiddenSpec {
            width,
            batch_norm,
            activation,
            dropout: has_dropout.then_some(rate),
            l2,
        });
    }
    let arch = Architecture {
        input,
        hidden,
        output: r.u32()?,
        output_l2: r.f64()?,
        bn_epsilon: r.f64()?,
        bn_momentum: r.f64()?,
    };
    arch.validate().map_err(|e| corrupt(e.to_string()))?;

    let mut layers = Vec::new();
    let mut fan_in = arch.input;
    let dense = |r: &mut Reader, fan_in: usize, fan_out: usize, l2: f64| -> Result<Layer> {
        let weights = Matrix::from_vec(fan_out, fan_in, r.f64s(fan_in * fan_out)?)?;
        Ok(Layer::Dense(DenseLayer {
            weights,
            biases: r.f64s(fan_out)?,
            l2,
        }))
    };
    for h in &arch.hidden {
        layers.push(dense(&mut r, fan_in, h.width, h.l2)?);
        if h.batch_norm {
            layers.push(Layer::BatchNorm(BatchNormLayer {
                gamma: r.f64s(h.width)?,
                beta: r.f64s(h.width)?,
                running_mean: r.f64s(h.width)?,
                running_var: r.f64s(h.width)?,
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
    layers.push(dense(&mut r, fan_in, arch.output, arch.output_l2)?);

    let input_scaling = match r.u8()? {
        0 => None,
        1 => Some(InputScaling {
            mean: r.f64s(arch.input)?,
            std: r.f64s(arch.input)?,
        }),
        tag => return Err(corrupt(format!("bad input-scaling flag {tag}"))),
    };
    let n_meta = r.u32()?;
    let mut metadata = Vec::with_capacity(n_meta.min(4096));
    for _ in 0..n_meta {
        metadata.push((r.str()?, r.str()?));
    }
    if r.pos != body.len() {
        return Err(corrupt("trailing bytes after model body"));
    }

    let mut net = Network::from_parts(arch, layers);
    net.input_scaling = input_scaling;
    net.metadata = metadata;
    Ok(net)
}

pub fn save_model(net: &Network, path: &Path) -> Result<()> {
    write_atomic(path, &encode_model(net))
}

pub fn load_model(path: &Path) -> Result<Network> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
