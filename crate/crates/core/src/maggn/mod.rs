//! A small push-forward generator trained on the multi-scale normalized
//! magnitude loss.
//!
//! The network is a plain MLP (tanh hidden layers, identity output) with
//! hand-written backpropagation. The loss gradient with respect to the
//! generated points comes from
//! [`multiscale_loss_and_gradient`](crate::distance::multiscale_loss_and_gradient)
//! and is pushed back through the layers.

mod train;

pub use train::{loss_and_param_gradient, train, Adam, EpochLog, TrainConfig, TrainLog};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::points::{sample_standard_normal, PointSet};
use crate::rng::RngState;

/// One affine layer: `out = W·in + b` with `W` of shape `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    layer_dims: Vec<usize>,
    layers: Vec<Layer>,
}

/// Glorot-uniform weights and zero biases.
pub fn init_generator(rng: &mut RngState, layer_dims: &[usize]) -> Result<Generator> {
    check_layer_dims(layer_dims)?;
    let layers = layer_dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = glorot_bound(fan_in, fan_out);
            let weights = Matrix::from_fn(fan_out, fan_in, |_, _| rng.uniform_range(-bound, bound));
            Layer {
                weights,
                bias: vec![0.0; fan_out],
            }
        })
        .collect();
    Ok(Generator {
        layer_dims: layer_dims.to_vec(),
        layers,
    })
}

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

fn check_layer_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::invalid("a generator needs at least an input and an output width"));
    }
    if dims.contains(&0) {
        return Err(Error::invalid("layer widths must be positive"));
    }
    Ok(())
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `acts[l]` is the input to layer `l`; the last entry is the output.
    acts: Vec<Matrix>,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.acts.last().expect("cache holds at least the input")
    }
}

impl Generator {
    /// Build from explicit layers; shapes must chain.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("a generator needs at least one layer"));
        }
        let mut dims = vec![layers[0].weights.cols()];
        for (i, l) in layers.iter().enumerate() {
            if l.weights.cols() != *dims.last().unwrap() {
                return Err(Error::DimensionMismatch {
                    expected: *dims.last().unwrap(),
                    found: l.weights.cols(),
                });
            }
            if l.bias.len() != l.weights.rows() {
                return Err(Error::invalid(format!("layer {i}: bias length does not match weight rows")));
            }
            if l.weights.as_slice().iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("layer {i} has non-finite parameters")));
            }
            dims.push(l.weights.rows());
        }
        check_layer_dims(&dims)?;
        Ok(Generator {
            layer_dims: dims,
            layers,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn z_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn data_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.as_slice().len() + l.bias.len()).sum()
    }

    /// Parameters flattened layer by layer: weights (row-major), then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                found: params.len(),
            });
        }
        let mut off = 0;
        for l in &mut self.layers {
            let (r, c) = (l.weights.rows(), l.weights.cols());
            l.weights = Matrix::from_vec(r, c, params[off..off + r * c].to_vec())?;
            off += r * c;
            l.bias.copy_from_slice(&params[off..off + r]);
            off += r;
        }
        Ok(())
    }

    pub fn forward(&self, z: &PointSet) -> Result<PointSet> {
        let cache = self.forward_cached(z)?;
        PointSet::new(self.data_dim(), cache.output().as_slice().to_vec())
    }

    pub fn forward_cached(&self, z: &PointSet) -> Result<ForwardCache> {
        if z.dim() != self.z_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.z_dim(),
                found: z.dim(),
            });
        }
        let n = z.len();
        let mut acts = vec![Matrix::from_vec(n, z.dim(), z.as_slice().to_vec())?];
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let input = acts.last().unwrap();
            let w = &layer.weights;
            let mut out = Matrix::zeros(n, w.rows());
            for i in 0..n {
                let a = input.row(i);
                for o in 0..w.rows() {
                    let h = layer.bias[o] + dot(w.row(o), a);
                    out.set(i, o, if li < last { h.tanh() } else { h });
                }
            }
            acts.push(out);
        }
        Ok(ForwardCache { acts })
    }

    /// Parameter gradient (flattened as in [`Generator::params`]) given
    /// `d loss / d output`, one row per sample.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Matrix) -> Result<Vec<f64>> {
        let out = cache.output();
        if grad_out.rows() != out.rows() || grad_out.cols() != out.cols() {
            return Err(Error::DimensionMismatch {
                expected: out.rows() * out.cols(),
                found: grad_out.rows() * grad_out.cols(),
            });
        }
        let n = out.rows();
        let last = self.layers.len() - 1;
        let mut per_layer: Vec<Vec<f64>> = vec![Vec::new(); self.layers.len()];
        let mut upstream = grad_out.clone();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let w = &layer.weights;
            let input = &cache.acts[li];
            let output = &cache.acts[li + 1];
            // Gradient at the pre-activation.
            let dh = if li < last {
                Matrix::from_fn(n, w.rows(), |i, o| {
                    let a = output.get(i, o);
                    upstream.get(i, o) * (1.0 - a * a)
                })
            } else {
                upstream
            };
            let mut gw = Matrix::zeros(w.rows(), w.cols());
            let mut gb = vec![0.0; w.rows()];
            for i in 0..n {
                let a = input.row(i);
                for (o, b) in gb.iter_mut().enumerate() {
                    let d = dh.get(i, o);
                    *b += d;
                    for (g, &ai) in gw.row_mut(o).iter_mut().zip(a) {
                        *g += d * ai;
                    }
                }
            }
            let mut flat = gw.into_vec();
            flat.extend(gb);
            per_layer[li] = flat;
            upstream = Matrix::from_fn(n, w.cols(), |i, c| (0..w.rows()).map(|o| dh.get(i, o) * w.get(o, c)).sum());
        }
        Ok(per_layer.concat())
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&Checkpoint::from(self))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        ck.into_generator()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `n` outputs from fresh standard-normal inputs.
pub fn sample(gen: &Generator, rng: &mut RngState, n: usize) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let z = sample_standard_normal(rng, n, gen.z_dim());
    gen.forward(&z)
}

/// The 2D shifted-Gaussian toy task: `TOY_SIZE` points from
/// N(`TOY_MEAN`, `TOY_STD`²·I).
pub const TOY_MEAN: [f64; 2] = [3.0, 3.0];
pub const TOY_STD: f64 = 0.25;
pub const TOY_SIZE: usize = 512;
pub const TOY_LAYERS: [usize; 4] = [2, 32, 32, 2];
pub const TOY_SCHEDULE: &str = "0.5@1,1.5@100,3.0@200";
pub const TOY_EPOCHS: u32 = 300;

pub fn toy_target(rng: &mut RngState) -> PointSet {
    crate::points::sample_gaussian(rng, TOY_SIZE, 2, &TOY_MEAN, TOY_STD).expect("valid toy parameters")
}

pub const CHECKPOINT_FORMAT: &str = "magmetric-generator";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointLayer {
    rows: usize,
    cols: usize,
    /// Row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    layer_dims: Vec<usize>,
    activation: String,
    layers: Vec<CheckpointLayer>,
}

impl From<&Generator> for Checkpoint {
    fn from(g: &Generator) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            layer_dims: g.layer_dims.clone(),
            activation: "tanh".to_string(),
            layers: g
                .layers
                .iter()
                .map(|l| CheckpointLayer {
                    rows: l.weights.rows(),
                    cols: l.weights.cols(),
                    weights: l.weights.as_slice().to_vec(),
                    bias: l.bias.clone(),
                })
                .collect(),
        }
    }
}

impl Checkpoint {
    fn into_generator(self) -> Result<Generator> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let layers = self
            .layers
            .into_iter()
            .map(|l| {
                Ok(Layer {
                    weights: Matrix::from_vec(l.rows, l.cols, l.weights)?,
                    bias: l.bias,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let g = Generator::from_layers(layers)?;
        if g.layer_dims != self.layer_dims {
            return Err(Error::invalid("checkpoint layer_dims disagree with its layers"));
        }
        Ok(g)
    }
}
