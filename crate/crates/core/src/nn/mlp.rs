//! Fully connected policy network: ReLU hidden layers, sigmoid output.
//!
//! Weights of each layer are stored row-major with shape `(in_dim, out_dim)`,
//! so `W[i * out_dim + o]` connects input `i` to output `o`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Outputs are clipped into `[PROB_CLIP, 1 - PROB_CLIP]`.
pub const PROB_CLIP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
        }
    }

    /// `out = x W + b` (pre-activation).
    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.biases);
        for (xi, row) in x.iter().zip(self.weights.chunks_exact(self.out_dim)) {
            if *xi == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpFile", into = "MlpFile")]
pub struct Mlp {
    layers: Vec<Dense>,
}

#[derive(Serialize, Deserialize)]
struct MlpFile {
    layer_dims: Vec<usize>,
    layers: Vec<Dense>,
}

impl From<Mlp> for MlpFile {
    fn from(mlp: Mlp) -> Self {
        MlpFile {
            layer_dims: mlp.layer_dims(),
            layers: mlp.layers,
        }
    }
}

impl TryFrom<MlpFile> for Mlp {
    type Error = Error;

    fn try_from(file: MlpFile) -> Result<Self> {
        let mlp = Mlp { layers: file.layers };
        if mlp.layers.is_empty() || mlp.layer_dims() != file.layer_dims {
            return Err(Error::Config(format!(
                "checkpoint layer_dims {:?} do not match its layers",
                file.layer_dims
            )));
        }
        for l in &mlp.layers {
            if l.weights.len() != l.in_dim * l.out_dim || l.biases.len() != l.out_dim {
                return Err(Error::Config(format!(
                    "checkpoint layer {}x{} has {} weights and {} biases",
                    l.in_dim,
                    l.out_dim,
                    l.weights.len(),
                    l.biases.len()
                )));
            }
        }
        if !mlp.is_finite() {
            return Err(Error::Config("checkpoint contains non-finite parameters".into()));
        }
        Ok(mlp)
    }
}

/// Gradients with the same layout as the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Mlp {
    /// All-zero network; every output is 0.5.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Argument(format!("invalid layer dims {dims:?}")));
        }
        Ok(Self {
            layers: dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        })
    }

    /// Weights drawn from `N(0, std^2)`, biases zero.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], std: f64, rng: &mut R) -> Result<Self> {
        let mut mlp = Self::zeros(dims)?;
        let normal = Normal::new(0.0, std).map_err(|e| Error::Argument(format!("init std {std}: {e}")))?;
        for layer in &mut mlp.layers {
            for w in &mut layer.weights {
                *w = normal.sample(rng);
            }
        }
        Ok(mlp)
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].in_dim];
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Argument(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("network input is not finite".into()));
        }
        Ok(())
    }

    /// Relaxed placement in `(0, 1)^N` for one input.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut acts = Vec::new();
        self.forward_cached(input, &mut acts);
        let mut out = acts.pop().unwrap_or_default();
        for p in &mut out {
            *p = p.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
        }
        Ok(out)
    }

    /// Runs the network keeping every layer's activation. The last entry
    /// holds unclipped sigmoid outputs.
    fn forward_cached(&self, input: &[f64], acts: &mut Vec<Vec<f64>>) {
        acts.resize_with(self.layers.len(), Vec::new);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let (done, rest) = acts.split_at_mut(i);
            let x = if i == 0 { input } else { &done[i - 1] };
            let out = &mut rest[0];
            layer.affine(x, out);
            if i == last {
                out.iter_mut().for_each(|z| *z = sigmoid(*z));
            } else {
                out.iter_mut().for_each(|z| *z = z.max(0.0));
            }
        }
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            weights: self.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: self.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    /// Mean binary cross-entropy over the batch and output entries, with its
    /// gradient.
    pub fn loss_and_gradients(&self, inputs: &[&[f64]], labels: &[&[f64]]) -> Result<(f64, Gradients)> {
        if inputs.is_empty() || inputs.len() != labels.len() {
            return Err(Error::Argument(format!(
                "batch has {} inputs and {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        let n_out = self.output_dim();
        let scale = 1.0 / (inputs.len() * n_out) as f64;
        let mut grads = self.zero_gradients();
        let mut acts = Vec::new();
        let mut delta = Vec::new();
        let mut delta_prev = Vec::new();
        let mut loss = 0.0;

        for (input, label) in inputs.iter().zip(labels) {
            self.check_input(input)?;
            if label.len() != n_out {
                return Err(Error::Argument(format!("label has {} entries, expected {n_out}", label.len())));
            }
            self.forward_cached(input, &mut acts);
            let out = &acts[acts.len() - 1];
            delta.clear();
            for (&p, &y) in out.iter().zip(label.iter()) {
                let pc = p.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
                loss -= y * pc.ln() + (1.0 - y) * (1.0 - pc).ln();
                // d(BCE)/dz through the sigmoid.
                delta.push((p - y) * scale);
            }

            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let x: &[f64] = if l == 0 { input } else { &acts[l - 1] };
                let gw = &mut grads.weights[l];
                for (xi, grow) in x.iter().zip(gw.chunks_exact_mut(layer.out_dim)) {
                    if *xi == 0.0 {
                        continue;
                    }
                    for (g, d) in grow.iter_mut().zip(&delta) {
                        *g += xi * d;
                    }
                }
                for (g, d) in grads.biases[l].iter_mut().zip(&delta) {
                    *g += d;
                }
                if l == 0 {
                    break;
                }
                delta_prev.clear();
                for (a, row) in x.iter().zip(layer.weights.chunks_exact(layer.out_dim)) {
                    // ReLU passes gradient only where the unit was active.
                    let d = if *a > 0.0 {
                        row.iter().zip(&delta).map(|(w, d)| w * d).sum()
                    } else {
                        0.0
                    };
                    delta_prev.push(d);
                }
                std::mem::swap(&mut delta, &mut delta_prev);
            }
        }
        Ok((loss * scale, grads))
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
