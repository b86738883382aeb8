//! The noise-prediction network: a small fully connected net with SiLU
//! activations mapping (noisy target, timestep embedding, condition) to a
//! predicted noise vector, with hand-rolled reverse-mode gradients.

use crate::seed::Rng;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Dimension of the regression target (nitrate, TSS, CDOM).
pub const TARGET_DIM: usize = 3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dense {
    /// Row-major `out_dim x in_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Dense {
    fn new(in_dim: usize, out_dim: usize, rng: &mut Rng) -> Self {
        // He-style init suits the SiLU hidden layers
        let scale = (2.0 / in_dim as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self {
            weights,
            bias: vec![0.0; out_dim],
            in_dim,
            out_dim,
        }
    }
}

/// Parameter-shaped gradient (or optimizer moment) container.
#[derive(Debug, Clone)]
pub struct Grads {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Grads {
    pub fn zeros_like(model: &Denoiser) -> Self {
        Self {
            weights: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: model.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in self.weights.iter_mut().flatten() {
            *w *= factor;
        }
        for b in self.bias.iter_mut().flatten() {
            *b *= factor;
        }
    }
}

/// Noise predictor `eps_hat(x_t, t, condition)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Denoiser {
    pub layers: Vec<Dense>,
    pub t_embed_dim: usize,
    pub cond_dim: usize,
}

impl Denoiser {
    /// Fresh network with the given hidden widths. `t_embed_dim` must be even.
    pub fn new(hidden: &[usize], t_embed_dim: usize, cond_dim: usize, rng: &mut Rng) -> Self {
        assert!(t_embed_dim >= 2 && t_embed_dim % 2 == 0, "t_embed_dim must be even");
        assert!(!hidden.is_empty(), "need at least one hidden layer");
        let input_dim = TARGET_DIM + t_embed_dim + cond_dim;
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(TARGET_DIM);
        let layers = dims
            .windows(2)
            .map(|w| Dense::new(w[0], w[1], rng))
            .collect();
        Self {
            layers,
            t_embed_dim,
            cond_dim,
        }
    }

    pub fn input_dim(&self) -> usize {
        TARGET_DIM + self.t_embed_dim + self.cond_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Sinusoidal features of the normalized timestep, written into `out`.
    pub fn time_embedding(&self, t: usize, steps: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.t_embed_dim);
        let tau = t as f64 / steps as f64;
        for j in 0..self.t_embed_dim / 2 {
            let angle = std::f64::consts::PI * tau * (1 << j) as f64;
            out[2 * j] = angle.sin();
            out[2 * j + 1] = angle.cos();
        }
    }

    /// Forward pass over a `batch x input_dim` row-major matrix; returns the
    /// `batch x TARGET_DIM` prediction matrix.
    pub fn forward(&self, inputs: &[f64], batch: usize) -> Vec<f64> {
        self.forward_cached(inputs, batch).output
    }

    /// Forward pass that keeps every layer's activations for backprop.
    pub fn forward_cached(&self, inputs: &[f64], batch: usize) -> ForwardCache {
        debug_assert_eq!(inputs.len(), batch * self.input_dim());
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut pre_activations: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut current = inputs.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            activations.push(current.clone());
            let mut z = vec![0.0; batch * layer.out_dim];
            for b in 0..batch {
                let row = &current[b * layer.in_dim..(b + 1) * layer.in_dim];
                let out = &mut z[b * layer.out_dim..(b + 1) * layer.out_dim];
                for (o, out_v) in out.iter_mut().enumerate() {
                    let w = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    let mut acc = layer.bias[o];
                    for (wi, xi) in w.iter().zip(row) {
                        acc += wi * xi;
                    }
                    *out_v = acc;
                }
            }
            pre_activations.push(z.clone());
            if l != last {
                for v in z.iter_mut() {
                    *v = silu(*v);
                }
            }
            current = z;
        }
        ForwardCache {
            batch,
            activations,
            pre_activations,
            output: current,
        }
    }

    /// Reverse-mode accumulation: given `d_loss/d_output` (batch x TARGET_DIM),
    /// add parameter gradients into `grads`.
    pub fn backward(&self, cache: &ForwardCache, d_output: &[f64], grads: &mut Grads) {
        let batch = cache.batch;
        let mut upstream = d_output.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let is_last = l == self.layers.len() - 1;
            let z = &cache.pre_activations[l];
            let x = &cache.activations[l];
            // d_z = upstream (.* silu'(z) unless output layer)
            let mut d_z = upstream;
            if !is_last {
                for (d, &zv) in d_z.iter_mut().zip(z) {
                    *d *= silu_prime(zv);
                }
            }
            let (gw, gb) = (&mut grads.weights[l], &mut grads.bias[l]);
            for b in 0..batch {
                let dz_row = &d_z[b * layer.out_dim..(b + 1) * layer.out_dim];
                let x_row = &x[b * layer.in_dim..(b + 1) * layer.in_dim];
                for (o, &dzo) in dz_row.iter().enumerate() {
                    gb[o] += dzo;
                    let gw_row = &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (g, &xv) in gw_row.iter_mut().zip(x_row) {
                        *g += dzo * xv;
                    }
                }
            }
            // d_x = d_z . W
            if l > 0 {
                let mut d_x = vec![0.0; batch * layer.in_dim];
                for b in 0..batch {
                    let dz_row = &d_z[b * layer.out_dim..(b + 1) * layer.out_dim];
                    let dx_row = &mut d_x[b * layer.in_dim..(b + 1) * layer.in_dim];
                    for (o, &dzo) in dz_row.iter().enumerate() {
                        let w_row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                        for (dx, &w) in dx_row.iter_mut().zip(w_row) {
                            *dx += dzo * w;
                        }
                    }
                }
                upstream = d_x;
            } else {
                break;
            }
        }
    }

    /// Flattened parameter view for finite-difference checks.
    pub fn get_param(&self, layer: usize, is_bias: bool, index: usize) -> f64 {
        if is_bias {
            self.layers[layer].bias[index]
        } else {
            self.layers[layer].weights[index]
        }
    }

    pub fn set_param(&mut self, layer: usize, is_bias: bool, index: usize, value: f64) {
        if is_bias {
            self.layers[layer].bias[index] = value;
        } else {
            self.layers[layer].weights[index] = value;
        }
    }
}

pub struct ForwardCache {
    pub batch: usize,
    /// Input to each layer.
    pub activations: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pub pre_activations: Vec<Vec<f64>>,
    /// Final network output (batch x TARGET_DIM).
    pub output: Vec<f64>,
}

fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

fn silu_prime(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
