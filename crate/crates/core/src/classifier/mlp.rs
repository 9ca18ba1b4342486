use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::seeded_rng;

/// Predictions are clamped to `[P_MIN, 1 − P_MIN]` before the logarithm.
pub const P_MIN: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub seed: u64,
}

impl MlpConfig {
    /// Shape rule for `2^n × 2^n` matrices: input `2^{2n+1}`, a first hidden
    /// layer twice as wide, then 512 units.
    pub fn for_qubits(n: u32, seed: u64) -> Self {
        let input_dim = 1usize << (2 * n + 1);
        MlpConfig {
            input_dim,
            hidden_dims: vec![2 * input_dim, 512],
            seed,
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        dims.extend(&self.hidden_dims);
        dims.push(1);
        dims
    }
}

/// Fully connected network: ReLU hidden layers, one sigmoid output.
///
/// Parameters live in one flat vector; layer `l` contributes its
/// `dims[l+1] × dims[l]` weight matrix (row-major, one row per output unit)
/// followed by its `dims[l+1]` biases.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(cfg: &MlpConfig) -> Result<Self> {
        let dims = cfg.dims();
        let mut net = Self::zeros(&dims)?;
        let mut rng = seeded_rng(cfg.seed);
        let mut offset = 0;
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_in * fan_out] {
                *p = rng.gen_range(-limit..limit);
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) || dims.last() != Some(&1) {
            return Err(Error::InvalidArgument(format!(
                "layer sizes {dims:?} must be positive and end in a single output"
            )));
        }
        Ok(Mlp {
            dims: dims.to_vec(),
            params: vec![0.0; param_count(dims)],
        })
    }

    pub fn from_parts(dims: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(&dims)?;
        if params.len() != net.params.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for layer sizes {dims:?}, expected {}",
                params.len(),
                net.params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite network parameter".into()));
        }
        net.params = params;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Weights and biases of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (start, fan_in, fan_out) = self.layer_offset(l);
        let w_end = start + fan_in * fan_out;
        (&self.params[start..w_end], &self.params[w_end..w_end + fan_out])
    }

    fn layer_offset(&self, l: usize) -> (usize, usize, usize) {
        let start = param_count(&self.dims[..=l]);
        (start, self.dims[l], self.dims[l + 1])
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "input of length {} for a network expecting {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Activations of every layer, input first; the last entry holds the
    /// output pre-activation.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.dims.len());
        acts.push(x.to_vec());
        for l in 0..self.layers() {
            let (w, b) = self.layer(l);
            let input = &acts[l];
            let last = l + 1 == self.layers();
            let out: Vec<f64> = b
                .iter()
                .enumerate()
                .map(|(j, &bj)| {
                    let row = &w[j * input.len()..(j + 1) * input.len()];
                    let z = bj + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    if last {
                        z
                    } else {
                        z.max(0.0)
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    /// Output probability in `(0, 1)`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let acts = self.activations(x);
        Ok(sigmoid(acts[self.layers()][0]))
    }

    /// Adds the gradient of `bce_loss(forward(x), label)` to `grad` and
    /// returns the loss.
    pub fn accumulate_gradient(&self, x: &[f64], label: u8, grad: &mut [f64]) -> Result<f64> {
        self.check_input(x)?;
        if grad.len() != self.params.len() {
            return Err(Error::DimensionMismatch(format!(
                "gradient buffer of length {}, expected {}",
                grad.len(),
                self.params.len()
            )));
        }
        let acts = self.activations(x);
        let p = sigmoid(acts[self.layers()][0]);
        let y = f64::from(label);
        let loss = bce_loss(p, label);
        // the clamp is flat outside its range, so its derivative vanishes there
        let clamped = !(P_MIN..=1.0 - P_MIN).contains(&p);
        let mut delta = vec![if clamped { 0.0 } else { p - y }];
        for l in (0..self.layers()).rev() {
            let (start, fan_in, fan_out) = self.layer_offset(l);
            let input = &acts[l];
            let w_end = start + fan_in * fan_out;
            for (j, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let g_row = &mut grad[start + j * fan_in..start + (j + 1) * fan_in];
                for (g, a) in g_row.iter_mut().zip(input) {
                    *g += d * a;
                }
                grad[w_end + j] += d;
            }
            if l == 0 {
                break;
            }
            let w = &self.params[start..w_end];
            let mut prev = vec![0.0; fan_in];
            for (j, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (pv, wv) in prev.iter_mut().zip(&w[j * fan_in..(j + 1) * fan_in]) {
                    *pv += d * wv;
                }
            }
            for (pv, a) in prev.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *pv = 0.0;
                }
            }
            delta = prev;
        }
        Ok(loss)
    }

    /// Gradient of `bce_loss(forward(x), label)` with respect to every
    /// parameter, in the flat layout.
    pub fn backprop_gradient(&self, x: &[f64], label: u8) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.params.len()];
        self.accumulate_gradient(x, label, &mut grad)?;
        Ok(grad)
    }
}

/// `−[y ln p + (1 − y) ln(1 − p)]` with `p` clamped away from 0 and 1.
pub fn bce_loss(prediction: f64, label: u8) -> f64 {
    let p = prediction.clamp(P_MIN, 1.0 - P_MIN);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// `d bce_loss / dp`.
pub fn bce_derivative(prediction: f64, label: u8) -> f64 {
    if !(P_MIN..=1.0 - P_MIN).contains(&prediction) {
        return 0.0;
    }
    if label == 1 {
        -1.0 / prediction
    } else {
        1.0 / (1.0 - prediction)
    }
}
