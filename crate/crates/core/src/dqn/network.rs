//! Fully connected Q-network with rectifier hidden layers and a linear
//! output, trained by hand-written backpropagation.
//!
//! Parameters live in one flat vector. Layer `l` maps `n_in -> n_out` and
//! stores its weights row-major (`n_out x n_in`) followed by `n_out` biases.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
    offsets: Vec<usize>,
}

fn layer_offsets(sizes: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut at = 0;
    offsets.push(0);
    for w in sizes.windows(2) {
        at += w[0] * w[1] + w[1];
        offsets.push(at);
    }
    offsets
}

impl QNetwork {
    /// All-zero network.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(invalid(
                "layer_sizes",
                "need at least input and output layers, all non-empty",
            ));
        }
        let offsets = layer_offsets(layer_sizes);
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            params: vec![0.0; *offsets.last().unwrap()],
            offsets,
        })
    }

    /// He-normal weights on every layer, zero biases.
    pub fn random<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes)?;
        for l in 0..net.num_layers() {
            let (n_in, n_out) = (net.layer_sizes[l], net.layer_sizes[l + 1]);
            let normal = Normal::new(0.0, (2.0 / n_in as f64).sqrt()).expect("finite std");
            let start = net.offsets[l];
            for w in &mut net.params[start..start + n_in * n_out] {
                *w = normal.sample(rng);
            }
        }
        Ok(net)
    }

    pub fn from_parts(layer_sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes)?;
        check_len(net.params.len(), params.len())?;
        if params.iter().any(|p| !p.is_finite()) {
            return Err(invalid("params", "must be finite"));
        }
        net.params = params;
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Index of the weight from input `i` to output `o` of layer `l`.
    pub fn weight_index(&self, l: usize, o: usize, i: usize) -> usize {
        self.offsets[l] + o * self.layer_sizes[l] + i
    }

    pub fn bias_index(&self, l: usize, o: usize) -> usize {
        let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
        self.offsets[l] + n_in * n_out + o
    }

    fn affine(&self, l: usize, input: &[f64], out: &mut Vec<f64>) {
        let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
        let w = &self.params[self.offsets[l]..self.offsets[l] + n_in * n_out];
        let b = &self.params[self.offsets[l] + n_in * n_out..self.offsets[l + 1]];
        out.clear();
        out.extend(
            w.chunks_exact(n_in)
                .zip(b)
                .map(|(row, bias)| bias + row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>()),
        );
    }

    /// Pre-activations of every layer for one input.
    fn trace(&self, state: &[f64]) -> Vec<Vec<f64>> {
        let mut pre = Vec::with_capacity(self.num_layers());
        let mut act = state.to_vec();
        for l in 0..self.num_layers() {
            let mut z = Vec::new();
            self.affine(l, &act, &mut z);
            act = if l + 1 < self.num_layers() {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                z.clone()
            };
            pre.push(z);
        }
        pre
    }

    /// Q-values for every action.
    pub fn forward(&self, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.input_dim() {
            return Err(Error::LengthMismatch {
                expected: self.input_dim(),
                found: state.len(),
            });
        }
        let mut act = state.to_vec();
        let mut z = Vec::new();
        for l in 0..self.num_layers() {
            self.affine(l, &act, &mut z);
            if l + 1 < self.num_layers() {
                act.clear();
                act.extend(z.iter().map(|v| v.max(0.0)));
            }
        }
        Ok(z)
    }

    /// Loss `mean_i (Q(s_i)[a_i] - y_i)^2` and its gradient with respect to
    /// every parameter, with the targets `y_i` held constant.
    pub fn loss_and_gradient(
        &self,
        states: &[&[f64]],
        actions: &[usize],
        targets: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        check_len(states.len(), actions.len())?;
        check_len(states.len(), targets.len())?;
        if states.is_empty() {
            return Err(Error::EmptyInput("minibatch"));
        }
        let batch = states.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let last = self.num_layers() - 1;
        for ((&state, &action), &target) in states.iter().zip(actions).zip(targets) {
            if state.len() != self.input_dim() {
                return Err(Error::LengthMismatch {
                    expected: self.input_dim(),
                    found: state.len(),
                });
            }
            if action >= self.output_dim() {
                return Err(Error::InvalidAction {
                    action,
                    count: self.output_dim(),
                });
            }
            let pre = self.trace(state);
            let err = pre[last][action] - target;
            loss += err * err;

            // Sparse delta at the output: only the taken action carries error.
            let mut delta = vec![0.0; self.output_dim()];
            delta[action] = 2.0 * err / batch;
            for l in (0..=last).rev() {
                let n_in = self.layer_sizes[l];
                let input: Vec<f64> = if l == 0 {
                    state.to_vec()
                } else {
                    pre[l - 1].iter().map(|v| v.max(0.0)).collect()
                };
                let mut back = vec![0.0; n_in];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = self.weight_index(l, o, 0);
                    for i in 0..n_in {
                        grad[row + i] += d * input[i];
                        back[i] += d * self.params[row + i];
                    }
                    grad[self.bias_index(l, o)] += d;
                }
                if l > 0 {
                    for (b, z) in back.iter_mut().zip(&pre[l - 1]) {
                        if *z <= 0.0 {
                            *b = 0.0;
                        }
                    }
                }
                delta = back;
            }
        }
        Ok((loss / batch, grad))
    }

    /// `params <- params - step * grad`.
    pub fn descend(&mut self, grad: &[f64], step: f64) -> Result<()> {
        check_len(self.params.len(), grad.len())?;
        for (p, g) in self.params.iter_mut().zip(grad) {
            *p -= step * g;
        }
        Ok(())
    }
}

pub const CHECKPOINT_FORMAT: &str = "hoverbeam-qnet";
pub const CHECKPOINT_VERSION: u32 = 1;

/// On-disk form of a trained network: a JSON document with the layer
/// sizes, the flat parameter vector and the hash of the configuration that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub layer_sizes: Vec<usize>,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(net: &QNetwork, config_hash: &str) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            config_hash: config_hash.to_string(),
            layer_sizes: net.layer_sizes.clone(),
            params: net.params.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cp: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if cp.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "unexpected format `{}`",
                cp.format
            )));
        }
        if cp.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {}",
                cp.version
            )));
        }
        Ok(cp)
    }

    pub fn network(&self) -> Result<QNetwork> {
        QNetwork::from_parts(&self.layer_sizes, self.params.clone())
    }
}
