use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Activation, DenseLayer, LayerSpec};
use crate::error::{check_len, Error, Result};
use crate::rng::{self, Rng};

/// A stack of dense layers. Immutable once trained; `&Network` is safe to
/// share across inference threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub seed: u64,
    pub layers: Vec<DenseLayer>,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Input seen by each layer (the previous layer's output after dropout).
    pub inputs: Vec<Vec<f64>>,
    /// Pre-activations `W x + b`.
    pub pre: Vec<Vec<f64>>,
    /// Activations before dropout.
    pub activated: Vec<Vec<f64>>,
    /// Per-unit dropout multipliers (`0` or `1/(1-p)`); `None` at inference.
    pub masks: Vec<Option<Vec<f64>>>,
    /// Layer outputs after dropout. The last entry is the network output.
    pub outputs: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Parameter gradients, laid out like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, k: f64) {
        self.weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .flat_map(|v| v.iter_mut())
            .for_each(|x| *x *= k);
    }

    /// Flattened in parameter order: layer 0 weights, layer 0 biases, layer 1 ...
    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }
}

impl Network {
    pub fn build(input_dim: usize, specs: &[LayerSpec], seed: u64) -> Result<Self> {
        if input_dim == 0 || specs.is_empty() {
            return Err(Error::InvalidConfig(
                "network needs a nonzero input width and at least one layer".into(),
            ));
        }
        let mut rng = rng::seeded(seed);
        let mut layers = Vec::with_capacity(specs.len());
        let mut width = input_dim;
        for spec in specs {
            layers.push(DenseLayer::init(width, spec, &mut rng));
            width = spec.units;
        }
        let net = Network { seed, layers };
        net.validate()?;
        Ok(net)
    }

    /// Checks dimension chaining, dropout bounds and softmax placement.
    pub fn validate(&self) -> Result<()> {
        let last = self.layers.len().saturating_sub(1);
        for (k, layer) in self.layers.iter().enumerate() {
            if layer.in_dim == 0 || layer.out_dim == 0 {
                return Err(Error::InvalidConfig(format!("layer {k} has a zero dimension")));
            }
            if layer.weights.len() != layer.in_dim * layer.out_dim
                || layer.biases.len() != layer.out_dim
            {
                return Err(Error::Format(format!(
                    "layer {k}: parameter arrays do not match {}x{}",
                    layer.out_dim, layer.in_dim
                )));
            }
            if k > 0 && self.layers[k - 1].out_dim != layer.in_dim {
                return Err(Error::InvalidConfig(format!(
                    "layer {k} expects {} inputs but layer {} produces {}",
                    layer.in_dim,
                    k - 1,
                    self.layers[k - 1].out_dim
                )));
            }
            if !(0.0..1.0).contains(&layer.dropout) {
                return Err(Error::InvalidConfig(format!(
                    "layer {k}: dropout {} outside [0, 1)",
                    layer.dropout
                )));
            }
            if layer.l2 < 0.0 {
                return Err(Error::InvalidConfig(format!("layer {k}: negative l2 factor")));
            }
            if layer.activation == Activation::Softmax && k != last {
                return Err(Error::InvalidConfig(format!(
                    "layer {k}: softmax is only allowed on the output layer"
                )));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    pub fn has_dropout(&self) -> bool {
        self.layers.iter().any(|l| l.dropout > 0.0)
    }

    /// Inference-mode output.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.input_dim(), x.len())?;
        let mut a = x.to_vec();
        for layer in &self.layers {
            a = layer.activation.apply(&layer.affine(&a));
        }
        Ok(a)
    }

    /// Full forward pass. Dropout is active only when `dropout_rng` is given.
    pub fn forward(&self, x: &[f64], mut dropout_rng: Option<&mut Rng>) -> Result<Trace> {
        check_len(self.input_dim(), x.len())?;
        let n = self.layers.len();
        let mut trace = Trace {
            inputs: Vec::with_capacity(n),
            pre: Vec::with_capacity(n),
            activated: Vec::with_capacity(n),
            masks: Vec::with_capacity(n),
            outputs: Vec::with_capacity(n),
        };
        let mut current = x.to_vec();
        for layer in &self.layers {
            let z = layer.affine(&current);
            let a = layer.activation.apply(&z);
            let mask = match dropout_rng.as_deref_mut() {
                Some(rng) if layer.dropout > 0.0 => {
                    let keep = 1.0 - layer.dropout;
                    Some(
                        (0..a.len())
                            .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                            .collect::<Vec<_>>(),
                    )
                }
                _ => None,
            };
            let out = match &mask {
                Some(m) => a.iter().zip(m).map(|(v, k)| v * k).collect(),
                None => a.clone(),
            };
            trace.inputs.push(std::mem::replace(&mut current, out.clone()));
            trace.pre.push(z);
            trace.activated.push(a);
            trace.masks.push(mask);
            trace.outputs.push(out);
        }
        Ok(trace)
    }

    /// Backpropagates `grad_output` (dL/d output) through a recorded trace.
    /// Returns parameter gradients and dL/d input.
    pub fn backward(&self, trace: &Trace, grad_output: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        check_len(self.output_dim(), grad_output.len())?;
        let mut grads = Gradients::zeros_like(self);
        let mut grad = grad_output.to_vec();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            if let Some(mask) = &trace.masks[k] {
                grad.iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
            }
            let dz = layer
                .activation
                .backprop(&trace.pre[k], &trace.activated[k], &grad);
            let input = &trace.inputs[k];
            let gw = &mut grads.weights[k];
            for (o, &d) in dz.iter().enumerate() {
                let row = &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim];
                row.iter_mut().zip(input).for_each(|(g, x)| *g = d * x);
            }
            grads.biases[k].copy_from_slice(&dz);
            let mut dx = vec![0.0; layer.in_dim];
            for (o, &d) in dz.iter().enumerate() {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                dx.iter_mut().zip(row).for_each(|(g, w)| *g += d * w);
            }
            grad = dx;
        }
        Ok((grads, grad))
    }

    /// dL/dx for a frozen network in inference mode.
    pub fn input_gradient(&self, x: &[f64], grad_output: &[f64]) -> Result<Vec<f64>> {
        let trace = self.forward(x, None)?;
        Ok(self.backward(&trace, grad_output)?.1)
    }

    /// Sum of `l2 * ||W||^2` over layers.
    pub fn penalty(&self) -> f64 {
        self.layers.iter().map(DenseLayer::penalty).sum()
    }

    /// Adds the L2 penalty gradient `2 * l2 * W` to `grads`.
    pub fn add_penalty_gradient(&self, grads: &mut Gradients) {
        for (layer, gw) in self.layers.iter().zip(grads.weights.iter_mut()) {
            if layer.l2 != 0.0 {
                gw.iter_mut()
                    .zip(&layer.weights)
                    .for_each(|(g, w)| *g += 2.0 * layer.l2 * w);
            }
        }
    }

    /// Mutable views of every parameter vector in flatten order.
    pub(crate) fn params_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weights, &mut l.biases])
            .collect()
    }
}
