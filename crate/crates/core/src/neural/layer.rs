use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::Activation;
use crate::rng::Rng;

/// Declarative description of one dense layer, used to build networks from
/// configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub units: usize,
    pub activation: Activation,
    #[serde(default)]
    pub l2: f64,
    #[serde(default)]
    pub dropout: f64,
}

impl LayerSpec {
    pub fn new(units: usize, activation: Activation) -> Self {
        LayerSpec {
            units,
            activation,
            l2: 0.0,
            dropout: 0.0,
        }
    }

    pub fn l2(mut self, factor: f64) -> Self {
        self.l2 = factor;
        self
    }

    pub fn dropout(mut self, rate: f64) -> Self {
        self.dropout = rate;
        self
    }
}

/// `a = activation(W x + b)`, optionally followed by inverted dropout while
/// training. `weights` is row-major with shape `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    #[serde(default)]
    pub l2: f64,
    #[serde(default)]
    pub dropout: f64,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    /// He-scaled uniform initialization: `U(-sqrt(6/fan_in), sqrt(6/fan_in))`
    /// has the same variance as He-normal.
    pub fn init(in_dim: usize, spec: &LayerSpec, rng: &mut Rng) -> Self {
        let limit = (6.0 / in_dim as f64).sqrt();
        let weights = (0..in_dim * spec.units)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        DenseLayer {
            in_dim,
            out_dim: spec.units,
            activation: spec.activation,
            l2: spec.l2,
            dropout: spec.dropout,
            weights,
            biases: vec![0.0; spec.units],
        }
    }

    pub fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.in_dim)
            .zip(&self.biases)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    pub(crate) fn penalty(&self) -> f64 {
        if self.l2 == 0.0 {
            return 0.0;
        }
        self.l2 * self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}
