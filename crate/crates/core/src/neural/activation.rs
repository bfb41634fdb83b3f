use serde::{Deserialize, Serialize};

/// Element-wise (or, for softmax, vector-wise) nonlinearity.
///
/// Serialized as a bare string for parameterless variants (`"relu"`) and as a
/// single-key table for the rest (`{ leaky_relu = 0.3 }`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
    Elu(f64),
    Tanh,
    Sigmoid,
    Softmax,
    Identity,
}

impl Activation {
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        match *self {
            Activation::Relu => z.iter().map(|&v| v.max(0.0)).collect(),
            Activation::LeakyRelu(slope) => z
                .iter()
                .map(|&v| if v > 0.0 { v } else { slope * v })
                .collect(),
            Activation::Elu(alpha) => z
                .iter()
                .map(|&v| if v > 0.0 { v } else { alpha * v.exp_m1() })
                .collect(),
            Activation::Tanh => z.iter().map(|v| v.tanh()).collect(),
            Activation::Sigmoid => z.iter().map(|&v| sigmoid(v)).collect(),
            Activation::Softmax => softmax(z),
            Activation::Identity => z.to_vec(),
        }
    }

    /// Maps dL/da to dL/dz given the pre-activation `z` and output `a`.
    pub fn backprop(&self, z: &[f64], a: &[f64], grad_a: &[f64]) -> Vec<f64> {
        match *self {
            Activation::Relu => z
                .iter()
                .zip(grad_a)
                .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
                .collect(),
            Activation::LeakyRelu(slope) => z
                .iter()
                .zip(grad_a)
                .map(|(&v, &g)| if v > 0.0 { g } else { slope * g })
                .collect(),
            Activation::Elu(alpha) => z
                .iter()
                .zip(grad_a)
                .map(|(&v, &g)| if v > 0.0 { g } else { g * alpha * v.exp() })
                .collect(),
            Activation::Tanh => a.iter().zip(grad_a).map(|(&y, &g)| g * (1.0 - y * y)).collect(),
            Activation::Sigmoid => a.iter().zip(grad_a).map(|(&y, &g)| g * y * (1.0 - y)).collect(),
            Activation::Softmax => {
                let dot: f64 = a.iter().zip(grad_a).map(|(y, g)| y * g).sum();
                a.iter().zip(grad_a).map(|(&y, &g)| y * (g - dot)).collect()
            }
            Activation::Identity => grad_a.to_vec(),
        }
    }

    /// True for activations whose derivative jumps at zero.
    pub fn has_kink(&self) -> bool {
        matches!(
            self,
            Activation::Relu | Activation::LeakyRelu(_) | Activation::Elu(_)
        )
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
