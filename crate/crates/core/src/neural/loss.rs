use super::Network;
use crate::error::{check_len, Error, Result};

/// Probabilities are clamped to at least this value before taking logs.
pub const PROB_EPS: f64 = 1e-12;

pub fn one_hot(label: usize, classes: usize) -> Result<Vec<f64>> {
    if label >= classes {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    let mut v = vec![0.0; classes];
    v[label] = 1.0;
    Ok(v)
}

/// `-sum_k t_k ln(max(p_k, eps))`, natural log.
pub fn crossentropy(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_len(target.len(), pred.len())?;
    Ok(pred
        .iter()
        .zip(target)
        .filter(|(_, &t)| t != 0.0)
        .map(|(&p, &t)| -t * p.max(PROB_EPS).ln())
        .sum())
}

/// Sum of squared componentwise differences.
pub fn mse(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x.len(), y.len())?;
    Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

fn crossentropy_grad(pred: &[f64], target: &[f64]) -> Vec<f64> {
    pred.iter()
        .zip(target)
        .map(|(&p, &t)| if p > PROB_EPS { -t / p } else { 0.0 })
        .collect()
}

/// Reconstruction plus adversarial crossentropy through a frozen classifier:
///
/// `||target - out||^2 + alpha * CE(classifier(out), one_hot(adversarial_class))`
///
/// The classifier only contributes input gradients; its parameters are never
/// touched.
#[derive(Debug, Clone, Copy)]
pub struct CompositeLoss<'a> {
    pub classifier: &'a Network,
    pub alpha: f64,
    pub adversarial_class: usize,
}

#[derive(Debug, Clone, Copy)]
pub enum Loss<'a> {
    /// Crossentropy on a probability output (softmax head).
    CrossEntropy,
    Mse,
    Composite(CompositeLoss<'a>),
}

/// Value and output-gradient of a loss for one sample. `terms` holds the
/// reconstruction and adversarial parts separately for the composite loss
/// (`[value, 0]` otherwise).
#[derive(Debug, Clone)]
pub struct LossEval {
    pub value: f64,
    pub terms: [f64; 2],
    pub grad: Vec<f64>,
}

impl Loss<'_> {
    pub fn evaluate(&self, output: &[f64], target: &[f64]) -> Result<LossEval> {
        check_len(output.len(), target.len())?;
        match self {
            Loss::CrossEntropy => {
                let value = crossentropy(output, target)?;
                Ok(LossEval {
                    value,
                    terms: [value, 0.0],
                    grad: crossentropy_grad(output, target),
                })
            }
            Loss::Mse => {
                let value = mse(output, target)?;
                let grad = output.iter().zip(target).map(|(o, t)| 2.0 * (o - t)).collect();
                Ok(LossEval {
                    value,
                    terms: [value, 0.0],
                    grad,
                })
            }
            Loss::Composite(c) => {
                let recon = mse(output, target)?;
                let probs = c.classifier.predict(output)?;
                let hot = one_hot(c.adversarial_class, probs.len())?;
                let ce = crossentropy(&probs, &hot)?;
                let dce = crossentropy_grad(&probs, &hot);
                let through = c.classifier.input_gradient(output, &dce)?;
                let grad = output
                    .iter()
                    .zip(target)
                    .zip(&through)
                    .map(|((o, t), g)| 2.0 * (o - t) + c.alpha * g)
                    .collect();
                Ok(LossEval {
                    value: recon + c.alpha * ce,
                    terms: [recon, ce],
                    grad,
                })
            }
        }
    }
}
