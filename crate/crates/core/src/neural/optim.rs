use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Gradients, Loss, Network};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd {
        lr: f64,
        #[serde(default)]
        weight_decay: f64,
    },
    Adam {
        lr: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_adam_eps")]
        eps: f64,
        #[serde(default)]
        weight_decay: f64,
    },
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_adam_eps() -> f64 {
    1e-7
}

impl Optimizer {
    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam {
            lr,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_adam_eps(),
            weight_decay: 0.0,
        }
    }

    pub fn sgd(lr: f64) -> Self {
        Optimizer::Sgd {
            lr,
            weight_decay: 0.0,
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            Optimizer::Sgd { lr, .. } | Optimizer::Adam { lr, .. } => lr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.optimizer.lr() > 0.0) {
            problems.push("learning rate must be > 0".to_string());
        }
        if self.epochs == 0 {
            problems.push("epochs must be >= 1".to_string());
        }
        if self.batch_size == 0 {
            problems.push("batch_size must be >= 1".to_string());
        }
        if let Optimizer::Adam { beta1, beta2, .. } = self.optimizer {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
                problems.push("adam betas must lie in [0, 1)".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

/// Mean loss over one batch, including the L2 penalty in `total`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLoss {
    pub total: f64,
    pub terms: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    /// Mean of the first loss term (reconstruction for the composite loss).
    pub term0: f64,
    /// Mean of the second loss term (adversarial crossentropy).
    pub term1: f64,
}

/// Optimizer state plus the generator that drives shuffling and dropout.
pub struct Trainer {
    config: TrainConfig,
    rng: Rng,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Trainer {
    /// Does not validate `config`; call [`TrainConfig::validate`] first where
    /// user input is involved.
    pub fn new(config: TrainConfig) -> Self {
        let rng = rng::derive(config.seed, 0x7472_6169_6e);
        Trainer {
            config,
            rng,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// One optimizer update from the mean gradient over a batch.
    pub fn train_step(
        &mut self,
        net: &mut Network,
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
        loss: &Loss<'_>,
    ) -> Result<StepLoss> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::EmptyBatch("train_step needs matching, nonempty batches"));
        }
        let mut grads = Gradients::zeros_like(net);
        let mut sum = 0.0;
        let mut terms = [0.0; 2];
        for (x, t) in inputs.iter().zip(targets) {
            let trace = net.forward(x, Some(&mut self.rng))?;
            let eval = loss.evaluate(trace.output(), t)?;
            let (g, _) = net.backward(&trace, &eval.grad)?;
            grads.add_assign(&g);
            sum += eval.value;
            terms[0] += eval.terms[0];
            terms[1] += eval.terms[1];
        }
        let n = inputs.len() as f64;
        grads.scale(1.0 / n);
        net.add_penalty_gradient(&mut grads);
        let total = sum / n + net.penalty();
        if !total.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: 0,
                step: self.step as usize,
            });
        }
        self.apply(net, &grads);
        Ok(StepLoss {
            total,
            terms: [terms[0] / n, terms[1] / n],
        })
    }

    /// Shuffled minibatch training for the configured number of epochs.
    pub fn fit(
        &mut self,
        net: &mut Network,
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
        loss: &Loss<'_>,
    ) -> Result<Vec<EpochLog>> {
        if inputs.is_empty() {
            return Err(Error::EmptyBatch("no training rows"));
        }
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        let mut logs = Vec::with_capacity(self.config.epochs);
        for epoch in 0..self.config.epochs {
            order.shuffle(&mut self.rng);
            let (mut total, mut t0, mut t1, mut batches) = (0.0, 0.0, 0.0, 0usize);
            for (step, chunk) in order.chunks(self.config.batch_size).enumerate() {
                let xs: Vec<Vec<f64>> = chunk.iter().map(|&i| inputs[i].clone()).collect();
                let ts: Vec<Vec<f64>> = chunk.iter().map(|&i| targets[i].clone()).collect();
                let l = self
                    .train_step(net, &xs, &ts, loss)
                    .map_err(|e| match e {
                        Error::NonFiniteLoss { .. } => Error::NonFiniteLoss { epoch, step },
                        other => other,
                    })?;
                total += l.total;
                t0 += l.terms[0];
                t1 += l.terms[1];
                batches += 1;
            }
            let b = batches as f64;
            logs.push(EpochLog {
                epoch,
                loss: total / b,
                term0: t0 / b,
                term1: t1 / b,
            });
        }
        Ok(logs)
    }

    fn apply(&mut self, net: &mut Network, grads: &Gradients) {
        self.step += 1;
        let grad_vecs: Vec<&Vec<f64>> = grads
            .weights
            .iter()
            .zip(&grads.biases)
            .flat_map(|(w, b)| [w, b])
            .collect();
        let mut params = net.params_mut();
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.second = self.first.clone();
        }
        match self.config.optimizer {
            Optimizer::Sgd { lr, weight_decay } => {
                for (p, g) in params.iter_mut().zip(grad_vecs) {
                    for (w, &gw) in p.iter_mut().zip(g) {
                        *w -= lr * (gw + weight_decay * *w);
                    }
                }
            }
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
                weight_decay,
            } => {
                let t = self.step as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grad_vecs)
                    .zip(self.first.iter_mut().zip(self.second.iter_mut()))
                {
                    for i in 0..p.len() {
                        let gi = g[i] + weight_decay * p[i];
                        m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                        let mhat = m[i] / c1;
                        let vhat = v[i] / c2;
                        p[i] -= lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
        }
    }
}
