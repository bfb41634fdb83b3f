use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierModel;
use crate::data::Layout;
use crate::error::{Error, Result};
use crate::neural::{Activation, CompositeLoss, EpochLog, LayerSpec, Loss, Network, TrainConfig, Trainer};
use crate::par::Exec;
use crate::rng;
use crate::{ABNORMAL, NORMAL};

/// Which class an autoencoder reads; it is pushed toward the other one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    FromNormal,
    FromAbnormal,
}

impl Side {
    pub fn source_class(self) -> usize {
        match self {
            Side::FromNormal => NORMAL,
            Side::FromAbnormal => ABNORMAL,
        }
    }

    pub fn target_class(self) -> usize {
        1 - self.source_class()
    }

    fn stream(self) -> u64 {
        match self {
            Side::FromNormal => 0xae01,
            Side::FromAbnormal => 0xae02,
        }
    }

    /// Seed of this side's autoencoder, derived from the shared config seed.
    pub fn seed(self, base: u64) -> u64 {
        rng::derive(base, self.stream()).next_u64()
    }
}

/// What the reconstruction term compares the output against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionTarget {
    /// The input row itself.
    #[default]
    #[serde(rename = "self")]
    Input,
    /// The nearest training row of the target class.
    NearestOpposite,
}

fn default_replicas() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrainConfig {
    /// Weight of the adversarial crossentropy term.
    pub alpha: f64,
    /// Hidden layers; a sigmoid layer of the encoded width is appended.
    pub hidden: Vec<LayerSpec>,
    pub train: TrainConfig,
    #[serde(default)]
    pub reconstruction_target: ReconstructionTarget,
    /// Quasi-sample passes per input. Passes after the first sample a fresh
    /// dropout mask, so they only add points when the architecture has dropout.
    #[serde(default = "default_replicas")]
    pub replicas: usize,
}

impl BoundaryTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            problems.push(format!("alpha must be positive and finite, got {}", self.alpha));
        }
        if self.replicas == 0 {
            problems.push("replicas must be at least 1".to_string());
        }
        if let Err(e) = self.train.validate() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

pub fn build_autoencoder(width: usize, config: &BoundaryTrainConfig, seed: u64) -> Result<Network> {
    let mut layers = config.hidden.clone();
    layers.push(LayerSpec::new(width, Activation::Sigmoid));
    Network::build(width, &layers, seed)
}

fn nearest<'a>(x: &[f64], pool: &'a [Vec<f64>]) -> &'a Vec<f64> {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in pool.iter().enumerate() {
        let d: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    &pool[best]
}

/// Trains one adversarial autoencoder on `inputs` (rows of the side's source
/// class) against the frozen classifier. `opposite` supplies reconstruction
/// targets in [`ReconstructionTarget::NearestOpposite`] mode.
///
/// `alpha` is only required to be nonnegative here; `alpha = 0` gives a plain
/// autoencoder.
pub fn train_boundary_autoencoder(
    side: Side,
    inputs: &[Vec<f64>],
    opposite: &[Vec<f64>],
    classifier: &ClassifierModel,
    config: &BoundaryTrainConfig,
) -> Result<(Network, Vec<EpochLog>)> {
    if inputs.is_empty() {
        return Err(Error::EmptyClass(side.source_class()));
    }
    if !(config.alpha >= 0.0 && config.alpha.is_finite()) {
        return Err(Error::InvalidConfig(format!("alpha must be >= 0, got {}", config.alpha)));
    }
    config.train.validate()?;
    let width = classifier.input_dim();
    let targets: Vec<Vec<f64>> = match config.reconstruction_target {
        ReconstructionTarget::Input => inputs.to_vec(),
        ReconstructionTarget::NearestOpposite => {
            if opposite.is_empty() {
                return Err(Error::EmptyClass(side.target_class()));
            }
            inputs.iter().map(|x| nearest(x, opposite).clone()).collect()
        }
    };
    let seed = side.seed(config.train.seed);
    let mut net = build_autoencoder(width, config, seed)?;
    let loss = Loss::Composite(CompositeLoss {
        classifier: &classifier.network,
        alpha: config.alpha,
        adversarial_class: side.target_class(),
    });
    let mut train = config.train.clone();
    train.seed = seed;
    let logs = Trainer::new(train).fit(&mut net, inputs, &targets, &loss)?;
    Ok((net, logs))
}

/// Autoencoder output after snapping and clipping, with the classifier's view.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiSample {
    pub x: Vec<f64>,
    pub f_n: f64,
    pub f_a: f64,
    pub label: usize,
    /// Index of the input row it came from.
    pub source: usize,
    pub replica: usize,
}

impl QuasiSample {
    pub fn gap(&self) -> f64 {
        (self.f_n - self.f_a).abs()
    }
}

/// Passes `inputs` through `autoencoder`, snaps categorical blocks, clips
/// continuous columns and records the classifier probabilities. Replica 0 is
/// the deterministic pass; replica `r > 0` samples dropout masks from a stream
/// keyed by `(seed, r, row)`.
pub fn generate_quasi(
    autoencoder: &Network,
    inputs: &[Vec<f64>],
    classifier: &ClassifierModel,
    layout: &Layout,
    replica: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<QuasiSample>> {
    exec.map(inputs, |i, x| {
        let mut out = if replica == 0 {
            autoencoder.predict(x)?
        } else {
            let mut r = rng::derive(seed.wrapping_add(replica as u64), i as u64);
            autoencoder.forward(x, Some(&mut r))?.output().to_vec()
        };
        layout.snap(&mut out);
        layout.clip(&mut out);
        let (f_n, f_a) = classifier.prob_pair(&out)?;
        Ok(QuasiSample {
            label: crate::classifier::label_of(&[f_n, f_a]),
            x: out,
            f_n,
            f_a,
            source: i,
            replica,
        })
    })
    .into_iter()
    .collect()
}
