//! The predictive model under explanation: a dense network with a two-way
//! softmax head over encoded features.

use serde::{Deserialize, Serialize};

use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use crate::neural::{one_hot, Activation, EpochLog, LayerSpec, Loss, Network, TrainConfig, Trainer};
use crate::par::Exec;
use crate::{ABNORMAL, NORMAL};

/// Hidden layers plus training settings; the softmax output layer is
/// appended automatically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub hidden: Vec<LayerSpec>,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub network: Network,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

/// Argmax with ties going to the lower class index.
pub fn label_of(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

pub fn class_name(label: usize) -> &'static str {
    match label {
        NORMAL => "normal",
        ABNORMAL => "abnormal",
        _ => "other",
    }
}

impl ClassifierModel {
    pub fn new(network: Network) -> Result<Self> {
        if network.output_dim() != 2
            || network.layers.last().map(|l| l.activation) != Some(Activation::Softmax)
        {
            return Err(Error::InvalidConfig(
                "classifier needs a 2-unit softmax output layer".into(),
            ));
        }
        Ok(ClassifierModel { network })
    }

    pub fn input_dim(&self) -> usize {
        self.network.input_dim()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.network.predict(x)
    }

    pub fn predict_label(&self, x: &[f64]) -> Result<usize> {
        Ok(label_of(&self.predict_proba(x)?))
    }

    /// `(f_n, f_a)`.
    pub fn prob_pair(&self, x: &[f64]) -> Result<(f64, f64)> {
        let p = self.predict_proba(x)?;
        Ok((p[NORMAL], p[ABNORMAL]))
    }

    pub fn accuracy(&self, data: &EncodedDataset, exec: Exec) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyBatch("accuracy over zero rows"));
        }
        let hits = exec.map(&data.rows, |i, x| {
            self.predict_label(x).map(|l| usize::from(l == data.labels[i]))
        });
        let mut correct = 0;
        for h in hits {
            correct += h?;
        }
        Ok(correct as f64 / data.len() as f64)
    }
}

pub fn build_network(input_dim: usize, spec: &ClassifierSpec) -> Result<Network> {
    let mut layers = spec.hidden.clone();
    layers.push(LayerSpec::new(2, Activation::Softmax));
    Network::build(input_dim, &layers, spec.train.seed)
}

pub fn train_classifier(
    train: &EncodedDataset,
    spec: &ClassifierSpec,
    test: Option<&EncodedDataset>,
) -> Result<(ClassifierModel, TrainLog)> {
    spec.train.validate()?;
    let width = train
        .rows
        .first()
        .map(Vec::len)
        .ok_or(Error::EmptyBatch("no training rows"))?;
    let mut net = build_network(width, spec)?;
    let targets = train
        .labels
        .iter()
        .map(|&l| one_hot(l, 2))
        .collect::<Result<Vec<_>>>()?;
    let mut trainer = Trainer::new(spec.train.clone());
    let epochs = trainer.fit(&mut net, &train.rows, &targets, &Loss::CrossEntropy)?;
    let model = ClassifierModel::new(net)?;
    let exec = Exec::default();
    let train_accuracy = model.accuracy(train, exec)?;
    let test_accuracy = test.map(|t| model.accuracy(t, exec)).transpose()?;
    Ok((
        model,
        TrainLog {
            epochs,
            train_accuracy,
            test_accuracy,
        },
    ))
}
