//! External validity oracle: a model from a different family than the
//! classifier, trained on the same split, that judges whether a
//! counterfactual really lands in the normal class.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimulatorKind {
    /// Majority vote of the `k` nearest training rows (Euclidean on encoded
    /// features; distance ties go to the lower row index, vote ties to class 0).
    Knn { k: usize },
    /// L2-regularized logistic regression on all degree-2 monomials.
    LogisticQuadratic { l2: f64 },
}

impl SimulatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            SimulatorKind::Knn { .. } => "knn",
            SimulatorKind::LogisticQuadratic { .. } => "logistic_quadratic",
        }
    }

    /// The other family with its default hyperparameters.
    pub fn alternate(&self) -> SimulatorKind {
        match self {
            SimulatorKind::Knn { .. } => SimulatorKind::LogisticQuadratic { l2: 1.0 },
            SimulatorKind::LogisticQuadratic { .. } => SimulatorKind::default(),
        }
    }
}

impl Default for SimulatorKind {
    fn default() -> Self {
        SimulatorKind::Knn { k: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
enum Fitted {
    Knn { rows: Vec<Vec<f64>>, labels: Vec<usize> },
    Logistic { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatorModel {
    pub kind: SimulatorKind,
    pub seed: u64,
    pub train_accuracy: f64,
    pub holdout_accuracy: Option<f64>,
    fitted: Fitted,
}

/// `[1, x_i, x_i x_j (i <= j)]`.
pub fn quadratic_features(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut out = Vec::with_capacity(1 + d + d * (d + 1) / 2);
    out.push(1.0);
    out.extend_from_slice(x);
    for i in 0..d {
        for j in i..d {
            out.push(x[i] * x[j]);
        }
    }
    out
}

fn fit_logistic(data: &EncodedDataset, l2: f64) -> Vec<f64> {
    let phi: Vec<Vec<f64>> = data.rows.iter().map(|r| quadratic_features(r)).collect();
    let p = phi[0].len();
    let n = phi.len();
    let design = DMatrix::from_fn(n, p, |i, j| phi[i][j]);
    let y = DVector::from_iterator(n, data.labels.iter().map(|&l| l as f64));
    let mut w = DVector::zeros(p);
    let mut reg = DVector::from_element(p, l2);
    reg[0] = 0.0;
    for _ in 0..100 {
        let scores = &design * &w;
        let probs = scores.map(crate::neural::sigmoid);
        let weights = probs.map(|q| (q * (1.0 - q)).max(1e-12));
        let grad = design.transpose() * (&probs - &y) + reg.component_mul(&w);
        let mut hess = design.transpose() * DMatrix::from_diagonal(&weights) * &design;
        for j in 0..p {
            hess[(j, j)] += reg[j] + 1e-10;
        }
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => hess.lu().solve(&grad).unwrap_or_else(|| grad.clone() * 1e-3),
        };
        w -= &step;
        if step.norm() < 1e-10 {
            break;
        }
    }
    w.iter().copied().collect()
}

pub fn train_simulator(
    train: &EncodedDataset,
    kind: SimulatorKind,
    seed: u64,
    holdout: Option<&EncodedDataset>,
) -> Result<SimulatorModel> {
    if train.is_empty() {
        return Err(Error::EmptyBatch("simulator training set is empty"));
    }
    for class in 0..2 {
        if !train.labels.contains(&class) {
            return Err(Error::EmptyClass(class));
        }
    }
    let fitted = match kind {
        SimulatorKind::Knn { k } => {
            if k == 0 {
                return Err(Error::InvalidConfig("knn needs k >= 1".into()));
            }
            Fitted::Knn {
                rows: train.rows.clone(),
                labels: train.labels.clone(),
            }
        }
        SimulatorKind::LogisticQuadratic { l2 } => {
            if !(l2 > 0.0) {
                return Err(Error::InvalidConfig("logistic l2 must be > 0".into()));
            }
            Fitted::Logistic {
                weights: fit_logistic(train, l2),
            }
        }
    };
    let mut model = SimulatorModel {
        kind,
        seed,
        train_accuracy: 0.0,
        holdout_accuracy: None,
        fitted,
    };
    let exec = Exec::default();
    model.train_accuracy = model.accuracy(train, exec);
    model.holdout_accuracy = holdout.map(|h| model.accuracy(h, exec));
    Ok(model)
}

impl SimulatorModel {
    /// Hand-set logistic coefficients over [`quadratic_features`].
    pub fn logistic_from_weights(weights: Vec<f64>) -> Self {
        SimulatorModel {
            kind: SimulatorKind::LogisticQuadratic { l2: 0.0 },
            seed: 0,
            train_accuracy: 0.0,
            holdout_accuracy: None,
            fitted: Fitted::Logistic { weights },
        }
    }

    /// Pure function of `(self, x)`.
    pub fn simulate_class(&self, x: &[f64]) -> usize {
        match (&self.fitted, self.kind) {
            (Fitted::Knn { rows, labels }, SimulatorKind::Knn { k }) => {
                let mut dists: Vec<(f64, usize)> = rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum(), i))
                    .collect();
                let k = k.min(dists.len());
                dists.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap());
                let ones = dists[..k].iter().filter(|(_, i)| labels[*i] == 1).count();
                usize::from(2 * ones > k)
            }
            (Fitted::Logistic { weights }, _) => {
                let score: f64 = quadratic_features(x).iter().zip(weights).map(|(a, w)| a * w).sum();
                usize::from(score > 0.0)
            }
            _ => unreachable!("simulator state does not match its kind"),
        }
    }

    pub fn accuracy(&self, data: &EncodedDataset, exec: Exec) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = exec.map(&data.rows, |i, x| usize::from(self.simulate_class(x) == data.labels[i]));
        hits.iter().sum::<usize>() as f64 / data.len() as f64
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("simulator serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))
    }
}
