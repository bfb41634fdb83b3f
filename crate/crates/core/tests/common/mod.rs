#![allow(dead_code)]

use std::sync::Arc;

use cfx_core::boundary::{CriticalInstance, CriticalSet, Provenance};
use cfx_core::classifier::ClassifierModel;
use cfx_core::data::{Dataset, Encoder, FeatureSchema, FeatureSpec};
use cfx_core::intervention::FactualCase;
use cfx_core::neural::{Activation, LayerSpec, Network};
use cfx_core::ABNORMAL;
use rand::Rng;

/// Two masked features, three ranked ones, mixing continuous and categorical.
pub fn mixed_schema() -> Arc<FeatureSchema> {
    Arc::new(
        FeatureSchema::new(vec![
            FeatureSpec::continuous("age"),
            FeatureSpec::continuous("chol").ranked(1),
            FeatureSpec::categorical("cp", &["a", "b", "c", "d"]),
            FeatureSpec::continuous("bp").ranked(2),
            FeatureSpec::categorical("sex", &["f", "m"]),
            FeatureSpec::categorical("slope", &["up", "flat", "down"]).ranked(3),
        ])
        .unwrap(),
    )
}

const SPANS: [(f64, f64); 6] = [(29.0, 77.0), (126.0, 564.0), (0.0, 0.0), (94.0, 200.0), (0.0, 0.0), (0.0, 0.0)];

pub fn random_raw(schema: &FeatureSchema, r: &mut impl Rng) -> Vec<f64> {
    schema
        .features
        .iter()
        .enumerate()
        .map(|(j, f)| {
            if f.is_categorical() {
                r.random_range(0..f.cardinality()) as f64
            } else {
                r.random_range(SPANS[j].0..=SPANS[j].1)
            }
        })
        .collect()
}

/// An encoder fitted on rows that hit every bound and every level.
pub fn mixed_encoder() -> Encoder {
    let schema = mixed_schema();
    let lo: Vec<f64> = SPANS.iter().map(|s| s.0).collect();
    let mut hi: Vec<f64> = SPANS.iter().map(|s| s.1).collect();
    let mut rows = vec![lo.clone()];
    for level in 0..4 {
        let mut row = lo.clone();
        row[2] = level as f64;
        row[4] = (level % 2) as f64;
        row[5] = (level % 3) as f64;
        rows.push(row);
    }
    hi[5] = 2.0;
    rows.push(hi);
    let labels = (0..rows.len()).map(|i| i % 2).collect();
    Encoder::fit(&Dataset::new(rows, labels, schema).unwrap()).unwrap()
}

/// A small random softmax network, reseeded until it labels between 20% and
/// 80% of random rows abnormal.
pub fn random_classifier(enc: &Encoder, seed: u64) -> ClassifierModel {
    let mut r = cfx_core::rng::derive(seed, 17);
    for s in seed.. {
        let net = Network::build(
            enc.width(),
            &[LayerSpec::new(8, Activation::Tanh), LayerSpec::new(2, Activation::Softmax)],
            s,
        )
        .unwrap();
        let clf = ClassifierModel::new(net).unwrap();
        let hits = (0..200)
            .filter(|_| {
                let x = enc.encode_row(&random_raw(&enc.schema, &mut r)).unwrap();
                clf.predict_label(&x).unwrap() == ABNORMAL
            })
            .count();
        if (40..=160).contains(&hits) {
            return clf;
        }
    }
    unreachable!()
}

pub fn random_set(enc: &Encoder, clf: &ClassifierModel, size: usize, r: &mut impl Rng) -> CriticalSet {
    CriticalSet {
        instances: (0..size)
            .map(|_| {
                let x = enc.encode_row(&random_raw(&enc.schema, r)).unwrap();
                let (f_n, f_a) = clf.prob_pair(&x).unwrap();
                CriticalInstance {
                    x,
                    f_n,
                    f_a,
                    provenance: Provenance::Bisected,
                }
            })
            .collect(),
    }
}

pub fn abnormal_cases(enc: &Encoder, clf: &ClassifierModel, n: usize, r: &mut impl Rng) -> Vec<FactualCase> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let raw = random_raw(&enc.schema, r);
        if let Ok(c) = FactualCase::new(out.len(), raw, enc, clf) {
            out.push(c);
        }
    }
    out
}
