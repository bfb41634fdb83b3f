use proptest::prelude::*;

use super::*;
use crate::classifier::{train_classifier, ClassifierSpec};
use crate::data::{synth_gaussian, Encoder, FeatureSchema, FeatureSpec};
use crate::neural::{Activation, DenseLayer, LayerSpec, Optimizer, TrainConfig};

/// Softmax head whose logit difference is `k * (x0 - c)`, so the crossing
/// sits exactly at `x0 = c`.
fn linear_classifier(width: usize, k: f64, c: f64) -> ClassifierModel {
    let mut weights = vec![0.0; 2 * width];
    weights[width] = k;
    ClassifierModel::new(Network {
        seed: 0,
        layers: vec![DenseLayer {
            in_dim: width,
            out_dim: 2,
            activation: Activation::Softmax,
            l2: 0.0,
            dropout: 0.0,
            weights,
            biases: vec![0.0, -k * c],
        }],
    })
    .unwrap()
}

fn continuous_layout(width: usize) -> Layout {
    let names: Vec<String> = (0..width).map(|j| format!("x{j}")).collect();
    let features = names
        .iter()
        .enumerate()
        .map(|(j, n)| FeatureSpec::continuous(n).ranked(j + 1))
        .collect();
    Layout::from_schema(&FeatureSchema::new(features).unwrap())
}

fn quasi(x: Vec<f64>, clf: &ClassifierModel) -> QuasiSample {
    let (f_n, f_a) = clf.prob_pair(&x).unwrap();
    QuasiSample {
        label: crate::classifier::label_of(&[f_n, f_a]),
        x,
        f_n,
        f_a,
        source: 0,
        replica: 0,
    }
}

struct Toy {
    train: EncodedDataset,
    layout: Layout,
    classifier: ClassifierModel,
}

fn toy() -> Toy {
    let oracle = synth_gaussian(200, 4.0, 11).unwrap();
    let enc = Encoder::fit(&oracle.data).unwrap();
    let train = enc.encode(&oracle.data).unwrap();
    let spec = ClassifierSpec {
        hidden: vec![LayerSpec::new(8, Activation::Tanh)],
        train: TrainConfig {
            optimizer: Optimizer::adam(0.02),
            epochs: 40,
            batch_size: 16,
            seed: 5,
        },
    };
    let (classifier, _) = train_classifier(&train, &spec, None).unwrap();
    Toy {
        train,
        layout: enc.layout.clone(),
        classifier,
    }
}

fn ae_config(alpha: f64, epochs: usize) -> BoundaryTrainConfig {
    BoundaryTrainConfig {
        alpha,
        hidden: vec![LayerSpec::new(6, Activation::Tanh)],
        train: TrainConfig {
            optimizer: Optimizer::adam(0.01),
            epochs,
            batch_size: 16,
            seed: 3,
        },
        reconstruction_target: ReconstructionTarget::Input,
        replicas: 1,
    }
}

#[test]
fn zero_alpha_is_a_plain_autoencoder() {
    let t = toy();
    let normal = t.train.of_class(NORMAL);
    let mut cfg = ae_config(0.0, 10);
    cfg.train.batch_size = normal.len();
    cfg.train.optimizer = Optimizer::adam(0.005);
    let (_, logs) = train_boundary_autoencoder(Side::FromNormal, &normal, &[], &t.classifier, &cfg).unwrap();
    assert_eq!(logs.len(), 10);
    for w in logs.windows(2) {
        assert!(w[1].term0 < w[0].term0, "{:?}", logs);
    }
}

#[test]
fn large_alpha_trades_reconstruction_for_flips() {
    let t = toy();
    let normal = t.train.of_class(NORMAL);
    let run = |alpha: f64| {
        let (ae, logs) =
            train_boundary_autoencoder(Side::FromNormal, &normal, &[], &t.classifier, &ae_config(alpha, 30)).unwrap();
        let q = generate_quasi(&ae, &normal, &t.classifier, &t.layout, 0, 0, Exec::Sequential).unwrap();
        let rate = q.iter().filter(|s| s.label == ABNORMAL).count() as f64 / q.len() as f64;
        (rate, logs.last().unwrap().term0)
    };
    let (_, recon_plain) = run(0.0);
    let (rate, recon_adv) = run(1e4);
    assert!(rate >= 0.95, "opposite-class rate {rate}");
    assert!(recon_adv > recon_plain, "{recon_adv} vs {recon_plain}");
}

#[test]
fn trained_autoencoder_moves_toward_the_boundary() {
    let t = toy();
    let normal = t.train.of_class(NORMAL);
    let (ae, _) = train_boundary_autoencoder(Side::FromNormal, &normal, &[], &t.classifier, &ae_config(0.3, 30)).unwrap();
    let q = generate_quasi(&ae, &normal, &t.classifier, &t.layout, 0, 0, Exec::Sequential).unwrap();
    let before = mean(normal.iter().map(|x| {
        let (a, b) = t.classifier.prob_pair(x).unwrap();
        (a - b).abs()
    }));
    let after = mean(q.iter().map(QuasiSample::gap));
    assert!(after < before, "{after} !< {before}");
}

#[test]
fn identity_autoencoder_passes_inputs_through_snapping() {
    let schema = FeatureSchema::new(vec![
        FeatureSpec::continuous("a").ranked(1),
        FeatureSpec::categorical("c", &["p", "q", "r"]),
    ])
    .unwrap();
    let layout = Layout::from_schema(&schema);
    let w = layout.width();
    let mut weights = vec![0.0; w * w];
    for i in 0..w {
        weights[i * w + i] = 1.0;
    }
    let identity = Network {
        seed: 0,
        layers: vec![DenseLayer {
            in_dim: w,
            out_dim: w,
            activation: Activation::Identity,
            l2: 0.0,
            dropout: 0.0,
            weights,
            biases: vec![0.0; w],
        }],
    };
    let clf = linear_classifier(w, 4.0, 0.5);
    let inputs = vec![vec![0.3, 0.0, 1.0, 0.0], vec![0.9, 0.2, 0.7, 0.1]];
    let q = generate_quasi(&identity, &inputs, &clf, &layout, 0, 0, Exec::Sequential).unwrap();
    assert_eq!(q[0].x, inputs[0]);
    assert_eq!(q[1].x, vec![0.9, 0.0, 1.0, 0.0]);
    for s in &q {
        assert_eq!(s.x[1..].iter().sum::<f64>(), 1.0);
        assert!(s.x[1..].iter().all(|&v| v == 0.0 || v == 1.0));
    }
}

#[test]
fn single_opposite_pair() {
    let layout = continuous_layout(1);
    let clf = linear_classifier(1, 10.0, 0.5);
    let p = pair_candidates(&[quasi(vec![0.9], &clf)], &[quasi(vec![0.1], &clf)], &layout);
    assert_eq!(p.pairs, vec![Pair { left: vec![0.1], right: vec![0.9] }]);
    assert!(p.diagnostic.is_none());
}

#[test]
fn same_label_sides_give_no_pairs() {
    let layout = continuous_layout(1);
    let clf = linear_classifier(1, 10.0, 0.5);
    let p = pair_candidates(&[quasi(vec![0.9], &clf)], &[quasi(vec![0.8], &clf)], &layout);
    assert!(p.pairs.is_empty());
    assert_eq!(p.unpaired, 1);
    assert!(p.diagnostic.is_some());
}

#[test]
fn pairing_matches_brute_force() {
    let layout = continuous_layout(2);
    let clf = linear_classifier(2, 10.0, 0.5);
    let left: Vec<_> = [[0.1, 0.2], [0.7, 0.9], [0.4, 0.4]].iter().map(|p| quasi(p.to_vec(), &clf)).collect();
    let right: Vec<_> = [[0.6, 0.1], [0.2, 0.8], [0.9, 0.5]].iter().map(|p| quasi(p.to_vec(), &clf)).collect();
    let got = pair_candidates(&left, &right, &layout);

    let mut expected = Vec::new();
    for l in &left {
        let mut best: Option<(f64, &QuasiSample)> = None;
        for r in right.iter().filter(|r| r.label != l.label) {
            let d = ((l.x[0] - r.x[0]).powi(2) + (l.x[1] - r.x[1]).powi(2)).sqrt();
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, r));
            }
        }
        if let Some((_, r)) = best {
            let (a, b) = if l.label == NORMAL { (l, r) } else { (r, l) };
            expected.push(Pair { left: a.x.clone(), right: b.x.clone() });
        }
    }
    assert_eq!(got.pairs, expected);
    assert_eq!(got.pairs.len(), 3);
}

#[test]
fn dyadic_crossing_found_at_first_midpoint() {
    let layout = continuous_layout(1);
    let clf = linear_classifier(1, 8.0, 0.5);
    let pair = Pair { left: vec![0.0], right: vec![1.0] };
    let o = bisect_pair(&pair, &clf, &layout, &BisectionConfig::default()).unwrap();
    assert!(o.converged);
    assert_eq!(o.iterations(), 1);
    assert_eq!(o.point, vec![0.5]);
    assert!((o.f_n - o.f_a).abs() <= 0.02);
}

#[test]
fn non_dyadic_crossing_within_two_to_minus_twenty() {
    let c = 1.0 / 3.0;
    let layout = continuous_layout(1);
    let clf = linear_classifier(1, 8.0, c);
    let pair = Pair { left: vec![0.0], right: vec![1.0] };
    let tight = BisectionConfig { beta: 1e-12, max_iters: 20 };
    let o = bisect_pair(&pair, &clf, &layout, &tight).unwrap();
    assert_eq!(o.iterations(), 20);
    assert!((o.t() - c).abs() <= 2f64.powi(-20), "{}", o.t());
    let last = o.trace.last().unwrap();
    assert!(last.lo <= c && c <= last.hi);

    let o = bisect_pair(&pair, &clf, &layout, &BisectionConfig::default()).unwrap();
    assert!(o.converged && (o.f_n - o.f_a).abs() <= 0.02);
}

#[test]
fn fifty_five_forty_five_endpoints_refine_to_beta() {
    // logit difference k*(x - 0.5) with k chosen so the endpoints read 55/45
    let k = 2.0 * (0.55f64 / 0.45).ln();
    let layout = continuous_layout(1);
    let clf = linear_classifier(1, k, 0.5);
    let (l, r) = (vec![0.0], vec![1.0]);
    let (ln, la) = clf.prob_pair(&l).unwrap();
    assert!((ln - 0.55).abs() < 1e-12 && (la - 0.45).abs() < 1e-12);
    let o = bisect_pair(&Pair { left: l, right: r }, &clf, &layout, &BisectionConfig::default()).unwrap();
    assert!(o.converged && (o.f_n - o.f_a).abs() <= 0.02);
}

#[test]
fn categoricals_stay_at_left_endpoint() {
    let schema = FeatureSchema::new(vec![
        FeatureSpec::continuous("a").ranked(1),
        FeatureSpec::categorical("c", &["p", "q"]),
    ])
    .unwrap();
    let layout = Layout::from_schema(&schema);
    let x = interpolate(&[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0], 0.25, &layout);
    assert_eq!(x, vec![0.25, 1.0, 0.0]);
}

#[test]
fn config_validation_lists_every_problem() {
    let bad = BisectionConfig { beta: 0.7, max_iters: 0 };
    let msg = bad.validate().unwrap_err().to_string();
    assert!(msg.contains("beta") && msg.contains("max_iters"), "{msg}");
    let mut cfg = ae_config(0.0, 0);
    cfg.replicas = 0;
    let msg = cfg.validate().unwrap_err().to_string();
    assert!(msg.contains("alpha") && msg.contains("replicas") && msg.contains("epochs"), "{msg}");
}

#[test]
fn critical_set_csv_round_trip() {
    let oracle = synth_gaussian(20, 3.0, 1).unwrap();
    let enc = Encoder::fit(&oracle.data).unwrap();
    let set = CriticalSet {
        instances: vec![
            CriticalInstance {
                x: vec![0.1 + 0.2, 1.0 / 3.0],
                f_n: 0.505,
                f_a: 0.495,
                provenance: Provenance::Bisected,
            },
            CriticalInstance {
                x: vec![0.0, 1.0],
                f_n: 0.49,
                f_a: 0.51,
                provenance: Provenance::AeOnly,
            },
        ],
    };
    let mut buf = Vec::new();
    set.write_csv(&mut buf, &enc).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("enc_0,enc_1,x0,x1,f_n,f_a,provenance\n"), "{text}");
    let back = CriticalSet::read_csv(buf.as_slice(), 2).unwrap();
    assert_eq!(back, set);
    assert!(CriticalSet::read_csv(buf.as_slice(), 3).is_err());
    assert!(CriticalSet::read_csv(buf.as_slice(), 1).is_err());
}

#[test]
fn toy_critical_set_respects_gap_and_range() {
    let t = toy();
    let mut cfg = ae_config(5.0, 20);
    cfg.hidden = vec![LayerSpec::new(6, Activation::Tanh).dropout(0.1)];
    let bis = BisectionConfig::default();
    let forge = build_critical_set(&t.classifier, &t.train, &t.layout, &cfg, &bis, Exec::default()).unwrap();
    assert!(!forge.set.is_empty());
    assert_eq!(forge.stats.size, forge.set.len());
    assert!(forge.set.instances.iter().all(|c| c.gap() <= bis.beta));
    assert!(forge.set.within_training_range(&t.layout));
    for c in &forge.set.instances {
        let (f_n, f_a) = t.classifier.prob_pair(&c.x).unwrap();
        assert_eq!((f_n, f_a), (c.f_n, c.f_a));
    }

    cfg.replicas = 3;
    let dense = build_critical_set(&t.classifier, &t.train, &t.layout, &cfg, &bis, Exec::default()).unwrap();
    assert!(dense.set.len() > forge.set.len());
}

proptest! {
    #[test]
    fn midpoints_are_convex_and_brackets_halve(
        left in prop::collection::vec(0.0f64..1.0, 3),
        right in prop::collection::vec(0.0f64..1.0, 3),
        c in 0.05f64..0.95,
    ) {
        let layout = continuous_layout(3);
        let cfg = BisectionConfig { beta: 1e-9, max_iters: 20 };
        let probe = |x: &[f64]| -> crate::Result<(f64, f64)> {
            let p = crate::neural::sigmoid(30.0 * (x.iter().sum::<f64>() / 3.0 - c));
            Ok((1.0 - p, p))
        };
        let o = bisect_segment(&left, &right, &layout, &cfg, probe).unwrap();
        for (k, s) in o.trace.iter().enumerate() {
            prop_assert_eq!(s.hi - s.lo, 2f64.powi(-(k as i32)));
            prop_assert_eq!(s.t, 0.5 * (s.lo + s.hi));
            let x = interpolate(&left, &right, s.t, &layout);
            for j in 0..3 {
                let (a, b) = (left[j].min(right[j]), left[j].max(right[j]));
                prop_assert!(a <= x[j] && x[j] <= b);
            }
        }
    }
}
