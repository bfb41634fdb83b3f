use std::sync::Arc;

use super::*;
use crate::boundary::{CriticalInstance, Provenance};
use crate::data::{Dataset, FeatureSpec};
use crate::neural::{Activation, DenseLayer, Network};

fn set_of(points: &[&[f64]]) -> CriticalSet {
    CriticalSet {
        instances: points
            .iter()
            .map(|p| CriticalInstance {
                x: p.to_vec(),
                f_n: 0.5,
                f_a: 0.5,
                provenance: Provenance::Bisected,
            })
            .collect(),
    }
}

/// Abnormal iff `a + b + c > 1.5`.
fn sum_classifier() -> ClassifierModel {
    let k = 10.0;
    ClassifierModel::new(Network {
        seed: 0,
        layers: vec![DenseLayer {
            in_dim: 3,
            out_dim: 2,
            activation: Activation::Softmax,
            l2: 0.0,
            dropout: 0.0,
            weights: vec![0.0, 0.0, 0.0, k, k, k],
            biases: vec![0.0, -1.5 * k],
        }],
    })
    .unwrap()
}

/// Three continuous features on `[0, 1]`, so encoded equals raw.
fn unit_encoder(features: Vec<FeatureSpec>) -> Encoder {
    let schema = Arc::new(FeatureSchema::new(features).unwrap());
    let d = Dataset::new(vec![vec![0.0; 3], vec![1.0; 3]], vec![0, 1], schema).unwrap();
    Encoder::fit(&d).unwrap()
}

fn abc() -> Encoder {
    unit_encoder(vec![
        FeatureSpec::continuous("a").ranked(1),
        FeatureSpec::continuous("b").ranked(2),
        FeatureSpec::continuous("c").ranked(3),
    ])
}

/// The fixed five-member set of the hand traces.
fn hand_set() -> CriticalSet {
    set_of(&[
        &[0.2, 0.3, 0.8],
        &[0.6, 0.3, 0.6],
        &[0.7, 0.15, 0.4],
        &[0.52, 0.5, 0.45],
        &[0.5, 0.2, 0.95],
    ])
}

struct Fixture {
    clf: ClassifierModel,
    set: CriticalSet,
    enc: Encoder,
    normal: Vec<Vec<f64>>,
    config: InterventionConfig,
}

impl Fixture {
    fn new(set: CriticalSet) -> Self {
        Fixture {
            clf: sum_classifier(),
            set,
            enc: abc(),
            normal: vec![vec![0.1, 0.1, 0.1], vec![0.3, 0.3, 0.2]],
            config: InterventionConfig::default(),
        }
    }

    fn ctx(&self) -> Context<'_> {
        Context {
            classifier: &self.clf,
            set: &self.set,
            encoder: &self.enc,
            normal_rows: &self.normal,
            config: &self.config,
        }
    }

    fn case(&self, raw: &[f64]) -> FactualCase {
        FactualCase::new(7, raw.to_vec(), &self.enc, &self.clf).unwrap()
    }
}

fn steps(r: &InterventionResult) -> Vec<(usize, StepKind, Option<usize>)> {
    r.trace.iter().map(|s| (s.feature, s.kind, s.source)).collect()
}

#[test]
fn distance_to_set_examples() {
    let s = set_of(&[&[0.0, 0.0], &[3.0, 4.0]]);
    let (d, i) = distance_to_set(&[1.0, 1.0], &s, NormMode::MinMax).unwrap();
    assert_eq!(i, 0);
    assert!((d - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(distance_to_set(&[3.0, 4.0], &s, NormMode::MinMax).unwrap(), (0.0, 1));
    assert!(matches!(
        distance_to_set(&[0.0], &CriticalSet::default(), NormMode::MinMax),
        Err(Error::EmptyCriticalSet)
    ));
}

#[test]
fn sample_l2_ignores_scale() {
    let s = set_of(&[&[1.0, 1.0], &[10.0, 0.0]]);
    // (4, 4) is far from (1, 1) in plain distance but parallel to it
    assert_eq!(distance_to_set(&[4.0, 4.0], &s, NormMode::SampleL2).unwrap().1, 0);
    assert_eq!(distance_to_set(&[9.0, 2.0], &s, NormMode::MinMax).unwrap().1, 1);
    assert!(distance_to_set(&[4.0, 4.0], &s, NormMode::SampleL2).unwrap().0 < 1e-15);
}

#[test]
fn ties_go_to_lowest_index() {
    let s = set_of(&[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0]]);
    assert_eq!(distance_to_set(&[0.0, 0.0], &s, NormMode::MinMax).unwrap(), (1.0, 0));
}

#[test]
fn mask_orders_by_rank_then_index() {
    let schema = FeatureSchema::new(vec![
        FeatureSpec::continuous("age"),
        FeatureSpec::continuous("bp").ranked(2),
        FeatureSpec::continuous("chol").ranked(1),
        FeatureSpec::continuous("hr").ranked(2),
    ])
    .unwrap();
    let m = ConstraintMask::from_schema(&schema).unwrap();
    assert_eq!(m.z, vec![true, false, false, false]);
    assert_eq!(m.order, vec![2, 1, 3]);
    // a rank on a non-actionable feature does not unmask it
    let m = ConstraintMask::with_ranks(&schema, &[Some(1), Some(3), None, Some(1)]).unwrap();
    assert_eq!(m.z, vec![true, false, true, false]);
    assert_eq!(m.order, vec![3, 1]);
    assert!(ConstraintMask::with_ranks(&schema, &[None; 4]).is_err());
}

#[test]
fn normal_case_is_rejected() {
    let f = Fixture::new(hand_set());
    assert!(matches!(
        FactualCase::new(3, vec![0.1, 0.1, 0.1], &f.enc, &f.clf),
        Err(Error::NotAbnormal(3))
    ));
}

// Hand trace 1, x_T = (0.9, 0.8, 0.7), sum 2.4:
//   clamp a to max_S a = 0.7            -> (0.7, 0.8, 0.7)   sum 2.2  abnormal
//   C = argmin |S_a - 0.9| = 2 (0.7)
//   copy b = 0.15 from S[2]             -> (0.7, 0.15, 0.7)  sum 1.55 abnormal
//   copy c = 0.4 from S[2]              -> (0.7, 0.15, 0.4)  sum 1.25 normal, stop
#[test]
fn hand_trace_clamp_then_copies() {
    let f = Fixture::new(hand_set());
    let case = f.case(&[0.9, 0.8, 0.7]);
    let mask = case.mask(&f.enc.schema).unwrap();
    let r = constrained_intervention(&f.ctx(), &case, &mask).unwrap();
    assert_eq!(
        steps(&r),
        vec![
            (0, StepKind::Clamp, None),
            (1, StepKind::Copy, Some(2)),
            (2, StepKind::Copy, Some(2))
        ]
    );
    assert_eq!(r.x_star, vec![0.7, 0.15, 0.4]);
    assert_eq!(r.changed, vec![0, 1, 2]);
    assert!(r.flipped && !r.fallback && !r.violated);
    assert_eq!(r.critical_index, 2);
}

// Hand trace 2, x_T = (0.95, 0.35, 0.3), sum 1.6:
//   clamp a to 0.7 -> (0.7, 0.35, 0.3) sum 1.35 normal, stop before any copy
#[test]
fn hand_trace_flip_on_clamp_alone() {
    let f = Fixture::new(hand_set());
    let case = f.case(&[0.95, 0.35, 0.3]);
    let mask = case.mask(&f.enc.schema).unwrap();
    let r = constrained_intervention(&f.ctx(), &case, &mask).unwrap();
    assert_eq!(steps(&r), vec![(0, StepKind::Clamp, None)]);
    assert_eq!(r.changed, vec![0]);
    assert!(r.flipped);
    assert_eq!(r.delta[0], Some(0.7 - 0.95));
    assert_eq!(r.delta[1], Some(0.0));
}

// Hand trace 3, x_T = (0.5, 0.9, 0.9), sum 2.3; a already inside [0.2, 0.7]:
//   C = 4 (a = 0.5 exactly)
//   copy b = 0.2  -> (0.5, 0.2, 0.9)   sum 1.6  abnormal
//   copy c = 0.95 -> (0.5, 0.2, 0.95)  sum 1.65 abnormal, P exhausted
//   fallback: squared distances over (a, b, c) are
//     .46, .46, .8525, .3629, .4925 -> C = 3
//   restart from x_T: copy b = 0.5 -> sum 1.9 abnormal; copy c = 0.45 -> sum 1.45 normal
#[test]
fn hand_trace_fallback() {
    let f = Fixture::new(hand_set());
    let case = f.case(&[0.5, 0.9, 0.9]);
    let mask = case.mask(&f.enc.schema).unwrap();
    let r = constrained_intervention(&f.ctx(), &case, &mask).unwrap();
    assert_eq!(
        steps(&r),
        vec![
            (1, StepKind::Copy, Some(4)),
            (2, StepKind::Copy, Some(4)),
            (1, StepKind::Copy, Some(3)),
            (2, StepKind::Copy, Some(3))
        ]
    );
    assert_eq!(r.x_star, vec![0.5, 0.5, 0.45]);
    assert_eq!(r.changed, vec![1, 2]);
    assert!(r.flipped && r.fallback);
    assert_eq!(r.critical_index, 3);
}

#[test]
fn exhausted_fallback_reports_unflipped() {
    let f = Fixture::new(set_of(&[&[0.5, 0.8, 0.8], &[0.4, 0.9, 0.9]]));
    let case = f.case(&[0.5, 0.9, 0.9]);
    let mask = case.mask(&f.enc.schema).unwrap();
    let r = constrained_intervention(&f.ctx(), &case, &mask).unwrap();
    assert!(!r.flipped && r.fallback);
    assert!(!r.violated);
}

#[test]
fn masked_features_stay_bit_identical() {
    let mut f = Fixture::new(hand_set());
    f.enc = unit_encoder(vec![
        FeatureSpec::continuous("a").ranked(1),
        FeatureSpec::continuous("b"),
        FeatureSpec::continuous("c").ranked(2),
    ]);
    let case = f.case(&[0.9, 0.3, 0.7]);
    let mask = case.mask(&f.enc.schema).unwrap();
    assert_eq!(mask.order, vec![0, 2]);
    let r = constrained_intervention(&f.ctx(), &case, &mask).unwrap();
    assert!(r.flipped);
    assert_eq!(r.x_star[1].to_bits(), case.encoded[1].to_bits());
    assert_eq!(r.raw_star[1].to_bits(), case.raw[1].to_bits());
    assert!(!r.violated);
}

#[test]
fn minimal_with_single_member_nudges_it() {
    let f = Fixture::new(set_of(&[&[0.5, 0.5, 0.5]]));
    let case = f.case(&[0.9, 0.8, 0.7]);
    let mask = case.mask(&f.enc.schema).unwrap();
    let r = minimal_intervention(&f.ctx(), &case, &mask).unwrap();
    assert_eq!(r.critical_index, 0);
    assert_eq!(r.lambda, Some(0.05));
    let expect: Vec<f64> = [0.9, 0.8, 0.7].iter().map(|t| 0.5 + 0.05 * (0.5 - t)).collect();
    assert_eq!(r.x_star, expect);
    assert!(r.flipped);
    assert_eq!(r.mode, Mode::Minimal);
}

#[test]
fn minimal_tries_larger_nudges() {
    // sum of the member is 1.52: the 0.05 push lands at 1.52 - 0.05*0.88 = 1.476
    let mut f = Fixture::new(set_of(&[&[0.52, 0.5, 0.5]]));
    f.config.lambdas = vec![0.01, 0.05];
    let case = f.case(&[0.9, 0.8, 0.7]);
    let mask = case.mask(&f.enc.schema).unwrap();
    let r = minimal_intervention(&f.ctx(), &case, &mask).unwrap();
    assert_eq!(r.lambda, Some(0.05));
    assert!(r.flipped);
}

#[test]
fn objective_terms_on_trivial_points() {
    let f = Fixture::new(hand_set());
    let ctx = f.ctx();
    let case = f.case(&[0.9, 0.8, 0.7]);
    let same = score_objective(&ctx, &case, &case.encoded).unwrap();
    assert_eq!(same.proximity_term, 0.0);
    assert_eq!(same.preference_term, 0.0);
    let at_row = score_objective(&ctx, &case, &f.normal[1]).unwrap();
    assert_eq!(at_row.realism_term, 0.0);
    // weights 3/3, 2/3, 1/3 on |(0.3, 0.3, 0.2) - (0.9, 0.8, 0.7)|
    let expect = 0.6 + 2.0 / 3.0 * 0.5 + 1.0 / 3.0 * 0.5;
    assert!((at_row.preference_term - expect).abs() < 1e-12);
    assert!(at_row.ce_term >= 0.0 && at_row.ce_term.is_finite());
}

#[test]
fn batch_matches_single_calls_in_order() {
    let f = Fixture::new(hand_set());
    let ctx = f.ctx();
    let cases: Vec<_> = [[0.9, 0.8, 0.7], [0.95, 0.35, 0.3], [0.5, 0.9, 0.9]]
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut c = f.case(r);
            c.index = i;
            c
        })
        .collect();
    for mode in [Mode::Minimal, Mode::Constrained] {
        let seq = explain_batch(&ctx, &cases, mode, Exec::Sequential).unwrap();
        let par = explain_batch(&ctx, &cases, mode, Exec::Parallel).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq.iter().map(|r| r.case).collect::<Vec<_>>(), vec![0, 1, 2]);
    }
}
