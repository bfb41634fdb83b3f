use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, FeatureSchema, FeatureSpec};
use crate::error::{Error, Result};
use crate::rng;

/// `normal . x = offset`; class 1 lies on the positive side.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        let norm = self.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        (self.normal.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() - self.offset) / norm
    }

    pub fn classify(&self, x: &[f64]) -> usize {
        usize::from(self.signed_distance(x) > 0.0)
    }
}

/// Two isotropic unit-variance Gaussians in 2-D with means `(0, 0)` (class 0)
/// and `(separation, 0)` (class 1). The Bayes boundary is `x0 = separation / 2`.
#[derive(Debug, Clone)]
pub struct GaussianOracle {
    pub data: Dataset,
    pub means: [[f64; 2]; 2],
    pub boundary: Hyperplane,
}

pub fn synth_gaussian(n: usize, separation: f64, seed: u64) -> Result<GaussianOracle> {
    if n < 2 || separation < 0.0 || !separation.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "synth_gaussian needs n >= 2 and a finite separation >= 0 (got n={n}, separation={separation})"
        )));
    }
    let schema = Arc::new(FeatureSchema::new(vec![
        FeatureSpec::continuous("x0").ranked(1),
        FeatureSpec::continuous("x1").ranked(2),
    ])?);
    let means = [[0.0, 0.0], [separation, 0.0]];
    let mut rng = rng::derive(seed, 0x6761_7573_73);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        rows.push(vec![means[class][0] + a, means[class][1] + b]);
        labels.push(class);
    }
    Ok(GaussianOracle {
        data: Dataset::new(rows, labels, schema)?,
        means,
        boundary: Hyperplane {
            normal: vec![1.0, 0.0],
            offset: separation / 2.0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_is_perpendicular_bisector() {
        let o = synth_gaussian(10, 4.0, 0).unwrap();
        assert_eq!(o.boundary.offset, 2.0);
        assert_eq!(o.boundary.signed_distance(&[2.0, 17.0]), 0.0);
        assert_eq!(o.data.class_counts(), vec![5, 5]);
    }

    #[test]
    fn zero_separation_is_a_coin_flip() {
        let o = synth_gaussian(20_000, 0.0, 3).unwrap();
        let correct = o
            .data
            .rows
            .iter()
            .zip(&o.data.labels)
            .filter(|(x, &l)| o.boundary.classify(x) == l)
            .count() as f64
            / 20_000.0;
        assert!((correct - 0.5).abs() < 0.02, "{correct}");
    }
}
