use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierModel;
use crate::data::Layout;
use crate::error::{Error, Result};

use super::autoencoder::QuasiSample;

fn default_beta() -> f64 {
    0.02
}

fn default_max_iters() -> usize {
    20
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionConfig {
    /// Largest accepted `|f_n - f_a|` at a critical instance.
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        BisectionConfig {
            beta: default_beta(),
            max_iters: default_max_iters(),
        }
    }
}

impl BisectionConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.beta > 0.0 && self.beta < 0.5) {
            problems.push(format!("beta must lie in (0, 0.5), got {}", self.beta));
        }
        if self.max_iters == 0 {
            problems.push("max_iters must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

/// Endpoints predicted normal (`left`) and abnormal (`right`).
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pairing {
    pub pairs: Vec<Pair>,
    /// Left items with no opposite-label partner on the right.
    pub unpaired: usize,
    /// Pairs whose endpoints disagree in some categorical block.
    pub categorical_mismatch: usize,
    pub diagnostic: Option<String>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Matches every left item with the Euclidean-nearest right item of the
/// opposite predicted label. Partners sharing all categorical levels are
/// preferred; ties go to the lowest right index. Each pair is oriented so the
/// normal-labelled point is the left endpoint.
pub fn pair_candidates(left: &[QuasiSample], right: &[QuasiSample], layout: &Layout) -> Pairing {
    let mut out = Pairing::default();
    for l in left {
        let mut best: Option<(bool, f64, usize)> = None;
        for (j, r) in right.iter().enumerate() {
            if r.label == l.label {
                continue;
            }
            // rank: categorical mismatch first, then distance
            let key = (!layout.same_categoricals(&l.x, &r.x), sq_dist(&l.x, &r.x), j);
            let better = match best {
                None => true,
                Some(b) => (key.0, key.1) < (b.0, b.1),
            };
            if better {
                best = Some(key);
            }
        }
        match best {
            None => out.unpaired += 1,
            Some((mismatch, _, j)) => {
                if mismatch {
                    out.categorical_mismatch += 1;
                }
                let r = &right[j];
                let (left, right) = if l.label == crate::NORMAL {
                    (l.x.clone(), r.x.clone())
                } else {
                    (r.x.clone(), l.x.clone())
                };
                out.pairs.push(Pair { left, right });
            }
        }
    }
    if out.pairs.is_empty() {
        out.diagnostic = Some(format!(
            "no opposite-label pairs among {} left and {} right quasi samples",
            left.len(),
            right.len()
        ));
    }
    out
}

/// One evaluated midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectStep {
    /// Segment parameter of the midpoint (0 = left endpoint).
    pub t: f64,
    pub lo: f64,
    pub hi: f64,
    pub f_n: f64,
    pub f_a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectOutcome {
    /// Last midpoint evaluated.
    pub point: Vec<f64>,
    pub f_n: f64,
    pub f_a: f64,
    pub converged: bool,
    pub trace: Vec<BisectStep>,
}

impl BisectOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn t(&self) -> f64 {
        self.trace.last().map_or(0.5, |s| s.t)
    }
}

/// Point at parameter `t` on the segment; categorical blocks stay at the left
/// endpoint's values.
pub fn interpolate(left: &[f64], right: &[f64], t: f64, layout: &Layout) -> Vec<f64> {
    let mut x: Vec<f64> = left.iter().zip(right).map(|(a, b)| a + t * (b - a)).collect();
    layout.copy_categoricals(&mut x, left);
    x
}

/// Bisection on the segment between `left` and `right` with an arbitrary
/// probability function. Moves the left bracket while the normal probability
/// dominates and the right bracket otherwise; stops once the gap is within
/// `beta` or after `max_iters` midpoints.
pub fn bisect_segment<F>(left: &[f64], right: &[f64], layout: &Layout, config: &BisectionConfig, probs: F) -> Result<BisectOutcome>
where
    F: Fn(&[f64]) -> Result<(f64, f64)>,
{
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut trace = Vec::with_capacity(config.max_iters);
    let mut point = Vec::new();
    let (mut f_n, mut f_a) = (f64::NAN, f64::NAN);
    for _ in 0..config.max_iters {
        let t = 0.5 * (lo + hi);
        point = interpolate(left, right, t, layout);
        (f_n, f_a) = probs(&point)?;
        trace.push(BisectStep { t, lo, hi, f_n, f_a });
        if (f_n - f_a).abs() <= config.beta {
            return Ok(BisectOutcome {
                point,
                f_n,
                f_a,
                converged: true,
                trace,
            });
        }
        if f_n > f_a {
            lo = t;
        } else {
            hi = t;
        }
    }
    Ok(BisectOutcome {
        point,
        f_n,
        f_a,
        converged: false,
        trace,
    })
}

pub fn bisect_pair(pair: &Pair, classifier: &ClassifierModel, layout: &Layout, config: &BisectionConfig) -> Result<BisectOutcome> {
    bisect_segment(&pair.left, &pair.right, layout, config, |x| classifier.prob_pair(x))
}
