//! Decision-boundary approximation.
//!
//! Two autoencoders are trained against the frozen classifier, one mapping
//! normal rows toward the abnormal class and one the reverse. Their outputs
//! ("quasi" samples) are paired across the boundary and each pair is bisected
//! until the class probabilities balance within `beta`. The survivors form the
//! [`CriticalSet`] used by the intervention search.

mod autoencoder;
mod bisect;
mod critical;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

pub use autoencoder::{
    build_autoencoder, generate_quasi, train_boundary_autoencoder, BoundaryTrainConfig, QuasiSample,
    ReconstructionTarget, Side,
};
pub use bisect::{
    bisect_pair, bisect_segment, interpolate, pair_candidates, BisectOutcome, BisectStep, BisectionConfig, Pair,
    Pairing,
};
pub use critical::{CriticalInstance, CriticalSet, Provenance};

use crate::classifier::ClassifierModel;
use crate::data::{EncodedDataset, Layout};
use crate::error::{Error, Result};
use crate::neural::{EpochLog, Network};
use crate::par::Exec;
use crate::{ABNORMAL, NORMAL};

/// Counts and gap statistics of one boundary run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ForgeStats {
    /// Quasi samples per side (from normal, from abnormal), all replicas.
    pub quasi: [usize; 2],
    /// Fraction of quasi samples the classifier puts in the side's target class.
    pub opposite_rate: [f64; 2],
    /// Mean `|f_n - f_a|` of the raw inputs and of their quasi samples.
    pub input_gap_mean: [f64; 2],
    pub quasi_gap_mean: [f64; 2],
    pub pairs: usize,
    pub unpaired: usize,
    pub categorical_mismatch: usize,
    pub rejected: usize,
    pub bisected: usize,
    pub ae_only: usize,
    pub duplicates: usize,
    pub size: usize,
    pub gap_mean: f64,
    pub gap_median: f64,
    pub gap_max: f64,
    pub mean_iterations: f64,
}

pub struct Forge {
    pub set: CriticalSet,
    pub stats: ForgeStats,
    /// Indexed by side: from normal, from abnormal.
    pub autoencoders: [Network; 2],
    pub logs: [Vec<EpochLog>; 2],
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Runs both autoencoders, pairing and bisection end to end.
pub fn build_critical_set(
    classifier: &ClassifierModel,
    train: &EncodedDataset,
    layout: &Layout,
    boundary: &BoundaryTrainConfig,
    bisection: &BisectionConfig,
    exec: Exec,
) -> Result<Forge> {
    boundary.validate()?;
    bisection.validate()?;
    let normal = train.of_class(NORMAL);
    let abnormal = train.of_class(ABNORMAL);

    let (ae_n, ae_a) = exec.join(
        || train_boundary_autoencoder(Side::FromNormal, &normal, &abnormal, classifier, boundary),
        || train_boundary_autoencoder(Side::FromAbnormal, &abnormal, &normal, classifier, boundary),
    );
    let (ae_n, log_n) = ae_n?;
    let (ae_a, log_a) = ae_a?;

    let mut stats = ForgeStats::default();
    let mut sides: [Vec<QuasiSample>; 2] = [Vec::new(), Vec::new()];
    for (k, (side, ae, inputs)) in [(Side::FromNormal, &ae_n, &normal), (Side::FromAbnormal, &ae_a, &abnormal)]
        .into_iter()
        .enumerate()
    {
        for r in 0..boundary.replicas {
            sides[k].extend(generate_quasi(ae, inputs, classifier, layout, r, side.seed(boundary.train.seed), exec)?);
        }
        let input_gaps = exec.map(inputs, |_, x| classifier.prob_pair(x).map(|(a, b)| (a - b).abs()));
        stats.input_gap_mean[k] = mean(input_gaps.into_iter().collect::<Result<Vec<_>>>()?.into_iter());
        stats.quasi[k] = sides[k].len();
        stats.quasi_gap_mean[k] = mean(sides[k].iter().map(QuasiSample::gap));
        stats.opposite_rate[k] =
            mean(sides[k].iter().map(|q| f64::from(u8::from(q.label == side.target_class()))));
    }

    let mut instances = Vec::new();
    for q in sides.iter().flatten() {
        if q.gap() <= bisection.beta {
            instances.push(CriticalInstance {
                x: q.x.clone(),
                f_n: q.f_n,
                f_a: q.f_a,
                provenance: Provenance::AeOnly,
            });
        }
    }
    stats.ae_only = instances.len();

    let pairing = pair_candidates(&sides[0], &sides[1], layout);
    stats.pairs = pairing.pairs.len();
    stats.unpaired = pairing.unpaired;
    stats.categorical_mismatch = pairing.categorical_mismatch;
    let outcomes = exec.map(&pairing.pairs, |_, p| bisect_pair(p, classifier, layout, bisection));
    let mut iterations = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let o = o?;
        iterations.push(o.iterations() as f64);
        if o.converged {
            stats.bisected += 1;
            instances.push(CriticalInstance {
                x: o.point,
                f_n: o.f_n,
                f_a: o.f_a,
                provenance: Provenance::Bisected,
            });
        } else {
            stats.rejected += 1;
        }
    }
    stats.mean_iterations = mean(iterations.into_iter());

    let mut seen = HashSet::new();
    let before = instances.len();
    instances.retain(|c| seen.insert(c.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>()));
    stats.duplicates = before - instances.len();

    if instances.is_empty() {
        return Err(Error::NoCriticalInstances(format!(
            "quasi samples {:?}, opposite-class rates {:?}, pairs {}, unpaired {}, rejected {}{}",
            stats.quasi,
            stats.opposite_rate,
            stats.pairs,
            stats.unpaired,
            stats.rejected,
            pairing.diagnostic.map(|d| format!(" ({d})")).unwrap_or_default()
        )));
    }
    let gaps: Vec<f64> = instances.iter().map(CriticalInstance::gap).collect();
    stats.size = instances.len();
    stats.gap_mean = mean(gaps.iter().copied());
    stats.gap_max = gaps.iter().copied().fold(0.0, f64::max);
    stats.gap_median = median(gaps);

    Ok(Forge {
        set: CriticalSet { instances },
        stats,
        autoencoders: [ae_n, ae_a],
        logs: [log_n, log_a],
    })
}

#[cfg(test)]
mod tests;
