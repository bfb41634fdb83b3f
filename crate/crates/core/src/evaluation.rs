//! Batch metrics for counterfactuals: validity, proximity, sparsity,
//! violations, plausibility and per-feature diversity.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{Encoder, FeatureSchema, Layout};
use crate::error::{Error, Result};
use crate::intervention::{InterventionResult, Mode, NormMode, CHANGE_TOL};
use crate::simulator::SimulatorModel;
use crate::NORMAL;

fn nonempty(results: &[InterventionResult]) -> Result<()> {
    if results.is_empty() {
        Err(Error::EmptyBatch("no counterfactuals to evaluate"))
    } else {
        Ok(())
    }
}

/// Fraction of counterfactuals the simulator places in the normal class.
/// Unflipped results stay in the denominator.
pub fn validity(results: &[InterventionResult], simulator: &SimulatorModel) -> Result<f64> {
    nonempty(results)?;
    let ok = results
        .iter()
        .filter(|r| simulator.simulate_class(&r.x_star) == NORMAL)
        .count();
    Ok(ok as f64 / results.len() as f64)
}

/// Same count judged by the classifier that was explained.
pub fn classifier_validity(results: &[InterventionResult]) -> Result<f64> {
    nonempty(results)?;
    Ok(results.iter().filter(|r| r.flipped).count() as f64 / results.len() as f64)
}

fn unit(x: &[f64]) -> Vec<f64> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter().map(|v| v / n).collect()
    } else {
        x.to_vec()
    }
}

/// Continuous parts (raw units) each scaled to unit L2 norm and differenced,
/// combined with the categorical mismatch fraction:
/// `sqrt(||u(x*_c) - u(x_c)||^2 + (mismatches / m2)^2)`.
/// Datasets without categorical features use the continuous term alone.
pub fn proximity(result: &InterventionResult, schema: &FeatureSchema) -> f64 {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let (mut mismatches, mut m2) = (0usize, 0usize);
    for (j, f) in schema.features.iter().enumerate() {
        if f.is_categorical() {
            m2 += 1;
            if result.raw_star[j] != result.raw_t[j] {
                mismatches += 1;
            }
        } else {
            a.push(result.raw_star[j]);
            b.push(result.raw_t[j]);
        }
    }
    let cont: f64 = unit(&a).iter().zip(unit(&b)).map(|(x, y)| (x - y) * (x - y)).sum();
    let cat = if m2 == 0 { 0.0 } else { mismatches as f64 / m2 as f64 };
    (cont + cat * cat).sqrt()
}

/// Encoded Euclidean distance divided by the number of features.
pub fn proximity_per_feature(result: &InterventionResult, layout: &Layout) -> f64 {
    let d: f64 = result
        .x_star
        .iter()
        .zip(&result.x_t)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    d / layout.features() as f64
}

pub fn changes(result: &InterventionResult, layout: &Layout) -> usize {
    (0..layout.features())
        .filter(|&j| layout.feature_changed(&result.x_t, &result.x_star, j, CHANGE_TOL))
        .count()
}

pub fn masked_changes(result: &InterventionResult, layout: &Layout) -> usize {
    (0..layout.features())
        .filter(|&j| result.masked[j] && layout.feature_changed(&result.x_t, &result.x_star, j, CHANGE_TOL))
        .count()
}

/// Mean number of changed features per counterfactual.
pub fn sparsity(results: &[InterventionResult], layout: &Layout) -> Result<f64> {
    nonempty(results)?;
    Ok(results.iter().map(|r| changes(r, layout)).sum::<usize>() as f64 / results.len() as f64)
}

/// Mean number of changed masked features per counterfactual.
pub fn violations(results: &[InterventionResult], layout: &Layout) -> Result<f64> {
    nonempty(results)?;
    Ok(results.iter().map(|r| masked_changes(r, layout)).sum::<usize>() as f64 / results.len() as f64)
}

/// Fraction of counterfactuals inside the training ranges (continuous) and
/// seen levels (categorical).
pub fn plausibility(results: &[InterventionResult], encoder: &Encoder) -> Result<f64> {
    nonempty(results)?;
    Ok(results.iter().filter(|r| encoder.in_range(&r.raw_star)).count() as f64 / results.len() as f64)
}

/// Per-feature value in encoded units; categorical features by level index.
fn feature_value(layout: &Layout, x: &[f64], j: usize) -> f64 {
    let b = layout.blocks[j];
    if b.categorical {
        layout.level(x, j) as f64
    } else {
        x[b.start]
    }
}

fn pair_sums(results: &[InterventionResult], layout: &Layout) -> Result<Vec<f64>> {
    if results.len() < 2 {
        return Err(Error::EmptyBatch("diversity needs at least two counterfactuals"));
    }
    Ok((0..layout.features())
        .map(|k| {
            let vals: Vec<f64> = results.iter().map(|r| feature_value(layout, &r.x_star, k)).collect();
            let cat = layout.blocks[k].categorical;
            let mut s = 0.0;
            for (i, a) in vals.iter().enumerate() {
                for (j, b) in vals.iter().enumerate() {
                    if i != j {
                        s += if cat { f64::from(u8::from(a != b)) } else { (a - b).abs() };
                    }
                }
            }
            s
        })
        .collect())
}

/// `sum_{i != j} |x_i^k - x_j^k| / |CF|` per feature, with the divisor taken
/// literally as the number of counterfactuals. Continuous features in encoded
/// units, categorical features as level mismatch.
pub fn diversity(results: &[InterventionResult], layout: &Layout) -> Result<Vec<f64>> {
    let n = results.len() as f64;
    Ok(pair_sums(results, layout)?.into_iter().map(|s| s / n).collect())
}

/// The same sums divided by the number of ordered pairs.
pub fn diversity_averaged(results: &[InterventionResult], layout: &Layout) -> Result<Vec<f64>> {
    let n = results.len() as f64;
    Ok(pair_sums(results, layout)?.into_iter().map(|s| s / (n * (n - 1.0))).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dataset: String,
    pub mode: Mode,
    pub norm: NormMode,
    #[serde(rename = "val.")]
    pub validity: f64,
    #[serde(rename = "prox.")]
    pub proximity: f64,
    #[serde(rename = "spar.")]
    pub sparsity: f64,
    #[serde(rename = "viol.")]
    pub violations: f64,
    #[serde(rename = "plau.")]
    pub plausibility: f64,
    pub validity_classifier: f64,
    /// Validity under every simulator supplied, keyed by simulator family.
    pub validity_by_simulator: BTreeMap<String, f64>,
    pub proximity_per_feature: f64,
    pub cases: usize,
    pub flips: usize,
    pub unflipped: usize,
    pub fallbacks: usize,
    /// Literal-divisor diversity per feature; empty for a single case.
    pub diversity: BTreeMap<String, f64>,
    pub diversity_averaged: BTreeMap<String, f64>,
}

pub fn compute_metrics(
    dataset: &str,
    mode: Mode,
    norm: NormMode,
    results: &[InterventionResult],
    simulator: &SimulatorModel,
    others: &[&SimulatorModel],
    encoder: &Encoder,
) -> Result<MetricsReport> {
    nonempty(results)?;
    let mut validity_by_simulator = BTreeMap::new();
    for s in std::iter::once(simulator).chain(others.iter().copied()) {
        validity_by_simulator.insert(s.kind.name().to_string(), validity(results, s)?);
    }
    let layout = &encoder.layout;
    let names = || encoder.schema.features.iter().map(|f| f.name.clone());
    let (diversity, diversity_averaged) = if results.len() >= 2 {
        (
            names().zip(diversity(results, layout)?).collect(),
            names().zip(diversity_averaged(results, layout)?).collect(),
        )
    } else {
        (BTreeMap::new(), BTreeMap::new())
    };
    let n = results.len() as f64;
    let flips = results.iter().filter(|r| r.flipped).count();
    Ok(MetricsReport {
        dataset: dataset.to_string(),
        mode,
        norm,
        validity: validity(results, simulator)?,
        proximity: results.iter().map(|r| proximity(r, &encoder.schema)).sum::<f64>() / n,
        sparsity: sparsity(results, layout)?,
        violations: violations(results, layout)?,
        plausibility: plausibility(results, encoder)?,
        validity_classifier: classifier_validity(results)?,
        validity_by_simulator,
        proximity_per_feature: results.iter().map(|r| proximity_per_feature(r, layout)).sum::<f64>() / n,
        cases: results.len(),
        flips,
        unflipped: results.len() - flips,
        fallbacks: results.iter().filter(|r| r.fallback).count(),
        diversity,
        diversity_averaged,
    })
}

/// Report file: the run echo followed by one block per dataset and mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub run: toml::Table,
    pub block: Vec<MetricsReport>,
}

pub fn assemble_report(blocks: Vec<MetricsReport>, run: toml::Table) -> Result<(ReportDocument, String)> {
    if blocks.is_empty() {
        return Err(Error::EmptyBatch("report has no metric blocks"));
    }
    let doc = ReportDocument { run, block: blocks };
    let text = toml::to_string(&doc).map_err(|e| Error::Format(e.to_string()))?;
    Ok((doc, text))
}

/// One row per counterfactual for external plotting.
pub fn write_case_csv<W: Write>(
    writer: W,
    results: &[InterventionResult],
    simulator: &SimulatorModel,
    encoder: &Encoder,
) -> Result<()> {
    nonempty(results)?;
    let layout = &encoder.layout;
    let mut w = csv::Writer::from_writer(writer);
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    w.write_record([
        "case",
        "mode",
        "classifier_flip",
        "simulator_valid",
        "proximity",
        "proximity_per_feature",
        "changes",
        "violations",
        "plausible",
        "fallback",
        "ce_term",
        "proximity_term",
        "realism_term",
        "preference_term",
    ])
    .map_err(fmt)?;
    for r in results {
        let o = &r.objective;
        w.write_record([
            r.case.to_string(),
            r.mode.as_str().to_string(),
            r.flipped.to_string(),
            (simulator.simulate_class(&r.x_star) == NORMAL).to_string(),
            format!("{:?}", proximity(r, &encoder.schema)),
            format!("{:?}", proximity_per_feature(r, layout)),
            changes(r, layout).to_string(),
            masked_changes(r, layout).to_string(),
            encoder.in_range(&r.raw_star).to_string(),
            r.fallback.to_string(),
            format!("{:?}", o.ce_term),
            format!("{:?}", o.proximity_term),
            format!("{:?}", o.realism_term),
            format!("{:?}", o.preference_term),
        ])
        .map_err(fmt)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}
