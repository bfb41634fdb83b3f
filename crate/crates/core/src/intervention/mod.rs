//! Counterfactual search over a critical set.
//!
//! Minimal mode returns the critical instance nearest to the factual and
//! nudges it just past the boundary. Constrained mode walks the modifiable
//! features in preference order, borrowing values from one critical instance
//! until the classifier flips, and never touches masked features.

mod constrained;
mod minimal;
mod objective;

use serde::{Deserialize, Serialize};

pub use constrained::{constrained_intervention, Alg2Step, StepKind};
pub use minimal::minimal_intervention;
pub use objective::{score_objective, ObjectiveBreakdown};

use crate::boundary::CriticalSet;
use crate::classifier::ClassifierModel;
use crate::data::{Encoder, FeatureSchema};
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::{ABNORMAL, NORMAL};

/// Tolerance for "feature changed" on continuous columns, in encoded units.
pub const CHANGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// Euclidean distance in encoded space, where every continuous feature is
    /// min-max scaled by the training split.
    #[default]
    #[serde(rename = "minmax")]
    MinMax,
    /// Each vector divided by its own L2 norm before the Euclidean distance.
    #[serde(rename = "literal")]
    SampleL2,
}

impl NormMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormMode::MinMax => "minmax",
            NormMode::SampleL2 => "literal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Minimal,
    Constrained,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Minimal => "minimal",
            Mode::Constrained => "constrained",
        }
    }
}

fn unit(x: &[f64]) -> Vec<f64> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter().map(|v| v / n).collect()
    } else {
        x.to_vec()
    }
}

pub fn distance(a: &[f64], b: &[f64], norm: NormMode) -> f64 {
    match norm {
        NormMode::MinMax => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        NormMode::SampleL2 => distance(&unit(a), &unit(b), NormMode::MinMax),
    }
}

/// Exact nearest member by linear scan; ties go to the lowest index.
pub fn distance_to_set(x: &[f64], set: &CriticalSet, norm: NormMode) -> Result<(f64, usize)> {
    if set.is_empty() {
        return Err(Error::EmptyCriticalSet);
    }
    let xn;
    let probe = match norm {
        NormMode::MinMax => x,
        NormMode::SampleL2 => {
            xn = unit(x);
            &xn
        }
    };
    let mut best = (f64::INFINITY, 0);
    for (i, c) in set.instances.iter().enumerate() {
        crate::error::check_len(x.len(), c.x.len())?;
        let d = match norm {
            NormMode::MinMax => distance(probe, &c.x, NormMode::MinMax),
            NormMode::SampleL2 => distance(probe, &unit(&c.x), NormMode::MinMax),
        };
        if d < best.0 {
            best = (d, i);
        }
    }
    Ok(best)
}

/// Which features must stay fixed, and the order in which the rest are tried.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintMask {
    /// `true` = must not change.
    pub z: Vec<bool>,
    /// Modifiable features by ascending rank, ties by schema index.
    pub order: Vec<usize>,
}

impl ConstraintMask {
    pub fn from_schema(schema: &FeatureSchema) -> Result<Self> {
        Self::with_ranks(schema, &schema.ranks())
    }

    /// Uses `ranks` in place of the schema's; non-actionable features stay
    /// masked whatever their rank.
    pub fn with_ranks(schema: &FeatureSchema, ranks: &[Option<usize>]) -> Result<Self> {
        crate::error::check_len(schema.len(), ranks.len())?;
        let z: Vec<bool> = schema
            .features
            .iter()
            .zip(ranks)
            .map(|(f, r)| !(f.actionable && r.is_some()))
            .collect();
        let mut order: Vec<usize> = (0..z.len()).filter(|&j| !z[j]).collect();
        if order.is_empty() {
            return Err(Error::InvalidConfig("every feature is masked; nothing can change".into()));
        }
        order.sort_by_key(|&j| (ranks[j], j));
        Ok(ConstraintMask { z, order })
    }

    pub fn masked(&self, feature: usize) -> bool {
        self.z[feature]
    }
}

/// A test row predicted abnormal.
#[derive(Debug, Clone, PartialEq)]
pub struct FactualCase {
    /// Caller's identifier, usually the test-split row index.
    pub index: usize,
    pub raw: Vec<f64>,
    pub encoded: Vec<f64>,
    /// Per-case preference ranks replacing the schema's.
    pub ranks: Option<Vec<Option<usize>>>,
}

impl FactualCase {
    pub fn new(index: usize, raw: Vec<f64>, encoder: &Encoder, classifier: &ClassifierModel) -> Result<Self> {
        let encoded = encoder.encode_row(&raw)?;
        if classifier.predict_label(&encoded)? != ABNORMAL {
            return Err(Error::NotAbnormal(index));
        }
        Ok(FactualCase {
            index,
            raw,
            encoded,
            ranks: None,
        })
    }

    pub fn mask(&self, schema: &FeatureSchema) -> Result<ConstraintMask> {
        match &self.ranks {
            Some(r) => ConstraintMask::with_ranks(schema, r),
            None => ConstraintMask::from_schema(schema),
        }
    }
}

fn default_lambdas() -> Vec<f64> {
    vec![0.05, 0.1, 0.2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionConfig {
    #[serde(default)]
    pub norm: NormMode,
    /// Nudge fractions tried in order by minimal mode.
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
}

impl Default for InterventionConfig {
    fn default() -> Self {
        InterventionConfig {
            norm: NormMode::default(),
            lambdas: default_lambdas(),
        }
    }
}

impl InterventionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "lambdas must be finite and nonnegative, got {:?}",
                self.lambdas
            )));
        }
        Ok(())
    }
}

/// Read-only inputs shared by every case.
#[derive(Clone, Copy)]
pub struct Context<'a> {
    pub classifier: &'a ClassifierModel,
    pub set: &'a CriticalSet,
    pub encoder: &'a Encoder,
    /// Encoded training rows labelled normal, for the realism term.
    pub normal_rows: &'a [Vec<f64>],
    pub config: &'a InterventionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionResult {
    pub case: usize,
    pub mode: Mode,
    /// Factual, encoded and raw.
    pub x_t: Vec<f64>,
    pub raw_t: Vec<f64>,
    pub x_star: Vec<f64>,
    pub raw_star: Vec<f64>,
    /// `x* - x_T` in engineering units; `None` for categorical features.
    pub delta: Vec<Option<f64>>,
    /// Features that differ from the factual. Constrained mode lists them in
    /// the order they were changed, minimal mode in schema order.
    pub changed: Vec<usize>,
    pub f_n: f64,
    pub f_a: f64,
    /// The classifier labels `x_star` normal.
    pub flipped: bool,
    /// Mask the case was searched under (`true` = keep fixed).
    pub masked: Vec<bool>,
    /// Some masked feature changed.
    pub violated: bool,
    /// Constrained mode needed the full-distance rerun.
    pub fallback: bool,
    /// Critical instance the result was built from.
    pub critical_index: usize,
    /// Nudge fraction that produced the flip (minimal mode).
    pub lambda: Option<f64>,
    /// Constrained-mode step log.
    pub trace: Vec<Alg2Step>,
    pub objective: ObjectiveBreakdown,
}

impl InterventionResult {
    /// Fills in the derived fields from a finished `x_star`.
    pub(crate) fn assemble(
        ctx: &Context<'_>,
        case: &FactualCase,
        mode: Mode,
        x_star: Vec<f64>,
        mask: &ConstraintMask,
        critical_index: usize,
    ) -> Result<Self> {
        let layout = &ctx.encoder.layout;
        let schema = &ctx.encoder.schema;
        let decoded = ctx.encoder.decode_row(&x_star)?;
        let mut raw_star = Vec::with_capacity(schema.len());
        let mut delta = Vec::with_capacity(schema.len());
        let mut changed = Vec::new();
        for (j, f) in schema.features.iter().enumerate() {
            let moved = layout.feature_changed(&case.encoded, &x_star, j, 0.0);
            let v = if moved { decoded[j] } else { case.raw[j] };
            raw_star.push(v);
            delta.push((!f.is_categorical()).then(|| v - case.raw[j]));
            if layout.feature_changed(&case.encoded, &x_star, j, CHANGE_TOL) {
                changed.push(j);
            }
        }
        let (f_n, f_a) = ctx.classifier.prob_pair(&x_star)?;
        let flipped = ctx.classifier.predict_label(&x_star)? == NORMAL;
        let violated = changed.iter().any(|&j| mask.masked(j));
        let objective = score_objective(ctx, case, &x_star)?;
        Ok(InterventionResult {
            case: case.index,
            mode,
            x_t: case.encoded.clone(),
            raw_t: case.raw.clone(),
            x_star,
            raw_star,
            delta,
            changed,
            f_n,
            f_a,
            flipped,
            masked: mask.z.clone(),
            violated,
            fallback: false,
            critical_index,
            lambda: None,
            trace: Vec::new(),
            objective,
        })
    }

    pub fn changed_names(&self, schema: &FeatureSchema) -> Vec<String> {
        self.changed.iter().map(|&j| schema.features[j].name.clone()).collect()
    }
}

pub fn explain(ctx: &Context<'_>, case: &FactualCase, mode: Mode) -> Result<InterventionResult> {
    let mask = case.mask(&ctx.encoder.schema)?;
    match mode {
        Mode::Minimal => minimal_intervention(ctx, case, &mask),
        Mode::Constrained => constrained_intervention(ctx, case, &mask),
    }
}

/// One result per case, in input order.
pub fn explain_batch(ctx: &Context<'_>, cases: &[FactualCase], mode: Mode, exec: Exec) -> Result<Vec<InterventionResult>> {
    exec.map(cases, |_, c| explain(ctx, c, mode)).into_iter().collect()
}

#[cfg(test)]
mod tests;
