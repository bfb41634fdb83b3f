use serde::{Deserialize, Serialize};

use super::{distance, Context, FactualCase, NormMode};
use crate::error::{Error, Result};
use crate::neural::{crossentropy, one_hot};
use crate::NORMAL;

/// The four addends of the counterfactual objective, reported separately.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    /// Crossentropy of the classifier output against the normal class.
    pub ce_term: f64,
    /// Encoded Euclidean distance to the factual.
    pub proximity_term: f64,
    /// Encoded Euclidean distance to the nearest normal training row.
    pub realism_term: f64,
    /// `sum (d - r + 1) / d * |x*_i - x_T,i|` over ranked features (encoded
    /// units; level mismatch counts 1).
    pub preference_term: f64,
}

/// Diagnostic score of a finished counterfactual; never used to steer search.
pub fn score_objective(
    ctx: &Context<'_>,
    case: &FactualCase,
    x_star: &[f64],
) -> Result<ObjectiveBreakdown> {
    if ctx.normal_rows.is_empty() {
        return Err(Error::EmptyClass(NORMAL));
    }
    let probs = ctx.classifier.predict_proba(x_star)?;
    let ce_term = crossentropy(&probs, &one_hot(NORMAL, probs.len())?)?;
    let proximity_term = distance(x_star, &case.encoded, NormMode::MinMax);
    let realism_term = ctx
        .normal_rows
        .iter()
        .map(|r| distance(x_star, r, NormMode::MinMax))
        .fold(f64::INFINITY, f64::min);
    let layout = &ctx.encoder.layout;
    let ranks = case.ranks.clone().unwrap_or_else(|| ctx.encoder.schema.ranks());
    let d = ranks.len() as f64;
    let mut preference_term = 0.0;
    for (j, r) in ranks.iter().enumerate() {
        let Some(r) = r else { continue };
        let blk = layout.blocks[j];
        let change = if blk.categorical {
            f64::from(u8::from(layout.level(x_star, j) != layout.level(&case.encoded, j)))
        } else {
            (x_star[blk.start] - case.encoded[blk.start]).abs()
        };
        preference_term += (d - *r as f64 + 1.0) / d * change;
    }
    Ok(ObjectiveBreakdown {
        ce_term,
        proximity_term,
        realism_term,
        preference_term,
    })
}
