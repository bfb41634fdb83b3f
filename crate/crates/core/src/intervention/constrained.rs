use serde::{Deserialize, Serialize};

use super::{ConstraintMask, Context, FactualCase, InterventionResult, Mode, CHANGE_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// First-preference feature pulled into the critical set's range.
    Clamp,
    /// Feature value copied from the chosen critical instance.
    Copy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alg2Step {
    pub feature: usize,
    pub kind: StepKind,
    /// Critical instance the value came from (`Copy` only).
    pub source: Option<usize>,
    pub f_n: f64,
    pub f_a: f64,
}

fn argmin_by<F: Fn(&[f64]) -> f64>(ctx: &Context<'_>, key: F) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, c) in ctx.set.instances.iter().enumerate() {
        let d = key(&c.x);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

fn block_sq_dist(ctx: &Context<'_>, a: &[f64], b: &[f64], feature: usize) -> f64 {
    let layout = &ctx.encoder.layout;
    if layout.blocks[feature].categorical {
        f64::from(u8::from(layout.level(a, feature) != layout.level(b, feature)))
    } else {
        let c = layout.blocks[feature].start;
        (a[c] - b[c]).powi(2)
    }
}

/// Copies features `order[1..]` from critical instance `c` into `x` until the
/// normal probability strictly exceeds the abnormal one.
fn copy_walk(ctx: &Context<'_>, x: &mut [f64], order: &[usize], c: usize, trace: &mut Vec<Alg2Step>) -> Result<bool> {
    let src = &ctx.set.instances[c].x;
    for &f in order.iter().skip(1) {
        ctx.encoder.layout.copy_feature(x, src, f);
        let (f_n, f_a) = ctx.classifier.prob_pair(x)?;
        trace.push(Alg2Step {
            feature: f,
            kind: StepKind::Copy,
            source: Some(c),
            f_n,
            f_a,
        });
        if f_n > f_a {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Preference-ordered search. Feature `P[1]` is clamped into the critical
/// set's range when it lies outside it; the critical instance closest in
/// `P[1]` is then chosen and features `P[2], P[3], ...` are copied from it
/// one at a time, stopping at the first flip. If the walk ends unflipped it is
/// rerun from the clamped point with the instance nearest over all modifiable
/// features. Masked features are never written.
pub fn constrained_intervention(
    ctx: &Context<'_>,
    case: &FactualCase,
    mask: &ConstraintMask,
) -> Result<InterventionResult> {
    if ctx.set.is_empty() {
        return Err(Error::EmptyCriticalSet);
    }
    let layout = &ctx.encoder.layout;
    let order = &mask.order;
    let p1 = order[0];
    let x_t = &case.encoded;
    let mut x = x_t.clone();
    let mut trace = Vec::new();

    let blk = layout.blocks[p1];
    if !blk.categorical {
        let col = blk.start;
        let (lo, hi) = ctx
            .set
            .instances
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.x[col]), hi.max(c.x[col])));
        let v = x[col];
        let clamped = if v > hi {
            hi
        } else if v < lo {
            lo
        } else {
            v
        };
        if clamped != v {
            x[col] = clamped;
            let (f_n, f_a) = ctx.classifier.prob_pair(&x)?;
            trace.push(Alg2Step {
                feature: p1,
                kind: StepKind::Clamp,
                source: None,
                f_n,
                f_a,
            });
        }
    }
    let (f_n, f_a) = ctx.classifier.prob_pair(&x)?;
    let mut flipped = f_n > f_a;
    let mut fallback = false;
    let mut c = argmin_by(ctx, |s| block_sq_dist(ctx, s, x_t, p1));
    if !flipped {
        let clamped = x.clone();
        flipped = copy_walk(ctx, &mut x, order, c, &mut trace)?;
        if !flipped {
            fallback = true;
            c = argmin_by(ctx, |s| order.iter().map(|&f| block_sq_dist(ctx, s, x_t, f)).sum());
            x = clamped;
            copy_walk(ctx, &mut x, order, c, &mut trace)?;
        }
    }

    let mut r = InterventionResult::assemble(ctx, case, Mode::Constrained, x, mask, c)?;
    // report changes in the order they were made
    let mut changed = Vec::new();
    for s in &trace {
        if !changed.contains(&s.feature) && layout.feature_changed(x_t, &r.x_star, s.feature, CHANGE_TOL) {
            changed.push(s.feature);
        }
    }
    r.changed = changed;
    r.fallback = fallback;
    r.trace = trace;
    Ok(r)
}
