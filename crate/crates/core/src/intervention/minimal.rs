use super::{distance_to_set, ConstraintMask, Context, FactualCase, InterventionResult, Mode};
use crate::error::Result;
use crate::NORMAL;

/// `s + lambda (s - x_T)` with continuous columns clipped and the categorical
/// blocks of `s`.
fn nudge(ctx: &Context<'_>, x_t: &[f64], s: &[f64], lambda: f64) -> Vec<f64> {
    let layout = &ctx.encoder.layout;
    let mut x: Vec<f64> = s.iter().zip(x_t).map(|(a, b)| a + lambda * (a - b)).collect();
    layout.copy_categoricals(&mut x, s);
    layout.clip(&mut x);
    x
}

/// Nearest critical instance under the configured norm, pushed past the
/// boundary by the first nudge fraction that flips the classifier. When no
/// fraction flips, the unnudged instance is tried last; the returned result
/// then carries `flipped = false` if that fails too.
pub fn minimal_intervention(ctx: &Context<'_>, case: &FactualCase, mask: &ConstraintMask) -> Result<InterventionResult> {
    let (_, idx) = distance_to_set(&case.encoded, ctx.set, ctx.config.norm)?;
    let s = &ctx.set.instances[idx].x;
    let mut chosen = None;
    for &lambda in ctx.config.lambdas.iter().chain(std::iter::once(&0.0)) {
        let x = nudge(ctx, &case.encoded, s, lambda);
        if ctx.classifier.predict_label(&x)? == NORMAL {
            chosen = Some((x, lambda));
            break;
        }
    }
    let (x_star, lambda) = match chosen {
        Some((x, l)) => (x, Some(l)),
        None => {
            let last = ctx.config.lambdas.last().copied().unwrap_or(0.0);
            (nudge(ctx, &case.encoded, s, last), None)
        }
    };
    let mut r = InterventionResult::assemble(ctx, case, Mode::Minimal, x_star, mask, idx)?;
    r.lambda = lambda;
    Ok(r)
}
