use super::{Gradients, Loss, Network};
use crate::error::Result;

/// Finite-difference step.
pub const GRADCHECK_STEP: f64 = 1e-5;

/// Analytic gradient of `loss(net(x), target) + penalty` in inference mode.
pub fn loss_gradients(net: &Network, loss: &Loss<'_>, x: &[f64], target: &[f64]) -> Result<Gradients> {
    let trace = net.forward(x, None)?;
    let eval = loss.evaluate(trace.output(), target)?;
    let (mut grads, _) = net.backward(&trace, &eval.grad)?;
    net.add_penalty_gradient(&mut grads);
    Ok(grads)
}

fn objective(net: &Network, loss: &Loss<'_>, x: &[f64], target: &[f64]) -> Result<f64> {
    let out = net.predict(x)?;
    Ok(loss.evaluate(&out, target)?.value + net.penalty())
}

/// Max over parameters of `|g_a - g_fd| / max(1e-8, |g_a| + |g_fd|)` with
/// central differences of step [`GRADCHECK_STEP`].
///
/// Probe points should keep every kinked unit away from zero; see
/// [`kink_margin`].
pub fn gradient_check(net: &Network, loss: &Loss<'_>, x: &[f64], target: &[f64]) -> Result<f64> {
    let analytic = loss_gradients(net, loss, x, target)?.flatten();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    let mut flat = 0;
    for k in 0..net.layers.len() {
        for which in 0..2 {
            let len = if which == 0 {
                net.layers[k].weights.len()
            } else {
                net.layers[k].biases.len()
            };
            for i in 0..len {
                let orig = *param_mut(&mut probe, k, which, i);
                *param_mut(&mut probe, k, which, i) = orig + GRADCHECK_STEP;
                let plus = objective(&probe, loss, x, target)?;
                *param_mut(&mut probe, k, which, i) = orig - GRADCHECK_STEP;
                let minus = objective(&probe, loss, x, target)?;
                *param_mut(&mut probe, k, which, i) = orig;
                let fd = (plus - minus) / (2.0 * GRADCHECK_STEP);
                let ga = analytic[flat];
                let rel = (ga - fd).abs() / (ga.abs() + fd.abs()).max(1e-8);
                worst = worst.max(rel);
                flat += 1;
            }
        }
    }
    Ok(worst)
}

fn param_mut(net: &mut Network, layer: usize, which: usize, i: usize) -> &mut f64 {
    if which == 0 {
        &mut net.layers[layer].weights[i]
    } else {
        &mut net.layers[layer].biases[i]
    }
}

/// Smallest `|z|` over units with kinked activations at input `x`
/// (`f64::INFINITY` when the network has none).
pub fn kink_margin(net: &Network, x: &[f64]) -> Result<f64> {
    let trace = net.forward(x, None)?;
    Ok(net
        .layers
        .iter()
        .zip(&trace.pre)
        .filter(|(l, _)| l.activation.has_kink())
        .flat_map(|(_, z)| z.iter().map(|v| v.abs()))
        .fold(f64::INFINITY, f64::min))
}
