use cfx_core::neural::{
    gradient_check, kink_margin, one_hot, Activation, CompositeLoss, LayerSpec, Loss, Network,
};
use cfx_core::rng;
use rand::Rng;

const HIDDEN: [Activation; 5] = [
    Activation::Relu,
    Activation::LeakyRelu(0.1),
    Activation::Elu(1.0),
    Activation::Tanh,
    Activation::Sigmoid,
];

fn random_specs(r: &mut impl Rng, out: usize, head: Activation) -> Vec<LayerSpec> {
    let depth = r.random_range(1..=3);
    let mut specs: Vec<LayerSpec> = (0..depth)
        .map(|_| LayerSpec {
            units: r.random_range(2..=6),
            activation: HIDDEN[r.random_range(0..HIDDEN.len())],
            l2: if r.random_bool(0.5) { 0.01 } else { 0.0 },
            dropout: 0.0,
        })
        .collect();
    specs.push(LayerSpec::new(out, head));
    specs
}

/// Draws inputs until every kinked unit sits clear of its kink, so central
/// differences never straddle one.
fn probe_input(r: &mut impl Rng, net: &Network, width: usize) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..width).map(|_| r.random_range(-1.0..1.0)).collect();
        if kink_margin(net, &x).unwrap() > 1e-3 {
            return x;
        }
    }
}

fn worst_over_ten(kind: &str) -> f64 {
    let mut worst: f64 = 0.0;
    for trial in 0..10u64 {
        let mut r = rng::derive(0x6772_6164, trial * 3 + kind.len() as u64);
        let width = r.random_range(2..=5);
        let err = match kind {
            "ce" => {
                let net = Network::build(width, &random_specs(&mut r, 2, Activation::Softmax), trial).unwrap();
                let x = probe_input(&mut r, &net, width);
                let t = one_hot(r.random_range(0..2), 2).unwrap();
                gradient_check(&net, &Loss::CrossEntropy, &x, &t).unwrap()
            }
            "mse" => {
                let out = r.random_range(1..=3);
                let net = Network::build(width, &random_specs(&mut r, out, Activation::Identity), trial).unwrap();
                let x = probe_input(&mut r, &net, width);
                let t: Vec<f64> = (0..out).map(|_| r.random_range(-1.0..1.0)).collect();
                gradient_check(&net, &Loss::Mse, &x, &t).unwrap()
            }
            _ => {
                let clf = Network::build(width, &random_specs(&mut r, 2, Activation::Softmax), trial + 100).unwrap();
                let ae = Network::build(width, &random_specs(&mut r, width, Activation::Sigmoid), trial).unwrap();
                let x = probe_input(&mut r, &ae, width);
                let loss = Loss::Composite(CompositeLoss {
                    classifier: &clf,
                    alpha: 1.0,
                    adversarial_class: r.random_range(0..2),
                });
                gradient_check(&ae, &loss, &x, &x).unwrap()
            }
        };
        worst = worst.max(err);
    }
    worst
}

#[test]
fn crossentropy_gradients_match_finite_differences() {
    let e = worst_over_ten("ce");
    assert!(e < 1e-4, "max relative error {e}");
}

#[test]
fn mse_gradients_match_finite_differences() {
    let e = worst_over_ten("mse");
    assert!(e < 1e-4, "max relative error {e}");
}

#[test]
fn composite_gradients_match_finite_differences() {
    let e = worst_over_ten("composite");
    assert!(e < 1e-4, "max relative error {e}");
}
