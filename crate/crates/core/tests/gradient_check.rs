use delaystream::mlp::{MlpConfig, MlpModel, Scaler};
use delaystream::{DelayLabel, FeatureVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(seed: u64) -> (MlpModel, Vec<(FeatureVector, DelayLabel)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = rng.random_range(1..=6);
    let hidden = rng.random_range(1..=8);
    let batch: Vec<(FeatureVector, DelayLabel)> = (0..rng.random_range(1..=12))
        .map(|_| {
            let x = (0..input).map(|_| rng.random_range(-200.0..200.0)).collect();
            (FeatureVector::new(x).unwrap(), DelayLabel::ALL[rng.random_range(0..3)])
        })
        .collect();
    let refs: Vec<&FeatureVector> = batch.iter().map(|(x, _)| x).collect();
    let cfg = MlpConfig {
        l2: rng.random_range(0.0..0.01),
        ..MlpConfig::default()
    };
    let base = MlpModel::zeros(input, hidden, Scaler::fit(&refs), cfg);
    let params: Vec<f64> = (0..base.parameter_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    (base.with_parameters(&params).unwrap(), batch)
}

fn central_difference(model: &MlpModel, batch: &[(FeatureVector, DelayLabel)], k: usize, h: f64) -> f64 {
    let p = model.parameters();
    let mut plus = p.clone();
    let mut minus = p;
    plus[k] += h;
    minus[k] -= h;
    let f = |q: &[f64]| model.with_parameters(q).unwrap().loss(batch).unwrap();
    (f(&plus) - f(&minus)) / (2.0 * h)
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let (model, batch) = random_problem(seed);
        let analytic = model.gradient(&batch).unwrap().flatten();
        assert_eq!(analytic.len(), model.parameter_count());
        for (k, a) in analytic.iter().enumerate() {
            let n = central_difference(&model, &batch, k, 1e-5);
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
            worst = worst.max(rel);
            assert!(rel <= 1e-4, "seed {seed} param {k}: analytic {a} numeric {n} rel {rel}");
        }
    }
    println!("worst relative error {worst:e}");
}

#[test]
fn bias_gradients_carry_no_weight_decay() {
    let (model, batch) = random_problem(3);
    let strong = MlpModel::zeros(
        model.input_arity(),
        model.hidden_neurons(),
        model.scaler().clone(),
        MlpConfig {
            l2: 1.0,
            ..model.config().clone()
        },
    )
    .with_parameters(&model.parameters())
    .unwrap();
    let g0 = model.gradient(&batch).unwrap();
    let g1 = strong.gradient(&batch).unwrap();
    assert_eq!(g0.b1, g1.b1);
    assert_eq!(g0.b2, g1.b2);
    assert_ne!(g0.w1, g1.w1);
}
