//! One-hidden-layer perceptron trained once by mini-batch gradient descent.
//!
//! Architecture: standardized input → `tanh` hidden layer (2n units unless
//! overridden) → three linear outputs → softmax. The objective is mean
//! cross-entropy plus `l2 * Σ w²` over the two weight matrices; biases are
//! not penalized, so the L2 term contributes `2 * l2 * w` to each weight
//! gradient and nothing to bias gradients.
//!
//! Training is fully determined by `(T, cfg)`: the seed drives both the
//! Xavier-uniform initialization (output layer scaled down by 10) and the
//! per-epoch shuffle.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{DelayLabel, FeatureVector};
use crate::model::{BatchModel, BatchTrainer, Prediction};

pub const FORMAT_VERSION: u32 = 1;
const STD_FLOOR: f64 = 1e-9;
const CLASSES: usize = 3;
/// Shrinks the Xavier range of the output layer so an untrained network
/// starts close to the uniform distribution.
const OUTPUT_INIT_SCALE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    /// Hidden units; `None` means twice the input arity.
    pub hidden_neurons: Option<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub l2: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_neurons: None,
            learning_rate: 0.01,
            epochs: 300,
            batch_size: 32,
            seed: 1,
            l2: 1e-4,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_neurons == Some(0) {
            return Err(Error::InvalidConfig("mlp.hidden_neurons must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("mlp.learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("mlp.batch_size must be positive".into()));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::InvalidConfig("mlp.l2 must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn hidden_for(&self, arity: usize) -> usize {
        self.hidden_neurons.unwrap_or(2 * arity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(xs: &[&FeatureVector]) -> Self {
        let n = xs.len() as f64;
        let arity = xs[0].len();
        let mut mean = vec![0.0; arity];
        for x in xs {
            for (m, v) in mean.iter_mut().zip(x.values()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; arity];
        for x in xs {
            for ((s, v), m) in var.iter_mut().zip(x.values()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
        Self { mean, std }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub n_train: usize,
    pub final_loss: f64,
    pub hidden_overridden: bool,
}

/// Gradient of the objective, laid out like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w1: vec![0.0; hidden * input],
            b1: vec![0.0; hidden],
            w2: vec![0.0; CLASSES * hidden],
            b2: vec![0.0; CLASSES],
        }
    }

    /// Flattened in parameter order: `w1, b1, w2, b2`.
    pub fn flatten(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    format_version: u32,
    config: MlpConfig,
    input: usize,
    hidden: usize,
    scaler: Scaler,
    /// hidden × input, row-major
    w1: Vec<f64>,
    b1: Vec<f64>,
    /// 3 × hidden, row-major
    w2: Vec<f64>,
    b2: Vec<f64>,
    meta: TrainingMeta,
}

struct Forward {
    hidden: Vec<f64>,
    probs: [f64; CLASSES],
}

fn softmax(logits: &[f64; CLASSES]) -> [f64; CLASSES] {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = logits.map(|l| (l - max).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

fn validate_batch(data: &[(FeatureVector, DelayLabel)], arity: usize) -> Result<()> {
    for (x, _) in data {
        if x.len() != arity {
            return Err(Error::ArityMismatch {
                expected: arity,
                got: x.len(),
            });
        }
        if let Some(pos) = x.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature(pos));
        }
    }
    Ok(())
}

impl MlpModel {
    /// A model with every weight and bias set to zero.
    pub fn zeros(input: usize, hidden: usize, scaler: Scaler, config: MlpConfig) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            config,
            input,
            hidden,
            scaler,
            w1: vec![0.0; hidden * input],
            b1: vec![0.0; hidden],
            w2: vec![0.0; CLASSES * hidden],
            b2: vec![0.0; CLASSES],
            meta: TrainingMeta {
                n_train: 0,
                final_loss: f64::NAN,
                hidden_overridden: hidden != 2 * input,
            },
        }
    }

    fn initialized(input: usize, hidden: usize, scaler: Scaler, config: MlpConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut m = Self::zeros(input, hidden, scaler, config);
        let lim1 = (6.0 / (input + hidden) as f64).sqrt();
        for w in m.w1.iter_mut() {
            *w = rng.random_range(-lim1..lim1);
        }
        let lim2 = OUTPUT_INIT_SCALE * (6.0 / (hidden + CLASSES) as f64).sqrt();
        for w in m.w2.iter_mut() {
            *w = rng.random_range(-lim2..lim2);
        }
        m
    }

    pub fn input_arity(&self) -> usize {
        self.input
    }

    pub fn hidden_neurons(&self) -> usize {
        self.hidden
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    /// All parameters in the order `w1, b1, w2, b2` (matrices row-major).
    pub fn parameters(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn parameter_count(&self) -> usize {
        self.hidden * self.input + self.hidden + CLASSES * self.hidden + CLASSES
    }

    /// A copy of this model carrying `params` (same layout as [`Self::parameters`]).
    pub fn with_parameters(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.parameter_count() {
            return Err(Error::InvalidConfig(format!(
                "expected {} parameters, got {}",
                self.parameter_count(),
                params.len()
            )));
        }
        let (w1, rest) = params.split_at(self.hidden * self.input);
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(CLASSES * self.hidden);
        Ok(Self {
            w1: w1.to_vec(),
            b1: b1.to_vec(),
            w2: w2.to_vec(),
            b2: b2.to_vec(),
            ..self.clone()
        })
    }

    fn check_arity(&self, x: &FeatureVector) -> Result<()> {
        if x.len() != self.input {
            return Err(Error::ArityMismatch {
                expected: self.input,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn forward(&self, z: &[f64]) -> Forward {
        let hidden: Vec<f64> = (0..self.hidden)
            .map(|j| {
                let row = &self.w1[j * self.input..(j + 1) * self.input];
                let a: f64 = row.iter().zip(z).map(|(w, v)| w * v).sum::<f64>() + self.b1[j];
                a.tanh()
            })
            .collect();
        let logits: [f64; CLASSES] = std::array::from_fn(|k| {
            let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
            row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>() + self.b2[k]
        });
        Forward {
            hidden,
            probs: softmax(&logits),
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        self.check_arity(x)?;
        let z = self.scaler.transform(x.values());
        Ok(Prediction::from_scores(self.forward(&z).probs))
    }

    fn l2_penalty(&self) -> f64 {
        let sq: f64 = self.w1.iter().chain(&self.w2).map(|w| w * w).sum();
        self.config.l2 * sq
    }

    /// Mean cross-entropy over `batch` plus the L2 penalty.
    pub fn loss(&self, batch: &[(FeatureVector, DelayLabel)]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        validate_batch(batch, self.input)?;
        let ce: f64 = batch
            .iter()
            .map(|(x, y)| {
                let z = self.scaler.transform(x.values());
                -self.forward(&z).probs[y.index()].max(f64::MIN_POSITIVE).ln()
            })
            .sum();
        Ok(ce / batch.len() as f64 + self.l2_penalty())
    }

    /// Analytic gradient of [`Self::loss`] with respect to every parameter.
    pub fn gradient(&self, batch: &[(FeatureVector, DelayLabel)]) -> Result<Gradients> {
        if batch.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        validate_batch(batch, self.input)?;
        let scaled: Vec<(Vec<f64>, DelayLabel)> = batch
            .iter()
            .map(|(x, y)| (self.scaler.transform(x.values()), *y))
            .collect();
        Ok(self.scaled_gradient(scaled.iter().map(|(z, y)| (z.as_slice(), *y)), batch.len()))
    }

    #[allow(clippy::needless_range_loop)]
    fn scaled_gradient<'a>(&self, batch: impl Iterator<Item = (&'a [f64], DelayLabel)>, len: usize) -> Gradients {
        let mut g = Gradients::zeros(self.input, self.hidden);
        let inv = 1.0 / len as f64;
        let mut d_hidden = vec![0.0; self.hidden];
        for (z, y) in batch {
            let f = self.forward(z);
            let d_out: [f64; CLASSES] =
                std::array::from_fn(|k| (f.probs[k] - if k == y.index() { 1.0 } else { 0.0 }) * inv);
            d_hidden.iter_mut().for_each(|d| *d = 0.0);
            for k in 0..CLASSES {
                g.b2[k] += d_out[k];
                let row = k * self.hidden;
                for j in 0..self.hidden {
                    g.w2[row + j] += d_out[k] * f.hidden[j];
                    d_hidden[j] += self.w2[row + j] * d_out[k];
                }
            }
            for j in 0..self.hidden {
                let da = d_hidden[j] * (1.0 - f.hidden[j] * f.hidden[j]);
                g.b1[j] += da;
                let row = j * self.input;
                for i in 0..self.input {
                    g.w1[row + i] += da * z[i];
                }
            }
        }
        let l2 = self.config.l2;
        for (gw, w) in g.w1.iter_mut().zip(&self.w1).chain(g.w2.iter_mut().zip(&self.w2)) {
            *gw += 2.0 * l2 * w;
        }
        g
    }

    fn step(&mut self, g: &Gradients, lr: f64) {
        let pairs = self
            .w1
            .iter_mut()
            .zip(&g.w1)
            .chain(self.b1.iter_mut().zip(&g.b1))
            .chain(self.w2.iter_mut().zip(&g.w2))
            .chain(self.b2.iter_mut().zip(&g.b2));
        for (p, d) in pairs {
            *p -= lr * d;
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported model format version {}",
                m.format_version
            )));
        }
        if m.w1.len() != m.hidden * m.input
            || m.b1.len() != m.hidden
            || m.w2.len() != CLASSES * m.hidden
            || m.b2.len() != CLASSES
            || m.scaler.mean.len() != m.input
            || m.scaler.std.len() != m.input
        {
            return Err(Error::InvalidConfig("model parameter shapes are inconsistent".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Fits the scaler on `data` and trains a fresh network with `cfg`.
pub fn train(data: &[(FeatureVector, DelayLabel)], cfg: &MlpConfig) -> Result<MlpModel> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let input = data[0].0.len();
    if input == 0 {
        return Err(Error::InvalidInstance("feature vectors are empty".into()));
    }
    validate_batch(data, input)?;

    let xs: Vec<&FeatureVector> = data.iter().map(|(x, _)| x).collect();
    let scaler = Scaler::fit(&xs);
    let scaled: Vec<Vec<f64>> = xs.iter().map(|x| scaler.transform(x.values())).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let hidden = cfg.hidden_for(input);
    let mut model = MlpModel::initialized(input, hidden, scaler, cfg.clone(), &mut rng);

    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = chunk.iter().map(|&i| (scaled[i].as_slice(), data[i].1));
            let g = model.scaled_gradient(batch, chunk.len());
            model.step(&g, cfg.learning_rate);
        }
    }

    let full = model.scaled_gradient_loss(&scaled, data);
    model.meta = TrainingMeta {
        n_train: data.len(),
        final_loss: full,
        hidden_overridden: cfg.hidden_neurons.is_some_and(|h| h != 2 * input),
    };
    if model.parameters().iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidConfig("training diverged to non-finite parameters".into()));
    }
    Ok(model)
}

impl MlpModel {
    fn scaled_gradient_loss(&self, scaled: &[Vec<f64>], data: &[(FeatureVector, DelayLabel)]) -> f64 {
        let ce: f64 = scaled
            .iter()
            .zip(data)
            .map(|(z, (_, y))| -self.forward(z).probs[y.index()].max(f64::MIN_POSITIVE).ln())
            .sum();
        ce / data.len() as f64 + self.l2_penalty()
    }
}

impl BatchModel for MlpModel {
    fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        MlpModel::predict(self, x)
    }
}

#[derive(Debug, Clone, Default)]
pub struct MlpTrainer {
    pub config: MlpConfig,
}

impl BatchTrainer for MlpTrainer {
    type Model = MlpModel;

    fn train(&self, data: &[(FeatureVector, DelayLabel)]) -> Result<MlpModel> {
        train(data, &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    /// Three well separated clusters in the plane.
    fn toy_set(n: usize, seed: u64) -> Vec<(FeatureVector, DelayLabel)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = [(-4.0, 0.0), (4.0, 0.0), (0.0, 6.0)];
        (0..n)
            .map(|i| {
                let c = i % 3;
                let (cx, cy) = centers[c];
                let x = fv(&[cx + rng.random_range(-1.5..1.5), cy + rng.random_range(-1.5..1.5)]);
                (x, DelayLabel::from_index(c).unwrap())
            })
            .collect()
    }

    fn accuracy(m: &MlpModel, data: &[(FeatureVector, DelayLabel)]) -> f64 {
        let ok = data.iter().filter(|(x, y)| m.predict(x).unwrap().label == *y).count();
        ok as f64 / data.len() as f64
    }

    #[test]
    fn untrained_loss_is_near_ln3() {
        let data = toy_set(300, 1);
        let m = train(&data, &MlpConfig { epochs: 0, ..MlpConfig::default() }).unwrap();
        assert!((m.meta().final_loss - 3f64.ln()).abs() < 0.1, "{}", m.meta().final_loss);
        assert_eq!(m.hidden_neurons(), 4);
        assert!(!m.meta().hidden_overridden);
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let data = toy_set(300, 2);
        let cfg = MlpConfig {
            epochs: 200,
            learning_rate: 0.05,
            ..MlpConfig::default()
        };
        let m = train(&data, &cfg).unwrap();
        assert!(accuracy(&m, &data) >= 0.98);
    }

    #[test]
    fn holdout_accuracy_on_toy_set() {
        let data = toy_set(300, 3);
        let (fit, hold) = data.split_at(240);
        let cfg = MlpConfig {
            epochs: 200,
            learning_rate: 0.05,
            ..MlpConfig::default()
        };
        let m = train(fit, &cfg).unwrap();
        assert!(accuracy(&m, hold) >= 0.95);
    }

    #[test]
    fn training_is_bit_identical() {
        let data = toy_set(150, 4);
        let cfg = MlpConfig { epochs: 20, ..MlpConfig::default() };
        let a = train(&data, &cfg).unwrap();
        let b = train(&data, &cfg).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let data = toy_set(90, 5);
        let m = train(&data, &MlpConfig { epochs: 5, ..MlpConfig::default() }).unwrap();
        let back = MlpModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        for (x, _) in &data {
            assert_eq!(back.predict(x).unwrap(), m.predict(x).unwrap());
        }
    }

    #[test]
    fn rejects_unknown_version() {
        let data = toy_set(9, 5);
        let m = train(&data, &MlpConfig { epochs: 1, ..MlpConfig::default() }).unwrap();
        let json = m.to_json().unwrap().replacen("\"format_version\":1", "\"format_version\":9", 1);
        assert!(MlpModel::from_json(&json).is_err());
    }

    #[test]
    fn empty_and_non_finite_inputs_are_rejected() {
        assert!(matches!(train(&[], &MlpConfig::default()), Err(Error::EmptyTrainingSet)));
        let bad = vec![(FeatureVector::default(), DelayLabel::OnTime)];
        assert!(train(&bad, &MlpConfig::default()).is_err());
    }

    #[test]
    fn mean_input_maps_to_bias_path() {
        let data = toy_set(60, 6);
        let m = train(&data, &MlpConfig { epochs: 3, ..MlpConfig::default() }).unwrap();
        let mean = fv(&m.scaler().mean.clone());
        assert!(m.scaler().transform(mean.values()).iter().all(|v| *v == 0.0));
        // with a zero input the hidden layer is tanh(b1) and the logits are W2 tanh(b1) + b2
        let p = m.parameters();
        let (input, hidden) = (m.input_arity(), m.hidden_neurons());
        let b1 = &p[hidden * input..hidden * input + hidden];
        let w2 = &p[hidden * input + hidden..hidden * input + hidden + 3 * hidden];
        let b2 = &p[p.len() - 3..];
        let logits: [f64; 3] = std::array::from_fn(|k| {
            (0..hidden).map(|j| w2[k * hidden + j] * b1[j].tanh()).sum::<f64>() + b2[k]
        });
        let expected = softmax(&logits);
        let got = m.predict(&mean).unwrap().scores;
        for k in 0..3 {
            assert!((got[k] - expected[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_network_bias_gradient_is_closed_form() {
        let batch: Vec<_> = (0..6)
            .map(|i| (fv(&[i as f64, 1.0]), DelayLabel::from_index(i % 3).unwrap()))
            .collect();
        let scaler = Scaler {
            mean: vec![0.0, 0.0],
            std: vec![1.0, 1.0],
        };
        let m = MlpModel::zeros(2, 4, scaler, MlpConfig::default());
        let g = m.gradient(&batch).unwrap();
        // uniform softmax minus the class frequencies (all 1/3 here)
        for k in 0..3 {
            assert!((g.b2[k] - (1.0 / 3.0 - 1.0 / 3.0)).abs() < 1e-15);
        }
        let skewed: Vec<_> = batch.iter().map(|(x, _)| (x.clone(), DelayLabel::Delayed)).collect();
        let g = m.gradient(&skewed).unwrap();
        assert!((g.b2[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((g.b2[2] - (1.0 / 3.0 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn l2_term_is_linear_in_weights() {
        let data = toy_set(30, 8);
        let base = train(&data, &MlpConfig { epochs: 2, l2: 0.0, ..MlpConfig::default() }).unwrap();
        let mut cfg = base.config().clone();
        cfg.l2 = 0.1;
        let regularized = MlpModel { config: cfg, ..base.clone() };
        let g0 = base.gradient(&data).unwrap();
        let g1 = regularized.gradient(&data).unwrap();
        for ((a, b), w) in g0.w1.iter().zip(&g1.w1).zip(&base.w1) {
            assert!((b - a - 0.1 * 2.0 * w).abs() < 1e-12);
        }
        for ((a, b), w) in g0.w2.iter().zip(&g1.w2).zip(&base.w2) {
            assert!((b - a - 0.1 * 2.0 * w).abs() < 1e-12);
        }
        assert_eq!(g0.b1, g1.b1);
        assert_eq!(g0.b2, g1.b2);
    }

    #[test]
    fn predict_checks_arity_and_normalizes() {
        let data = toy_set(30, 9);
        let m = train(&data, &MlpConfig { epochs: 2, ..MlpConfig::default() }).unwrap();
        assert!(matches!(m.predict(&fv(&[1.0])), Err(Error::ArityMismatch { expected: 2, got: 1 })));
        let s = m.predict(&fv(&[100.0, -40.0])).unwrap().scores;
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
