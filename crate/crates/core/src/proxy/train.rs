//! Deterministic minibatch trainer.
//!
//! Optimizer: SGD with heavy-ball momentum (`v ← μv + g; θ ← θ − ηv`) at a
//! constant learning rate. Samples are reshuffled every epoch with the seeded
//! stream, which also draws the dropout masks. Losses are masked means:
//! sigmoid cross-entropy against the soft target `σ(victim logit)` on
//! classification heads, squared error on regression heads.
//!
//! The reported history holds the full-dataset inference loss before the first
//! epoch followed by one entry per epoch.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{ForwardTrace, ProxyModel};
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::linalg::{axpy, Matrix};
use crate::rng::seeded_rng;
use crate::types::HeadKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub dropout_rate: f64,
    /// Number of dense layers, output layer included.
    pub layers: usize,
    pub width: usize,
    pub seed: u64,
    pub classification_loss: ClassificationLoss,
}

/// Objective for classification heads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassificationLoss {
    /// Sigmoid cross-entropy against the victim's probability `σ(logit)`.
    #[default]
    SoftCrossEntropy,
    /// Squared error against the victim's logit itself.
    LogitMse,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 64,
            learning_rate: 0.01,
            momentum: 0.9,
            dropout_rate: 0.2,
            layers: 3,
            width: 256,
            seed: 0,
            classification_loss: ClassificationLoss::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.layers == 0 || self.width == 0 {
            return Err(Error::InvalidArgument("epochs, batch size, layers and width must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument("momentum must lie in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidArgument("dropout rate must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: ProxyModel,
    pub loss_history: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Per-head loss and its derivative with respect to the output.
fn head_loss(kind: HeadKind, cls: ClassificationLoss, out: f64, target: f64) -> (f64, f64) {
    match (kind, cls) {
        (HeadKind::Classification, ClassificationLoss::SoftCrossEntropy) => {
            let p = sigmoid(target);
            // −p·log σ(o) − (1−p)·log(1−σ(o))
            let loss = p * softplus(-out) + (1.0 - p) * softplus(out);
            (loss, sigmoid(out) - p)
        }
        _ => {
            let d = out - target;
            (d * d, 2.0 * d)
        }
    }
}

/// Masked mean loss of `model` over `data`, dropout off.
pub fn dataset_loss(model: &ProxyModel, data: &[Sample], cls: ClassificationLoss) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for s in data {
        let out = model.trace(s.z.as_slice(), None).output;
        for (j, kind) in model.heads().iter().enumerate() {
            if s.mask[j] {
                total += head_loss(*kind, cls, out[j], s.attrs[j]).0;
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

struct Grads {
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

impl Grads {
    fn zeros_like(model: &ProxyModel) -> Self {
        Self {
            weights: model
                .layers()
                .iter()
                .map(|l| Matrix::zeros(l.outputs(), l.inputs()))
                .collect(),
            biases: model.layers().iter().map(|l| vec![0.0; l.outputs()]).collect(),
        }
    }

    fn clear(&mut self) {
        for w in &mut self.weights {
            w.as_mut_slice().fill(0.0);
        }
        for b in &mut self.biases {
            b.fill(0.0);
        }
    }
}

/// Accumulates `∂loss/∂θ` for one sample given `∂loss/∂output`.
fn backprop(model: &ProxyModel, trace: &ForwardTrace, out_grad: Vec<f64>, grads: &mut Grads) {
    let mut delta = out_grad;
    for l in (0..model.layers().len()).rev() {
        let input = &trace.inputs[l];
        let gw = &mut grads.weights[l];
        for (r, &d) in delta.iter().enumerate() {
            if d != 0.0 {
                axpy(d, input, gw.row_mut(r));
                grads.biases[l][r] += d;
            }
        }
        if l == 0 {
            break;
        }
        let mut back = model.layers()[l].weights.matvec_t(&delta);
        let pre = &trace.pre[l - 1];
        let mask = trace.masks[l - 1].as_deref();
        for (i, b) in back.iter_mut().enumerate() {
            if pre[i] <= 0.0 {
                *b = 0.0;
            } else if let Some(m) = mask {
                *b *= m[i];
            }
        }
        delta = back;
    }
}

/// Trains a copy of `model` on `data`. Identical inputs give bitwise identical weights.
pub fn train(model: &ProxyModel, data: &[Sample], cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = model.input_dim();
    let m = model.output_dim();
    for s in data {
        if s.z.len() != n {
            return Err(Error::Shape { expected: n, actual: s.z.len() });
        }
        if s.attrs.len() != m || s.mask.len() != m {
            return Err(Error::Shape { expected: m, actual: s.attrs.len().min(s.mask.len()) });
        }
    }

    let mut model = model.clone();
    model.set_dropout_rate(cfg.dropout_rate);
    let mut rng = seeded_rng(cfg.seed);
    let mut grads = Grads::zeros_like(&model);
    let mut velocity = Grads::zeros_like(&model);
    let mut order: Vec<usize> = (0..data.len()).collect();

    let initial = dataset_loss(&model, data, cfg.classification_loss);
    if !initial.is_finite() {
        return Err(Error::TrainingDiverged { epoch: 0 });
    }
    let mut history = vec![initial];

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grads.clear();
            let mut present = 0usize;
            for &idx in batch {
                let s = &data[idx];
                let trace = model.trace(s.z.as_slice(), Some(&mut rng));
                let mut out_grad = vec![0.0; m];
                for (j, kind) in model.heads().iter().enumerate() {
                    if s.mask[j] {
                        out_grad[j] = head_loss(*kind, cfg.classification_loss, trace.output[j], s.attrs[j]).1;
                        present += 1;
                    }
                }
                backprop(&model, &trace, out_grad, &mut grads);
            }
            if present == 0 {
                continue;
            }
            let scale = 1.0 / present as f64;
            let (mu, lr) = (cfg.momentum, cfg.learning_rate);
            for (l, layer) in model.layers_mut().iter_mut().enumerate() {
                let step = |v: &mut f64, g: f64, p: &mut f64| {
                    *v = mu * *v + g * scale;
                    *p -= lr * *v;
                };
                for ((v, g), p) in velocity.weights[l]
                    .as_mut_slice()
                    .iter_mut()
                    .zip(grads.weights[l].as_slice())
                    .zip(layer.weights.as_mut_slice())
                {
                    step(v, *g, p);
                }
                for ((v, g), p) in velocity.biases[l].iter_mut().zip(&grads.biases[l]).zip(&mut layer.bias) {
                    step(v, *g, p);
                }
            }
        }
        let loss = dataset_loss(&model, data, cfg.classification_loss);
        if !loss.is_finite() || !model.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        history.push(loss);
    }
    Ok(TrainReport {
        model,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use crate::rng::sample_standard_normal;
    use crate::types::{AttributeVector, LatentPoint};

    fn sample(z: Vec<f64>, attrs: Vec<f64>) -> Sample {
        let m = attrs.len();
        Sample {
            z: LatentPoint::new(z).unwrap(),
            attrs: AttributeVector::new(attrs).unwrap(),
            mask: vec![true; m],
        }
    }

    #[test]
    fn head_loss_gradients_match_differences() {
        let cases = [
            (HeadKind::Classification, ClassificationLoss::SoftCrossEntropy),
            (HeadKind::Classification, ClassificationLoss::LogitMse),
            (HeadKind::Regression, ClassificationLoss::SoftCrossEntropy),
        ];
        for (kind, cls) in cases {
            for (o, t) in [(0.3, 1.2), (-2.0, -0.5), (5.0, -3.0)] {
                let h = 1e-6;
                let fd = (head_loss(kind, cls, o + h, t).0 - head_loss(kind, cls, o - h, t).0) / (2.0 * h);
                assert!((fd - head_loss(kind, cls, o, t).1).abs() < 1e-6);
            }
        }
        assert_eq!(head_loss(HeadKind::Classification, ClassificationLoss::LogitMse, 1.0, 3.0).0, 4.0);
    }

    #[test]
    fn rejects_empty_dataset() {
        let model = ProxyModel::init(2, vec![HeadKind::Classification], 2, 4, 0.0, 0).unwrap();
        assert!(matches!(train(&model, &[], &TrainConfig::default()), Err(Error::EmptyDataset)));
    }

    #[test]
    fn separable_toy_attribute_is_learned() {
        let mut rng = seeded_rng(3);
        let w = [0.8, -0.6];
        let data: Vec<Sample> = (0..400)
            .map(|_| {
                let z = sample_standard_normal(&mut rng, 2).unwrap().into_inner();
                let logit = 6.0 * dot(&w, &z);
                sample(z, vec![logit])
            })
            .collect();
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 32,
            learning_rate: 0.02,
            width: 16,
            dropout_rate: 0.0,
            ..TrainConfig::default()
        };
        let init = ProxyModel::init(2, vec![HeadKind::Classification], 3, 16, 0.0, 1).unwrap();
        let report = train(&init, &data, &cfg).unwrap();
        let correct = data
            .iter()
            .filter(|s| {
                let out = report.model.forward(&s.z).unwrap()[0];
                (out > 0.0) == (s.attrs[0] > 0.0)
            })
            .count();
        let acc = correct as f64 / data.len() as f64;
        assert!(acc > 0.99, "accuracy {acc}");
        let h = &report.loss_history;
        assert!(h.iter().all(|l| l.is_finite()));
        assert!(h.last().unwrap() <= &h[0]);
    }

    #[test]
    fn identical_samples_reach_pointwise_minimum() {
        // soft target p = σ(1.5); the minimum of the cross-entropy is H(p)
        let data: Vec<Sample> = (0..64).map(|_| sample(vec![0.5, -0.25, 1.0], vec![1.5])).collect();
        let cfg = TrainConfig {
            epochs: 100,
            batch_size: 16,
            learning_rate: 0.05,
            width: 8,
            dropout_rate: 0.0,
            ..TrainConfig::default()
        };
        let init = ProxyModel::init(3, vec![HeadKind::Classification], 3, 8, 0.0, 2).unwrap();
        let report = train(&init, &data, &cfg).unwrap();
        let p = sigmoid(1.5);
        let entropy = -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
        assert!((report.loss_history.last().unwrap() - entropy).abs() < 1e-6);
        let out = report.model.forward(&data[0].z).unwrap()[0];
        assert!((out - 1.5).abs() < 1e-3, "{out}");
    }

    #[test]
    fn regression_head_fits_linear_target() {
        let n = 8;
        let w: Vec<f64> = (0..n).map(|i| (i as f64 - 3.5) / 4.0).collect();
        let mut rng = seeded_rng(8);
        let mut make = |count: usize| -> Vec<Sample> {
            (0..count)
                .map(|_| {
                    let z = sample_standard_normal(&mut rng, n).unwrap().into_inner();
                    let y = dot(&w, &z);
                    sample(z, vec![y])
                })
                .collect()
        };
        let train_set = make(10_000);
        let held_out = make(1_000);
        let cfg = TrainConfig {
            epochs: 100,
            batch_size: 64,
            learning_rate: 0.005,
            width: 32,
            dropout_rate: 0.0,
            ..TrainConfig::default()
        };
        let init = ProxyModel::init(n, vec![HeadKind::Regression], 3, 32, 0.0, 4).unwrap();
        let report = train(&init, &train_set, &cfg).unwrap();
        let mse = dataset_loss(&report.model, &held_out, cfg.classification_loss);
        assert!(mse < 1e-3, "held-out mse {mse}");
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let mut rng = seeded_rng(5);
        let data: Vec<Sample> = (0..100)
            .map(|_| {
                let z = sample_standard_normal(&mut rng, 4).unwrap().into_inner();
                let a = vec![z[0] - z[1], z[2] * 2.0];
                sample(z, a)
            })
            .collect();
        let heads = vec![HeadKind::Classification, HeadKind::Regression];
        let init = ProxyModel::init(4, heads, 3, 16, 0.2, 9).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            width: 16,
            ..TrainConfig::default()
        };
        let a = train(&init, &data, &cfg).unwrap();
        let b = train(&init, &data, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.loss_history, b.loss_history);
    }

    #[test]
    fn divergence_names_epoch() {
        let data: Vec<Sample> = (0..32)
            .map(|i| sample(vec![1e100 * i as f64, -1e100], vec![1e104 * i as f64]))
            .collect();
        let init = ProxyModel::init(2, vec![HeadKind::Regression], 2, 8, 0.0, 1).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            learning_rate: 0.5,
            width: 8,
            ..TrainConfig::default()
        };
        match train(&init, &data, &cfg) {
            Err(Error::TrainingDiverged { epoch }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
