//! Fully-connected proxy network distilled from a black-box victim.
//!
//! Layout: `layers[0]` maps the latent code to the first hidden layer and
//! the last layer maps to one output per attribute. Every layer but the last
//! is followed by a rectifier; dropout sits after each hidden rectifier and is
//! only active while training.

mod checkpoint;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT};
pub use train::{dataset_loss, train, ClassificationLoss, TrainConfig, TrainReport};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, Matrix};
use crate::rng::{seeded_rng, standard_normal, Rng};
use crate::types::{AttributeVector, HeadKind, JacobianMatrix, LatentPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out × in`
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::Shape {
                expected: weights.rows(),
                actual: bias.len(),
            });
        }
        Ok(Self { weights, bias })
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.weights.matvec(x);
        for (yi, bi) in y.iter_mut().zip(&self.bias) {
            *yi += bi;
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxyModel {
    layers: Vec<DenseLayer>,
    heads: Vec<HeadKind>,
    dropout_rate: f64,
}

/// Intermediate values of one forward pass, kept for backpropagation.
pub(crate) struct ForwardTrace {
    /// Input to each layer (post-activation, post-dropout).
    pub inputs: Vec<Vec<f64>>,
    /// Pre-activations of each hidden layer.
    pub pre: Vec<Vec<f64>>,
    /// Inverted-dropout multipliers per hidden layer (`None` at inference).
    pub masks: Vec<Option<Vec<f64>>>,
    pub output: Vec<f64>,
}

impl ProxyModel {
    pub fn from_layers(layers: Vec<DenseLayer>, heads: Vec<HeadKind>, dropout_rate: f64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("proxy needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::Shape {
                    expected: pair[0].outputs(),
                    actual: pair[1].inputs(),
                });
            }
        }
        let out = layers.last().map(DenseLayer::outputs).unwrap_or(0);
        if out != heads.len() || out == 0 {
            return Err(Error::Shape {
                expected: heads.len(),
                actual: out,
            });
        }
        if layers[0].inputs() == 0 {
            return Err(Error::InvalidDimension("proxy input dimension must be positive".into()));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::InvalidArgument(format!("dropout rate {dropout_rate} not in [0, 1)")));
        }
        Ok(Self {
            layers,
            heads,
            dropout_rate,
        })
    }

    /// He-initialized network with `depth` dense layers; hidden layers are `width` wide.
    pub fn init(input_dim: usize, heads: Vec<HeadKind>, depth: usize, width: usize, dropout_rate: f64, seed: u64) -> Result<Self> {
        if depth == 0 || width == 0 || input_dim == 0 {
            return Err(Error::InvalidArgument("depth, width and input dimension must be positive".into()));
        }
        let mut rng = seeded_rng(seed);
        let mut sizes = vec![input_dim];
        sizes.extend(std::iter::repeat_n(width, depth - 1));
        sizes.push(heads.len());
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let std = (2.0 / fan_in as f64).sqrt();
                let data = (0..fan_in * fan_out).map(|_| std * standard_normal(&mut rng)).collect();
                DenseLayer::new(Matrix::from_vec(fan_out, fan_in, data)?, vec![0.0; fan_out])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers, heads, dropout_rate)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.heads.len()
    }

    pub fn heads(&self) -> &[HeadKind] {
        &self.heads
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub(crate) fn set_dropout_rate(&mut self, rate: f64) {
        self.dropout_rate = rate;
    }

    fn check_input(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                actual: z.len(),
            });
        }
        Ok(())
    }

    /// Inference-mode evaluation; dropout is the identity.
    pub fn forward(&self, z: &LatentPoint) -> Result<AttributeVector> {
        self.check_input(z.as_slice())?;
        AttributeVector::new(self.trace(z.as_slice(), None).output)
    }

    /// Training-mode evaluation with dropout masks drawn from `rng`.
    pub fn forward_train(&self, z: &LatentPoint, rng: &mut Rng) -> Result<AttributeVector> {
        self.check_input(z.as_slice())?;
        AttributeVector::new(self.trace(z.as_slice(), Some(rng)).output)
    }

    /// Hidden-layer pre-activations at `z` in inference mode. Useful for
    /// checking how close a point sits to a ReLU kink.
    pub fn preactivations(&self, z: &LatentPoint) -> Result<Vec<Vec<f64>>> {
        self.check_input(z.as_slice())?;
        Ok(self.trace(z.as_slice(), None).pre)
    }

    pub(crate) fn trace(&self, z: &[f64], mut rng: Option<&mut Rng>) -> ForwardTrace {
        let last = self.layers.len() - 1;
        let keep = 1.0 - self.dropout_rate;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(last);
        let mut masks = Vec::with_capacity(last);
        let mut x = z.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let y = layer.apply(&x);
            inputs.push(x);
            if l == last {
                return ForwardTrace {
                    inputs,
                    pre,
                    masks,
                    output: y,
                };
            }
            let mut act: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
            let mask = match rng.as_deref_mut() {
                Some(r) if self.dropout_rate > 0.0 => {
                    let m: Vec<f64> = (0..act.len())
                        .map(|_| if r.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect();
                    for (a, k) in act.iter_mut().zip(&m) {
                        *a *= k;
                    }
                    Some(m)
                }
                _ => None,
            };
            pre.push(y);
            masks.push(mask);
            x = act;
        }
        unreachable!("loop returns at the output layer")
    }

    /// Reverse-mode Jacobian of the outputs with respect to `z`, all rows in
    /// one vectorized backward pass.
    pub fn jacobian(&self, z: &LatentPoint) -> Result<JacobianMatrix> {
        self.check_input(z.as_slice())?;
        let trace = self.trace(z.as_slice(), None);
        let last = self.layers.len() - 1;
        // g: m × width of the current layer's output
        let mut g = self.layers[last].weights.clone();
        for l in (0..last).rev() {
            let pre = &trace.pre[l];
            for r in 0..g.rows() {
                for (gv, p) in g.row_mut(r).iter_mut().zip(pre) {
                    if *p <= 0.0 {
                        *gv = 0.0;
                    }
                }
            }
            g = g.matmul(&self.layers[l].weights);
        }
        JacobianMatrix::new(g)
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.is_finite() && all_finite(&l.bias))
    }
}
