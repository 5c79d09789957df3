//! Constant-direction baselines.
//!
//! Both baselines walk `z⁽ⁱ⁾ = z⁽⁰⁾ + iλv` with a frozen unit `v`. The
//! gradient-based one takes `v` from the estimated gradient at the start
//! point; the SVM one takes it from the normal of a linear decision boundary
//! and conditions by orthogonalizing that normal against each conditioned
//! normal in turn, in ascending attribute order. The pairwise scheme is not
//! a full nullspace projection once two or more conditioned normals are
//! correlated.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::constraint::{ConditionSet, DEGENERACY_TOL};
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm};
use crate::rng::seeded_rng;
use crate::traversal::{GradientSource, Sign};
use crate::types::{DirectionVector, LatentPoint, StopReason, Trajectory};
use crate::victims::VictimModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    InitialGradient,
    SvmNormal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearDirectionModel {
    /// Unit step direction, already oriented for the requested sign.
    pub direction: DirectionVector,
    /// Unnormalized gradient estimate the direction came from.
    pub gradient: Vec<f64>,
    pub provenance: Provenance,
    pub condition: Vec<usize>,
}

impl LinearDirectionModel {
    /// Freezes the estimated gradient of `target` at `z0`.
    pub fn from_initial_gradient(source: &dyn GradientSource, z0: &LatentPoint, target: usize, sign: Sign) -> Result<Self> {
        let jac = source.jacobian(z0)?;
        if target >= jac.attribute_count() {
            return Err(Error::InvalidArgument(format!("target {target} out of range")));
        }
        let gradient = jac.row(target).to_vec();
        let direction = sign.apply(DirectionVector::normalized(gradient.clone(), 0.0)?);
        Ok(Self {
            direction,
            gradient,
            provenance: Provenance::InitialGradient,
            condition: Vec::new(),
        })
    }

    /// Uses an SVM normal (optionally pre-conditioned) as the direction.
    pub fn from_normal(normal: Vec<f64>, direction: DirectionVector, sign: Sign, condition: Vec<usize>) -> Self {
        Self {
            direction: sign.apply(direction),
            gradient: normal,
            provenance: Provenance::SvmNormal,
            condition,
        }
    }
}

/// Walks the frozen direction for `steps` steps, computing each point in
/// closed form from the start.
pub fn linear_traverse(
    z0: &LatentPoint,
    model: &LinearDirectionModel,
    steps: usize,
    step_size: f64,
    target: usize,
    victim: Option<&dyn VictimModel>,
) -> Result<Trajectory> {
    if steps == 0 || !(step_size >= 0.0) || !step_size.is_finite() {
        return Err(Error::InvalidArgument("need steps > 0 and a finite non-negative step size".into()));
    }
    if model.direction.len() != z0.len() {
        return Err(Error::Shape {
            expected: z0.len(),
            actual: model.direction.len(),
        });
    }
    let log = |z: &LatentPoint| -> Result<_> { Ok(victim.map(|v| v.query(z)).transpose()?.map(|q| q.attrs)) };
    let mut points = vec![z0.clone()];
    let mut attrs: Vec<_> = log(z0)?.into_iter().collect();
    let (stop, taken) = if model.direction.is_degenerate() {
        (StopReason::DegenerateDirection { step: 0 }, 0)
    } else {
        (StopReason::Completed, steps)
    };
    for i in 1..=taken {
        let z = z0
            .offset(i as f64 * step_size, model.direction.as_slice())
            .map_err(|_| Error::NumericalFailure {
                step: i - 1,
                reason: "non-finite point".into(),
            })?;
        if let Some(a) = log(&z)? {
            attrs.push(a);
        }
        points.push(z);
    }
    Ok(Trajectory {
        points,
        attrs,
        directions: vec![model.direction.clone(); taken],
        target_gradients: vec![model.gradient.clone(); taken],
        step_size,
        target,
        condition: model.condition.clone(),
        stop,
    })
}

/// Regularized hinge-loss training schedule.
///
/// Objective: `λ/2·‖w‖² + mean(max(0, 1 − y(w·x + b)))`, bias unregularized.
/// Each epoch runs shuffled minibatch subgradient steps at the current
/// learning rate; if the epoch raises the full objective it is rolled back
/// and the rate halved, so the recorded objective never increases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub epochs: usize,
    pub lambda: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            lambda: 1e-4,
            learning_rate: 0.1,
            batch_size: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub train_accuracy: f64,
    pub objective_history: Vec<f64>,
}

impl LinearSvm {
    pub fn decision(&self, z: &[f64]) -> f64 {
        dot(&self.weights, z) + self.bias
    }

    pub fn unit_normal(&self) -> Result<DirectionVector> {
        DirectionVector::normalized(self.weights.clone(), 0.0)
    }
}

fn objective(w: &[f64], b: f64, xs: &[&[f64]], ys: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y * (dot(w, x) + b)).max(0.0))
        .sum();
    0.5 * lambda * dot(w, w) + hinge / xs.len() as f64
}

/// Trains a linear SVM separating the sign of attribute `attr`, using
/// samples whose mask marks that attribute.
pub fn train_svm(data: &[Sample], attr: usize, cfg: &SvmConfig, seed: u64) -> Result<LinearSvm> {
    if cfg.epochs == 0 || cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) || !(cfg.lambda >= 0.0) {
        return Err(Error::InvalidArgument("invalid SVM configuration".into()));
    }
    let mut xs: Vec<&[f64]> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in data {
        if attr >= s.attrs.len() {
            return Err(Error::InvalidArgument(format!("attribute {attr} out of range")));
        }
        if s.mask[attr] {
            xs.push(s.z.as_slice());
            ys.push(if s.attrs[attr] > 0.0 { 1.0 } else { -1.0 });
        }
    }
    if xs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if ys.iter().all(|y| *y > 0.0) || ys.iter().all(|y| *y < 0.0) {
        return Err(Error::SingleClass { attr });
    }
    let n = xs[0].len();
    let mut rng = seeded_rng(seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut w = vec![0.0; n];
    let mut b = 0.0;
    let mut lr = cfg.learning_rate;
    let mut best = objective(&w, b, &xs, &ys, cfg.lambda);
    let mut history = vec![best];
    let mut gw = vec![0.0; n];

    for _ in 0..cfg.epochs {
        let (w_prev, b_prev) = (w.clone(), b);
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            gw.iter_mut().zip(&w).for_each(|(g, wi)| *g = cfg.lambda * wi);
            let mut gb = 0.0;
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                if ys[i] * (dot(&w, xs[i]) + b) < 1.0 {
                    axpy(-ys[i] * scale, xs[i], &mut gw);
                    gb -= ys[i] * scale;
                }
            }
            axpy(-lr, &gw, &mut w);
            b -= lr * gb;
        }
        let obj = objective(&w, b, &xs, &ys, cfg.lambda);
        if !obj.is_finite() {
            return Err(Error::TrainingDiverged { epoch: history.len() });
        }
        if obj > best {
            w = w_prev;
            b = b_prev;
            lr *= 0.5;
        } else {
            best = obj;
        }
        history.push(best);
    }
    let correct = xs
        .iter()
        .zip(&ys)
        .filter(|(x, y)| (dot(&w, x) + b) * *y > 0.0)
        .count();
    Ok(LinearSvm {
        weights: w,
        bias: b,
        train_accuracy: correct as f64 / xs.len() as f64,
        objective_history: history,
    })
}

/// Orthogonalizes `normals[target]` against each conditioned normal in
/// ascending index order, one pair at a time, then normalizes.
pub fn conditional_svm_direction(normals: &[Vec<f64>], target: usize, cond: &ConditionSet) -> Result<DirectionVector> {
    if normals.len() < 2 {
        return Err(Error::InvalidArgument("need at least two normals".into()));
    }
    let n = normals[0].len();
    cond.validate(target, normals.len(), n)?;
    let mut v = normals[target].clone();
    let base = norm(&v);
    for &k in cond.indices() {
        let nk = &normals[k];
        let nn = dot(nk, nk);
        if nn > 0.0 {
            axpy(-dot(&v, nk) / nn, nk, &mut v);
        }
    }
    DirectionVector::normalized(v, DEGENERACY_TOL * base)
}
