//! Iterative gradient-guided traversal.
//!
//! At every point the Jacobian is recomputed, the target row is optionally
//! projected off the conditioned rows, normalized, and the code moves by
//! `step_size` along it (negated when descending).

mod export;

pub use export::{read_trajectories, write_summary_csv, write_trajectories, TrajectoryFile, TrajectoryHeader, TRAJECTORY_FORMAT};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraint::{project, ConditionSet};
use crate::error::{Error, Result};
use crate::proxy::ProxyModel;
use crate::rng::{sample_standard_normal, seeded_rng};
use crate::types::{DirectionVector, JacobianMatrix, LatentPoint, StopReason, Trajectory};
use crate::victims::{OracleGradient, VictimModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Ascend,
    #[default]
    Descend,
}

impl Sign {
    pub fn apply(self, d: DirectionVector) -> DirectionVector {
        match self {
            Sign::Ascend => d,
            Sign::Descend => d.negated(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraversalConfig {
    pub steps: usize,
    pub step_size: f64,
    pub target: usize,
    #[serde(default)]
    pub condition: ConditionSet,
    #[serde(default)]
    pub sign: Sign,
}

impl TraversalConfig {
    pub fn new(steps: usize, step_size: f64, target: usize) -> Self {
        Self {
            steps,
            step_size,
            target,
            condition: ConditionSet::empty(),
            sign: Sign::Descend,
        }
    }

    /// 40 steps of 0.2, used for attribute edits.
    pub fn attribute_protocol(target: usize) -> Self {
        Self::new(40, 0.2, target)
    }

    /// 600 steps of 0.01, used for smoothness measurements.
    pub fn smoothness_protocol(target: usize) -> Self {
        Self::new(600, 0.01, target)
    }

    /// 1000 steps of 0.01, used for fine-grained edits.
    pub fn fine_grained_protocol(target: usize) -> Self {
        Self::new(1000, 0.01, target)
    }

    pub fn with_condition(mut self, condition: ConditionSet) -> Self {
        self.condition = condition;
        self
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.sign = sign;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidArgument("trajectory length must be positive".into()));
        }
        if !(self.step_size >= 0.0) || !self.step_size.is_finite() {
            return Err(Error::InvalidArgument(format!("step size {} must be finite and non-negative", self.step_size)));
        }
        Ok(())
    }
}

/// Anything that can estimate the attribute Jacobian at a latent point.
pub trait GradientSource: Sync {
    fn jacobian(&self, z: &LatentPoint) -> Result<JacobianMatrix>;
}

impl GradientSource for ProxyModel {
    fn jacobian(&self, z: &LatentPoint) -> Result<JacobianMatrix> {
        ProxyModel::jacobian(self, z)
    }
}

/// Exact gradients of an analytic victim. Test and evaluation use only.
pub struct Oracle<'a>(pub &'a dyn OracleGradient);

impl GradientSource for Oracle<'_> {
    fn jacobian(&self, z: &LatentPoint) -> Result<JacobianMatrix> {
        self.0.oracle_jacobian(z)
    }
}

fn numerical(step: usize, e: Error) -> Error {
    match e {
        Error::NonFinite(what) => Error::NumericalFailure {
            step,
            reason: format!("non-finite {what}"),
        },
        other => other,
    }
}

/// Runs one trajectory from `z0`. The victim, when given, is only queried
/// for logging; it never influences the path.
pub fn traverse(
    z0: &LatentPoint,
    cfg: &TraversalConfig,
    source: &dyn GradientSource,
    victim: Option<&dyn VictimModel>,
) -> Result<Trajectory> {
    cfg.validate()?;
    let log = |z: &LatentPoint| -> Result<_> { Ok(victim.map(|v| v.query(z)).transpose()?.map(|q| q.attrs)) };

    let mut points = vec![z0.clone()];
    let mut attrs = Vec::new();
    if let Some(a) = log(z0)? {
        attrs.push(a);
    }
    let mut directions = Vec::with_capacity(cfg.steps);
    let mut gradients = Vec::with_capacity(cfg.steps);
    let mut stop = StopReason::Completed;

    for step in 0..cfg.steps {
        let z = points.last().expect("non-empty");
        let jac = source.jacobian(z).map_err(|e| numerical(step, e))?;
        if step == 0 {
            cfg.condition.validate(cfg.target, jac.attribute_count(), jac.latent_dim())?;
            if jac.latent_dim() != z0.len() {
                return Err(Error::Shape {
                    expected: z0.len(),
                    actual: jac.latent_dim(),
                });
            }
        }
        let grad = jac.row(cfg.target).to_vec();
        let dir = project(&jac, cfg.target, &cfg.condition).map_err(|e| numerical(step, e))?;
        if dir.is_degenerate() {
            stop = StopReason::DegenerateDirection { step };
            break;
        }
        let dir = cfg.sign.apply(dir);
        let next = z.offset(cfg.step_size, dir.as_slice()).map_err(|e| numerical(step, e))?;
        if let Some(a) = log(&next)? {
            attrs.push(a);
        }
        points.push(next);
        directions.push(dir);
        gradients.push(grad);
    }

    Ok(Trajectory {
        points,
        attrs,
        directions,
        target_gradients: gradients,
        step_size: cfg.step_size,
        target: cfg.target,
        condition: cfg.condition.indices().to_vec(),
        stop,
    })
}

/// Starting point for a trajectory seed.
pub fn start_point(seed: u64, n: usize) -> Result<LatentPoint> {
    sample_standard_normal(&mut seeded_rng(seed), n)
}

/// Runs `run` from each seed's standard-normal start, in parallel on the
/// current rayon pool. Output order follows `seeds`; failures stay inline.
pub fn batch_from_seeds<F>(seeds: &[u64], n: usize, run: F) -> Result<Vec<Result<Trajectory>>>
where
    F: Fn(&LatentPoint) -> Result<Trajectory> + Sync,
{
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds given".into()));
    }
    Ok(seeds
        .par_iter()
        .map(|&s| start_point(s, n).and_then(|z0| run(&z0)))
        .collect())
}

pub fn batch_traverse(
    seeds: &[u64],
    n: usize,
    cfg: &TraversalConfig,
    source: &dyn GradientSource,
    victim: Option<&dyn VictimModel>,
) -> Result<Vec<Result<Trajectory>>> {
    batch_from_seeds(seeds, n, |z0| traverse(z0, cfg, source, victim))
}
