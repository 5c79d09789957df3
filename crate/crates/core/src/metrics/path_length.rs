//! Path length of a trajectory as seen through the victim's image output.
//!
//! For each step `(zⁱ, zⁱ⁺¹)` and each sampled `t`, the contribution is
//! `d(G(lerp(t)), G(lerp(t + ε))) / ε²`; the report is the mean over all
//! sampled (trajectory, step, t) triples.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{child_seed, seeded_rng};
use crate::types::{LatentPoint, Trajectory};
use crate::victims::VictimModel;

pub trait ImageMetric: Sync {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImageDistance {
    /// Squared L2 divided by the image dimension.
    #[default]
    ScaledSquaredL2,
    SquaredL2,
}

impl ImageMetric for ImageDistance {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        match self {
            ImageDistance::ScaledSquaredL2 => sq / a.len().max(1) as f64,
            ImageDistance::SquaredL2 => sq,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MppplConfig {
    pub epsilon: f64,
    pub samples_per_step: usize,
    pub distance: ImageDistance,
}

impl Default for MppplConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            samples_per_step: 4,
            distance: ImageDistance::default(),
        }
    }
}

impl MppplConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if self.samples_per_step == 0 {
            return Err(Error::InvalidArgument("samples_per_step must be positive".into()));
        }
        Ok(())
    }
}

/// Source of interpolation factors for one step of one trajectory.
pub trait TSampler: Sync {
    fn sample(&self, key: u64, step: usize) -> Vec<f64>;
}

/// Uniform `t ∈ [0, 1)` drawn from a stream keyed by seed, trajectory and step.
#[derive(Debug, Clone, Copy)]
pub struct SeededT {
    pub seed: u64,
    pub count: usize,
}

impl TSampler for SeededT {
    fn sample(&self, key: u64, step: usize) -> Vec<f64> {
        let mut rng = seeded_rng(child_seed(child_seed(self.seed, key), step as u64));
        (0..self.count).map(|_| rng.random::<f64>()).collect()
    }
}

/// The same fixed factors on every step.
#[derive(Debug, Clone)]
pub struct FixedT(pub Vec<f64>);

impl TSampler for FixedT {
    fn sample(&self, _: u64, _: usize) -> Vec<f64> {
        self.0.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MppplReport {
    pub mppl: f64,
    pub samples: usize,
    pub epsilon: f64,
    /// Mean per trajectory, in input order (NaN for single-point trajectories).
    pub per_trajectory: Vec<f64>,
}

/// FNV-1a over the bit patterns of the visited points.
pub fn trajectory_key(t: &Trajectory) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in &t.points {
        for x in p.as_slice() {
            for b in x.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
    }
    h
}

pub fn mppl(trajs: &[&Trajectory], victim: &dyn VictimModel, cfg: &MppplConfig, seed: u64) -> Result<MppplReport> {
    let sampler = SeededT {
        seed,
        count: cfg.samples_per_step,
    };
    mppl_with_sampler(trajs, victim, cfg, &cfg.distance, &sampler)
}

/// Core of [`mppl`] with the distance and `t` source supplied by the caller.
///
/// Trajectories are evaluated in parallel; partial sums are combined in
/// order of trajectory key so the result does not depend on list order.
pub fn mppl_with_sampler(
    trajs: &[&Trajectory],
    victim: &dyn VictimModel,
    cfg: &MppplConfig,
    metric: &dyn ImageMetric,
    sampler: &dyn TSampler,
) -> Result<MppplReport> {
    cfg.validate()?;
    if victim.image_dim().is_none() {
        return Err(Error::Unsupported("victim exposes no image output"));
    }
    if trajs.is_empty() {
        return Err(Error::InvalidArgument("no trajectories".into()));
    }
    let eps = cfg.epsilon;
    let partials: Vec<(u64, f64, usize)> = trajs
        .par_iter()
        .map(|t| -> Result<(u64, f64, usize)> {
            let key = trajectory_key(t);
            let (mut sum, mut count) = (0.0, 0usize);
            for (i, pair) in t.points.windows(2).enumerate() {
                let ts = sampler.sample(key, i);
                let mut zs = Vec::with_capacity(2 * ts.len());
                for &s in &ts {
                    zs.push(LatentPoint::new(pair[0].lerp(&pair[1], s))?);
                    zs.push(LatentPoint::new(pair[0].lerp(&pair[1], s + eps))?);
                }
                let out = victim.query_batch(&zs)?;
                for q in out.chunks(2) {
                    let (a, b) = match (&q[0].image, &q[1].image) {
                        (Some(a), Some(b)) => (a, b),
                        _ => return Err(Error::Unsupported("victim exposes no image output")),
                    };
                    sum += metric.distance(a, b) / (eps * eps);
                    count += 1;
                }
            }
            Ok((key, sum, count))
        })
        .collect::<Result<_>>()?;

    let per_trajectory = partials.iter().map(|&(_, s, c)| s / c as f64).collect();
    let mut ordered = partials;
    ordered.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let samples: usize = ordered.iter().map(|p| p.2).sum();
    if samples == 0 {
        return Err(Error::InvalidArgument("trajectories contain no steps".into()));
    }
    let total = ordered.iter().fold(0.0, |acc, p| acc + p.1);
    Ok(MppplReport {
        mppl: total / samples as f64,
        samples,
        epsilon: eps,
        per_trajectory,
    })
}
