//! First-order prediction error of a method's own gradient estimate.
//!
//! Each step `zⁱ → zⁱ⁺¹` yields one probe with error
//! `|f(zⁱ⁺¹) − f(zⁱ) − gⁱ·(zⁱ⁺¹ − zⁱ)|`, where `f` is the victim's recorded
//! target logit and `gⁱ` the gradient the method steered with. Probes are
//! binned by `‖zⁱ⁺¹ − z⁰‖`.

use serde::Serialize;

use super::require_attrs;
use crate::error::{Error, Result};
use crate::linalg::{dot, sub};
use crate::types::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaylorProbe {
    pub distance: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceBins {
    edges: Vec<f64>,
}

impl DistanceBins {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "bin edges must be finite, strictly increasing and at least two".into(),
            ));
        }
        Ok(Self { edges })
    }

    /// `count` equal-width bins over `[0, max]`.
    pub fn equal_width(count: usize, max: f64) -> Result<Self> {
        if count == 0 || !(max > 0.0) {
            return Err(Error::InvalidArgument("need a positive bin count and a positive range".into()));
        }
        Self::new((0..=count).map(|k| max * k as f64 / count as f64).collect())
    }

    /// Equal-width bins over the largest distance among the given probes.
    pub fn covering(count: usize, probes: &[TaylorProbe]) -> Result<Self> {
        let max = probes.iter().map(|p| p.distance).fold(0.0, f64::max);
        Self::equal_width(count, max)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Half-open bins, except that the last one also holds its upper edge.
    pub fn locate(&self, d: f64) -> Option<usize> {
        let last = *self.edges.last()?;
        if d < self.edges[0] || d > last {
            return None;
        }
        if d == last {
            return Some(self.len() - 1);
        }
        Some(self.edges.partition_point(|&e| e <= d) - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinStat {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// NaN when the bin is empty.
    pub mean_error: f64,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorReport {
    pub bins: Vec<BinStat>,
    pub probes: usize,
    /// Probes falling outside every bin.
    pub outside: usize,
}

impl TaylorReport {
    /// The farthest bin that holds any probe.
    pub fn farthest_populated(&self) -> Option<&BinStat> {
        self.bins.iter().rev().find(|b| !b.empty)
    }
}

pub fn taylor_probes(trajs: &[&Trajectory], target: usize) -> Result<Vec<TaylorProbe>> {
    require_attrs(trajs)?;
    let mut out = Vec::new();
    for t in trajs {
        if t.target_gradients.len() + 1 < t.points.len() {
            return Err(Error::InvalidArgument("trajectory has no recorded gradients".into()));
        }
        let f = t.attr_series(target);
        for i in 0..t.points.len() - 1 {
            let dz = sub(t.points[i + 1].as_slice(), t.points[i].as_slice());
            let predicted = f[i] + dot(&t.target_gradients[i], &dz);
            out.push(TaylorProbe {
                distance: t.points[i + 1].distance(t.start()),
                error: (f[i + 1] - predicted).abs(),
            });
        }
    }
    Ok(out)
}

pub fn taylor_error(probes: &[TaylorProbe], bins: &DistanceBins) -> TaylorReport {
    let mut sums = vec![0.0; bins.len()];
    let mut counts = vec![0usize; bins.len()];
    let mut outside = 0;
    for p in probes {
        match bins.locate(p.distance) {
            Some(k) => {
                sums[k] += p.error;
                counts[k] += 1;
            }
            None => outside += 1,
        }
    }
    let e = bins.edges();
    let bins = (0..bins.len())
        .map(|k| BinStat {
            lo: e[k],
            hi: e[k + 1],
            count: counts[k],
            mean_error: if counts[k] == 0 { f64::NAN } else { sums[k] / counts[k] as f64 },
            empty: counts[k] == 0,
        })
        .collect();
    TaylorReport {
        bins,
        probes: probes.len(),
        outside,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{linear_traverse, LinearDirectionModel};
    use crate::traversal::{start_point, traverse, Oracle, Sign, TraversalConfig};
    use crate::victims::LinearGaussianVictim;

    #[test]
    fn bins_locate() {
        let b = DistanceBins::equal_width(5, 1.0).unwrap();
        assert_eq!(b.len(), 5);
        assert_eq!(b.locate(0.0), Some(0));
        assert_eq!(b.locate(0.2), Some(1));
        assert_eq!(b.locate(0.99), Some(4));
        assert_eq!(b.locate(1.0), Some(4));
        assert_eq!(b.locate(1.01), None);
        assert!(DistanceBins::new(vec![0.0, 0.0]).is_err());
        assert!(DistanceBins::equal_width(3, 0.0).is_err());
    }

    #[test]
    fn exact_on_affine_victim() {
        let v = LinearGaussianVictim::random(10, 3, 4, false).unwrap().with_bias(vec![0.5, -1.0, 2.0]).unwrap();
        let mut trajs = Vec::new();
        for s in 0..5 {
            let z0 = start_point(s, 10).unwrap();
            trajs.push(traverse(&z0, &TraversalConfig::smoothness_protocol(1), &Oracle(&v), Some(&v)).unwrap());
            let model = LinearDirectionModel::from_initial_gradient(&Oracle(&v), &z0, 1, Sign::Descend).unwrap();
            trajs.push(linear_traverse(&z0, &model, 600, 0.01, 1, Some(&v)).unwrap());
        }
        let refs: Vec<&Trajectory> = trajs.iter().collect();
        let probes = taylor_probes(&refs, 1).unwrap();
        let report = taylor_error(&probes, &DistanceBins::covering(5, &probes).unwrap());
        assert_eq!(report.outside, 0);
        assert_eq!(report.probes, 6000);
        for b in &report.bins {
            assert!(!b.empty);
            assert!(b.mean_error < 1e-10, "{b:?}");
        }
    }

    #[test]
    fn bins_match_naive_pass() {
        let probes: Vec<TaylorProbe> = (0..37)
            .map(|i| TaylorProbe {
                distance: (i as f64 * 0.37).sin().abs() * 3.0,
                error: i as f64,
            })
            .collect();
        let bins = DistanceBins::covering(5, &probes).unwrap();
        let r = taylor_error(&probes, &bins);
        let max = probes.iter().map(|p| p.distance).fold(0.0, f64::max);
        let w = max / 5.0;
        for (k, b) in r.bins.iter().enumerate() {
            let members: Vec<f64> = probes
                .iter()
                .filter(|p| ((p.distance / w).floor() as usize).min(4) == k)
                .map(|p| p.error)
                .collect();
            assert_eq!(b.count, members.len());
            if !members.is_empty() {
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                assert!((b.mean_error - mean).abs() < 1e-12);
            }
        }
        assert_eq!(r.bins.iter().map(|b| b.count).sum::<usize>(), 37);
    }

    #[test]
    fn empty_bins_are_flagged() {
        let probes = [TaylorProbe { distance: 0.1, error: 1.0 }, TaylorProbe { distance: 1.0, error: 3.0 }];
        let r = taylor_error(&probes, &DistanceBins::equal_width(4, 1.0).unwrap());
        assert!(r.bins[1].empty && r.bins[1].mean_error.is_nan());
        assert_eq!(r.farthest_populated().unwrap().mean_error, 3.0);
    }
}
