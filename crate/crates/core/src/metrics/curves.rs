use serde::Serialize;

use super::require_attrs;
use crate::error::{Error, Result};
use crate::types::Trajectory;

/// Per-step means across trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogitCurves {
    pub target: Vec<f64>,
    /// Mean over trajectories of the mean non-target logit; empty when m = 1.
    pub non_target: Vec<f64>,
    /// Set when trajectories had different lengths and were cut to the shortest.
    pub truncated: bool,
}

pub fn logit_curves(trajs: &[&Trajectory], target: usize) -> Result<LogitCurves> {
    require_attrs(trajs)?;
    let m = trajs[0].attrs[0].len();
    if target >= m {
        return Err(Error::InvalidArgument(format!("target {target} out of range for {m} attributes")));
    }
    let len = trajs.iter().map(|t| t.len()).min().unwrap_or(0);
    let truncated = trajs.iter().any(|t| t.len() != len);
    let count = trajs.len() as f64;
    let mut tgt = vec![0.0; len];
    let mut rest = vec![0.0; if m > 1 { len } else { 0 }];
    for t in trajs {
        for (i, a) in t.attrs.iter().take(len).enumerate() {
            tgt[i] += a[target];
            if m > 1 {
                let s: f64 = (0..m).filter(|&k| k != target).map(|k| a[k]).sum();
                rest[i] += s / (m - 1) as f64;
            }
        }
    }
    tgt.iter_mut().chain(rest.iter_mut()).for_each(|v| *v /= count);
    Ok(LogitCurves {
        target: tgt,
        non_target: rest,
        truncated,
    })
}

/// Target change per unit of non-target change.
///
/// Changes are absolute differences between the first and last recorded
/// logits. `ratio` is the mean target change over the mean non-target change
/// (averaged over trajectories and non-target attributes); it is `+∞` with
/// `infinite` set when non-targets did not move at all.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreservationReport {
    pub ratio: f64,
    pub infinite: bool,
    pub target_change: f64,
    pub non_target_change: f64,
    pub trajectories: usize,
}

pub fn preservation_ratio(trajs: &[&Trajectory], target: usize) -> Result<PreservationReport> {
    require_attrs(trajs)?;
    let m = trajs[0].attrs[0].len();
    if m < 2 {
        return Err(Error::InvalidArgument("preservation ratio needs at least two attributes".into()));
    }
    if target >= m {
        return Err(Error::InvalidArgument(format!("target {target} out of range for {m} attributes")));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for t in trajs {
        let (first, last) = (&t.attrs[0], &t.attrs[t.attrs.len() - 1]);
        if last.len() != m {
            return Err(Error::Shape {
                expected: m,
                actual: last.len(),
            });
        }
        num += (last[target] - first[target]).abs();
        den += (0..m)
            .filter(|&k| k != target)
            .map(|k| (last[k] - first[k]).abs())
            .sum::<f64>()
            / (m - 1) as f64;
    }
    let count = trajs.len() as f64;
    let (target_change, non_target_change) = (num / count, den / count);
    let infinite = non_target_change == 0.0;
    Ok(PreservationReport {
        ratio: if infinite { f64::INFINITY } else { target_change / non_target_change },
        infinite,
        target_change,
        non_target_change,
        trajectories: trajs.len(),
    })
}
