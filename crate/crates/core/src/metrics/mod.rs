//! Evaluation metrics over finished trajectories.

mod curves;
mod path_length;
mod report;
mod taylor;

pub use curves::{logit_curves, preservation_ratio, LogitCurves, PreservationReport};
pub use path_length::{
    mppl, mppl_with_sampler, trajectory_key, FixedT, ImageDistance, ImageMetric, MppplConfig, MppplReport, SeededT,
    TSampler,
};
pub use report::{curves_csv, line_chart_svg, taylor_csv, Series};
pub use taylor::{taylor_error, taylor_probes, BinStat, DistanceBins, TaylorProbe, TaylorReport};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

/// Cosine similarity of two direction vectors.
pub fn direction_cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

fn require_attrs(trajs: &[&crate::types::Trajectory]) -> Result<()> {
    if trajs.is_empty() {
        return Err(Error::InvalidArgument("no trajectories".into()));
    }
    if trajs.iter().any(|t| !t.has_attrs()) {
        return Err(Error::InvalidArgument("trajectories carry no attribute logs".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_basics() {
        assert!((direction_cosine(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(direction_cosine(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        assert_eq!(direction_cosine(&[1.0, 0.0], &[-2.0, 0.0]).unwrap(), -1.0);
        assert!(matches!(direction_cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector)));
        assert!(direction_cosine(&[1.0], &[1.0, 0.0]).is_err());
    }
}
