//! Labeled latent datasets synthesized by querying a victim.
//!
//! A sample's `mask[k]` marks attribute `k` as a usable training target: the
//! requested attribute is always present, and other attributes are present
//! when their own confidence clears the same threshold.
//!
//! The synthetic victims' confidence `σ(|logit|)` stands in for a real
//! classifier's class probability.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{child_seed, sample_standard_normal, seeded_rng, Rng};
use crate::types::{AttributeVector, HeadKind, LatentPoint};
use crate::victims::{QueryResult, VictimModel};

pub const DATASET_FORMAT: &str = "latwalk-dataset/1";

/// Draws allowed per requested sample before a threshold is declared infeasible.
pub const SAMPLE_BUDGET_FACTOR: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub z: LatentPoint,
    pub attrs: AttributeVector,
    pub mask: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub victim: serde_json::Value,
    /// Head kinds of the victim; absent means all classification.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub heads: Vec<HeadKind>,
}

impl DatasetHeader {
    pub fn head_kinds(&self) -> Vec<HeadKind> {
        if self.heads.is_empty() {
            vec![HeadKind::Classification; self.m]
        } else {
            self.heads.clone()
        }
    }
}

fn validate_threshold(threshold: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!("confidence threshold {threshold} outside [0, 1]")));
    }
    Ok(())
}

fn check_head(victim: &dyn VictimModel, j: usize, want: HeadKind) -> Result<()> {
    match victim.heads().get(j) {
        None => Err(Error::InvalidArgument(format!(
            "attribute {j} out of range for {} attributes",
            victim.attribute_count()
        ))),
        Some(h) if *h != want => Err(Error::InvalidArgument(format!("attribute {j} is not a {want:?} head"))),
        Some(_) => Ok(()),
    }
}

fn to_sample(z: LatentPoint, q: QueryResult, j: usize, threshold: f64) -> Sample {
    let mask = q
        .confidence
        .iter()
        .enumerate()
        .map(|(k, c)| k == j || *c >= threshold)
        .collect();
    Sample {
        z,
        attrs: q.attrs,
        mask,
    }
}

/// Balanced classification data for attribute `j`: `per_class` samples with
/// a positive logit followed by `per_class` with a non-positive logit, all
/// with confidence at least `threshold`.
pub fn synthesize(
    victim: &dyn VictimModel,
    j: usize,
    per_class: usize,
    threshold: f64,
    rng: &mut Rng,
) -> Result<Vec<Sample>> {
    validate_threshold(threshold)?;
    check_head(victim, j, HeadKind::Classification)?;
    if per_class == 0 {
        return Err(Error::InvalidArgument("per-class count must be positive".into()));
    }
    // σ(|logit|) < 1 for every finite logit
    if threshold >= 1.0 {
        return Err(Error::InfeasibleThreshold {
            threshold,
            observed_rate: 0.0,
            drawn: 0,
        });
    }
    let n = victim.latent_dim();
    let budget = SAMPLE_BUDGET_FACTOR * 2 * per_class;
    let mut pos = Vec::with_capacity(per_class);
    let mut neg = Vec::with_capacity(per_class);
    let mut drawn = 0usize;
    let mut accepted = 0usize;
    while pos.len() < per_class || neg.len() < per_class {
        if drawn >= budget {
            return Err(Error::InfeasibleThreshold {
                threshold,
                observed_rate: accepted as f64 / drawn as f64,
                drawn,
            });
        }
        let z = sample_standard_normal(rng, n)?;
        drawn += 1;
        let q = victim.query(&z)?;
        if q.confidence[j] < threshold {
            continue;
        }
        accepted += 1;
        let bucket = if q.attrs[j] > 0.0 { &mut pos } else { &mut neg };
        if bucket.len() < per_class {
            bucket.push(to_sample(z, q, j, threshold));
        }
    }
    pos.extend(neg);
    Ok(pos)
}

/// Datasets for several attributes, concatenated in the given order.
///
/// Classification attributes get `per_class` samples of each sign;
/// regression attributes get `2·per_class` samples. Attribute `j` draws
/// from `child_seed(seed, j)`.
pub fn synthesize_many(
    victim: &dyn VictimModel,
    attrs: &[usize],
    per_class: usize,
    threshold: f64,
    seed: u64,
) -> Result<Vec<Sample>> {
    let mut out = Vec::with_capacity(attrs.len() * 2 * per_class);
    for &j in attrs {
        let mut rng = seeded_rng(child_seed(seed, j as u64));
        let part = match victim.heads().get(j) {
            Some(HeadKind::Regression) => synthesize_regression(victim, j, 2 * per_class, threshold, &mut rng)?,
            _ => synthesize(victim, j, per_class, threshold, &mut rng)?,
        };
        out.extend(part);
    }
    Ok(out)
}

/// `count` samples whose regression head `j` reports confidence at least `threshold`.
pub fn synthesize_regression(
    victim: &dyn VictimModel,
    j: usize,
    count: usize,
    threshold: f64,
    rng: &mut Rng,
) -> Result<Vec<Sample>> {
    validate_threshold(threshold)?;
    check_head(victim, j, HeadKind::Regression)?;
    let n = victim.latent_dim();
    let budget = SAMPLE_BUDGET_FACTOR * count;
    let mut out = Vec::with_capacity(count);
    let mut drawn = 0usize;
    while out.len() < count {
        if drawn >= budget {
            return Err(Error::InfeasibleThreshold {
                threshold,
                observed_rate: out.len() as f64 / drawn as f64,
                drawn,
            });
        }
        let z = sample_standard_normal(rng, n)?;
        drawn += 1;
        let q = victim.query(&z)?;
        if q.confidence[j] >= threshold {
            out.push(to_sample(z, q, j, threshold));
        }
    }
    Ok(out)
}

/// Header line, then one `{"z","attrs","mask"}` record per line.
pub fn write_dataset<W: Write>(header: &DatasetHeader, samples: &[Sample], mut w: W) -> Result<()> {
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    for s in samples {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: BufRead>(r: R) -> Result<(DatasetHeader, Vec<Sample>)> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| Error::Format("empty dataset file".into()))??;
    let header: DatasetHeader = serde_json::from_str(&first)?;
    if header.format != DATASET_FORMAT {
        return Err(Error::Format(format!("unknown dataset format {:?}", header.format)));
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: Sample = serde_json::from_str(&line).map_err(|e| Error::Format(format!("record {}: {e}", i + 1)))?;
        if s.z.len() != header.n || s.attrs.len() != header.m || s.mask.len() != header.m {
            return Err(Error::Format(format!("record {} does not match header dimensions", i + 1)));
        }
        samples.push(s);
    }
    Ok((header, samples))
}
