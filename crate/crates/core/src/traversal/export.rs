//! Trajectory files.
//!
//! JSON lines: one header object, then one object per visited point:
//! `{"traj": t, "i": i, "z": [..], "attrs": [..], "dir_dot_prev": x, "grad": [..]}`.
//! `dir_dot_prev` is the dot product between the unit step leaving point `i`
//! and the one arriving at it (`null` at either end). `grad` is the
//! estimated target gradient used at point `i` (absent at the last point).
//! A trajectory that failed is a single `{"traj": t, "error": ".."}` line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::Sign;
use crate::error::{Error, Result};
use crate::linalg::sub;
use crate::types::{AttributeVector, DirectionVector, LatentPoint, StopReason, Trajectory};

pub const TRAJECTORY_FORMAT: &str = "latwalk-trajectories/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub format: String,
    pub method: String,
    pub n: usize,
    pub m: usize,
    pub target: usize,
    pub condition: Vec<usize>,
    pub step_size: f64,
    pub steps: usize,
    pub sign: Sign,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct TrajectoryFile {
    pub header: TrajectoryHeader,
    pub trajectories: Vec<std::result::Result<Trajectory, String>>,
}

impl TrajectoryFile {
    /// Successful trajectories only.
    pub fn successful(&self) -> Vec<&Trajectory> {
        self.trajectories.iter().filter_map(|t| t.as_ref().ok()).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct StepLine {
    traj: usize,
    i: usize,
    z: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    attrs: Option<Vec<f64>>,
    dir_dot_prev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grad: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ErrorLine {
    traj: usize,
    error: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Line {
    Step(StepLine),
    Error(ErrorLine),
}

fn line<W: Write, T: Serialize>(w: &mut W, v: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, v)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_trajectories<W: Write>(
    header: &TrajectoryHeader,
    trajectories: &[std::result::Result<Trajectory, String>],
    mut w: W,
) -> Result<()> {
    line(&mut w, header)?;
    for (t, entry) in trajectories.iter().enumerate() {
        let traj = match entry {
            Ok(traj) => traj,
            Err(msg) => {
                line(&mut w, &ErrorLine { traj: t, error: msg.clone() })?;
                continue;
            }
        };
        for (i, z) in traj.points.iter().enumerate() {
            let leaving = traj.directions.get(i);
            let arriving = i.checked_sub(1).and_then(|k| traj.directions.get(k));
            let dir_dot_prev = match (leaving, arriving) {
                (Some(a), Some(b)) => Some(a.dot(b)),
                _ => None,
            };
            line(
                &mut w,
                &StepLine {
                    traj: t,
                    i,
                    z: z.as_slice().to_vec(),
                    attrs: traj.attrs.get(i).map(|a| a.as_slice().to_vec()),
                    dir_dot_prev,
                    grad: traj.target_gradients.get(i).cloned(),
                },
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn assemble(header: &TrajectoryHeader, lines: Vec<StepLine>) -> Result<Trajectory> {
    let mut points = Vec::with_capacity(lines.len());
    let mut attrs = Vec::new();
    let mut grads = Vec::new();
    for (expect, l) in lines.into_iter().enumerate() {
        if l.i != expect {
            return Err(Error::Format(format!("trajectory {}: step {} out of order", l.traj, l.i)));
        }
        if l.z.len() != header.n {
            return Err(Error::Format(format!("trajectory {}: z has wrong length", l.traj)));
        }
        points.push(LatentPoint::new(l.z)?);
        if let Some(a) = l.attrs {
            if a.len() != header.m {
                return Err(Error::Format(format!("trajectory {}: attrs has wrong length", l.traj)));
            }
            attrs.push(AttributeVector::new(a)?);
        }
        if let Some(g) = l.grad {
            grads.push(g);
        }
    }
    if !attrs.is_empty() && attrs.len() != points.len() {
        return Err(Error::Format("attrs missing on some steps".into()));
    }
    let directions = points
        .windows(2)
        .map(|w| DirectionVector::normalized(sub(w[1].as_slice(), w[0].as_slice()), 0.0))
        .collect::<Result<Vec<_>>>()?;
    let stop = if points.len() < header.steps + 1 {
        StopReason::DegenerateDirection { step: points.len() - 1 }
    } else {
        StopReason::Completed
    };
    Ok(Trajectory {
        points,
        attrs,
        directions,
        target_gradients: grads,
        step_size: header.step_size,
        target: header.target,
        condition: header.condition.clone(),
        stop,
    })
}

pub fn read_trajectories<R: BufRead>(r: R) -> Result<TrajectoryFile> {
    let mut lines = r.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Format("empty trajectory file".into()))??;
    let header: TrajectoryHeader =
        serde_json::from_str(&first).map_err(|e| Error::Format(format!("bad trajectory header: {e}")))?;
    if header.format != TRAJECTORY_FORMAT {
        return Err(Error::Format(format!("unknown trajectory format {:?}", header.format)));
    }
    let mut out: Vec<std::result::Result<Trajectory, String>> = Vec::new();
    let mut pending: Vec<StepLine> = Vec::new();
    let flush = |pending: &mut Vec<StepLine>, out: &mut Vec<_>| -> Result<()> {
        if !pending.is_empty() {
            out.push(Ok(assemble(&header, std::mem::take(pending))?));
        }
        Ok(())
    };
    for (no, text) in lines.enumerate() {
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let parsed: Line =
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("line {}: {e}", no + 2)))?;
        let traj = match &parsed {
            Line::Step(s) => s.traj,
            Line::Error(e) => e.traj,
        };
        if pending.first().is_some_and(|p| p.traj != traj) {
            flush(&mut pending, &mut out)?;
        }
        if traj != out.len() {
            return Err(Error::Format(format!("line {}: trajectory {traj} out of order", no + 2)));
        }
        match parsed {
            Line::Step(s) => pending.push(s),
            Line::Error(e) => out.push(Err(e.error)),
        }
    }
    flush(&mut pending, &mut out)?;
    Ok(TrajectoryFile { header, trajectories: out })
}

/// One row per trajectory.
pub fn write_summary_csv<W: Write>(file: &TrajectoryFile, mut w: W) -> Result<()> {
    writeln!(w, "traj,seed,points,stop,target_start,target_end,target_change,distance")?;
    for (t, entry) in file.trajectories.iter().enumerate() {
        let seed = file.header.seeds.get(t).map(u64::to_string).unwrap_or_default();
        match entry {
            Err(_) => writeln!(w, "{t},{seed},0,error,,,,")?,
            Ok(traj) => {
                let stop = match traj.stop {
                    StopReason::Completed => "completed",
                    StopReason::DegenerateDirection { .. } => "degenerate",
                };
                let (start, end, change) = if traj.has_attrs() {
                    let s = traj.attr_series(traj.target);
                    let (a, b) = (s[0], s[s.len() - 1]);
                    (a.to_string(), b.to_string(), (b - a).to_string())
                } else {
                    Default::default()
                };
                let dist = traj.points[0].distance(traj.points.last().expect("non-empty"));
                writeln!(w, "{t},{seed},{},{stop},{start},{end},{change},{dist}", traj.points.len())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::traversal::{batch_traverse, Oracle, TraversalConfig};
    use crate::victims::LinearGaussianVictim;

    #[test]
    fn write_then_read() {
        let v = LinearGaussianVictim::random(6, 3, 1, true).unwrap();
        let cfg = TraversalConfig::new(4, 0.5, 1);
        let seeds = vec![1, 2];
        let runs = batch_traverse(&seeds, 6, &cfg, &Oracle(&v), Some(&v)).unwrap();
        let mut entries: Vec<_> = runs.into_iter().map(|r| r.map_err(|e| e.to_string())).collect();
        entries.push(Err("boom".into()));
        let header = TrajectoryHeader {
            format: TRAJECTORY_FORMAT.into(),
            method: "iterative".into(),
            n: 6,
            m: 3,
            target: 1,
            condition: vec![],
            step_size: 0.5,
            steps: 4,
            sign: Sign::Descend,
            seeds: vec![1, 2, 3],
        };
        let mut buf = Vec::new();
        write_trajectories(&header, &entries, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 1 + 5 + 5 + 1);
        let file = read_trajectories(buf.as_slice()).unwrap();
        assert_eq!(file.header, header);
        assert_eq!(file.trajectories.len(), 3);
        let a = entries[0].as_ref().unwrap();
        let b = file.trajectories[0].as_ref().unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.attrs, b.attrs);
        assert_eq!(a.target_gradients, b.target_gradients);
        assert_eq!(a.stop, b.stop);
        for (x, y) in a.directions.iter().zip(&b.directions) {
            assert!((x.dot(y) - 1.0).abs() < 1e-12);
        }
        assert_eq!(file.trajectories[2].as_ref().unwrap_err(), "boom");

        let mut csv = Vec::new();
        write_summary_csv(&file, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(3).unwrap().contains("error"));
    }

    #[test]
    fn rejects_foreign_header() {
        let text = r#"{"format":"something-else"}"#;
        assert!(read_trajectories(text.as_bytes()).is_err());
    }
}
