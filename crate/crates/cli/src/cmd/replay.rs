use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use super::eval::EvalConfig;
use super::synth::SynthConfig;
use super::train::TrainCmdConfig;
use super::traverse::TraverseConfig;
use crate::manifest::{read_manifest, sha256_file, Manifest};
use crate::{Mismatch, RunConfig};

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    manifest: PathBuf,
    /// Write outputs here instead of over the recorded paths.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

pub fn run(a: ReplayArgs) -> Result<()> {
    let m = read_manifest(&a.manifest)?;
    for input in &m.inputs {
        let now = sha256_file(&input.path).with_context(|| format!("input {}", input.path.display()))?;
        if now != input.sha256 {
            bail!("input {} changed since the run", input.path.display());
        }
    }
    match m.command.as_str() {
        "synth" => replay::<SynthConfig>(&m, a.out_dir.as_deref()),
        "train" => replay::<TrainCmdConfig>(&m, a.out_dir.as_deref()),
        "traverse" => replay::<TraverseConfig>(&m, a.out_dir.as_deref()),
        "eval" => replay::<EvalConfig>(&m, a.out_dir.as_deref()),
        other => bail!("cannot replay command {other:?}"),
    }
}

fn replay<C: RunConfig>(m: &Manifest, out_dir: Option<&Path>) -> Result<()> {
    let mut cfg: C = serde_json::from_value(m.config.clone()).context("manifest config")?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        cfg.redirect(dir);
    }
    let outcome = cfg.run()?;
    if let Some(e) = &outcome.deferred {
        eprintln!("note: the run reported: {e:#}");
    }
    if outcome.outputs.len() != m.outputs.len() {
        bail!(
            "run produced {} outputs, manifest lists {}",
            outcome.outputs.len(),
            m.outputs.len()
        );
    }
    let mut differing = Vec::new();
    for (path, rec) in outcome.outputs.iter().zip(&m.outputs) {
        let ok = sha256_file(path)? == rec.sha256;
        println!("{} {}", if ok { "match" } else { "MISMATCH" }, path.display());
        if !ok {
            differing.push(path.clone());
        }
    }
    if differing.is_empty() {
        Ok(())
    } else {
        Err(Mismatch(differing).into())
    }
}
