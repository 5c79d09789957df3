use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use latwalk_core::data::{synthesize_many, write_dataset, DatasetHeader, DATASET_FORMAT};
use latwalk_core::victims::{VictimModel, VictimSpec};
use serde::{Deserialize, Serialize};

use super::{create, into_dir, parse_list, IndexList, require_out};
use crate::manifest::load_config;
use crate::victim::VictimArgs;
use crate::{Outcome, RunConfig};

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    victim: VictimArgs,
    /// Attribute(s) to balance, e.g. `0` or `0,1,2,3`.
    #[arg(long, value_parser = parse_list)]
    attr: Option<IndexList>,
    /// Samples per class and attribute (twice this for regression heads).
    #[arg(long)]
    per_class: Option<usize>,
    /// Confidence threshold in [0, 1].
    #[arg(long)]
    conf: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Dataset file (JSON lines).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config or manifest supplying defaults for unset flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub victim: VictimSpec,
    pub attrs: Vec<usize>,
    pub per_class: usize,
    pub conf: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            victim: VictimSpec::linear_gauss_default(),
            attrs: vec![0],
            per_class: 1000,
            conf: 0.9,
            seed: 0,
            out: PathBuf::new(),
        }
    }
}

pub fn config(a: SynthArgs) -> Result<SynthConfig> {
    let mut c: SynthConfig = load_config(a.config.as_deref(), SynthConfig::COMMAND)?;
    if let Some(v) = a.victim.resolve()? {
        c.victim = v;
    }
    if let Some(v) = a.attr {
        c.attrs = v.0;
    }
    if let Some(v) = a.per_class {
        c.per_class = v;
    }
    if let Some(v) = a.conf {
        c.conf = v;
    }
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = a.out {
        c.out = v;
    }
    Ok(c)
}

impl RunConfig for SynthConfig {
    const COMMAND: &'static str = "synth";

    fn run(&self) -> Result<Outcome> {
        require_out(&self.out)?;
        if self.attrs.is_empty() {
            anyhow::bail!("no attributes selected (--attr)");
        }
        let victim = self.victim.build().context("building victim")?;
        let samples = synthesize_many(&victim, &self.attrs, self.per_class, self.conf, self.seed)?;
        let header = DatasetHeader {
            format: DATASET_FORMAT.into(),
            n: victim.latent_dim(),
            m: victim.attribute_count(),
            seed: self.seed,
            victim: victim.descriptor(),
            heads: victim.heads().to_vec(),
        };
        let mut w = create(&self.out)?;
        write_dataset(&header, &samples, &mut w)?;
        w.flush()?;
        Ok(Outcome {
            inputs: Vec::new(),
            outputs: vec![self.out.clone()],
            anchor: self.out.clone(),
            deferred: None,
        })
    }

    fn redirect(&mut self, dir: &Path) {
        self.out = into_dir(dir, &self.out);
    }
}
