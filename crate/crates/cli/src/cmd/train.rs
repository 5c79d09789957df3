use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use latwalk_core::data::read_dataset;
use latwalk_core::proxy::{save_checkpoint, train, ClassificationLoss, ProxyModel, TrainConfig};
use latwalk_core::rng::child_seed;
use serde::{Deserialize, Serialize};

use super::{create, into_dir, open, require_out, with_suffix};
use crate::manifest::load_config;
use crate::{Outcome, RunConfig};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset written by `synth`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Checkpoint file; the loss history goes to `<out>.loss.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long = "lr")]
    learning_rate: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long = "dropout")]
    dropout_rate: Option<f64>,
    /// Dense layers including the output layer.
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long, value_enum)]
    loss: Option<LossArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum LossArg {
    SoftCrossEntropy,
    LogitMse,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainCmdConfig {
    pub data: PathBuf,
    pub out: PathBuf,
    /// `seed` here is the run seed: initialization uses child 0 and the
    /// training stream child 1.
    pub train: TrainConfig,
}

pub fn config(a: TrainArgs) -> Result<TrainCmdConfig> {
    let mut c: TrainCmdConfig = load_config(a.config.as_deref(), TrainCmdConfig::COMMAND)?;
    let t = &mut c.train;
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = a.$f { t.$f = v; } )* };
    }
    set!(epochs, batch_size, learning_rate, momentum, dropout_rate, layers, width, seed);
    if let Some(l) = a.loss {
        t.classification_loss = match l {
            LossArg::SoftCrossEntropy => ClassificationLoss::SoftCrossEntropy,
            LossArg::LogitMse => ClassificationLoss::LogitMse,
        };
    }
    if let Some(v) = a.data {
        c.data = v;
    }
    if let Some(v) = a.out {
        c.out = v;
    }
    Ok(c)
}

impl TrainCmdConfig {
    fn loss_csv(&self) -> PathBuf {
        with_suffix(&self.out, ".loss.csv")
    }
}

impl RunConfig for TrainCmdConfig {
    const COMMAND: &'static str = "train";

    fn run(&self) -> Result<Outcome> {
        require_out(&self.out)?;
        self.train.validate()?;
        let (header, samples) = read_dataset(open(&self.data)?)?;
        let init = ProxyModel::init(
            header.n,
            header.head_kinds(),
            self.train.layers,
            self.train.width,
            self.train.dropout_rate,
            child_seed(self.train.seed, 0),
        )?;
        let cfg = TrainConfig {
            seed: child_seed(self.train.seed, 1),
            ..self.train.clone()
        };
        let report = train(&init, &samples, &cfg)?;

        let mut w = create(&self.out)?;
        save_checkpoint(&report.model, &mut w)?;
        w.flush()?;
        let mut w = create(&self.loss_csv())?;
        writeln!(w, "epoch,loss")?;
        for (e, l) in report.loss_history.iter().enumerate() {
            writeln!(w, "{e},{l}")?;
        }
        w.flush()?;
        Ok(Outcome {
            inputs: vec![self.data.clone()],
            outputs: vec![self.out.clone(), self.loss_csv()],
            anchor: self.out.clone(),
            deferred: None,
        })
    }

    fn redirect(&mut self, dir: &Path) {
        self.out = into_dir(dir, &self.out);
    }
}
