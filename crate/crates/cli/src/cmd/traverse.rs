use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use latwalk_core::baselines::{
    conditional_svm_direction, linear_traverse, train_svm, LinearDirectionModel, SvmConfig,
};
use latwalk_core::constraint::ConditionSet;
use latwalk_core::data::read_dataset;
use latwalk_core::proxy::{load_checkpoint, ProxyModel};
use latwalk_core::rng::child_seed;
use latwalk_core::traversal::{
    batch_from_seeds, batch_traverse, write_summary_csv, write_trajectories, GradientSource, Oracle, Sign,
    TrajectoryFile, TrajectoryHeader, TraversalConfig, TRAJECTORY_FORMAT,
};
use latwalk_core::types::{DirectionVector, Trajectory};
use latwalk_core::victims::{Victim, VictimModel, VictimSpec};
use serde::{Deserialize, Serialize};

use super::{create, into_dir, open, parse_list, IndexList, require_out, with_suffix};
use crate::manifest::load_config;
use crate::victim::VictimArgs;
use crate::{Outcome, RunConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Fresh (projected) gradient at every step.
    #[default]
    Iterative,
    /// Gradient at the start point, frozen.
    Linear,
    /// Normal of a linear SVM trained on a dataset.
    Svm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SignArg {
    Ascend,
    Descend,
}

#[derive(Debug, Args)]
pub struct TraverseArgs {
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Proxy checkpoint providing gradients.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Use the victim's exact gradients instead of a proxy.
    #[arg(long)]
    oracle: bool,
    /// Victim whose attributes are logged along each path.
    #[command(flatten)]
    victim: VictimArgs,
    /// Dataset for the SVM baseline.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    target: Option<usize>,
    /// Attributes to hold fixed, e.g. `1,2,3`.
    #[arg(long, value_parser = parse_list)]
    cond: Option<IndexList>,
    #[arg(long, value_enum)]
    sign: Option<SignArg>,
    /// Number of start points.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trajectory file; a per-trajectory summary goes to `<out>.summary.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraverseConfig {
    pub method: Method,
    pub checkpoint: Option<PathBuf>,
    pub oracle: bool,
    pub victim: Option<VictimSpec>,
    pub data: Option<PathBuf>,
    pub steps: usize,
    pub step_size: f64,
    pub target: usize,
    pub condition: Vec<usize>,
    pub sign: Sign,
    pub count: usize,
    /// Start point `i` is drawn from `child_seed(seed, i)`.
    pub seed: u64,
    pub svm: SvmConfig,
    pub out: PathBuf,
}

impl Default for TraverseConfig {
    fn default() -> Self {
        Self {
            method: Method::Iterative,
            checkpoint: None,
            oracle: false,
            victim: None,
            data: None,
            steps: 40,
            step_size: 0.2,
            target: 0,
            condition: Vec::new(),
            sign: Sign::Descend,
            count: 10,
            seed: 0,
            svm: SvmConfig::default(),
            out: PathBuf::new(),
        }
    }
}

pub fn config(a: TraverseArgs) -> Result<TraverseConfig> {
    let mut c: TraverseConfig = load_config(a.config.as_deref(), TraverseConfig::COMMAND)?;
    if let Some(v) = a.victim.resolve()? {
        c.victim = Some(v);
    }
    if a.oracle {
        c.oracle = true;
    }
    if let Some(v) = a.method {
        c.method = v;
    }
    if let Some(v) = a.checkpoint {
        c.checkpoint = Some(v);
    }
    if let Some(v) = a.data {
        c.data = Some(v);
    }
    if let Some(v) = a.steps {
        c.steps = v;
    }
    if let Some(v) = a.lambda {
        c.step_size = v;
    }
    if let Some(v) = a.target {
        c.target = v;
    }
    if let Some(v) = a.cond {
        c.condition = v.0;
    }
    if let Some(s) = a.sign {
        c.sign = match s {
            SignArg::Ascend => Sign::Ascend,
            SignArg::Descend => Sign::Descend,
        };
    }
    if let Some(v) = a.count {
        c.count = v;
    }
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = a.out {
        c.out = v;
    }
    Ok(c)
}

enum Source {
    Proxy(Box<ProxyModel>),
    Oracle,
    None,
}

impl TraverseConfig {
    fn summary(&self) -> PathBuf {
        with_suffix(&self.out, ".summary.csv")
    }

    fn method_name(&self) -> &'static str {
        match self.method {
            Method::Iterative => "iterative",
            Method::Linear => "linear",
            Method::Svm => "svm",
        }
    }

    fn check_usage(&self) -> Result<()> {
        require_out(&self.out)?;
        if self.count == 0 {
            bail!("--count must be positive");
        }
        match self.method {
            Method::Iterative | Method::Linear => {
                if self.oracle == self.checkpoint.is_some() {
                    bail!("give exactly one of --checkpoint and --oracle");
                }
                if self.oracle && self.victim.is_none() {
                    bail!("--oracle needs --victim");
                }
            }
            Method::Svm => {
                if self.data.is_none() {
                    bail!("the svm method needs --data");
                }
                if self.oracle || self.checkpoint.is_some() {
                    bail!("the svm method takes its direction from --data, not --checkpoint or --oracle");
                }
            }
        }
        if self.method == Method::Linear && !self.condition.is_empty() {
            bail!("the linear method has no conditional form; drop --cond or use iterative or svm");
        }
        Ok(())
    }

    /// SVM normals for the target and every conditioned attribute; other
    /// rows stay zero. Attribute `k` trains on `child_seed(child_seed(seed, u64::MAX), k)`.
    fn svm_direction(&self, cond: &ConditionSet) -> Result<(Vec<f64>, DirectionVector, usize, usize)> {
        let path = self.data.as_ref().expect("checked");
        let (header, samples) = read_dataset(open(path)?)?;
        let svm_seed = child_seed(self.seed, u64::MAX);
        let mut normals = vec![vec![0.0; header.n]; header.m];
        for k in std::iter::once(self.target).chain(cond.indices().iter().copied()) {
            if k >= header.m {
                bail!("attribute {k} out of range for {} attributes", header.m);
            }
            normals[k] = train_svm(&samples, k, &self.svm, child_seed(svm_seed, k as u64))?.weights;
        }
        let dir = if cond.is_empty() {
            DirectionVector::normalized(normals[self.target].clone(), 0.0)?
        } else {
            conditional_svm_direction(&normals, self.target, cond)?
        };
        Ok((normals[self.target].clone(), dir, header.n, header.m))
    }
}

impl RunConfig for TraverseConfig {
    const COMMAND: &'static str = "traverse";

    fn run(&self) -> Result<Outcome> {
        self.check_usage()?;
        let victim: Option<Victim> = self.victim.as_ref().map(|s| s.build()).transpose().context("building victim")?;
        let logger: Option<&dyn VictimModel> = victim.as_ref().map(|v| v as &dyn VictimModel);
        let mut inputs = Vec::new();

        let source = match (&self.checkpoint, self.oracle) {
            (Some(p), _) => {
                inputs.push(p.clone());
                Source::Proxy(Box::new(load_checkpoint(open(p)?)?))
            }
            (None, true) => Source::Oracle,
            _ => Source::None,
        };
        let oracle_handle = match (&source, &victim) {
            (Source::Oracle, Some(v)) => Some(Oracle(v.oracle()?)),
            _ => None,
        };
        let gradients: Option<&dyn GradientSource> = match &source {
            Source::Proxy(p) => Some(p.as_ref()),
            Source::Oracle => oracle_handle.as_ref().map(|o| o as &dyn GradientSource),
            Source::None => None,
        };

        let mut svm = None;
        let (mut n, mut m) = match (&source, &victim) {
            (Source::Proxy(p), _) => (p.input_dim(), p.output_dim()),
            (_, Some(v)) => (v.latent_dim(), v.attribute_count()),
            _ => (0, 0),
        };
        let cond = ConditionSet::new(self.condition.clone(), self.target)?;
        if self.method == Method::Svm {
            let data = self.data.clone().expect("checked");
            let (normal, dir, dn, dm) = self.svm_direction(&cond)?;
            inputs.push(data);
            (n, m) = (dn, dm);
            svm = Some(LinearDirectionModel::from_normal(normal, dir, self.sign, cond.indices().to_vec()));
        }
        if let Some(v) = &victim {
            if v.latent_dim() != n || v.attribute_count() != m {
                bail!(
                    "victim is {}-D with {} attributes but the direction source is {n}-D with {m}",
                    v.latent_dim(),
                    v.attribute_count()
                );
            }
        }
        if self.target >= m {
            bail!("target {} out of range for {m} attributes", self.target);
        }
        cond.validate(self.target, m, n)?;

        let seeds: Vec<u64> = (0..self.count as u64).map(|i| child_seed(self.seed, i)).collect();
        let tcfg = TraversalConfig::new(self.steps, self.step_size, self.target)
            .with_condition(cond)
            .with_sign(self.sign);
        tcfg.validate()?;
        let results = match self.method {
            Method::Iterative => batch_traverse(&seeds, n, &tcfg, gradients.expect("checked"), logger)?,
            Method::Linear => {
                let g = gradients.expect("checked");
                batch_from_seeds(&seeds, n, |z0| {
                    let model = LinearDirectionModel::from_initial_gradient(g, z0, self.target, self.sign)?;
                    linear_traverse(z0, &model, self.steps, self.step_size, self.target, logger)
                })?
            }
            Method::Svm => {
                let model = svm.as_ref().expect("built above");
                batch_from_seeds(&seeds, n, |z0| {
                    linear_traverse(z0, model, self.steps, self.step_size, self.target, logger)
                })?
            }
        };

        let mut deferred: Option<latwalk_core::Error> = None;
        let entries: Vec<std::result::Result<Trajectory, String>> = results
            .into_iter()
            .map(|r| {
                r.map_err(|e| {
                    let msg = e.to_string();
                    let replace = match &deferred {
                        None => true,
                        Some(d) => !d.is_numerical() && e.is_numerical(),
                    };
                    if replace {
                        deferred = Some(e);
                    }
                    msg
                })
            })
            .collect();
        let file = TrajectoryFile {
            header: TrajectoryHeader {
                format: TRAJECTORY_FORMAT.into(),
                method: self.method_name().into(),
                n,
                m,
                target: self.target,
                condition: tcfg.condition.indices().to_vec(),
                step_size: self.step_size,
                steps: self.steps,
                sign: self.sign,
                seeds,
            },
            trajectories: entries,
        };
        let mut w = create(&self.out)?;
        write_trajectories(&file.header, &file.trajectories, &mut w)?;
        std::io::Write::flush(&mut w)?;
        write_summary_csv(&file, create(&self.summary())?)?;
        Ok(Outcome {
            inputs,
            outputs: vec![self.out.clone(), self.summary()],
            anchor: self.out.clone(),
            deferred: deferred.map(|e| anyhow::Error::new(e).context("a trajectory failed; see the error lines")),
        })
    }

    fn redirect(&mut self, dir: &Path) {
        self.out = into_dir(dir, &self.out);
    }
}
