use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use latwalk_core::metrics::{
    curves_csv, line_chart_svg, logit_curves, mppl, preservation_ratio, taylor_csv, taylor_error, taylor_probes,
    DistanceBins, ImageDistance, MppplConfig, Series,
};
use latwalk_core::traversal::{read_trajectories, TrajectoryFile};
use latwalk_core::types::Trajectory;
use latwalk_core::victims::VictimSpec;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{create, into_dir, open, require_out, with_suffix};
use crate::manifest::load_config;
use crate::victim::VictimArgs;
use crate::{Outcome, RunConfig};

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Mean path length of the victim's images along the trajectories.
    Mppl(MpplArgs),
    /// Per-step mean target and non-target logits.
    Curves(CommonArgs),
    /// Target change per unit of non-target change, per input file.
    Preservation(CommonArgs),
    /// First-order prediction error binned by distance from the start.
    Taylor(TaylorArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Trajectory file(s); repeat to compare methods.
    #[arg(long = "trajectories", short = 't')]
    trajectories: Vec<PathBuf>,
    /// Series names, one per trajectory file (default: the header's method).
    #[arg(long = "label")]
    labels: Vec<String>,
    /// Attribute to score (default: the first file's target).
    #[arg(long)]
    target: Option<usize>,
    /// Output prefix: writes `<out>.json` plus CSV/SVG where applicable.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MpplArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    victim: VictimArgs,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Interpolation factors drawn per step.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum)]
    distance: Option<DistanceArg>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DistanceArg {
    ScaledSquaredL2,
    SquaredL2,
}

#[derive(Debug, Args)]
pub struct TaylorArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    bins: Option<usize>,
    /// Upper edge of the last bin (default: largest observed distance).
    #[arg(long)]
    max_distance: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Mppl,
    Curves,
    Preservation,
    Taylor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub metric: Metric,
    pub trajectories: Vec<PathBuf>,
    pub labels: Vec<String>,
    pub target: Option<usize>,
    pub victim: Option<VictimSpec>,
    pub mppl: MppplConfig,
    pub seed: u64,
    pub bins: usize,
    pub max_distance: Option<f64>,
    pub out: PathBuf,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            metric: Metric::Mppl,
            trajectories: Vec::new(),
            labels: Vec::new(),
            target: None,
            victim: None,
            mppl: MppplConfig::default(),
            seed: 0,
            bins: 5,
            max_distance: None,
            out: PathBuf::new(),
        }
    }
}

fn apply_common(c: &mut EvalConfig, a: CommonArgs) {
    if !a.trajectories.is_empty() {
        c.trajectories = a.trajectories;
    }
    if !a.labels.is_empty() {
        c.labels = a.labels;
    }
    if a.target.is_some() {
        c.target = a.target;
    }
    if let Some(v) = a.out {
        c.out = v;
    }
}

pub fn config(cmd: EvalCommand) -> Result<EvalConfig> {
    let (metric, cfg_path) = match &cmd {
        EvalCommand::Mppl(a) => (Metric::Mppl, a.common.config.clone()),
        EvalCommand::Curves(a) => (Metric::Curves, a.config.clone()),
        EvalCommand::Preservation(a) => (Metric::Preservation, a.config.clone()),
        EvalCommand::Taylor(a) => (Metric::Taylor, a.common.config.clone()),
    };
    let mut c: EvalConfig = load_config(cfg_path.as_deref(), EvalConfig::COMMAND)?;
    c.metric = metric;
    match cmd {
        EvalCommand::Mppl(a) => {
            apply_common(&mut c, a.common);
            if let Some(v) = a.victim.resolve()? {
                c.victim = Some(v);
            }
            if let Some(v) = a.epsilon {
                c.mppl.epsilon = v;
            }
            if let Some(v) = a.samples {
                c.mppl.samples_per_step = v;
            }
            if let Some(d) = a.distance {
                c.mppl.distance = match d {
                    DistanceArg::ScaledSquaredL2 => ImageDistance::ScaledSquaredL2,
                    DistanceArg::SquaredL2 => ImageDistance::SquaredL2,
                };
            }
            if let Some(v) = a.seed {
                c.seed = v;
            }
        }
        EvalCommand::Curves(a) | EvalCommand::Preservation(a) => apply_common(&mut c, a),
        EvalCommand::Taylor(a) => {
            apply_common(&mut c, a.common);
            if let Some(v) = a.bins {
                c.bins = v;
            }
            if a.max_distance.is_some() {
                c.max_distance = a.max_distance;
            }
        }
    }
    Ok(c)
}

struct Loaded {
    label: String,
    file: TrajectoryFile,
}

impl Loaded {
    fn trajectories(&self) -> Vec<&Trajectory> {
        self.file.successful()
    }
}

impl EvalConfig {
    fn json_path(&self) -> PathBuf {
        with_suffix(&self.out, ".json")
    }

    fn csv_path(&self) -> PathBuf {
        with_suffix(&self.out, ".csv")
    }

    fn svg_path(&self) -> PathBuf {
        with_suffix(&self.out, ".svg")
    }

    fn load(&self) -> Result<Vec<Loaded>> {
        if self.trajectories.is_empty() {
            bail!("no trajectory files given (--trajectories)");
        }
        if !self.labels.is_empty() && self.labels.len() != self.trajectories.len() {
            bail!("{} labels for {} trajectory files", self.labels.len(), self.trajectories.len());
        }
        let mut out = Vec::new();
        for (i, p) in self.trajectories.iter().enumerate() {
            let file = read_trajectories(open(p)?).with_context(|| format!("reading {}", p.display()))?;
            if file.successful().is_empty() {
                bail!("{} holds no successful trajectories", p.display());
            }
            let label = self.labels.get(i).cloned().unwrap_or_else(|| file.header.method.clone());
            out.push(Loaded { label, file });
        }
        let n = out[0].file.header.n;
        if let Some(bad) = out.iter().find(|l| l.file.header.n != n) {
            bail!("latent dimension {} does not match {n}", bad.file.header.n);
        }
        Ok(out)
    }

    fn target(&self, files: &[Loaded]) -> usize {
        self.target.unwrap_or(files[0].file.header.target)
    }
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// JSON has no infinity; the flag carries it.
fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

impl RunConfig for EvalConfig {
    const COMMAND: &'static str = "eval";

    fn run(&self) -> Result<Outcome> {
        require_out(&self.out)?;
        let files = self.load()?;
        let target = self.target(&files);
        let mut outputs = vec![self.json_path()];
        match self.metric {
            Metric::Mppl => {
                let spec = self.victim.as_ref().context("mppl needs --victim")?;
                let victim = spec.build().context("building victim")?;
                let mut rows = Vec::new();
                for l in &files {
                    let r = mppl(&l.trajectories(), &victim, &self.mppl, self.seed)?;
                    rows.push(json!({
                        "label": l.label, "mppl": r.mppl, "samples": r.samples,
                        "per_trajectory": r.per_trajectory.iter().map(|x| finite_or_null(*x)).collect::<Vec<_>>(),
                    }));
                }
                let mut w = create(&self.csv_path())?;
                writeln!(w, "series,mppl,samples")?;
                for r in &rows {
                    writeln!(w, "{},{},{}", r["label"].as_str().unwrap_or(""), r["mppl"], r["samples"])?;
                }
                w.flush()?;
                write_json(&self.json_path(), &json!({ "metric": "mppl", "epsilon": self.mppl.epsilon, "series": rows }))?;
                outputs.push(self.csv_path());
            }
            Metric::Curves => {
                let curves = files
                    .iter()
                    .map(|l| Ok((l.label.as_str(), logit_curves(&l.trajectories(), target)?)))
                    .collect::<Result<Vec<_>>>()?;
                let refs: Vec<_> = curves.iter().map(|(l, c)| (*l, c)).collect();
                curves_csv(&refs, create(&self.csv_path())?)?;
                let names: Vec<(String, String)> = curves
                    .iter()
                    .map(|(l, _)| (format!("{l} target"), format!("{l} non-target")))
                    .collect();
                let mut series = Vec::new();
                for ((_, c), (tn, nn)) in curves.iter().zip(&names) {
                    let pts = |v: &[f64]| v.iter().enumerate().map(|(i, y)| (i as f64, *y)).collect();
                    series.push(Series { label: tn, points: pts(&c.target) });
                    if !c.non_target.is_empty() {
                        series.push(Series { label: nn, points: pts(&c.non_target) });
                    }
                }
                let svg = line_chart_svg("Logit curves", "step", "mean logit", &series);
                std::fs::write(self.svg_path(), svg)?;
                let body: Vec<_> = curves
                    .iter()
                    .map(|(l, c)| json!({ "label": l, "target": c.target, "non_target": c.non_target, "truncated": c.truncated }))
                    .collect();
                write_json(&self.json_path(), &json!({ "metric": "curves", "target": target, "series": body }))?;
                outputs.extend([self.csv_path(), self.svg_path()]);
            }
            Metric::Preservation => {
                let mut w = create(&self.csv_path())?;
                writeln!(w, "series,ratio,infinite,target_change,non_target_change,trajectories")?;
                let mut body = Vec::new();
                for l in &files {
                    let r = preservation_ratio(&l.trajectories(), target)?;
                    let ratio = if r.infinite { "inf".to_string() } else { r.ratio.to_string() };
                    writeln!(
                        w,
                        "{},{ratio},{},{},{},{}",
                        l.label, r.infinite, r.target_change, r.non_target_change, r.trajectories
                    )?;
                    body.push(json!({
                        "label": l.label, "ratio": finite_or_null(r.ratio), "infinite": r.infinite,
                        "target_change": r.target_change, "non_target_change": r.non_target_change,
                        "trajectories": r.trajectories,
                    }));
                }
                w.flush()?;
                write_json(&self.json_path(), &json!({ "metric": "preservation", "target": target, "series": body }))?;
                outputs.push(self.csv_path());
            }
            Metric::Taylor => {
                let probes = files
                    .iter()
                    .map(|l| taylor_probes(&l.trajectories(), target))
                    .collect::<latwalk_core::Result<Vec<_>>>()?;
                let bins = match self.max_distance {
                    Some(max) => DistanceBins::equal_width(self.bins, max)?,
                    None => DistanceBins::covering(self.bins, &probes.concat())?,
                };
                let reports: Vec<_> = probes.iter().map(|p| taylor_error(p, &bins)).collect();
                let refs: Vec<_> = files.iter().map(|l| l.label.as_str()).zip(&reports).collect();
                taylor_csv(&refs, create(&self.csv_path())?)?;
                let series: Vec<Series> = refs
                    .iter()
                    .map(|(l, r)| Series {
                        label: l,
                        points: r.bins.iter().map(|b| (0.5 * (b.lo + b.hi), b.mean_error)).collect(),
                    })
                    .collect();
                let svg = line_chart_svg("Taylor error by distance", "distance from start", "mean error", &series);
                std::fs::write(self.svg_path(), svg)?;
                let body: Vec<_> = refs
                    .iter()
                    .map(|(l, r)| {
                        let bins: Vec<_> = r
                            .bins
                            .iter()
                            .map(|b| json!({ "lo": b.lo, "hi": b.hi, "count": b.count, "mean_error": finite_or_null(b.mean_error), "empty": b.empty }))
                            .collect();
                        json!({ "label": l, "probes": r.probes, "outside": r.outside, "bins": bins })
                    })
                    .collect();
                write_json(
                    &self.json_path(),
                    &json!({ "metric": "taylor", "target": target, "edges": bins.edges(), "series": body }),
                )?;
                outputs.extend([self.csv_path(), self.svg_path()]);
            }
        }
        Ok(Outcome {
            inputs: self.trajectories.clone(),
            outputs,
            anchor: self.out.clone(),
            deferred: None,
        })
    }

    fn redirect(&mut self, dir: &Path) {
        self.out = into_dir(dir, &self.out);
    }
}
