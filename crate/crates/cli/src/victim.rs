use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use latwalk_core::victims::VictimSpec;

/// Flags selecting a victim.
#[derive(Debug, Clone, Default, Args)]
pub struct VictimArgs {
    /// Builtin victim (`linear-gauss`, `warp`, `external`) or a JSON spec file.
    #[arg(long)]
    pub victim: Option<String>,
    /// JSON object whose fields override the builtin's parameters.
    #[arg(long, value_name = "FILE")]
    pub victim_params: Option<PathBuf>,
    /// Endpoint of an external victim: `tcp://host:port` or a command line.
    #[arg(long, env = "LATWALK_VICTIM_ENDPOINT")]
    pub endpoint: Option<String>,
    /// Per-query timeout for an external victim.
    #[arg(long, value_name = "MS")]
    pub timeout_ms: Option<u64>,
}

impl VictimArgs {
    /// Resolves the flags to a spec, or `None` when no victim was named.
    pub fn resolve(&self) -> Result<Option<VictimSpec>> {
        let Some(name) = &self.victim else {
            if self.victim_params.is_some() {
                bail!("--victim-params needs --victim");
            }
            return Ok(None);
        };
        let mut value = match name.as_str() {
            "linear-gauss" => serde_json::to_value(VictimSpec::linear_gauss_default())?,
            "warp" => serde_json::to_value(VictimSpec::entangled_warp())?,
            "external" => {
                let Some(endpoint) = &self.endpoint else {
                    bail!("external victim needs --endpoint or LATWALK_VICTIM_ENDPOINT");
                };
                serde_json::json!({ "kind": "external", "endpoint": endpoint })
            }
            other if Path::new(other).is_file() => read_json(Path::new(other))?,
            other => bail!("unknown victim {other:?}: expected linear-gauss, warp, external or a spec file"),
        };
        if let Some(p) = &self.victim_params {
            let overrides = read_json(p)?;
            let (Some(base), Some(extra)) = (value.as_object_mut(), overrides.as_object()) else {
                bail!("{} must hold a JSON object", p.display());
            };
            for (k, v) in extra {
                base.insert(k.clone(), v.clone());
            }
        }
        if let (Some(ms), Some(obj)) = (self.timeout_ms, value.as_object_mut()) {
            if obj.get("kind").and_then(|k| k.as_str()) == Some("external") {
                obj.insert("timeout_ms".into(), ms.into());
            }
        }
        let spec: VictimSpec = serde_json::from_value(value).context("invalid victim description")?;
        Ok(Some(spec))
    }
}

fn read_json(p: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
}
