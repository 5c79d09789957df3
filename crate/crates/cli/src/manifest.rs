use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FORMAT: &str = "latwalk-manifest/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        })
    }
}

/// Record of one run: enough to repeat it and check the result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let k = f.read(&mut buf)?;
        if k == 0 {
            break;
        }
        h.update(&buf[..k]);
    }
    Ok(hex::encode(h.finalize()))
}

/// `<primary>.manifest.json`
pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut s = primary.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn write_manifest<C: Serialize>(
    command: &str,
    config: &C,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
    at: &Path,
) -> Result<()> {
    let m = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config: serde_json::to_value(config)?,
        inputs: inputs.iter().map(|p| FileDigest::of(p)).collect::<Result<_>>()?,
        outputs: outputs.iter().map(|p| FileDigest::of(p)).collect::<Result<_>>()?,
    };
    let mut text = serde_json::to_string_pretty(&m)?;
    text.push('\n');
    std::fs::write(at, text).with_context(|| format!("writing {}", at.display()))?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let m: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if m.format != MANIFEST_FORMAT {
        bail!("{} is not a run manifest (format {:?})", path.display(), m.format);
    }
    Ok(m)
}

/// Loads a command config from a JSON file: either a bare config object or
/// a manifest of the same command. Missing fields take their defaults.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let config = if value.get("format").and_then(|f| f.as_str()) == Some(MANIFEST_FORMAT) {
        let m: Manifest = serde_json::from_value(value)?;
        if m.command != command {
            bail!("{} records a `{}` run, not `{command}`", path.display(), m.command);
        }
        m.config
    } else {
        value
    };
    serde_json::from_value(config).with_context(|| format!("config in {}", path.display()))
}
