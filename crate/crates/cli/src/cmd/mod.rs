pub mod eval;
pub mod replay;
pub mod stub;
pub mod synth;
pub mod traverse;
pub mod train;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

pub fn require_out(out: &Path) -> Result<()> {
    if out.as_os_str().is_empty() {
        bail!("an output path is required (--out)");
    }
    Ok(())
}

/// `dir/<file name of path>`
pub fn into_dir(dir: &Path, path: &Path) -> PathBuf {
    dir.join(path.file_name().unwrap_or(path.as_os_str()))
}

/// `path` with `suffix` appended to the full file name.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Comma-separated attribute indices.
#[derive(Debug, Clone)]
pub struct IndexList(pub Vec<usize>);

/// Parses `1,2,3` (empty string gives an empty list).
pub fn parse_list(s: &str) -> Result<IndexList, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(IndexList)
}
