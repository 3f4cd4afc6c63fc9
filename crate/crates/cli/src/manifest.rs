//! Run manifests: what was run, with which resolved settings, and the digest
//! of every file it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::{EstimateConfig, FitConfig, MuConfig, SampleConfig, SolveConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// Absolute input paths with their digests at run time.
    pub inputs: Vec<FileRecord>,
    /// Every setting of the run, defaults included.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    /// Output files, relative to the manifest's directory.
    pub outputs: Vec<FileRecord>,
}

/// A fully resolved command.
pub trait Pipeline: Serialize + DeserializeOwned {
    const NAME: &'static str;

    fn inputs(&self) -> Vec<PathBuf>;

    fn seed(&self) -> Option<u64> {
        None
    }

    fn out_dir(&self) -> PathBuf;

    fn set_out_dir(&mut self, dir: PathBuf);

    /// Writes the outputs into `out_dir` and returns their file names.
    fn execute(&self) -> Result<Vec<String>>;
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn manifest_path(out_dir: &Path, command: &str) -> PathBuf {
    out_dir.join(format!("{command}.manifest.json"))
}

/// Executes `pipeline` and writes its manifest next to the outputs.
pub fn run<P: Pipeline>(pipeline: &P) -> Result<RunManifest> {
    let out_dir = pipeline.out_dir();
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let inputs = pipeline
        .inputs()
        .into_iter()
        .map(|path| Ok(FileRecord { sha256: sha256_file(&path)?, path }))
        .collect::<Result<Vec<_>>>()?;
    let names = pipeline.execute()?;
    let outputs = names
        .into_iter()
        .map(|name| Ok(FileRecord { sha256: sha256_file(&out_dir.join(&name))?, path: PathBuf::from(name) }))
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        command: P::NAME.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        inputs,
        config: serde_json::to_value(pipeline)?,
        seed: pipeline.seed(),
        outputs,
    };
    let path = manifest_path(&out_dir, P::NAME);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}

/// Outputs of a replay whose digests differ from the recorded run.
#[derive(Debug)]
pub struct ReplayMismatch(pub Vec<PathBuf>);

impl std::fmt::Display for ReplayMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<String> = self.0.iter().map(|p| p.display().to_string()).collect();
        write!(f, "replay differs from the recorded run in: {}", names.join(", "))
    }
}

impl std::error::Error for ReplayMismatch {}

/// Re-runs the manifest at `path`, optionally into another directory, and
/// compares output digests with the recorded ones.
pub fn replay(path: &Path, out_dir: Option<PathBuf>) -> Result<RunManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let recorded: RunManifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    for input in &recorded.inputs {
        match sha256_file(&input.path) {
            Ok(d) if d == input.sha256 => {}
            Ok(_) => log::warn!("input {} changed since the recorded run", input.path.display()),
            Err(e) => return Err(e),
        }
    }
    let fresh = match recorded.command.as_str() {
        FitConfig::NAME => rerun::<FitConfig>(&recorded, out_dir)?,
        SolveConfig::NAME => rerun::<SolveConfig>(&recorded, out_dir)?,
        MuConfig::NAME => rerun::<MuConfig>(&recorded, out_dir)?,
        SampleConfig::NAME => rerun::<SampleConfig>(&recorded, out_dir)?,
        EstimateConfig::NAME => rerun::<EstimateConfig>(&recorded, out_dir)?,
        other => bail!("manifest names unknown command `{other}`"),
    };
    let differing: Vec<PathBuf> = recorded
        .outputs
        .iter()
        .filter(|r| !fresh.outputs.contains(r))
        .map(|r| r.path.clone())
        .collect();
    if !differing.is_empty() || fresh.outputs.len() != recorded.outputs.len() {
        return Err(ReplayMismatch(differing).into());
    }
    Ok(fresh)
}

fn rerun<P: Pipeline>(recorded: &RunManifest, out_dir: Option<PathBuf>) -> Result<RunManifest> {
    let mut pipeline: P = serde_json::from_value(recorded.config.clone()).context("manifest config")?;
    if let Some(dir) = out_dir {
        pipeline.set_out_dir(std::path::absolute(&dir)?);
    }
    run(&pipeline)
}
