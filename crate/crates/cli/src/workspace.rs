//! On-disk workspace: one directory per stage plus a manifest recording the
//! config fingerprint, input hashes and output hashes each stage was built
//! from. A stage is up to date when all three still match.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Environment variable naming the workspace root.
pub const WORKSPACE_ENV: &str = "VMEME_WORKSPACE";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Ingest,
    Shots,
    Features,
    Index,
    Detect,
    EvalDetect,
    Graph,
    Topics,
    Predict,
    Report,
}

impl Stage {
    pub const PIPELINE: [Stage; 8] = [
        Stage::Ingest,
        Stage::Shots,
        Stage::Features,
        Stage::Index,
        Stage::Detect,
        Stage::Graph,
        Stage::Topics,
        Stage::Predict,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Shots => "shots",
            Stage::Features => "features",
            Stage::Index => "index",
            Stage::Detect => "detect",
            Stage::EvalDetect => "eval-detect",
            Stage::Graph => "graph",
            Stage::Topics => "topics",
            Stage::Predict => "predict",
            Stage::Report => "report",
        }
    }

    /// Stages whose outputs this one reads.
    pub fn inputs(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Shots => &[Stage::Ingest],
            Stage::Features => &[Stage::Shots],
            Stage::Index => &[Stage::Features],
            Stage::Detect => &[Stage::Ingest, Stage::Features, Stage::Index],
            Stage::EvalDetect => &[Stage::Features, Stage::Index],
            Stage::Graph => &[Stage::Ingest, Stage::Detect],
            Stage::Topics => &[Stage::Ingest, Stage::Detect],
            Stage::Predict => &[Stage::Ingest, Stage::Detect, Stage::Topics],
            Stage::Report => &[Stage::Ingest, Stage::Detect, Stage::Graph],
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: Stage,
    pub config_hash: String,
    /// Upstream stage name or external input path, to its content hash.
    pub inputs: BTreeMap<String, String>,
    /// Output file (relative to the stage directory) to its content hash.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).with_context(|| format!("reading {}", path.display()))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Hash of a serialisable value via its canonical JSON form.
pub fn fingerprint<T: Serialize>(value: &T) -> Result<String> {
    Ok(sha256_bytes(&serde_json::to_vec(value)?))
}

#[derive(Clone, Debug)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("stages")).with_context(|| format!("creating workspace {}", root.display()))?;
        Ok(Workspace { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn dir(&self, stage: Stage) -> PathBuf {
        self.root.join(stage.name())
    }

    pub fn file(&self, stage: Stage, name: &str) -> PathBuf {
        self.dir(stage).join(name)
    }

    fn manifest_path(&self, stage: Stage) -> PathBuf {
        self.root.join("stages").join(format!("{}.json", stage.name()))
    }

    pub fn manifest(&self, stage: Stage) -> Result<Option<StageManifest>> {
        let p = self.manifest_path(stage);
        if !p.exists() {
            return Ok(None);
        }
        let raw = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        Ok(Some(serde_json::from_str(&raw).with_context(|| format!("parsing {}", p.display()))?))
    }

    /// The manifest of a stage that must already be built.
    pub fn require(&self, stage: Stage) -> Result<StageManifest> {
        match self.manifest(stage)? {
            Some(m) => Ok(m),
            None => bail!("stage `{stage}` has not been built; run `vmeme {stage}` first"),
        }
    }

    /// Input hashes for `stage`: a digest of each upstream manifest's
    /// outputs, plus any external files.
    pub fn input_hashes(&self, stage: Stage, external: &[(&str, &Path)]) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for &up in stage.inputs() {
            let m = self.require(up)?;
            out.insert(up.name().to_string(), fingerprint(&m.outputs)?);
        }
        for (name, path) in external {
            out.insert(name.to_string(), sha256_file(path)?);
        }
        Ok(out)
    }

    /// Whether `stage` was built from exactly this config and these inputs
    /// and its outputs are intact.
    pub fn is_fresh(&self, stage: Stage, config_hash: &str, inputs: &BTreeMap<String, String>) -> Result<bool> {
        let Some(m) = self.manifest(stage)? else { return Ok(false) };
        if m.config_hash != config_hash || &m.inputs != inputs {
            return Ok(false);
        }
        for (name, hash) in &m.outputs {
            let p = self.file(stage, name);
            if !p.exists() || &sha256_file(&p)? != hash {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Clears a stage directory before a rebuild and drops its manifest.
    pub fn reset(&self, stage: Stage) -> Result<PathBuf> {
        let dir = self.dir(stage);
        let mp = self.manifest_path(stage);
        if mp.exists() {
            fs::remove_file(&mp).with_context(|| format!("removing {}", mp.display()))?;
        }
        if dir.exists() {
            fs::remove_dir_all(&dir).with_context(|| format!("clearing {}", dir.display()))?;
        }
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    /// Records a finished stage, hashing every file in its directory.
    pub fn commit(&self, stage: Stage, config_hash: String, inputs: BTreeMap<String, String>) -> Result<StageManifest> {
        let dir = self.dir(stage);
        let mut outputs = BTreeMap::new();
        collect_files(&dir, &dir, &mut outputs)?;
        let m = StageManifest {
            stage,
            config_hash,
            inputs,
            outputs,
        };
        let p = self.manifest_path(stage);
        fs::write(&p, serde_json::to_string_pretty(&m)? + "\n").with_context(|| format!("writing {}", p.display()))?;
        Ok(m)
    }
}

fn collect_files(base: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            collect_files(base, &p, out)?;
        } else {
            let rel = p.strip_prefix(base)?.to_string_lossy().replace('\\', "/");
            out.insert(rel, sha256_file(&p)?);
        }
    }
    Ok(())
}
