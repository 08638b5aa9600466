//! Writing low-resource splits with a digest manifest.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use maskfill_core::harness::{subsample, SplitSize, SplitSpec};
use maskfill_core::Corpus;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::format::{canonical_lines, serialize_corpus};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DIGEST_ALGORITHM: &str = "sha256";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusRole {
    Train,
    Dev,
    Test,
}

impl CorpusRole {
    pub fn is_protected(self) -> bool {
        self != CorpusRole::Train
    }
}

impl fmt::Display for CorpusRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusRole::Train => "train",
            CorpusRole::Dev => "dev",
            CorpusRole::Test => "test",
        })
    }
}

impl FromStr for CorpusRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(CorpusRole::Train),
            "dev" => Ok(CorpusRole::Dev),
            "test" => Ok(CorpusRole::Test),
            _ => Err(format!("unknown role `{s}` (expected train, dev or test)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub size: usize,
    pub seed: u64,
    pub file: String,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub digest_algorithm: String,
    pub role: CorpusRole,
    pub splits: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_bytes(&self) -> Vec<u8> {
        canonical_lines([self])
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("{}: malformed manifest: {e}", path.display()),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes to a temporary sibling and renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// The role under which `input` is listed in a manifest in its directory, if any.
pub fn manifest_role(input: &Path) -> Result<Option<CorpusRole>> {
    let dir = input.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let manifest = dir.join(MANIFEST_FILE);
    if !manifest.is_file() {
        return Ok(None);
    }
    let Some(file) = input.file_name() else {
        return Ok(None);
    };
    let m = Manifest::load(&manifest)?;
    Ok(m.splits.iter().any(|s| Path::new(&s.file) == Path::new(file)).then_some(m.role))
}

/// Fails for dev/test data, whether declared by the caller or by a manifest
/// listing `input`.
pub fn ensure_trainable(input: Option<&Path>, declared: CorpusRole) -> Result<()> {
    if declared.is_protected() {
        return Err(Error::ProtectedSplit(declared.to_string()));
    }
    if let Some(path) = input {
        if let Some(role) = manifest_role(path)? {
            if role.is_protected() {
                return Err(Error::ProtectedSplit(role.to_string()));
            }
        }
    }
    Ok(())
}

/// One `{name}.jsonl` per spec plus `manifest.json` under `out_dir`.
///
/// Dev and test corpora may only be exported whole (`NAME=all`), which tags
/// them in the manifest without sampling them.
pub fn export_experiment(c: &Corpus, specs: &[SplitSpec], out_dir: &Path, role: CorpusRole) -> Result<Manifest> {
    if role.is_protected() && specs.iter().any(|s| s.size != SplitSize::All) {
        return Err(Error::ProtectedSplit(role.to_string()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut splits = Vec::with_capacity(specs.len());
    for spec in specs {
        let sub = subsample(c, spec)?;
        let bytes = serialize_corpus(&sub);
        let file = format!("{}.jsonl", spec.name);
        atomic_write(&out_dir.join(&file), &bytes)?;
        log::info!("wrote split {} ({} samples)", spec.name, sub.len());
        splits.push(ManifestEntry {
            name: spec.name.clone(),
            size: sub.len(),
            seed: spec.seed,
            file,
            digest: sha256_hex(&bytes),
        });
    }
    let manifest = Manifest { digest_algorithm: DIGEST_ALGORITHM.into(), role, splits };
    atomic_write(&out_dir.join(MANIFEST_FILE), &manifest.to_bytes())?;
    Ok(manifest)
}
