//! Provenance record written next to every artifact.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const DIR_MANIFEST: &str = "run_manifest.json";
pub const FILE_MANIFEST_SUFFIX: &str = ".manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector, replayable as-is.
    pub argv: Vec<String>,
    /// Effective configuration after config-file and default resolution.
    pub config: serde_json::Value,
    /// Content hash per input file.
    pub inputs: BTreeMap<String, String>,
    /// Content hash per output file.
    pub outputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_time_secs: f64,
}

/// Where the manifest for `artifact` lives: inside it when it is a
/// directory, beside it otherwise.
pub fn manifest_path(artifact: &Path) -> PathBuf {
    if artifact.is_dir() {
        artifact.join(DIR_MANIFEST)
    } else {
        let mut name = artifact.file_name().unwrap_or_default().to_os_string();
        name.push(FILE_MANIFEST_SUFFIX);
        artifact.with_file_name(name)
    }
}

fn is_manifest(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n == DIR_MANIFEST || n.ends_with(FILE_MANIFEST_SUFFIX))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Hash every regular file under `path` (recursively, sorted), skipping
/// manifests.
pub fn hash_tree(path: &Path, out: &mut BTreeMap<String, String>) -> Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| CliError::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        for p in entries {
            hash_tree(&p, out)?;
        }
    } else if path.is_file() && !is_manifest(path) {
        out.insert(path.display().to_string(), sha256_file(path)?);
    }
    Ok(())
}

impl RunManifest {
    pub fn write(&self, artifact: &Path) -> Result<PathBuf> {
        let path = manifest_path(artifact);
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_location() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(manifest_path(dir.path()), dir.path().join(DIR_MANIFEST));
        let f = dir.path().join("f.csv");
        assert_eq!(manifest_path(&f), dir.path().join("f.csv.manifest.json"));
    }

    #[test]
    fn tree_hash_skips_manifests() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "abc").unwrap();
        fs::create_dir(dir.path().join("sub")).unwrap();
        fs::write(dir.path().join("sub/b.txt"), "").unwrap();
        fs::write(dir.path().join(DIR_MANIFEST), "{}").unwrap();
        let mut h = BTreeMap::new();
        hash_tree(dir.path(), &mut h).unwrap();
        assert_eq!(h.len(), 2);
        let a = dir.path().join("a.txt").display().to_string();
        assert_eq!(h[&a], "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        let b = dir.path().join("sub/b.txt").display().to_string();
        assert_eq!(h[&b], "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
