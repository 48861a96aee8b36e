use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ArenaError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Index of every artifact in an output directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub command: String,
    pub files: Vec<ManifestEntry>,
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            walk(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

impl Manifest {
    /// Hashes every file under `dir` except an existing manifest.
    pub fn scan(dir: &Path, command: impl Into<String>) -> Result<Manifest, ArenaError> {
        let mut paths = Vec::new();
        walk(dir, &mut paths).map_err(|e| ArenaError::io(dir, e))?;
        paths.sort();
        let mut files = Vec::new();
        for p in paths {
            let rel = p.strip_prefix(dir).expect("walked under dir");
            if rel == Path::new(MANIFEST_FILE) {
                continue;
            }
            let bytes = fs::read(&p).map_err(|e| ArenaError::io(&p, e))?;
            files.push(ManifestEntry {
                path: rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"),
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(&bytes)),
            });
        }
        Ok(Manifest { tool: format!("mafia {}", env!("CARGO_PKG_VERSION")), command: command.into(), files })
    }

    /// Scans `dir` and writes `manifest.json` into it.
    pub fn write(dir: &Path, command: impl Into<String>) -> Result<Manifest, ArenaError> {
        let m = Self::scan(dir, command)?;
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&m).expect("manifest serializes");
        fs::write(&path, json + "\n").map_err(|e| ArenaError::io(&path, e))?;
        Ok(m)
    }
}
