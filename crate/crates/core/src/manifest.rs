// SPDX-License-Identifier: Apache-2.0

//! `manifest.json`: the effective config plus SHA-256 digests of every input
//! and output file of a run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
/// Top-level key that marks a JSON document as a manifest.
pub const MANIFEST_MARKER: &str = "manifest_version";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub tool: String,
    pub command: String,
    pub config: Value,
    /// Path as given on the command line → hex digest.
    pub inputs: BTreeMap<String, String>,
    /// Path relative to the output directory → hex digest.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Manifest {
    pub fn new(command: &str, config: Value) -> Self {
        Manifest {
            manifest_version: 1,
            tool: format!("metapath {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn add_inputs(&mut self, paths: &[PathBuf]) -> Result<()> {
        for p in paths {
            self.inputs.insert(p.display().to_string(), sha256_file(p)?);
        }
        Ok(())
    }

    pub fn add_outputs(&mut self, out_dir: &Path, paths: &[PathBuf]) -> Result<()> {
        for p in paths {
            let key = p.strip_prefix(out_dir).unwrap_or(p).display().to_string();
            self.outputs.insert(key, sha256_file(p)?);
        }
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join(MANIFEST_FILE);
        let mut body = serde_json::to_string_pretty(self).map_err(|source| Error::Json { path: path.clone(), source })?;
        body.push('\n');
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let mut m = Manifest::new("generate", Value::Null);
        m.add_outputs(dir.path(), &[p]).unwrap();
        assert!(m.outputs.contains_key("x.txt"));
        let written = m.write(dir.path()).unwrap();
        let back: Manifest = serde_json::from_str(&fs::read_to_string(written).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
