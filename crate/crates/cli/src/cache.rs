//! Content-addressed result files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub struct Cache {
    dir: PathBuf,
}

#[derive(Serialize)]
struct Keyed<'a, T> {
    command: &'a str,
    version: &'a str,
    request: &'a T,
}

/// Hex SHA-256 of the canonical JSON of a request. Object keys are sorted by
/// the round trip through `serde_json::Value`.
pub fn key<T: Serialize>(command: &str, request: &T) -> Result<String, CliError> {
    let keyed = Keyed { command, version: env!("CARGO_PKG_VERSION"), request };
    let canonical = serde_json::to_vec(&serde_json::to_value(&keyed)?)?;
    Ok(hex::encode(Sha256::digest(&canonical)))
}

impl Cache {
    pub fn open(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Cache { dir: dir.to_path_buf() })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn load(&self, key: &str) -> Option<String> {
        fs::read_to_string(self.path(key)).ok()
    }

    /// Writes to a temporary file in the same directory, then renames.
    pub fn store(&self, key: &str, text: &str) -> Result<(), CliError> {
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", tmp.display()));
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(text.as_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, self.path(key)).map_err(io)
    }
}
