//! Buffered outputs that reach the disk only once a command has succeeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use avgwave_core::Result;

pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
    manifest: Vec<(String, String)>,
    manifest_path: PathBuf,
}

impl Outputs {
    pub fn new(command: &str, manifest_path: PathBuf) -> Self {
        Outputs {
            files: Vec::new(),
            manifest: vec![
                ("command".into(), command.into()),
                ("version".into(), env!("CARGO_PKG_VERSION").into()),
            ],
            manifest_path,
        }
    }

    pub fn record(&mut self, key: &str, value: impl ToString) {
        self.manifest.push((key.into(), value.to_string()));
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| {
            std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))
        })?;
        self.record(&format!("input.sha256.{}", path.display()), hex::encode(Sha256::digest(&bytes)));
        Ok(bytes)
    }

    pub fn add(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    /// Writes each file through a temporary sibling and a rename, then the
    /// manifest. On failure everything written so far is removed.
    pub fn commit(mut self) -> Result<()> {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        self.record("timestamp", timestamp);
        let manifest: String = self.manifest.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        self.files.push((self.manifest_path.clone(), manifest.into_bytes()));

        let mut written: Vec<PathBuf> = Vec::new();
        for (path, bytes) in &self.files {
            if let Err(e) = write_atomic(path, bytes) {
                for done in &written {
                    let _ = fs::remove_file(done);
                }
                return Err(e.into());
            }
            written.push(path.clone());
        }
        Ok(())
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// `<path>.manifest`.
pub fn manifest_for(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}
