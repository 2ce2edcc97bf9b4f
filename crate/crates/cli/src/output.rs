//! Atomic result files and the hash manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    /// False when the run stopped on an error after writing these files.
    pub complete: bool,
    pub files: Vec<ManifestEntry>,
}

/// Write through a temporary sibling and rename, so a reader never sees a
/// partly written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Collects the files of one run. Without a directory the primary record is
/// printed to stdout instead.
pub struct Sink {
    dir: Option<PathBuf>,
    command: String,
    files: Vec<ManifestEntry>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>, command: &str) -> std::io::Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self {
            dir,
            command: command.to_string(),
            files: Vec::new(),
        })
    }

    pub fn has_dir(&self) -> bool {
        self.dir.is_some()
    }

    pub fn emit(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        match &self.dir {
            Some(d) => {
                write_atomic(&d.join(name), bytes)?;
                self.files.push(ManifestEntry {
                    file: name.to_string(),
                    bytes: bytes.len() as u64,
                    sha256: sha256_hex(bytes),
                });
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                if !bytes.ends_with(b"\n") {
                    out.write_all(b"\n")?;
                }
            }
        }
        Ok(())
    }

    /// Writes `manifest.json` and echoes it on stdout. No-op without a directory.
    pub fn finish(self, complete: bool) -> std::io::Result<Option<Manifest>> {
        let Some(dir) = self.dir else { return Ok(None) };
        let m = Manifest {
            command: self.command,
            complete,
            files: self.files,
        };
        let text = serde_json::to_string_pretty(&m)? + "\n";
        write_atomic(&dir.join("manifest.json"), text.as_bytes())?;
        print!("{text}");
        Ok(Some(m))
    }
}
