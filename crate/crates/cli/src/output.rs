use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

/// Output directory that records every file it writes.
pub struct Output {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

pub const MANIFEST: &str = "manifest.sha256";

impl Output {
    pub fn create(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.files
            .push((name.to_string(), hex::encode(Sha256::digest(contents.as_bytes()))));
        Ok(())
    }

    /// Writes the manifest in `sha256sum` format and returns its path.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.files.sort();
        let text: String = self
            .files
            .iter()
            .map(|(name, digest)| format!("{digest}  {name}\n"))
            .collect();
        let path = self.dir.join(MANIFEST);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}
