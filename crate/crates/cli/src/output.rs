use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use qrf_core::{Error, Result};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.txt";

/// Output directory that remembers every file written through it.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Writes `rel` from a closure over an in-memory buffer.
    pub fn write<F>(&mut self, rel: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, &buf)?;
        if !self.written.iter().any(|w| w == rel) {
            self.written.push(rel.to_string());
        }
        Ok(())
    }

    pub fn write_str(&mut self, rel: &str, text: &str) -> Result<()> {
        self.write(rel, |b| Ok(b.write_all(text.as_bytes())?))
    }

    /// Key-value header followed by one `sha256  path` line per artifact.
    pub fn write_manifest(&self, command: &str, config: Option<&Path>, seed: u64) -> Result<()> {
        let mut text = String::new();
        text.push_str("[manifest]\n");
        text.push_str(&format!("command = {command}\n"));
        let config = config.map_or("defaults".to_string(), |p| p.display().to_string());
        text.push_str(&format!("config = {config}\n"));
        text.push_str(&format!("seed = {seed}\n"));
        text.push_str(&format!("out_dir = {}\n", self.root.display()));
        text.push_str(&format!("artifacts = {}\n\n[checksums]\n", self.written.len()));
        let mut files = self.written.clone();
        files.sort();
        for rel in files {
            let bytes = fs::read(self.root.join(&rel))?;
            text.push_str(&format!("{}  {rel}\n", hex::encode(Sha256::digest(&bytes))));
        }
        fs::write(self.root.join(MANIFEST), text).map_err(Error::from)
    }
}
