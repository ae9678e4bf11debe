//! Output directories: written in a staging directory and moved into place
//! only when complete, guarded by the hash of the inputs that produced them.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

pub const METADATA: &str = "metadata.json";

/// Refusal to replace a directory produced from different inputs.
#[derive(Debug)]
pub struct HashMismatch {
    pub path: PathBuf,
    pub existing: String,
    pub requested: String,
}

impl std::fmt::Display for HashMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} holds output for config hash {} but this run has {}; pass --force to replace it",
            self.path.display(),
            self.existing,
            self.requested
        )
    }
}

impl std::error::Error for HashMismatch {}

pub struct Staged {
    target: PathBuf,
    staging: PathBuf,
    hash: String,
}

impl Staged {
    /// Checks the guard up front so a refused run does no work.
    pub fn begin(target: &Path, hash: &str, force: bool) -> Result<Staged> {
        if target.exists() && !force {
            let existing = existing_hash(target);
            if existing.as_deref() != Some(hash) {
                return Err(HashMismatch {
                    path: target.to_path_buf(),
                    existing: existing.unwrap_or_else(|| "<none>".into()),
                    requested: hash.to_string(),
                }
                .into());
            }
        }
        let name = target.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
        let parent = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        let staging = parent.join(format!(".{name}.staging-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir(&staging).with_context(|| format!("creating {}", staging.display()))?;
        Ok(Staged { target: target.to_path_buf(), staging, hash: hash.to_string() })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.staging.join(file)
    }

    pub fn create(&self, file: &str) -> Result<BufWriter<File>> {
        let path = self.path(file);
        Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
    }

    /// Pretty JSON with a trailing newline.
    pub fn write_json<T: Serialize>(&self, file: &str, value: &T) -> Result<()> {
        let mut out = self.create(file)?;
        serde_json::to_writer_pretty(&mut out, value)?;
        writeln!(out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_text(&self, file: &str, text: &str) -> Result<()> {
        fs::write(self.path(file), text).with_context(|| format!("writing {file}"))
    }

    /// Moves the finished directory into place, replacing any previous one.
    pub fn commit(self) -> Result<PathBuf> {
        if self.target.exists() {
            fs::remove_dir_all(&self.target).with_context(|| format!("removing {}", self.target.display()))?;
        }
        fs::rename(&self.staging, &self.target)
            .with_context(|| format!("moving output into {}", self.target.display()))?;
        Ok(self.target.clone())
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        if self.staging.exists() {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}

fn existing_hash(dir: &Path) -> Option<String> {
    let text = fs::read_to_string(dir.join(METADATA)).ok()?;
    let meta: Value = serde_json::from_str(&text).ok()?;
    meta.get("config_hash")?.as_str().map(str::to_string)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finish(dir: &Path, hash: &str, force: bool) -> Result<()> {
        let staged = Staged::begin(dir, hash, force)?;
        staged.write_json(METADATA, &serde_json::json!({ "config_hash": hash }))?;
        staged.commit()?;
        Ok(())
    }

    #[test]
    fn guard_and_replace() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("run");
        finish(&dir, "aaa", false).unwrap();
        finish(&dir, "aaa", false).unwrap();
        let err = finish(&dir, "bbb", false).unwrap_err();
        assert!(err.downcast_ref::<HashMismatch>().is_some());
        finish(&dir, "bbb", true).unwrap();
        assert_eq!(existing_hash(&dir).as_deref(), Some("bbb"));
        // nothing left behind but the run directory itself
        assert_eq!(fs::read_dir(root.path()).unwrap().count(), 1);
    }

    #[test]
    fn abandoned_staging_is_removed() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("run");
        {
            let staged = Staged::begin(&dir, "x", false).unwrap();
            staged.write_text("partial", "1").unwrap();
        }
        assert!(!dir.exists());
        assert_eq!(fs::read_dir(root.path()).unwrap().count(), 0);
    }
}
