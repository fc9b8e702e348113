use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    output: String,
}

pub fn key(config: &RunConfig) -> String {
    let text = serde_json::to_string(&(SCHEMA_VERSION, config)).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    /// From `SPLITLAB_CACHE`; `None` when unset or empty.
    pub fn from_env() -> Option<Cache> {
        let dir = std::env::var_os("SPLITLAB_CACHE")?;
        if dir.is_empty() {
            return None;
        }
        Some(Cache { dir: dir.into() })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// A stored output, or `None`. Unreadable entries are reported and
    /// treated as misses.
    pub fn load(&self, key: &str) -> Option<String> {
        let path = self.path(key);
        let bytes = std::fs::read(&path).ok()?;
        match serde_json::from_slice::<Entry>(&bytes) {
            Ok(e) if e.key == key => Some(e.output),
            _ => {
                eprintln!("warning: cache entry {} is corrupt; recomputing", path.display());
                None
            }
        }
    }

    /// Write-temp-then-rename, so readers never see a partial entry.
    pub fn store(&self, key: &str, output: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let entry = Entry {
            key: key.to_string(),
            output: output.to_string(),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(serde_json::to_string(&entry)?.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.path(key)).map_err(|e| e.error)?;
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}
