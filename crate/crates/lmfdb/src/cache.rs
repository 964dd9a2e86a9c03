use crate::{LmfdbError, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

/// Bumped when the stored payload layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// One cached LMFDB lookup: the raw records for a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheEntry {
    pub label: String,
    /// Seconds since the Unix epoch.
    pub fetched_at: u64,
    pub schema_version: u32,
    /// `{"newform": <mf_newforms record>, "hecke_nf": <mf_hecke_nf record>}`.
    pub payload: serde_json::Value,
}

/// `<dir>/<label>.json` files, replaced atomically.
#[derive(Debug)]
pub struct Cache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache {
            dir: dir.into(),
            write_lock: Mutex::new(()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, label: &str) -> PathBuf {
        self.dir.join(format!("{label}.json"))
    }

    pub fn get(&self, label: &str) -> Result<Option<CacheEntry>> {
        let path = self.path(label);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(LmfdbError::Fetch(format!("reading {}: {e}", path.display()))),
        };
        let entry: CacheEntry =
            serde_json::from_str(&text).map_err(|e| LmfdbError::schema(path.display().to_string(), e.to_string()))?;
        if entry.label != label {
            return Err(LmfdbError::schema(
                "label",
                format!("cache file for {label} holds {}", entry.label),
            ));
        }
        let stored = entry
            .payload
            .get("newform")
            .and_then(|n| n.get("label"))
            .and_then(|l| l.as_str());
        if stored != Some(label) {
            return Err(LmfdbError::schema(
                "payload.newform.label",
                format!("cache entry for {label} holds {stored:?}"),
            ));
        }
        if entry.schema_version != SCHEMA_VERSION {
            return Ok(None);
        }
        Ok(Some(entry))
    }

    pub fn put(&self, entry: &CacheEntry) -> Result<()> {
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        let text = serde_json::to_string_pretty(entry).expect("cache entry serialises");
        write_atomic(&self.path(&entry.label), text.as_bytes())
    }
}

/// Writes via a temporary file in the target directory and a rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let err = |e: &dyn std::fmt::Display| LmfdbError::Write(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| err(&e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| err(&e))?;
    tmp.write_all(bytes).map_err(|e| err(&e))?;
    tmp.as_file().sync_all().map_err(|e| err(&e))?;
    tmp.persist(path).map_err(|e| err(&e.error))?;
    Ok(())
}
