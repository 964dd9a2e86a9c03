//! Turning command-line names into files.
//!
//! A name is used as a path when that file exists; otherwise it is looked
//! up in the fixture directory, where `20.3`, `20.3.json` and `20.3.fixture`
//! all name `20.3.json`, and `20.3.desc` names `20.3.desc.json`.

use anyhow::{bail, Result};
use std::path::{Path, PathBuf};

fn candidates(name: &str, dir: &Path) -> Vec<PathBuf> {
    let stem = name.strip_suffix(".fixture").unwrap_or(name);
    let mut out = vec![PathBuf::from(name), dir.join(name)];
    if !stem.ends_with(".json") {
        out.push(dir.join(format!("{stem}.json")));
    }
    out
}

pub fn file(name: &str, dir: &Path, what: &str) -> Result<PathBuf> {
    let tried = candidates(name, dir);
    if let Some(p) = tried.iter().find(|p| p.is_file()) {
        return Ok(p.clone());
    }
    let list: Vec<String> = tried.iter().map(|p| p.display().to_string()).collect();
    bail!("no {what} file for {name:?} (tried {})", list.join(", "))
}

/// `<dir>/<label>.<suffix>.json`, when present.
pub fn sidecar(dir: &Path, label: &str, suffix: &str) -> Option<PathBuf> {
    let p = dir.join(format!("{label}.{suffix}.json"));
    p.is_file().then_some(p)
}
