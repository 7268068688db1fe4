use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_err, ExperimentError, Result};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// One line of a dataset manifest. `boxes` are `[x, y, w, h]`; `path` is
/// relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub label: String,
    #[serde(default)]
    pub boxes: Vec<[u32; 4]>,
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for e in entries {
        text.push_str(&serde_json::to_string(e).expect("manifest entry serializes"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| ExperimentError::Config(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}
