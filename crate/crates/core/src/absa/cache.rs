use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::AspectMention;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CacheKey {
    pub review_id: String,
    pub taxonomy_fp: String,
    pub model: String,
}

/// One line of the mention cache file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub review_id: String,
    pub taxonomy_fp: String,
    pub model: String,
    pub mentions: Vec<AspectMention>,
    pub failed: bool,
}

impl CacheEntry {
    pub fn key(&self) -> CacheKey {
        CacheKey {
            review_id: self.review_id.clone(),
            taxonomy_fp: self.taxonomy_fp.clone(),
            model: self.model.clone(),
        }
    }
}

/// JSONL-backed extraction cache. Reads are concurrent; inserts take a
/// write lock. `save` rewrites the file in key order.
#[derive(Debug, Default)]
pub struct MentionCache {
    path: Option<PathBuf>,
    entries: RwLock<BTreeMap<CacheKey, CacheEntry>>,
    save_lock: Mutex<()>,
}

impl MentionCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or starts) the cache at `path`. A missing file is an empty cache.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut entries = BTreeMap::new();
        if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let entry = parse_entry(line).map_err(|message| Error::CacheCorrupt {
                    entry: format!("{}:{}", path.display(), i + 1),
                    message,
                })?;
                entries.insert(entry.key(), entry);
            }
        }
        Ok(Self {
            path: Some(path),
            entries: RwLock::new(entries),
            save_lock: Mutex::new(()),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &CacheKey) -> Option<CacheEntry> {
        self.entries.read().expect("cache lock").get(key).cloned()
    }

    pub fn insert(&self, entry: CacheEntry) {
        self.entries
            .write()
            .expect("cache lock")
            .insert(entry.key(), entry);
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes all entries to the backing file (no-op for in-memory caches).
    pub fn save(&self) -> Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let _guard = self.save_lock.lock().expect("save lock");
        let mut buf = Vec::new();
        for entry in self.entries.read().expect("cache lock").values() {
            serde_json::to_writer(&mut buf, entry)?;
            buf.push(b'\n');
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let tmp = path.with_extension("jsonl.tmp");
        let mut file = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        file.write_all(&buf).map_err(|e| Error::io(&tmp, e))?;
        drop(file);
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }
}

fn parse_entry(line: &str) -> std::result::Result<CacheEntry, String> {
    let entry: CacheEntry = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if let Some(m) = entry.mentions.iter().find(|m| m.review_id != entry.review_id) {
        return Err(format!(
            "entry for {:?} holds a mention of review {:?}",
            entry.review_id, m.review_id
        ));
    }
    Ok(entry)
}
