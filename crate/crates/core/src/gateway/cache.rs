use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::GatewayError;

/// On-disk body of one cached completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub digest: String,
    pub backend_id: String,
    pub text: String,
    pub timestamp: u64,
}

/// Content-addressed response cache: an in-memory map, optionally backed by
/// `<dir>/<first-2-hex>/<digest>.json`.
pub struct ResponseCache {
    enabled: bool,
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, String>>,
    slots: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl ResponseCache {
    pub fn new(enabled: bool, dir: Option<PathBuf>) -> Self {
        ResponseCache {
            enabled,
            dir,
            memory: Mutex::new(HashMap::new()),
            slots: Mutex::new(HashMap::new()),
        }
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    pub fn path_for(dir: &Path, digest: &str) -> PathBuf {
        dir.join(&digest[..2]).join(format!("{digest}.json"))
    }

    /// Per-key lock serializing concurrent lookups of the same digest.
    pub(super) fn slot(&self, key: &str) -> Arc<Mutex<()>> {
        let mut slots = self.slots.lock().unwrap_or_else(|e| e.into_inner());
        slots.entry(key.to_string()).or_default().clone()
    }

    pub fn get(&self, key: &str, backend_id: &str) -> Result<Option<String>, GatewayError> {
        let mem_key = format!("{backend_id}/{key}");
        if let Some(text) = self.memory.lock().unwrap_or_else(|e| e.into_inner()).get(&mem_key) {
            return Ok(Some(text.clone()));
        }
        let Some(dir) = &self.dir else {
            return Ok(None);
        };
        let path = Self::path_for(dir, key);
        let raw = match fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(GatewayError::Cache { path, source }),
        };
        match serde_json::from_str::<CacheEntry>(&raw) {
            Ok(entry) if entry.digest == key && entry.backend_id == backend_id => {
                self.memory
                    .lock()
                    .unwrap_or_else(|e| e.into_inner())
                    .insert(mem_key, entry.text.clone());
                Ok(Some(entry.text))
            }
            Ok(_) => Ok(None),
            Err(e) => {
                log::warn!("ignoring corrupt cache entry {}: {e}", path.display());
                Ok(None)
            }
        }
    }

    pub fn put(&self, key: &str, backend_id: &str, text: &str) -> Result<(), GatewayError> {
        self.memory
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(format!("{backend_id}/{key}"), text.to_string());
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let path = Self::path_for(dir, key);
        let entry = CacheEntry {
            digest: key.to_string(),
            backend_id: backend_id.to_string(),
            text: text.to_string(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let body = serde_json::to_string_pretty(&entry).expect("cache entry serializes");
        let write = || -> std::io::Result<()> {
            fs::create_dir_all(path.parent().expect("cache path has parent"))?;
            let tmp = path.with_extension("json.tmp");
            fs::write(&tmp, body)?;
            fs::rename(&tmp, &path)
        };
        write().map_err(|source| GatewayError::Cache { path, source })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_layout_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let key = "ab".to_string() + &"0".repeat(62);
        let cache = ResponseCache::new(true, Some(dir.path().to_path_buf()));
        cache.put(&key, "mock", "hello").unwrap();
        let path = dir.path().join("ab").join(format!("{key}.json"));
        let entry: CacheEntry = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(entry.text, "hello");
        assert_eq!(entry.digest, key);

        let fresh = ResponseCache::new(true, Some(dir.path().to_path_buf()));
        assert_eq!(fresh.get(&key, "mock").unwrap().as_deref(), Some("hello"));
        assert_eq!(fresh.get(&key, "other-backend").unwrap(), None);
        assert_eq!(cache.get(&key, "other-backend").unwrap(), None);
    }
}
