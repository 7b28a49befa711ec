//! Append-only JSON-lines cache of point counts, keyed by system id and `s`.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub sys: String,
    pub s: u32,
    pub count: u128,
    pub engine_version: String,
}

pub struct CountCache {
    path: PathBuf,
    entries: HashMap<(String, u32), u128>,
}

impl CountCache {
    /// Loads the records written by this engine version; a missing file is an empty cache.
    /// Unparseable lines are skipped.
    pub fn open(path: impl AsRef<Path>) -> Result<CountCache> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                let Ok(rec) = serde_json::from_str::<CacheRecord>(&line) else { continue };
                if rec.engine_version == ENGINE_VERSION {
                    entries.insert((rec.sys, rec.s), rec.count);
                }
            }
        }
        Ok(CountCache { path, entries })
    }

    pub fn get(&self, sys: &str, s: u32) -> Option<u128> {
        self.entries.get(&(sys.to_string(), s)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, sys: &str, s: u32, count: u128) -> Result<()> {
        if self.get(sys, s) == Some(count) {
            return Ok(());
        }
        let rec = CacheRecord { sys: sys.into(), s, count, engine_version: ENGINE_VERSION.into() };
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        writeln!(f, "{}", serde_json::to_string(&rec)?)?;
        self.entries.insert((rec.sys, s), count);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_skip_garbage() {
        let dir = std::env::temp_dir().join(format!("adlv-cache-{}", std::process::id()));
        let path = dir.join("c.jsonl");
        let _ = std::fs::remove_file(&path);
        let mut c = CountCache::open(&path).unwrap();
        assert!(c.is_empty());
        c.insert("zm1:q=2,m=1,n=2", 1, 8).unwrap();
        c.insert("zm1:q=2,m=1,n=2", 1, 8).unwrap();
        std::fs::OpenOptions::new().append(true).open(&path).unwrap().write_all(b"not json\n").unwrap();
        let c = CountCache::open(&path).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.get("zm1:q=2,m=1,n=2", 1), Some(8));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("{\"sys\":\"zm1:q=2,m=1,n=2\",\"s\":1,\"count\":8,\"engine_version\":"));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
