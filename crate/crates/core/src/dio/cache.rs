//! Append-only JSON-lines cache of computed counts.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{CountRecord, Mode};
use crate::error::{Error, Result};

#[derive(Debug)]
pub struct CountCache {
    path: PathBuf,
    entries: BTreeMap<String, CountRecord>,
}

impl CountCache {
    /// Loads the cache, treating a missing file as empty.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = BTreeMap::new();
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let rec = CountRecord::from_json_line(line)?;
                entries.insert(Self::key(&rec), rec);
            }
        }
        Ok(CountCache { path, entries })
    }

    /// The cache key: curve text, mode, s or k, N and target. A maximum is
    /// looked up before its target is known, so its key has no target.
    pub fn key(r: &CountRecord) -> String {
        let z = if r.mode == Mode::MaxInhomogeneous { None } else { r.z.as_deref() };
        Self::key_parts(&r.curve, r.mode.as_str(), r.s_or_k, r.n, z)
    }

    pub fn key_parts(curve: &str, mode: &str, s_or_k: u32, n: u64, z: Option<&str>) -> String {
        format!("{curve}|{mode}|{s_or_k}|{n}|{}", z.unwrap_or("-"))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// A hit comes back flagged `cached` with zero elapsed time.
    pub fn get(&self, key: &str) -> Option<CountRecord> {
        self.entries.get(key).map(|r| CountRecord { cached: true, elapsed: 0.0, ..r.clone() })
    }

    pub fn insert(&mut self, rec: &CountRecord) -> Result<()> {
        let key = Self::key(rec);
        if self.entries.contains_key(&key) {
            return Ok(());
        }
        let stored = CountRecord { cached: false, ..rec.clone() };
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::Io(format!("{}: {e}", self.path.display())))?;
        writeln!(f, "{}", stored.to_json_line()).map_err(|e| Error::Io(e.to_string()))?;
        self.entries.insert(key, stored);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Curve;
    use crate::dio::{count_homogeneous, CountOptions, Method};

    #[test]
    fn roundtrip_through_file() {
        let dir = std::env::temp_dir().join(format!("polyavg-cache-{}", std::process::id()));
        let _ = fs::remove_file(&dir);
        let mut cache = CountCache::open(&dir).unwrap();
        assert!(cache.is_empty());
        let rec = count_homogeneous(&Curve::parse("n").unwrap(), 2, 5, Method::Mitm, &CountOptions::default()).unwrap();
        cache.insert(&rec).unwrap();
        let again = CountCache::open(&dir).unwrap();
        let hit = again.get(&CountCache::key(&rec)).unwrap();
        assert!(hit.cached);
        assert_eq!(hit.count, rec.count);
        assert_eq!(hit.elapsed, 0.0);
        fs::remove_file(&dir).unwrap();
    }
}
