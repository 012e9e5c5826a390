//! On-disk projector cache: one JSON file per key, checksummed, written
//! through a temporary file and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::projectors::{ProjectorKey, ProjectorStore};
use crate::tldiag::{FpMorphism, Morphism, PrimeField, QMorphism, Rationals, Ring, TlError};

pub const FORMAT_VERSION: u64 = 1;
pub const CACHE_ENV: &str = "TILTLAB_CACHE";
pub const DEFAULT_DIR: &str = ".tiltlab-cache";

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed cache entry: {0}")]
    Format(String),
    #[error("cache entry version {found}, expected {FORMAT_VERSION}")]
    Version { found: u64 },
    #[error("checksum mismatch")]
    Checksum,
    #[error("cache entry holds key {found}, expected {expected}")]
    KeyMismatch { found: String, expected: String },
    #[error(transparent)]
    Tl(#[from] TlError),
}

fn checksum(payload: &Value) -> String {
    let bytes = serde_json::to_vec(payload).expect("json values always serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Wraps a serialized morphism with version, key and checksum.
pub fn encode_entry(key: &str, payload: Value) -> Value {
    json!({
        "version": FORMAT_VERSION,
        "key": key,
        "checksum": checksum(&payload),
        "payload": payload,
    })
}

/// Validates an entry and returns its payload.
pub fn decode_entry(key: &str, text: &str) -> Result<Value, CacheError> {
    let mut v: Value = serde_json::from_str(text).map_err(|e| CacheError::Format(e.to_string()))?;
    let found = v["version"].as_u64().ok_or_else(|| CacheError::Format("missing version".into()))?;
    if found != FORMAT_VERSION {
        return Err(CacheError::Version { found });
    }
    let k = v["key"].as_str().unwrap_or_default();
    if k != key {
        return Err(CacheError::KeyMismatch { found: k.into(), expected: key.into() });
    }
    let sum = v["checksum"].as_str().ok_or_else(|| CacheError::Format("missing checksum".into()))?.to_string();
    let payload = v["payload"].take();
    if checksum(&payload) != sum {
        return Err(CacheError::Checksum);
    }
    Ok(payload)
}

#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        DiskCache { dir: dir.into() }
    }

    /// Directory from `flag`, else `$TILTLAB_CACHE`, else `./.tiltlab-cache`.
    pub fn resolve(flag: Option<&Path>) -> Self {
        let dir = match flag {
            Some(d) => d.to_path_buf(),
            None => std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_DIR)),
        };
        DiskCache::new(dir)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn write(&self, key: &str, payload: Value) -> Result<(), CacheError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CacheError::Io { path, source }
        };
        fs::create_dir_all(&self.dir).map_err(io(&self.dir))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io(&self.dir))?;
        let text = serde_json::to_string(&encode_entry(key, payload)).expect("json values always serialize");
        tmp.write_all(text.as_bytes()).map_err(io(tmp.path()))?;
        let dest = self.path_for(key);
        tmp.persist(&dest).map_err(|e| CacheError::Io { path: dest.clone(), source: e.error })?;
        Ok(())
    }

    /// `Ok(None)` when absent, `Err` when present but unusable.
    pub fn read(&self, key: &str) -> Result<Option<Value>, CacheError> {
        let path = self.path_for(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(CacheError::Io { path, source }),
        };
        decode_entry(key, &text).map(Some)
    }

    fn load<R: Ring>(&self, key: &ProjectorKey, ring: R) -> Option<Morphism<R>> {
        let name = key.to_string();
        let payload = match self.read(&name) {
            Ok(p) => p?,
            Err(e) => {
                log::warn!("discarding cache entry {name}: {e}");
                return None;
            }
        };
        match Morphism::from_json_in(ring, &payload) {
            Ok(f) => Some(f),
            Err(e) => {
                log::warn!("discarding cache entry {name}: {e}");
                None
            }
        }
    }

    fn save<R: Ring>(&self, key: &ProjectorKey, f: &Morphism<R>) {
        if let Err(e) = self.write(&key.to_string(), f.to_json()) {
            log::warn!("could not persist {key}: {e}");
        }
    }
}

impl ProjectorStore for DiskCache {
    fn load_q(&self, key: &ProjectorKey) -> Option<QMorphism> {
        self.load(key, Rationals)
    }

    fn load_fp(&self, key: &ProjectorKey) -> Option<FpMorphism> {
        let field = PrimeField::new(key.p?).ok()?;
        self.load(key, field)
    }

    fn store_q(&self, key: &ProjectorKey, f: &QMorphism) {
        self.save(key, f)
    }

    fn store_fp(&self, key: &ProjectorKey, f: &FpMorphism) {
        self.save(key, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::Rational;
    use crate::projectors::ProjectorKind;
    use crate::tldiag::enumerate_matchings;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_q(rng: &mut ChaCha8Rng) -> QMorphism {
        let m = rng.gen_range(0..5) * 2 + rng.gen_range(0..2);
        let n = if m % 2 == 0 { rng.gen_range(0..4) * 2 } else { rng.gen_range(0..4) * 2 + 1 };
        let all = enumerate_matchings(m, n);
        let mut f = QMorphism::zero(Rationals, m, n);
        for _ in 0..rng.gen_range(0..6) {
            let d = all[rng.gen_range(0..all.len())];
            let c = Rational::new(rng.gen_range(-50..50), rng.gen_range(1..30));
            f.add_term(d, &c);
        }
        f
    }

    #[test]
    fn round_trip_random_morphisms() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for i in 0..100u64 {
            let f = random_q(&mut rng);
            let key = ProjectorKey { kind: ProjectorKind::PjwRational, v: i, p: Some(3) };
            cache.store_q(&key, &f);
            assert_eq!(cache.load_q(&key).unwrap(), f);
            let g = f.specialize(PrimeField::new(5).unwrap());
            if let Ok(g) = g {
                let key = ProjectorKey { kind: ProjectorKind::PjwModular, v: i, p: Some(5) };
                cache.store_fp(&key, &g);
                assert_eq!(cache.load_fp(&key).unwrap(), g);
            }
        }
    }

    #[test]
    fn corrupt_entries_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path());
        let key = ProjectorKey { kind: ProjectorKind::Jw, v: 4, p: None };
        let f = QMorphism::identity(Rationals, 3);
        assert!(cache.load_q(&key).is_none());
        cache.store_q(&key, &f);
        let path = cache.path_for(&key.to_string());
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(cache.read(&key.to_string()), Err(CacheError::Format(_))));
        assert!(cache.load_q(&key).is_none());
        fs::write(&path, text.replace("\"m\":3", "\"m\":5")).unwrap();
        assert!(matches!(cache.read(&key.to_string()), Err(CacheError::Checksum)));
    }

    #[test]
    fn entries_are_keyed() {
        let payload = json!({"a": 1});
        let e = encode_entry("x", payload.clone()).to_string();
        assert_eq!(decode_entry("x", &e).unwrap(), payload);
        assert!(matches!(decode_entry("y", &e), Err(CacheError::KeyMismatch { .. })));
    }
}
