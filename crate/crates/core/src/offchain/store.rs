use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::offchain::content::{verify_artifact, ContentId, Verification};

pub const DEFAULT_MAX_BLOB: u64 = 1 << 30;
const DEFAULT_CACHE_BUDGET: u64 = 256 << 20;
const MANIFEST: &str = "pins";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("blob does not match {expected}")]
pub struct IntegrityError {
    pub expected: ContentId,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("blob is empty")]
    Empty,
    #[error("blob of {size} bytes exceeds the {max} byte limit")]
    TooLarge { size: u64, max: u64 },
    #[error("blob not found")]
    NotFound,
    #[error(transparent)]
    Integrity(#[from] IntegrityError),
    #[error("storage: {0}")]
    Storage(#[from] io::Error),
}

#[derive(Debug, Default)]
struct Index {
    pinned: BTreeSet<ContentId>,
    /// Unpinned blobs by last use.
    cached: HashMap<ContentId, u64>,
    cached_bytes: u64,
    tick: u64,
}

/// Blobs on disk under their content hash, with a pin set that survives
/// restarts and an LRU budget for everything else.
#[derive(Debug)]
pub struct BlobStore {
    dir: PathBuf,
    max_blob: u64,
    cache_budget: u64,
    index: Mutex<Index>,
}

impl BlobStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<BlobStore, StoreError> {
        Self::with_limits(dir, DEFAULT_MAX_BLOB, DEFAULT_CACHE_BUDGET)
    }

    pub fn with_limits(
        dir: impl Into<PathBuf>,
        max_blob: u64,
        cache_budget: u64,
    ) -> Result<BlobStore, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(dir.join("content"))?;
        let mut index = Index::default();
        match fs::read_to_string(dir.join(MANIFEST)) {
            Ok(text) => {
                for line in text.lines().filter(|l| !l.trim().is_empty()) {
                    let id = line.trim().parse().map_err(|_| {
                        io::Error::new(io::ErrorKind::InvalidData, format!("bad pin line {line:?}"))
                    })?;
                    index.pinned.insert(id);
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e.into()),
        }
        let store = BlobStore {
            dir,
            max_blob,
            cache_budget,
            index: Mutex::new(index),
        };
        Ok(store)
    }

    fn path(&self, id: &ContentId) -> PathBuf {
        self.dir.join("content").join(id.file_name())
    }

    fn check_size(&self, size: u64) -> Result<(), StoreError> {
        if size == 0 {
            return Err(StoreError::Empty);
        }
        if size > self.max_blob {
            return Err(StoreError::TooLarge {
                size,
                max: self.max_blob,
            });
        }
        Ok(())
    }

    fn write_blob(&self, id: &ContentId, blob: &[u8]) -> Result<(), StoreError> {
        let path = self.path(id);
        if path.exists() {
            return Ok(());
        }
        write_atomic(&path, blob)?;
        Ok(())
    }

    /// Stores and pins `blob`. Storing the same bytes again is a no-op.
    pub fn put(&self, blob: &[u8]) -> Result<ContentId, StoreError> {
        self.check_size(blob.len() as u64)?;
        let id = ContentId::of(blob);
        self.write_blob(&id, blob)?;
        self.pin(&id)?;
        Ok(id)
    }

    /// Stores bytes received from a peer under `id`, pinned or as cache.
    pub fn put_verified(&self, id: &ContentId, blob: &[u8], pin: bool) -> Result<(), StoreError> {
        self.check_size(blob.len() as u64)?;
        if verify_artifact(blob, id) == Verification::Mismatch {
            return Err(IntegrityError { expected: *id }.into());
        }
        self.write_blob(id, blob)?;
        if pin {
            self.pin(id)?;
        } else {
            let evict = {
                let mut index = self.index.lock().expect("store lock");
                if !index.pinned.contains(id) && !index.cached.contains_key(id) {
                    index.cached_bytes += id.size;
                }
                index.tick += 1;
                let tick = index.tick;
                if !index.pinned.contains(id) {
                    index.cached.insert(*id, tick);
                }
                self.pick_evictions(&mut index)
            };
            for victim in evict {
                let _ = fs::remove_file(self.path(&victim));
            }
        }
        Ok(())
    }

    fn pick_evictions(&self, index: &mut Index) -> Vec<ContentId> {
        let mut out = Vec::new();
        while index.cached_bytes > self.cache_budget && index.cached.len() > 1 {
            let (&oldest, _) = index
                .cached
                .iter()
                .min_by_key(|(_, t)| **t)
                .expect("non-empty");
            index.cached.remove(&oldest);
            index.cached_bytes -= oldest.size;
            out.push(oldest);
        }
        out
    }

    /// Reads a locally held blob, checking it against `id` first.
    pub fn get(&self, id: &ContentId) -> Result<Vec<u8>, StoreError> {
        let bytes = match fs::read(self.path(id)) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::NotFound),
            Err(e) => return Err(e.into()),
        };
        if verify_artifact(&bytes, id) == Verification::Mismatch {
            return Err(IntegrityError { expected: *id }.into());
        }
        let mut index = self.index.lock().expect("store lock");
        index.tick += 1;
        let tick = index.tick;
        if let Some(t) = index.cached.get_mut(id) {
            *t = tick;
        }
        Ok(bytes)
    }

    pub fn contains(&self, id: &ContentId) -> bool {
        self.path(id).exists()
    }

    pub fn pin(&self, id: &ContentId) -> Result<(), StoreError> {
        let mut index = self.index.lock().expect("store lock");
        if index.cached.remove(id).is_some() {
            index.cached_bytes -= id.size;
        }
        if index.pinned.insert(*id) {
            self.write_manifest(&index.pinned)?;
        }
        Ok(())
    }

    /// Drops the pin; the blob stays as evictable cache.
    pub fn unpin(&self, id: &ContentId) -> Result<(), StoreError> {
        let mut index = self.index.lock().expect("store lock");
        if index.pinned.remove(id) {
            self.write_manifest(&index.pinned)?;
            index.tick += 1;
            let tick = index.tick;
            index.cached.insert(*id, tick);
            index.cached_bytes += id.size;
        }
        Ok(())
    }

    pub fn is_pinned(&self, id: &ContentId) -> bool {
        self.index.lock().expect("store lock").pinned.contains(id)
    }

    pub fn pinned(&self) -> Vec<ContentId> {
        self.index
            .lock()
            .expect("store lock")
            .pinned
            .iter()
            .copied()
            .collect()
    }

    fn write_manifest(&self, pins: &BTreeSet<ContentId>) -> io::Result<()> {
        let mut text = String::new();
        for id in pins {
            text.push_str(&id.to_string());
            text.push('\n');
        }
        write_atomic(&self.dir.join(MANIFEST), text.as_bytes())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// Returns the first candidate whose bytes match `id`, with the number of
/// candidates discarded before it.
pub fn first_verified<I>(id: &ContentId, candidates: I) -> Result<(Vec<u8>, usize), StoreError>
where
    I: IntoIterator<Item = Vec<u8>>,
{
    let mut discarded = 0;
    for bytes in candidates {
        if verify_artifact(&bytes, id) == Verification::Match {
            return Ok((bytes, discarded));
        }
        discarded += 1;
    }
    if discarded > 0 {
        Err(IntegrityError { expected: *id }.into())
    } else {
        Err(StoreError::NotFound)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> (tempfile::TempDir, BlobStore) {
        let dir = tempfile::tempdir().unwrap();
        let store = BlobStore::open(dir.path()).unwrap();
        (dir, store)
    }

    #[test]
    fn put_get_round_trip_and_idempotent() {
        let (_d, s) = store();
        let a = s.put(b"duration,protocol\n0,tcp\n").unwrap();
        let b = s.put(b"duration,protocol\n0,tcp\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(fs::read_dir(s.dir().join("content")).unwrap().count(), 1);
        assert_eq!(s.get(&a).unwrap(), b"duration,protocol\n0,tcp\n");
    }

    #[test]
    fn empty_and_oversize_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let s = BlobStore::with_limits(dir.path(), 4, 100).unwrap();
        assert!(matches!(s.put(b""), Err(StoreError::Empty)));
        assert!(matches!(
            s.put(b"12345"),
            Err(StoreError::TooLarge { size: 5, max: 4 })
        ));
    }

    #[test]
    fn unknown_id_not_found() {
        let (_d, s) = store();
        assert!(matches!(
            s.get(&ContentId::of(b"nope")),
            Err(StoreError::NotFound)
        ));
    }

    #[test]
    fn disk_corruption_detected() {
        let (_d, s) = store();
        let id = s.put(b"weights").unwrap();
        fs::write(s.path(&id), b"weightz").unwrap();
        assert!(matches!(s.get(&id), Err(StoreError::Integrity(_))));
    }

    #[test]
    fn pins_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let id = BlobStore::open(dir.path()).unwrap().put(b"model").unwrap();
        let again = BlobStore::open(dir.path()).unwrap();
        assert!(again.is_pinned(&id));
        assert_eq!(again.get(&id).unwrap(), b"model");
    }

    #[test]
    fn lru_evicts_unpinned_only() {
        let dir = tempfile::tempdir().unwrap();
        let s = BlobStore::with_limits(dir.path(), 1024, 10).unwrap();
        let pinned = s.put(b"pinned-blob-xx").unwrap();
        let a = ContentId::of(b"aaaaaa");
        let b = ContentId::of(b"bbbbbb");
        s.put_verified(&a, b"aaaaaa", false).unwrap();
        s.put_verified(&b, b"bbbbbb", false).unwrap();
        assert!(!s.contains(&a));
        assert!(s.contains(&b));
        assert!(s.contains(&pinned));
    }

    #[test]
    fn remote_bytes_are_verified() {
        let (_d, s) = store();
        let id = ContentId::of(b"good");
        assert!(matches!(
            s.put_verified(&id, b"evil", true),
            Err(StoreError::Integrity(_))
        ));
        assert!(!s.contains(&id));
    }

    #[test]
    fn first_verified_skips_corrupt_peers() {
        let id = ContentId::of(b"blob");
        let (bytes, skipped) =
            first_verified(&id, vec![b"blab".to_vec(), b"blob".to_vec()]).unwrap();
        assert_eq!((bytes.as_slice(), skipped), (&b"blob"[..], 1));
        assert!(matches!(
            first_verified(&id, vec![b"blab".to_vec()]),
            Err(StoreError::Integrity(_))
        ));
        assert!(matches!(
            first_verified(&id, Vec::new()),
            Err(StoreError::NotFound)
        ));
    }
}
