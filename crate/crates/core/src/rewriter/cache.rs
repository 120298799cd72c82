use std::hash::Hash;
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use lru::LruCache;

/// Thread-safe LRU memo table. The lock is not held while a missing value
/// is computed, so two threads may compute the same entry; the cache is
/// purely an accelerator and either result is correct.
pub struct Memo<K: Hash + Eq, V: Clone> {
    inner: Option<Mutex<LruCache<K, V>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<K: Hash + Eq, V: Clone> Memo<K, V> {
    /// A capacity of zero disables caching.
    pub fn new(capacity: usize) -> Self {
        Memo {
            inner: NonZeroUsize::new(capacity).map(|c| Mutex::new(LruCache::new(c))),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn get_or_insert_with<F: FnOnce() -> V>(&self, key: K, compute: F) -> V {
        let Some(lock) = &self.inner else {
            return compute();
        };
        if let Some(v) = lock.lock().unwrap().get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return v.clone();
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let v = compute();
        lock.lock().unwrap().put(key, v.clone());
        v
    }

    pub fn len(&self) -> usize {
        self.inner.as_ref().map_or(0, |l| l.lock().unwrap().len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CacheConfig {
    pub mgu: usize,
    pub rename: usize,
    pub elimination: usize,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig {
            mgu: 4_500,
            rename: 55_000,
            elimination: 2_000,
        }
    }
}
