//! Text embeddings and the cosine similarity used by every matching and
//! cleaning step.
//!
//! Providers map text to a fixed-dimension vector. [`EmbeddingCache`] keys
//! vectors by NFC-normalized, trimmed text and stores them unit-normalized,
//! so similarity is a plain dot product.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::hash::Hasher;
use core::sync::atomic::{AtomicUsize, Ordering};

use siphasher::sip::SipHasher13;
use spin::RwLock;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Maps text to a vector. Must be deterministic: equal strings give equal
/// vectors for the lifetime of the provider.
pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector>;
}

/// NFC-normalized, trimmed form of `text`; the cache and lookup key.
pub fn normalize_key(text: &str) -> String {
    text.trim().nfc().collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit(text: &str, v: EmbeddingVector) -> Result<Arc<[f64]>> {
    let mut values = v.into_values();
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteEmbedding { text: text.to_string() });
    }
    let norm = libm::sqrt(dot(&values, &values));
    if norm == 0.0 {
        return Err(Error::DegenerateEmbedding { text: text.to_string() });
    }
    for x in &mut values {
        *x /= norm;
    }
    Ok(values.into())
}

/// Feature-hashing embedder used for tests and desk-scale runs.
///
/// Each whitespace token and each character 3-gram of the lowercased text
/// (padded with one space on each side) is hashed to a bucket and a sign.
/// The signed counts are L2-normalized.
#[derive(Debug, Clone)]
pub struct HashingProvider {
    dim: usize,
    seed: u64,
}

impl HashingProvider {
    pub const MIN_DIM: usize = 8;

    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim < Self::MIN_DIM {
            return Err(Error::InvalidDimension {
                min: Self::MIN_DIM,
                got: dim,
            });
        }
        Ok(Self { dim, seed })
    }

    fn bucket(&self, kind: u8, feature: &[u8]) -> (usize, f64) {
        let mut h = SipHasher13::new_with_keys(self.seed, self.seed.rotate_left(32) ^ 0x9e37_79b9_7f4a_7c15);
        h.write_u8(kind);
        h.write(feature);
        let v = h.finish();
        let sign = if v >> 63 == 0 { 1.0 } else { -1.0 };
        ((v % self.dim as u64) as usize, sign)
    }
}

impl EmbeddingProvider for HashingProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let lowered = text.to_lowercase();
        let tokens: Vec<&str> = lowered.split_whitespace().collect();
        if tokens.is_empty() {
            return Err(Error::EmptyText);
        }
        let mut values = alloc::vec![0.0; self.dim];
        for token in &tokens {
            let (i, s) = self.bucket(b'w', token.as_bytes());
            values[i] += s;
        }
        let mut padded: Vec<char> = Vec::with_capacity(lowered.len() + 2);
        padded.push(' ');
        for (n, token) in tokens.iter().enumerate() {
            if n > 0 {
                padded.push(' ');
            }
            padded.extend(token.chars());
        }
        padded.push(' ');
        let mut buf = [0u8; 12];
        for window in padded.windows(3) {
            let mut len = 0;
            for c in window {
                len += c.encode_utf8(&mut buf[len..]).len();
            }
            let (i, s) = self.bucket(b'c', &buf[..len]);
            values[i] += s;
        }
        let norm = libm::sqrt(dot(&values, &values));
        if norm > 0.0 {
            for x in &mut values {
                *x /= norm;
            }
        }
        Ok(EmbeddingVector::new(values))
    }
}

/// Table-lookup provider over externally computed vectors.
#[derive(Debug, Clone)]
pub struct PrecomputedProvider {
    dim: usize,
    table: BTreeMap<String, EmbeddingVector>,
}

impl PrecomputedProvider {
    /// Builds the table; every row must share the first row's dimension.
    /// Later rows overwrite earlier rows with the same normalized text.
    pub fn from_rows<I, S>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        let mut dim = None;
        let mut table = BTreeMap::new();
        for (text, vec) in rows {
            let expected = *dim.get_or_insert(vec.len());
            if vec.len() != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    found: vec.len(),
                });
            }
            table.insert(normalize_key(text.as_ref()), EmbeddingVector::new(vec));
        }
        Ok(Self {
            dim: dim.unwrap_or(0),
            table,
        })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl EmbeddingProvider for PrecomputedProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        self.table
            .get(&normalize_key(text))
            .cloned()
            .ok_or_else(|| Error::LookupMiss { text: text.to_string() })
    }
}

/// Text-keyed store of unit-normalized embeddings.
///
/// Concurrent readers share a read lock; a miss computes outside the lock
/// and then inserts under the write lock. Two threads missing on the same
/// key may both compute it, but the first insert wins.
#[derive(Debug, Default)]
pub struct EmbeddingCache {
    map: Option<RwLock<BTreeMap<String, Arc<[f64]>>>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl EmbeddingCache {
    pub fn new() -> Self {
        Self {
            map: Some(RwLock::new(BTreeMap::new())),
            ..Default::default()
        }
    }

    /// A cache that stores nothing; every lookup is a miss.
    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.map.as_ref().map_or(0, |m| m.read().len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unit-normalized embedding of `text` through `provider`.
    pub fn get_or_embed(&self, text: &str, provider: &dyn EmbeddingProvider) -> Result<Arc<[f64]>> {
        let key = normalize_key(text);
        if key.is_empty() {
            return Err(Error::EmptyText);
        }
        if let Some(map) = &self.map {
            if let Some(v) = map.read().get(&key) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(v.clone());
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let raw = provider.embed(&key)?;
        if raw.dim() != provider.dim() {
            return Err(Error::DimensionMismatch {
                expected: provider.dim(),
                found: raw.dim(),
            });
        }
        let v = unit(&key, raw)?;
        if let Some(map) = &self.map {
            return Ok(map.write().entry(key).or_insert(v).clone());
        }
        Ok(v)
    }
}

/// Cosine similarity of the embeddings of `a` and `b`, in `[-1, 1]`.
pub fn sim_st(a: &str, b: &str, provider: &dyn EmbeddingProvider, cache: &EmbeddingCache) -> Result<f64> {
    let u = cache.get_or_embed(a, provider)?;
    let v = cache.get_or_embed(b, provider)?;
    Ok(dot(&u, &v))
}

/// A provider paired with its cache; the handle every algorithm takes.
#[derive(Clone, Copy)]
pub struct Similarity<'a> {
    pub provider: &'a dyn EmbeddingProvider,
    pub cache: &'a EmbeddingCache,
}

impl<'a> Similarity<'a> {
    pub fn new(provider: &'a dyn EmbeddingProvider, cache: &'a EmbeddingCache) -> Self {
        Self { provider, cache }
    }

    pub fn embed(&self, text: &str) -> Result<Arc<[f64]>> {
        self.cache.get_or_embed(text, self.provider)
    }

    pub fn sim(&self, a: &str, b: &str) -> Result<f64> {
        sim_st(a, b, self.provider, self.cache)
    }
}
