//! Embedding store and exact cosine top-k retrieval.
//!
//! Indexes hold at most a few thousand entries, so queries are an
//! exhaustive scan. Similarities are computed the same way for every entry,
//! which makes rankings exact and ties (bit-equal similarities) resolve by
//! insertion order.

mod embed;

use std::cmp::Ordering;
use std::collections::HashSet;

pub use embed::{cache_key, ApiEmbedder, CacheRecord, CachedEmbedder, Embedder, HashingEmbedder};

use crate::task::{ObjectKind, ObjectSeed, SeedExample};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RetrievalError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("model mismatch: `{left}` vs `{right}`")]
    ModelMismatch { left: String, right: String },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("index is empty")]
    EmptyIndex,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("duplicate index key `{0}`")]
    DuplicateKey(String),
    #[error("embedder failed: {0}")]
    Embedder(String),
    #[error("embedding cache {path}: {message}")]
    Cache { path: String, message: String },
}

/// A vector tagged with the model that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub model_id: String,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>, model_id: impl Into<String>) -> Self {
        EmbeddingVector { values, model_id: model_id.into() }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Both `cosine` and the index go through here so their results are
/// bit-identical. Zero is returned unsigned so that ranking by `total_cmp`
/// treats `-0.0` and `0.0` as the tie they are.
fn cosine_with_norms(u: &[f64], nu: f64, v: &[f64], nv: f64) -> f64 {
    let c = (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0);
    if c == 0.0 {
        0.0
    } else {
        c
    }
}

fn compatible(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<(), RetrievalError> {
    if u.model_id != v.model_id {
        return Err(RetrievalError::ModelMismatch { left: u.model_id.clone(), right: v.model_id.clone() });
    }
    if u.values.len() != v.values.len() {
        return Err(RetrievalError::DimensionMismatch { left: u.values.len(), right: v.values.len() });
    }
    Ok(())
}

/// `u·v / (‖u‖‖v‖)`, clamped to [-1, 1].
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, RetrievalError> {
    compatible(u, v)?;
    let (nu, nv) = (norm(&u.values), norm(&v.values));
    if nu == 0.0 || nv == 0.0 {
        return Err(RetrievalError::ZeroVector);
    }
    Ok(cosine_with_norms(&u.values, nu, &v.values, nv))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry<P> {
    pub key: String,
    pub vector: Vec<f64>,
    norm: f64,
    pub payload: P,
}

/// A ranked entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit<'a, P> {
    /// Insertion position in the index.
    pub position: usize,
    pub similarity: f64,
    pub entry: &'a IndexEntry<P>,
}

/// Entries sharing one model id and dimension, with unique keys. Immutable
/// once built; queries take `&self` and may run in parallel.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex<P> {
    model_id: String,
    dim: Option<usize>,
    entries: Vec<IndexEntry<P>>,
}

impl<P> VectorIndex<P> {
    pub fn new(model_id: impl Into<String>) -> Self {
        VectorIndex { model_id: model_id.into(), dim: None, entries: Vec::new() }
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry<P>] {
        &self.entries
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: EmbeddingVector, payload: P) -> Result<(), RetrievalError> {
        let key = key.into();
        if vector.model_id != self.model_id {
            return Err(RetrievalError::ModelMismatch { left: self.model_id.clone(), right: vector.model_id });
        }
        if let Some(d) = self.dim {
            if d != vector.values.len() {
                return Err(RetrievalError::DimensionMismatch { left: d, right: vector.values.len() });
            }
        }
        let n = norm(&vector.values);
        if n == 0.0 {
            return Err(RetrievalError::ZeroVector);
        }
        if self.entries.iter().any(|e| e.key == key) {
            return Err(RetrievalError::DuplicateKey(key));
        }
        self.dim = Some(vector.values.len());
        self.entries.push(IndexEntry { key, vector: vector.values, norm: n, payload });
        Ok(())
    }

    /// The `k` most similar entries (all of them if fewer), by
    /// non-increasing similarity with ties in insertion order.
    pub fn top_k(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<Hit<'_, P>>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::ZeroK);
        }
        if query.model_id != self.model_id {
            return Err(RetrievalError::ModelMismatch { left: self.model_id.clone(), right: query.model_id.clone() });
        }
        if let Some(d) = self.dim {
            if d != query.values.len() {
                return Err(RetrievalError::DimensionMismatch { left: d, right: query.values.len() });
            }
        }
        let nq = norm(&query.values);
        if nq == 0.0 {
            return Err(RetrievalError::ZeroVector);
        }
        let mut hits: Vec<Hit<'_, P>> = self
            .entries
            .iter()
            .enumerate()
            .map(|(position, entry)| Hit {
                position,
                similarity: cosine_with_norms(&entry.vector, entry.norm, &query.values, nq),
                entry,
            })
            .collect();
        let by_rank = |a: &Hit<'_, P>, b: &Hit<'_, P>| -> Ordering {
            b.similarity.total_cmp(&a.similarity).then(a.position.cmp(&b.position))
        };
        if k < hits.len() {
            hits.select_nth_unstable_by(k - 1, by_rank);
            hits.truncate(k);
        }
        hits.sort_unstable_by(by_rank);
        Ok(hits)
    }
}

/// Something that can be indexed: a unique key, the text that is embedded,
/// and the payload stored.
pub trait Indexable {
    type Payload;
    fn index_key(&self) -> String;
    fn embed_text(&self) -> String;
    fn into_payload(self, embedding: &[f64]) -> Self::Payload;
}

impl Indexable for SeedExample {
    type Payload = SeedExample;

    fn index_key(&self) -> String {
        self.name.clone()
    }

    fn embed_text(&self) -> String {
        self.description.clone()
    }

    fn into_payload(mut self, embedding: &[f64]) -> SeedExample {
        self.embedding = Some(embedding.to_vec());
        self
    }
}

impl Indexable for ObjectSeed {
    type Payload = ObjectSeed;

    fn index_key(&self) -> String {
        self.name.clone()
    }

    fn embed_text(&self) -> String {
        self.name.clone()
    }

    fn into_payload(mut self, embedding: &[f64]) -> ObjectSeed {
        self.embedding = Some(embedding.to_vec());
        self
    }
}

/// Embeds `items` in one batch and indexes them. Items whose embedded text
/// or key repeats an earlier item are dropped, first occurrence wins.
pub fn build_index<T: Indexable>(
    items: Vec<T>,
    embedder: &dyn Embedder,
) -> Result<VectorIndex<T::Payload>, RetrievalError> {
    let mut texts = HashSet::new();
    let mut keys = HashSet::new();
    let kept: Vec<T> = items
        .into_iter()
        .filter(|it| {
            let fresh_text = texts.insert(it.embed_text());
            let fresh_key = keys.insert(it.index_key());
            fresh_text && fresh_key
        })
        .collect();
    let batch: Vec<String> = kept.iter().map(Indexable::embed_text).collect();
    let vectors = if batch.is_empty() { Vec::new() } else { embedder.embed(&batch)? };
    if vectors.len() != kept.len() {
        return Err(RetrievalError::Embedder(format!("asked for {} vectors, got {}", kept.len(), vectors.len())));
    }
    let mut index = VectorIndex::new(embedder.model_id());
    for (item, v) in kept.into_iter().zip(vectors) {
        let key = item.index_key();
        let payload = item.into_payload(&v);
        index.insert(key, EmbeddingVector::new(v, embedder.model_id()), payload)?;
    }
    Ok(index)
}

/// Indexes the explicit seeds among `seeds`; implicit ones never enter the
/// store.
pub fn build_object_index(seeds: Vec<ObjectSeed>, embedder: &dyn Embedder) -> Result<VectorIndex<ObjectSeed>, RetrievalError> {
    build_index(seeds.into_iter().filter(|s| s.kind == ObjectKind::Explicit).collect(), embedder)
}

/// Embeds `text` and returns the top `k` entries.
pub fn query<'a, P>(
    index: &'a VectorIndex<P>,
    text: &str,
    embedder: &dyn Embedder,
    k: usize,
) -> Result<Vec<Hit<'a, P>>, RetrievalError> {
    let q = EmbeddingVector::new(embedder.embed_one(text)?, embedder.model_id());
    index.top_k(&q, k)
}

/// The stored seed most similar to `object_name`, with its similarity.
pub fn lookup_object_seed<'a>(
    index: &'a VectorIndex<ObjectSeed>,
    object_name: &str,
    embedder: &dyn Embedder,
) -> Result<(&'a ObjectSeed, f64), RetrievalError> {
    if index.is_empty() {
        return Err(RetrievalError::EmptyIndex);
    }
    let hit = query(index, object_name, embedder, 1)?.into_iter().next().ok_or(RetrievalError::EmptyIndex)?;
    Ok((&hit.entry.payload, hit.similarity))
}
