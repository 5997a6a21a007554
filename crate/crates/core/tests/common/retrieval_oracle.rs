//! Independent oracles shared by the retrieval tests and the acceptance
//! target.

use arcforge::retrieval::{cosine, EmbeddingVector, VectorIndex};
use proptest::prelude::*;

/// Exhaustive-scan oracle: repeatedly take the first maximum among the
/// remaining entries.
pub fn scan(vectors: &[Vec<f64>], query: &[f64], k: usize) -> Vec<usize> {
    let q = EmbeddingVector::new(query.to_vec(), "m");
    let sims: Vec<f64> =
        vectors.iter().map(|v| cosine(&EmbeddingVector::new(v.clone(), "m"), &q).unwrap()).collect();
    let mut taken = vec![false; vectors.len()];
    let mut out = Vec::new();
    while out.len() < k.min(vectors.len()) {
        let mut best: Option<usize> = None;
        for i in 0..vectors.len() {
            if !taken[i] && best.is_none_or(|b| sims[i] > sims[b]) {
                best = Some(i);
            }
        }
        let b = best.unwrap();
        taken[b] = true;
        out.push(b);
    }
    out
}

pub fn nonzero(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    // Small integer components make exact ties common.
    proptest::collection::vec(-2i8..=2, dim)
        .prop_filter("nonzero", |v| v.iter().any(|x| *x != 0))
        .prop_map(|v| v.into_iter().map(f64::from).collect())
}

pub fn index_case() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, usize)> {
    (1usize..=64, 1usize..=512).prop_flat_map(|(dim, n)| {
        let distinct = proptest::collection::vec(nonzero(dim), 1..=n.min(24));
        (distinct, proptest::collection::vec(any::<prop::sample::Index>(), n), nonzero(dim), 1usize..=n + 3)
            .prop_map(|(pool, picks, q, k)| (picks.iter().map(|i| i.get(&pool).clone()).collect(), q, k))
    })
}

/// Positions returned by the index for `query`.
pub fn index_top_k(vectors: &[Vec<f64>], query: &[f64], k: usize) -> Vec<usize> {
    let mut idx = VectorIndex::new("m");
    for (i, v) in vectors.iter().enumerate() {
        idx.insert(i.to_string(), EmbeddingVector::new(v.clone(), "m"), i).unwrap();
    }
    idx.top_k(&EmbeddingVector::new(query.to_vec(), "m"), k).unwrap().iter().map(|h| h.position).collect()
}
