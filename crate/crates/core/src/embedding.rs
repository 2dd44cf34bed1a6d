//! Dense unit-norm vectors and exact cosine scans.
//!
//! Vectors are stored as `f32` and serialized as base64 of their
//! little-endian bytes so snapshots round-trip bit-exactly. Dot products
//! accumulate in `f64`.

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance on the L2 norm of every stored embedding.
pub const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f32>);

impl Embedding {
    /// Normalizes `values` to unit L2 norm. Rejects empty, non-finite and
    /// all-zero input.
    pub fn normalized(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Input("embedding must have at least one dimension".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("embedding contains non-finite values".into()));
        }
        let norm = l2(&values);
        if norm == 0.0 {
            return Err(Error::Input("embedding has zero norm".into()));
        }
        let v: Vec<f32> = values.iter().map(|x| (*x as f64 / norm) as f32).collect();
        Ok(Self(v))
    }

    /// Wraps an already-normalized vector, checking the norm.
    pub fn from_unit(values: Vec<f32>) -> Result<Self> {
        let norm = l2(&values);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Input(format!("embedding norm {norm} is not unit")));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        l2(&self.0)
    }

    /// Cosine similarity. Both vectors are unit-norm, so this is the dot
    /// product clamped into `[-1, 1]`.
    pub fn cosine(&self, other: &Embedding) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(dot(&self.0, &other.0).clamp(-1.0, 1.0))
    }

    pub fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::Dimension {
                expected,
                actual: self.dim(),
            });
        }
        Ok(())
    }

    fn to_base64(&self) -> String {
        let mut bytes = Vec::with_capacity(self.0.len() * 4);
        for v in &self.0 {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        STANDARD.encode(bytes)
    }

    fn from_base64(s: &str) -> Result<Self> {
        let bytes = STANDARD
            .decode(s)
            .map_err(|e| Error::Snapshot(format!("bad embedding encoding: {e}")))?;
        if bytes.len() % 4 != 0 {
            return Err(Error::Snapshot("embedding byte length not a multiple of 4".into()));
        }
        let values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::from_unit(values).map_err(|e| Error::Snapshot(e.to_string()))
    }
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}

fn l2(a: &[f32]) -> f64 {
    dot(a, a).sqrt()
}

impl Serialize for Embedding {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_base64())
    }
}

impl<'de> Deserialize<'de> for Embedding {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Embedding::from_base64(&s).map_err(serde::de::Error::custom)
    }
}

/// Exact top-k cosine scan over `(key, embedding)` pairs.
///
/// Results are sorted by descending score; equal scores keep the order in
/// which entries appear in `items`.
pub fn top_k<'a, K: Clone + 'a>(
    query: &Embedding,
    items: impl IntoIterator<Item = (K, &'a Embedding)>,
    k: usize,
) -> Result<Vec<(K, f64)>> {
    let mut scored = Vec::new();
    for (key, emb) in items {
        scored.push((key, query.cosine(emb)?));
    }
    // stable sort keeps insertion order among ties
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    scored.truncate(k);
    Ok(scored)
}
