use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GatewayError;

/// Tolerance on the unit norm of a stored embedding.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// An L2-normalized vector. Dot product of two embeddings is their cosine
/// similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f32>", into = "Vec<f32>")]
pub struct Embedding {
    values: Vec<f32>,
}

impl Embedding {
    /// Normalizes `raw`. Fails on empty, non-finite or zero vectors.
    pub fn normalized(raw: Vec<f32>) -> Result<Self, GatewayError> {
        if raw.is_empty() {
            return Err(GatewayError::Embedding("empty vector".into()));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(GatewayError::Embedding("non-finite component".into()));
        }
        let norm = raw.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(GatewayError::Embedding("zero vector".into()));
        }
        let values = raw.into_iter().map(|v| (v as f64 / norm) as f32).collect();
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| (*v as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Cosine similarity. Both sides are unit vectors, so this is the dot
    /// product accumulated in f64.
    pub fn cosine(&self, other: &Embedding) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| *a as f64 * *b as f64)
            .sum()
    }
}

impl TryFrom<Vec<f32>> for Embedding {
    type Error = String;

    fn try_from(values: Vec<f32>) -> Result<Self, Self::Error> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err("embedding must be a non-empty finite vector".into());
        }
        let e = Embedding { values };
        // Stored vectors are kept bit-exact; they were normalized when created.
        if (e.norm() - 1.0).abs() > 1e-4 {
            return Err(format!("embedding is not unit length (norm {})", e.norm()));
        }
        Ok(e)
    }
}

impl From<Embedding> for Vec<f32> {
    fn from(e: Embedding) -> Self {
        e.values
    }
}

pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Embedding, GatewayError>;
}

/// Deterministic offline embedder: hashed bag of lower-cased word tokens,
/// each token adding a signed weight to one bucket. Identical texts map to
/// identical vectors and texts sharing words land close together.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dim must be positive");
        Self { dim }
    }
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Embedding, GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::EmptyText);
        }
        let mut raw = vec![0f32; self.dim];
        for token in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let digest = Sha256::digest(token.to_lowercase().as_bytes());
            let bucket = u64::from_le_bytes(digest[..8].try_into().unwrap()) as usize % self.dim;
            let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
            let weight = 0.5 + digest[9] as f32 / 255.0;
            raw[bucket] += sign * weight;
        }
        // Punctuation-only text, or tokens that cancel out exactly.
        if raw.iter().all(|v| *v == 0.0) {
            let digest = Sha256::digest(text.as_bytes());
            for (i, slot) in raw.iter_mut().enumerate() {
                *slot = digest[i % digest.len()] as f32 - 127.5;
            }
        }
        Embedding::normalized(raw)
    }
}
