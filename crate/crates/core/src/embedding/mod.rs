//! Text embeddings behind a provider interface.
//!
//! [`HashEmbedder`] is the deterministic default: lowercase, split on
//! non-alphanumerics, bucket every token by FNV-1a 64 modulo `dim`, count,
//! L2-normalize. [`RemoteEmbedder`] calls an HTTP endpoint instead. Both are
//! wrapped by [`Embedder`], which memoizes vectors by text.

mod cache;
mod hashing;
mod remote;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{embed_corpus, ArtifactKind, CorpusEmbeddings, EmbedStats, CACHE_VERSION};
pub use hashing::{fnv1a64, tokenize, HashEmbedder};
pub use remote::RemoteEmbedder;

use crate::ErrorCode;

pub const DEFAULT_DIM: usize = 256;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("embedding endpoint unavailable: {0}")]
    Transport(String),
    #[error("embedding endpoint returned malformed data: {0}")]
    Format(String),
    #[error("embedding has dimension {got}, provider configured for {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("invalid embedding configuration: {0}")]
    Config(String),
    #[error("embedding cache {path}: {reason}")]
    Cache { path: String, reason: String },
}

impl EmbeddingError {
    pub fn code(&self) -> ErrorCode {
        match self {
            EmbeddingError::Transport(_) => ErrorCode::ProviderUnavailable,
            EmbeddingError::Format(_) | EmbeddingError::DimMismatch { .. } => {
                ErrorCode::ProviderFormat
            }
            EmbeddingError::Config(_) => ErrorCode::BadRequest,
            EmbeddingError::Cache { .. } => ErrorCode::Internal,
        }
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, EmbeddingError::Transport(_))
    }
}

/// A unit-length embedding, or the all-zero vector for text without tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![0.0; dim],
        }
    }

    /// Normalizes `values` to unit L2 length. Squares are summed in index
    /// order so the result is bit-reproducible.
    pub fn normalized(mut values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            for v in &mut values {
                *v /= norm;
            }
        } else {
            values.iter_mut().for_each(|v| *v = 0.0);
        }
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine similarity of two embeddings, in `[-1, 1]`.
///
/// Vectors are already unit length, so this is their dot product. Returns 0
/// when either side is the zero vector.
///
/// # Panics
/// If the dimensions differ.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    assert_eq!(a.dim(), b.dim(), "cosine of vectors with different dimensions");
    if a.is_zero() || b.is_zero() {
        return 0.0;
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    dot.clamp(-1.0, 1.0)
}

pub trait EmbeddingProvider: Send + Sync {
    fn kind(&self) -> EmbeddingProviderKind;
    fn dim(&self) -> usize;
    /// Embeds each text. Output order matches input order.
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbeddingError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingProviderKind {
    DeterministicHash,
    RemoteHttp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingProviderConfig {
    pub provider_kind: EmbeddingProviderKind,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<PathBuf>,
}

fn default_dim() -> usize {
    DEFAULT_DIM
}

impl Default for EmbeddingProviderConfig {
    fn default() -> Self {
        Self {
            provider_kind: EmbeddingProviderKind::DeterministicHash,
            dim: DEFAULT_DIM,
            endpoint: None,
            api_key: None,
            cache_path: None,
        }
    }
}

impl EmbeddingProviderConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if self.dim == 0 {
            return Err(EmbeddingError::Config("dim must be positive".into()));
        }
        if self.provider_kind == EmbeddingProviderKind::RemoteHttp && self.endpoint.is_none() {
            return Err(EmbeddingError::Config("remote_http requires an endpoint".into()));
        }
        Ok(())
    }

    /// Hash of everything that changes the vectors (kind, dim, endpoint).
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{:?}|{}|", self.provider_kind, self.dim));
        h.update(self.endpoint.as_deref().unwrap_or(""));
        hex::encode(h.finalize())
    }

    pub fn build(&self) -> Result<Embedder, EmbeddingError> {
        self.validate()?;
        let provider: Box<dyn EmbeddingProvider> = match self.provider_kind {
            EmbeddingProviderKind::DeterministicHash => Box::new(HashEmbedder::new(self.dim)),
            EmbeddingProviderKind::RemoteHttp => Box::new(RemoteEmbedder::new(
                self.endpoint.clone().unwrap_or_default(),
                self.api_key.clone(),
                self.dim,
            )),
        };
        Ok(Embedder::new(provider, self.fingerprint()))
    }
}

/// A provider plus a text-keyed memo of computed vectors.
pub struct Embedder {
    provider: Box<dyn EmbeddingProvider>,
    fingerprint: String,
    memo: RwLock<HashMap<String, Arc<EmbeddingVector>>>,
}

impl std::fmt::Debug for Embedder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Embedder")
            .field("kind", &self.provider.kind())
            .field("dim", &self.provider.dim())
            .field("memoized", &self.memo.read().len())
            .finish()
    }
}

impl Embedder {
    pub fn new(provider: Box<dyn EmbeddingProvider>, fingerprint: String) -> Self {
        Self {
            provider,
            fingerprint,
            memo: RwLock::new(HashMap::new()),
        }
    }

    /// The deterministic hash embedder with the default dimension.
    pub fn deterministic() -> Self {
        EmbeddingProviderConfig::default()
            .build()
            .expect("default config is valid")
    }

    pub fn kind(&self) -> EmbeddingProviderKind {
        self.provider.kind()
    }

    pub fn dim(&self) -> usize {
        self.provider.dim()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn embed(&self, text: &str) -> Result<Arc<EmbeddingVector>, EmbeddingError> {
        if let Some(v) = self.memo.read().get(text) {
            return Ok(v.clone());
        }
        let v = self.provider.embed_batch(&[text])?.pop().ok_or_else(|| {
            EmbeddingError::Format("provider returned no vector".into())
        })?;
        self.check_dim(&v)?;
        let v = Arc::new(v);
        self.memo.write().insert(text.to_string(), v.clone());
        Ok(v)
    }

    /// Embeds all texts, sending only memo misses to the provider in one batch.
    pub fn embed_many(&self, texts: &[&str]) -> Result<Vec<Arc<EmbeddingVector>>, EmbeddingError> {
        let missing: Vec<&str> = {
            let memo = self.memo.read();
            let mut seen = std::collections::HashSet::new();
            texts
                .iter()
                .copied()
                .filter(|t| !memo.contains_key(*t) && seen.insert(*t))
                .collect()
        };
        if !missing.is_empty() {
            let vectors = self.provider.embed_batch(&missing)?;
            if vectors.len() != missing.len() {
                return Err(EmbeddingError::Format(format!(
                    "expected {} vectors, got {}",
                    missing.len(),
                    vectors.len()
                )));
            }
            for v in &vectors {
                self.check_dim(v)?;
            }
            let mut memo = self.memo.write();
            for (t, v) in missing.into_iter().zip(vectors) {
                memo.insert(t.to_string(), Arc::new(v));
            }
        }
        let memo = self.memo.read();
        Ok(texts.iter().map(|t| memo[*t].clone()).collect())
    }

    fn check_dim(&self, v: &EmbeddingVector) -> Result<(), EmbeddingError> {
        if v.dim() != self.dim() {
            return Err(EmbeddingError::DimMismatch {
                expected: self.dim(),
                got: v.dim(),
            });
        }
        Ok(())
    }
}
