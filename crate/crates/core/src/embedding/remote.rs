use serde::{Deserialize, Serialize};

use super::{EmbeddingError, EmbeddingProvider, EmbeddingProviderKind, EmbeddingVector};
use crate::http::{post_json, HttpError};

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Embeds through `POST {"texts": [...]}` → `{"vectors": [[...]]}`.
///
/// Returned vectors are re-normalized. Texts without tokens never reach the
/// endpoint and map to the zero vector.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    endpoint: String,
    api_key: Option<String>,
    dim: usize,
}

impl RemoteEmbedder {
    pub fn new(endpoint: String, api_key: Option<String>, dim: usize) -> Self {
        Self {
            endpoint,
            api_key,
            dim,
        }
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn kind(&self) -> EmbeddingProviderKind {
        EmbeddingProviderKind::RemoteHttp
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        let to_send: Vec<&str> = texts
            .iter()
            .copied()
            .filter(|t| super::tokenize(t).next().is_some())
            .collect();
        let mut fetched = if to_send.is_empty() {
            Vec::new()
        } else {
            let resp: EmbedResponse =
                post_json(&self.endpoint, self.api_key.as_deref(), &EmbedRequest { texts: &to_send })
                    .map_err(|e| match e {
                        HttpError::Transport(m) => EmbeddingError::Transport(m),
                        HttpError::Format(m) => EmbeddingError::Format(m),
                    })?;
            if resp.vectors.len() != to_send.len() {
                return Err(EmbeddingError::Format(format!(
                    "sent {} texts, received {} vectors",
                    to_send.len(),
                    resp.vectors.len()
                )));
            }
            resp.vectors
        }
        .into_iter();

        texts
            .iter()
            .map(|t| {
                if super::tokenize(t).next().is_none() {
                    return Ok(EmbeddingVector::zeros(self.dim));
                }
                let raw = fetched.next().expect("length checked");
                if raw.len() != self.dim {
                    return Err(EmbeddingError::DimMismatch {
                        expected: self.dim,
                        got: raw.len(),
                    });
                }
                Ok(EmbeddingVector::normalized(raw))
            })
            .collect()
    }
}
