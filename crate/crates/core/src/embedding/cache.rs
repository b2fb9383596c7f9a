//! Precomputed vectors for every GUI text and crowd description.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Embedder, EmbeddingError, EmbeddingVector};
use crate::corpus::{gui_full_text, CorpusIndex};

pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    FullText,
    Description,
}

type Key = (String, ArtifactKind, usize);

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    text_hash: String,
    vector: Arc<EmbeddingVector>,
}

#[derive(Serialize, Deserialize)]
struct StoredEntry {
    gui_id: String,
    kind: ArtifactKind,
    i: usize,
    text_hash: String,
    vector: EmbeddingVector,
}

#[derive(Serialize, Deserialize)]
struct StoredCache {
    version: u32,
    config_hash: String,
    dim: usize,
    corpus_hash: String,
    entries: Vec<StoredEntry>,
}

/// Vectors keyed by `(gui_id, kind, i)` for one provider configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEmbeddings {
    config_hash: String,
    dim: usize,
    corpus_hash: String,
    entries: BTreeMap<Key, Entry>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedStats {
    pub computed: usize,
    pub reused: usize,
}

fn text_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl CorpusEmbeddings {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn corpus_hash(&self) -> &str {
        &self.corpus_hash
    }

    pub fn get(&self, gui_id: &str, kind: ArtifactKind, i: usize) -> Option<&Arc<EmbeddingVector>> {
        self.entries
            .get(&(gui_id.to_string(), kind, i))
            .map(|e| &e.vector)
    }

    pub fn full_text(&self, gui_id: &str) -> Option<&Arc<EmbeddingVector>> {
        self.get(gui_id, ArtifactKind::FullText, 0)
    }

    /// Description vectors of one GUI in description order.
    pub fn descriptions(&self, gui_id: &str) -> Vec<&Arc<EmbeddingVector>> {
        self.entries
            .range((gui_id.to_string(), ArtifactKind::Description, 0)..)
            .take_while(|((g, k, _), _)| g == gui_id && *k == ArtifactKind::Description)
            .map(|(_, e)| &e.vector)
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), EmbeddingError> {
        let stored = StoredCache {
            version: CACHE_VERSION,
            config_hash: self.config_hash.clone(),
            dim: self.dim,
            corpus_hash: self.corpus_hash.clone(),
            entries: self
                .entries
                .iter()
                .map(|((gui_id, kind, i), e)| StoredEntry {
                    gui_id: gui_id.clone(),
                    kind: *kind,
                    i: *i,
                    text_hash: e.text_hash.clone(),
                    vector: (*e.vector).clone(),
                })
                .collect(),
        };
        let body = serde_json::to_vec(&stored).expect("cache serializes");
        fs::write(path, body).map_err(|e| EmbeddingError::Cache {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        let bad = |reason: String| EmbeddingError::Cache {
            path: path.display().to_string(),
            reason,
        };
        let raw = fs::read(path).map_err(|e| bad(e.to_string()))?;
        let stored: StoredCache = serde_json::from_slice(&raw).map_err(|e| bad(e.to_string()))?;
        if stored.version != CACHE_VERSION {
            return Err(bad(format!("unsupported cache version {}", stored.version)));
        }
        Ok(Self {
            config_hash: stored.config_hash,
            dim: stored.dim,
            corpus_hash: stored.corpus_hash,
            entries: stored
                .entries
                .into_iter()
                .map(|e| {
                    (
                        (e.gui_id, e.kind, e.i),
                        Entry {
                            text_hash: e.text_hash,
                            vector: Arc::new(e.vector),
                        },
                    )
                })
                .collect(),
        })
    }
}

/// Embeds every GUI full text and crowd description in `index`.
///
/// Entries from `previous` are reused when the provider fingerprint and the
/// source text are unchanged, so re-running on an unchanged corpus computes
/// nothing. A different provider configuration recomputes everything.
pub fn embed_corpus(
    index: &CorpusIndex,
    embedder: &Embedder,
    previous: Option<&CorpusEmbeddings>,
) -> Result<(CorpusEmbeddings, EmbedStats), EmbeddingError> {
    let previous = previous.filter(|p| p.config_hash == embedder.fingerprint());
    let corpus_hash = index.content_hash();
    if let Some(p) = previous {
        if p.corpus_hash == corpus_hash {
            let stats = EmbedStats {
                computed: 0,
                reused: p.len(),
            };
            return Ok((p.clone(), stats));
        }
    }

    let mut wanted: Vec<(Key, String)> = Vec::new();
    for doc in index.iter() {
        wanted.push(((doc.gui_id.clone(), ArtifactKind::FullText, 0), gui_full_text(doc)));
        for (i, d) in doc.s2w_descriptions.iter().enumerate() {
            wanted.push(((doc.gui_id.clone(), ArtifactKind::Description, i), d.clone()));
        }
    }

    let mut stats = EmbedStats::default();
    let mut entries = BTreeMap::new();
    let mut missing: Vec<(Key, String, String)> = Vec::new();
    for (key, text) in wanted {
        let hash = text_hash(&text);
        match previous.and_then(|p| p.entries.get(&key)).filter(|e| e.text_hash == hash) {
            Some(e) => {
                stats.reused += 1;
                entries.insert(key, e.clone());
            }
            None => missing.push((key, text, hash)),
        }
    }

    let texts: Vec<&str> = missing.iter().map(|(_, t, _)| t.as_str()).collect();
    let vectors = embedder.embed_many(&texts)?;
    stats.computed = missing.len();
    for ((key, _, text_hash), vector) in missing.into_iter().zip(vectors) {
        entries.insert(key, Entry { text_hash, vector });
    }

    Ok((
        CorpusEmbeddings {
            config_hash: embedder.fingerprint().to_string(),
            dim: embedder.dim(),
            corpus_hash,
            entries,
        },
        stats,
    ))
}
