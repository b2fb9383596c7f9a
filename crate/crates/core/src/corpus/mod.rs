//! GUI corpus: loading, validation, filtering and text extraction.

mod filter;
mod load;
pub mod model;
pub mod text;

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use filter::{filter_corpus, FilterReport, FilterRule, FilterRules, Removal};
pub use load::{load_corpus, write_corpus, CorpusManifest, MANIFEST_FILE};
pub use model::{
    Bounds, ComponentType, FilterFlag, GuiComponent, GuiDocument, MAX_DESCRIPTIONS, SCHEMA_VERSION,
};
pub use text::{
    component_text_candidates, flatten_hierarchy_for_prompt, gui_full_text, split_resource_id,
};

use crate::ErrorCode;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus source {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus manifest {path} is invalid: {reason}")]
    Manifest { path: String, reason: String },
    #[error("cannot write corpus to {path}: {reason}")]
    Write { path: String, reason: String },
    #[error("invalid filter configuration: {0}")]
    Config(String),
}

impl CorpusError {
    pub fn code(&self) -> ErrorCode {
        match self {
            CorpusError::Config(_) => ErrorCode::BadRequest,
            CorpusError::Unreadable { .. } | CorpusError::Manifest { .. } => ErrorCode::NotFound,
            CorpusError::Write { .. } => ErrorCode::Internal,
        }
    }
}

/// A record that failed to parse or validate during [`load_corpus`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    /// File (or `archive:line`) the record came from.
    pub source: String,
    pub gui_id: Option<String>,
    pub reason: String,
}

/// The loaded (and possibly filtered) corpus.
///
/// Immutable once built; share it behind an `Arc`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub documents: BTreeMap<String, GuiDocument>,
    pub count_total: usize,
    pub count_filtered: usize,
    pub build_timestamp: DateTime<Utc>,
    #[serde(default)]
    pub load_errors: Vec<RecordError>,
}

/// Equality ignores `build_timestamp`.
impl PartialEq for CorpusIndex {
    fn eq(&self, other: &Self) -> bool {
        self.documents == other.documents
            && self.count_total == other.count_total
            && self.count_filtered == other.count_filtered
            && self.load_errors == other.load_errors
    }
}

impl CorpusIndex {
    pub fn from_documents(docs: impl IntoIterator<Item = GuiDocument>) -> Self {
        let documents: BTreeMap<_, _> = docs.into_iter().map(|d| (d.gui_id.clone(), d)).collect();
        Self {
            count_total: documents.len(),
            count_filtered: 0,
            documents,
            build_timestamp: Utc::now(),
            load_errors: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, gui_id: &str) -> Option<&GuiDocument> {
        self.documents.get(gui_id)
    }

    /// Documents in ascending `gui_id` order.
    pub fn iter(&self) -> impl Iterator<Item = &GuiDocument> {
        self.documents.values()
    }

    /// SHA-256 over the canonical JSON of all documents, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for doc in self.documents.values() {
            let bytes = serde_json::to_vec(doc).expect("documents serialize");
            hasher.update((bytes.len() as u64).to_le_bytes());
            hasher.update(&bytes);
        }
        hex::encode(hasher.finalize())
    }
}
