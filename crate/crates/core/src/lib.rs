//! Requirements self-elicitation over a GUI corpus.
//!
//! The crate ranks corpus GUIs against a natural-language description of a
//! screen, matches single-feature descriptions to individual GUI components,
//! asks a pluggable LLM for further features, reranks GUIs once the customer
//! confirms features, and exports the resulting prototype specification.
//!
//! Module map:
//! - [`corpus`]: GUI records, loading, filtering, text extraction
//! - [`embedding`]: text embeddings, cosine similarity, corpus vector cache
//! - [`ranking`]: query scores, the ensemble ranking and feedback reranking
//! - [`feature_match`]: component-level feature matching and aspect-GUIs
//! - [`llm`]: LLM providers (scripted and HTTP)
//! - [`recommend`]: recommendation prompts and coverage-scored recommendations
//! - [`session`]: the event-sourced elicitation dialogue and artifact export
//! - [`eval`]: IR metrics and the offline evaluation harness

pub mod corpus;
pub mod embedding;
pub mod eval;
pub mod feature_match;
mod http;
pub mod llm;
pub mod ranking;
pub mod recommend;
pub mod retriever;
pub mod session;

use serde::{Deserialize, Serialize};

pub use retriever::Retriever;

/// Coarse error classification shared by every module and surfaced by the
/// HTTP API. Each module error maps to exactly one code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    NotFound,
    StateConflict,
    ProviderUnavailable,
    ProviderFormat,
    Internal,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::BadRequest => "bad_request",
            ErrorCode::NotFound => "not_found",
            ErrorCode::StateConflict => "state_conflict",
            ErrorCode::ProviderUnavailable => "provider_unavailable",
            ErrorCode::ProviderFormat => "provider_format",
            ErrorCode::Internal => "internal",
        }
    }
}

/// Sorts scored items by descending score, then ascending id.
pub(crate) fn sort_by_score_then_id<T>(items: &mut [T], key: impl Fn(&T) -> (f64, &str)) {
    items.sort_by(|a, b| {
        let (sa, ia) = key(a);
        let (sb, ib) = key(b);
        // `+ 0.0` folds -0.0 into 0.0 so signed zeros tie
        (sb + 0.0).total_cmp(&(sa + 0.0)).then_with(|| ia.cmp(ib))
    });
}
