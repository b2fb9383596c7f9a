//! LLM-driven feature recommendation.
//!
//! The provider proposes features for the selected GUI; each proposal is
//! scored by how well the current top-k GUIs cover it (the mean of its S_g
//! over those GUIs), and recommendations are returned best-covered first.

mod prompt;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use prompt::{
    build_explanation_prompt, build_recommendation_prompt, FewShotExample, FewShotLibrary,
    PromptBundle, NO_FEATURES_MARKER,
};

use crate::corpus::GuiDocument;
use crate::feature_match::{aspect_guis_for, score_feature_gui, AspectGui, FeatureOrigin, FeatureQuery, DEFAULT_K_ASPECT};
use crate::llm::{CompletionRequest, LlmError, LlmProvider, PromptPurpose};
use crate::ranking::{RankedGui, RankingError};
use crate::{ErrorCode, Retriever};

#[derive(Debug, Error)]
pub enum RecommendError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error("feature coverage needs a non-empty ranking")]
    EmptyRanking,
}

impl RecommendError {
    pub fn code(&self) -> ErrorCode {
        match self {
            RecommendError::Llm(e) => e.code(),
            RecommendError::Ranking(e) => e.code(),
            RecommendError::EmptyRanking => ErrorCode::StateConflict,
        }
    }
}

impl From<crate::embedding::EmbeddingError> for RecommendError {
    fn from(e: crate::embedding::EmbeddingError) -> Self {
        RecommendError::Ranking(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecommendation {
    pub feature: FeatureQuery,
    pub explanation: String,
    /// Mean S_g over the GUIs of the ranking used for scoring.
    pub coverage_score: f64,
    pub aspect_ranking: Vec<AspectGui>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecommendConfig {
    pub max_features: usize,
    pub max_tokens: u32,
    pub k_aspect: usize,
}

impl Default for RecommendConfig {
    fn default() -> Self {
        Self {
            max_features: 30,
            max_tokens: 1024,
            k_aspect: DEFAULT_K_ASPECT,
        }
    }
}

/// Everything the recommendation prompt and scoring need from a session slot.
#[derive(Debug, Clone, Copy)]
pub struct RecommendationContext<'a> {
    pub nlr_gui: &'a str,
    pub features: &'a [FeatureQuery],
    pub selected: &'a GuiDocument,
    pub ranking: &'a [RankedGui],
}

fn strip_code_fence(raw: &str) -> &str {
    let t = raw.trim();
    let Some(body) = t.strip_prefix("```") else {
        return t;
    };
    let body = body.split_once('\n').map_or("", |(_, rest)| rest);
    body.trim_end().strip_suffix("```").unwrap_or(body).trim()
}

/// Parses provider output: a JSON array of strings, optionally inside a
/// Markdown code fence. Entries are trimmed, blanks dropped, duplicates
/// removed case-insensitively (first kept), and the list cut to
/// `max_features`. Returned features are open, recommended, and carry
/// provisional ids `p1`, `p2`, ... in provider order.
pub fn parse_feature_list(raw: &str, max_features: usize) -> Result<Vec<FeatureQuery>, LlmError> {
    let format_err = |message: String| LlmError::Format {
        message,
        raw: raw.to_string(),
    };
    let value: serde_json::Value =
        serde_json::from_str(strip_code_fence(raw)).map_err(|e| format_err(format!("not JSON: {e}")))?;
    let items = value
        .as_array()
        .ok_or_else(|| format_err("expected a JSON array of strings".into()))?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for item in items {
        let text = item
            .as_str()
            .ok_or_else(|| format_err(format!("array element {item} is not a string")))?
            .trim();
        if text.is_empty() || !seen.insert(text.to_lowercase()) {
            continue;
        }
        if out.len() == max_features {
            break;
        }
        out.push(FeatureQuery::new(format!("p{}", out.len() + 1), text, FeatureOrigin::Recommended));
    }
    Ok(out)
}

/// S_pf: the mean S_g of the feature over all GUIs in `ranked`.
pub fn score_predicted_feature(r: &Retriever, feature_text: &str, ranked: &[RankedGui]) -> Result<f64, RecommendError> {
    if ranked.is_empty() {
        return Err(RecommendError::EmptyRanking);
    }
    let mut sum = 0.0;
    for entry in ranked {
        let g = r
            .corpus()
            .get(&entry.gui_id)
            .ok_or_else(|| RankingError::UnknownGui(entry.gui_id.clone()))?;
        sum += score_feature_gui(r, feature_text, g)?.score;
    }
    Ok(sum / ranked.len() as f64)
}

/// Fetches an explanation; a missing scripted entry degrades to an empty string.
pub fn explain_feature(
    provider: &dyn LlmProvider,
    feature_text: &str,
    nlr_gui: &str,
    examples: &[FewShotExample],
    max_tokens: u32,
) -> Result<String, LlmError> {
    let prompt = build_explanation_prompt(feature_text, nlr_gui, examples);
    let request = CompletionRequest {
        prompt: prompt.rendered,
        max_tokens,
        purpose: PromptPurpose::Explanation,
        subject: Some(feature_text.to_string()),
    };
    match provider.complete(&request) {
        Ok(text) => Ok(text.trim().to_string()),
        Err(e @ LlmError::NoScriptMatch { .. }) => {
            log::warn!("no explanation for feature {feature_text:?}: {e}");
            Ok(String::new())
        }
        Err(e) => Err(e),
    }
}

/// Runs the full recommendation pipeline for one slot.
///
/// Proposals already present among `ctx.features` (case-insensitive text)
/// are dropped. The result is sorted by coverage, descending, with ties kept
/// in provider order; `feature_id(i)` names the i-th returned feature.
pub fn recommend_features(
    ctx: RecommendationContext<'_>,
    r: &Retriever,
    provider: &dyn LlmProvider,
    examples: &FewShotLibrary,
    cfg: &RecommendConfig,
    feature_id: impl Fn(usize) -> String,
) -> Result<Vec<FeatureRecommendation>, RecommendError> {
    if ctx.ranking.is_empty() {
        return Err(RecommendError::EmptyRanking);
    }
    let prompt = build_recommendation_prompt(ctx.nlr_gui, ctx.features, ctx.selected, &examples.features, cfg.max_features);
    let raw = provider.complete(&CompletionRequest {
        prompt: prompt.rendered,
        max_tokens: cfg.max_tokens,
        purpose: PromptPurpose::FeatureList,
        subject: None,
    })?;
    let known: HashSet<String> = ctx.features.iter().map(|f| f.text.trim().to_lowercase()).collect();
    let proposals: Vec<FeatureQuery> = parse_feature_list(&raw, cfg.max_features)?
        .into_iter()
        .filter(|f| !known.contains(&f.text.to_lowercase()))
        .collect();

    let mut recs = Vec::with_capacity(proposals.len());
    for feature in proposals {
        let mut aspects = aspect_guis_for(r, &feature.text, ctx.ranking)?;
        let coverage = aspects.iter().map(|a| a.gui_score).sum::<f64>() / aspects.len() as f64;
        aspects.truncate(cfg.k_aspect);
        recs.push(FeatureRecommendation {
            feature,
            explanation: String::new(),
            coverage_score: coverage,
            aspect_ranking: aspects,
        });
    }
    // stable: equal coverage keeps provider order
    recs.sort_by(|a, b| (b.coverage_score + 0.0).total_cmp(&(a.coverage_score + 0.0)));

    for (i, rec) in recs.iter_mut().enumerate() {
        rec.explanation = explain_feature(provider, &rec.feature.text, ctx.nlr_gui, &examples.explanations, cfg.max_tokens)?;
        rec.feature.feature_id = feature_id(i);
    }
    Ok(recs)
}
