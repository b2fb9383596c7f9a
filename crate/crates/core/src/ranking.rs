//! Query-to-GUI scoring, the ensemble ranking, and feedback reranking.
//!
//! - S₁: cosine between the query and the GUI's extracted text
//! - S₂: mean cosine between the query and each crowd description
//! - ensemble: `α·S₁ + (1−α)·S₂`, or `S₁` when the GUI has no descriptions
//! - rerank: `β·ensemble + (1−β)·mean_f S_g(f, GUI)` over confirmed features

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::GuiDocument;
use crate::embedding::{cosine, EmbeddingError};
use crate::feature_match::{score_feature_gui, FeatureQuery};
use crate::{sort_by_score_then_id, ErrorCode, Retriever};

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("invalid ranking configuration: {0}")]
    Config(String),
    #[error("GUI {0:?} is not in the corpus")]
    UnknownGui(String),
    #[error("rerank needs at least one confirmed feature")]
    NoConfirmedFeatures,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

impl RankingError {
    pub fn code(&self) -> ErrorCode {
        match self {
            RankingError::EmptyQuery | RankingError::Config(_) => ErrorCode::BadRequest,
            RankingError::UnknownGui(_) => ErrorCode::NotFound,
            RankingError::NoConfirmedFeatures => ErrorCode::Internal,
            RankingError::Embedding(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingConfig {
    /// Ensemble weight on S₁.
    #[serde(default = "default_half")]
    pub alpha: f64,
    /// Rerank weight on the query (ensemble) score.
    #[serde(default = "default_half")]
    pub beta: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
}

fn default_half() -> f64 {
    0.5
}

fn default_top_k() -> usize {
    30
}

impl Default for RankingConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            top_k: 30,
        }
    }
}

impl RankingConfig {
    pub fn validate(&self) -> Result<(), RankingError> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(RankingError::Config(format!("{name}={v} outside [0, 1]")));
            }
        }
        if self.top_k == 0 {
            return Err(RankingError::Config("top_k must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedGui {
    pub gui_id: String,
    pub s1: f64,
    pub s2: Option<f64>,
    pub ensemble: f64,
    pub rerank_score: Option<f64>,
    pub rank: usize,
}

impl RankedGui {
    /// The score the current ordering was derived from.
    pub fn effective_score(&self) -> f64 {
        self.rerank_score.unwrap_or(self.ensemble)
    }
}

pub fn score_s1(r: &Retriever, query: &str, g: &GuiDocument) -> Result<f64, EmbeddingError> {
    let q = r.embed(query)?;
    let g = r.full_text_vector(g)?;
    Ok(cosine(&q, &g))
}

/// Mean cosine over the available descriptions; `None` without any.
pub fn score_s2(r: &Retriever, query: &str, g: &GuiDocument) -> Result<Option<f64>, EmbeddingError> {
    let descriptions = r.description_vectors(g)?;
    if descriptions.is_empty() {
        return Ok(None);
    }
    let q = r.embed(query)?;
    let sum: f64 = descriptions.iter().map(|d| cosine(&q, d)).sum();
    Ok(Some(sum / descriptions.len() as f64))
}

/// Convex combination of S₁ and S₂; falls back to S₁ alone when S₂ is absent.
pub fn combine_ensemble(alpha: f64, s1: f64, s2: Option<f64>) -> f64 {
    match s2 {
        Some(s2) => alpha * s1 + (1.0 - alpha) * s2,
        None => s1,
    }
}

pub fn ensemble_score(
    r: &Retriever,
    query: &str,
    g: &GuiDocument,
    cfg: &RankingConfig,
) -> Result<f64, EmbeddingError> {
    Ok(combine_ensemble(cfg.alpha, score_s1(r, query, g)?, score_s2(r, query, g)?))
}

/// `β·S + (1−β)·mean(S_g)`.
pub fn combine_rerank(beta: f64, ensemble: f64, feature_scores: &[f64]) -> f64 {
    let mean = feature_scores.iter().sum::<f64>() / feature_scores.len() as f64;
    beta * ensemble + (1.0 - beta) * mean
}

fn assign_ranks(list: &mut [RankedGui]) {
    sort_by_score_then_id(list, |g| (g.effective_score(), g.gui_id.as_str()));
    for (i, g) in list.iter_mut().enumerate() {
        g.rank = i + 1;
    }
}

/// Scores every corpus GUI and returns the top `cfg.top_k`, best first.
/// Ties are broken by ascending `gui_id`.
pub fn rank_guis(r: &Retriever, query: &str, cfg: &RankingConfig) -> Result<Vec<RankedGui>, RankingError> {
    cfg.validate()?;
    if query.trim().is_empty() {
        return Err(RankingError::EmptyQuery);
    }
    let mut ranked = r
        .corpus()
        .iter()
        .map(|g| {
            let s1 = score_s1(r, query, g)?;
            let s2 = score_s2(r, query, g)?;
            Ok(RankedGui {
                gui_id: g.gui_id.clone(),
                s1,
                s2,
                ensemble: combine_ensemble(cfg.alpha, s1, s2),
                rerank_score: None,
                rank: 0,
            })
        })
        .collect::<Result<Vec<_>, EmbeddingError>>()?;
    assign_ranks(&mut ranked);
    ranked.truncate(cfg.top_k);
    Ok(ranked)
}

/// Reorders an existing ranking using confirmed features.
///
/// Only the GUIs in `ranked` are considered. The query score is the stored
/// ensemble score, so reranking an already reranked list is stable.
pub fn rerank(
    r: &Retriever,
    ranked: &[RankedGui],
    confirmed: &[FeatureQuery],
    cfg: &RankingConfig,
) -> Result<Vec<RankedGui>, RankingError> {
    cfg.validate()?;
    if confirmed.is_empty() {
        return Err(RankingError::NoConfirmedFeatures);
    }
    let mut out = Vec::with_capacity(ranked.len());
    for entry in ranked {
        let g = r
            .corpus()
            .get(&entry.gui_id)
            .ok_or_else(|| RankingError::UnknownGui(entry.gui_id.clone()))?;
        let feature_scores = confirmed
            .iter()
            .map(|f| score_feature_gui(r, &f.text, g).map(|s| s.score))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(RankedGui {
            rerank_score: Some(combine_rerank(cfg.beta, entry.ensemble, &feature_scores)),
            ..entry.clone()
        });
    }
    assign_ranks(&mut out);
    Ok(out)
}
