//! Matching single-feature descriptions against individual GUI components.
//!
//! A component scores the best cosine among its text candidates (S_F). A GUI
//! scores the best component (S_g), and that component is the GUI's
//! aspect for the feature.

use serde::{Deserialize, Serialize};

use crate::corpus::{component_text_candidates, GuiComponent, GuiDocument};
use crate::embedding::{cosine, EmbeddingError};
use crate::ranking::{RankedGui, RankingError};
use crate::{sort_by_score_then_id, Retriever};

pub const DEFAULT_K_ASPECT: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureOrigin {
    Customer,
    Recommended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureStatus {
    Open,
    ConfirmedWithAspect,
    ConfirmedTextOnly,
    Rejected,
}

impl FeatureStatus {
    pub fn is_confirmed(self) -> bool {
        matches!(self, FeatureStatus::ConfirmedWithAspect | FeatureStatus::ConfirmedTextOnly)
    }

    /// Only open features can change status.
    pub fn can_become(self, next: FeatureStatus) -> bool {
        self == FeatureStatus::Open && next != FeatureStatus::Open
    }
}

/// A natural-language description of one GUI feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureQuery {
    pub feature_id: String,
    pub text: String,
    pub origin: FeatureOrigin,
    pub status: FeatureStatus,
}

impl FeatureQuery {
    pub fn new(feature_id: impl Into<String>, text: impl Into<String>, origin: FeatureOrigin) -> Self {
        Self {
            feature_id: feature_id.into(),
            text: text.into(),
            origin,
            status: FeatureStatus::Open,
        }
    }
}

/// A GUI paired with the component that best matches a feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectGui {
    pub gui_id: String,
    /// Absent when no component of the GUI has any text.
    pub component_id: Option<String>,
    /// S_F of the matched component.
    pub score: f64,
    /// S_g of the GUI; equal to `score` for the argmax component.
    pub gui_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuiFeatureScore {
    pub score: f64,
    pub component_id: Option<String>,
}

/// Best cosine between the feature text and any of the component's text
/// candidates; 0 for components without text.
pub fn score_feature_component(
    r: &Retriever,
    feature_text: &str,
    c: &GuiComponent,
) -> Result<f64, EmbeddingError> {
    Ok(best_candidate(r, feature_text, c)?.unwrap_or(0.0))
}

fn best_candidate(r: &Retriever, feature_text: &str, c: &GuiComponent) -> Result<Option<f64>, EmbeddingError> {
    let candidates = component_text_candidates(c);
    if candidates.is_empty() {
        return Ok(None);
    }
    let feat = r.embed(feature_text)?;
    let texts: Vec<&str> = candidates.iter().map(String::as_str).collect();
    let best = r
        .embedder()
        .embed_many(&texts)?
        .iter()
        .map(|v| cosine(&feat, v))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Some(best))
}

/// S_g: the maximum component score over the whole tree, with the first
/// maximal component in document order. Components without text do not
/// participate; a GUI without any text scores 0 with no component.
pub fn score_feature_gui(r: &Retriever, feature_text: &str, g: &GuiDocument) -> Result<GuiFeatureScore, EmbeddingError> {
    let mut best: Option<(f64, &str)> = None;
    for c in g.components() {
        if let Some(s) = best_candidate(r, feature_text, c)? {
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, c.component_id.as_str()));
            }
        }
    }
    Ok(match best {
        Some((score, id)) => GuiFeatureScore {
            score,
            component_id: Some(id.to_string()),
        },
        None => GuiFeatureScore {
            score: 0.0,
            component_id: None,
        },
    })
}

/// Scores a feature against every GUI of `ranked` and returns all aspect-GUIs,
/// best first (ties by `gui_id`), without truncation.
pub fn aspect_guis_for(r: &Retriever, feature_text: &str, ranked: &[RankedGui]) -> Result<Vec<AspectGui>, RankingError> {
    let mut out = Vec::with_capacity(ranked.len());
    for entry in ranked {
        let g = r
            .corpus()
            .get(&entry.gui_id)
            .ok_or_else(|| RankingError::UnknownGui(entry.gui_id.clone()))?;
        let s = score_feature_gui(r, feature_text, g)?;
        out.push(AspectGui {
            gui_id: entry.gui_id.clone(),
            component_id: s.component_id,
            score: s.score,
            gui_score: s.score,
        });
    }
    sort_by_score_then_id(&mut out, |a| (a.gui_score, a.gui_id.as_str()));
    Ok(out)
}

/// The top `k_aspect` aspect-GUIs for a feature among the ranked GUIs.
pub fn rank_aspect_guis(
    r: &Retriever,
    feature_text: &str,
    ranked: &[RankedGui],
    k_aspect: usize,
) -> Result<Vec<AspectGui>, RankingError> {
    let mut all = aspect_guis_for(r, feature_text, ranked)?;
    all.truncate(k_aspect);
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Bounds, ComponentType, CorpusIndex, SCHEMA_VERSION};

    fn comp(id: &str, text: &str, rid: &str) -> GuiComponent {
        GuiComponent {
            component_id: id.into(),
            component_type: ComponentType::Button,
            displayed_text: text.into(),
            resource_id: rid.into(),
            semantic_classes: vec![],
            bounds: Bounds::new(0, 0, 10, 10),
            children: vec![],
        }
    }

    fn gui(id: &str, children: Vec<GuiComponent>) -> GuiDocument {
        let mut root = comp("root", "", "");
        root.component_type = ComponentType::Container;
        root.children = children;
        GuiDocument {
            schema_version: SCHEMA_VERSION,
            gui_id: id.into(),
            app_id: "a".into(),
            screenshot_ref: None,
            language_tag: "en".into(),
            filter_flags: Default::default(),
            s2w_descriptions: vec![],
            root,
        }
    }

    fn ranked(ids: &[&str]) -> Vec<RankedGui> {
        ids.iter()
            .enumerate()
            .map(|(i, id)| RankedGui {
                gui_id: id.to_string(),
                s1: 0.0,
                s2: None,
                ensemble: 0.0,
                rerank_score: None,
                rank: i + 1,
            })
            .collect()
    }

    #[test]
    fn exact_candidate_scores_one() {
        let g = gui("g", vec![comp("b", "sign in button", "")]);
        let r = Retriever::deterministic(CorpusIndex::from_documents([g.clone()]));
        let s = score_feature_component(&r, "sign in button", &g.root.children[0]).unwrap();
        assert!((s - 1.0).abs() < 1e-9);
        let gs = score_feature_gui(&r, "sign in button", &g).unwrap();
        assert!((gs.score - 1.0).abs() < 1e-9);
        assert_eq!(gs.component_id.as_deref(), Some("b"));
    }

    #[test]
    fn textless_component_scores_zero() {
        let r = Retriever::deterministic(CorpusIndex::from_documents([]));
        assert_eq!(score_feature_component(&r, "anything", &comp("c", "", "")).unwrap(), 0.0);
    }

    #[test]
    fn textless_gui_has_no_component() {
        let g = gui("g", vec![comp("x", "", "")]);
        let r = Retriever::deterministic(CorpusIndex::from_documents([g.clone()]));
        assert_eq!(
            score_feature_gui(&r, "x", &g).unwrap(),
            GuiFeatureScore { score: 0.0, component_id: None }
        );
    }

    #[test]
    fn ties_take_first_component_in_document_order() {
        let g = gui("g", vec![comp("first", "map", ""), comp("second", "map", "")]);
        let r = Retriever::deterministic(CorpusIndex::from_documents([g.clone()]));
        assert_eq!(score_feature_gui(&r, "map", &g).unwrap().component_id.as_deref(), Some("first"));
    }

    #[test]
    fn adding_a_component_never_lowers_the_score() {
        let base = gui("g", vec![comp("a", "search", "")]);
        let mut more = base.clone();
        more.root.children.push(comp("b", "filter results", ""));
        let r = Retriever::deterministic(CorpusIndex::from_documents([]));
        let f = "search filter";
        assert!(score_feature_gui(&r, f, &more).unwrap().score >= score_feature_gui(&r, f, &base).unwrap().score);
    }

    #[test]
    fn aspect_ranking_truncates_and_orders() {
        let docs: Vec<_> = (0..30)
            .map(|i| gui(&format!("g{i:02}"), vec![comp("c", &format!("item {i}"), "")]))
            .collect();
        let ids: Vec<String> = docs.iter().map(|d| d.gui_id.clone()).collect();
        let r = Retriever::deterministic(CorpusIndex::from_documents(docs));
        let idrefs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let out = rank_aspect_guis(&r, "item 17", &ranked(&idrefs), 15).unwrap();
        assert_eq!(out.len(), 15);
        assert_eq!(out[0].gui_id, "g17");
        assert!(out.windows(2).all(|w| w[0].gui_score >= w[1].gui_score));
    }

    #[test]
    fn textless_guis_order_by_id() {
        let docs = ["c", "a", "b"].map(|id| gui(id, vec![comp("x", "", "")]));
        let r = Retriever::deterministic(CorpusIndex::from_documents(docs));
        let out = rank_aspect_guis(&r, "feature", &ranked(&["c", "a", "b"]), 15).unwrap();
        let ids: Vec<_> = out.iter().map(|a| a.gui_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert!(out.iter().all(|a| a.gui_score == 0.0 && a.component_id.is_none()));
    }

    #[test]
    fn aspect_ranking_is_stable_under_input_permutation() {
        let docs: Vec<_> = (0..8)
            .map(|i| gui(&format!("g{i}"), vec![comp("c", if i % 2 == 0 { "cart" } else { "cart total" }, "")]))
            .collect();
        let r = Retriever::deterministic(CorpusIndex::from_documents(docs));
        let fwd = ranked(&["g0", "g1", "g2", "g3", "g4", "g5", "g6", "g7"]);
        let mut rev = fwd.clone();
        rev.reverse();
        assert_eq!(
            rank_aspect_guis(&r, "cart", &fwd, 15).unwrap(),
            rank_aspect_guis(&r, "cart", &rev, 15).unwrap()
        );
    }

    #[test]
    fn status_transitions_only_from_open() {
        use FeatureStatus::*;
        assert!(Open.can_become(ConfirmedWithAspect));
        assert!(Open.can_become(Rejected));
        assert!(!Open.can_become(Open));
        assert!(!Rejected.can_become(ConfirmedTextOnly));
        assert!(!ConfirmedTextOnly.can_become(Rejected));
    }
}
