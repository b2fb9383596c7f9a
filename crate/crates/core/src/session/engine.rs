use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    Clock, GuiSlot, IdGenerator, Phase, ProviderSnapshot, SessionConfig, SessionError, SessionEvent, SessionState,
    SystemClock, UuidIds,
};
use crate::feature_match::{rank_aspect_guis, AspectGui, FeatureOrigin, FeatureQuery, FeatureStatus};
use crate::llm::LlmProvider;
use crate::ranking::{rank_guis, rerank, RankedGui};
use crate::recommend::{recommend_features, FeatureRecommendation, FewShotLibrary, RecommendConfig, RecommendationContext};
use crate::Retriever;

/// Slot-level operations subject to phase guards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    SubmitGuiQuery,
    SelectGui,
    SubmitFeatureQuery,
    SelectAspectGui,
    RequestRecommendations,
    RespondToRecommendation,
    CompleteSlot,
}

impl Operation {
    pub const ALL: [Operation; 7] = [
        Operation::SubmitGuiQuery,
        Operation::SelectGui,
        Operation::SubmitFeatureQuery,
        Operation::SelectAspectGui,
        Operation::RequestRecommendations,
        Operation::RespondToRecommendation,
        Operation::CompleteSlot,
    ];
}

/// The guard table: phases in which each operation may run.
pub fn allowed_phases(op: Operation) -> &'static [Phase] {
    use Phase::*;
    match op {
        Operation::SubmitGuiQuery => &[AwaitingQuery, BrowsingRanking],
        Operation::SelectGui => &[BrowsingRanking, FeatureElicitation, RecommendationReview],
        Operation::SubmitFeatureQuery => &[BrowsingRanking, FeatureElicitation],
        Operation::SelectAspectGui => &[FeatureElicitation, RecommendationReview],
        Operation::RequestRecommendations => &[BrowsingRanking, FeatureElicitation, RecommendationReview],
        Operation::RespondToRecommendation => &[RecommendationReview],
        Operation::CompleteSlot => &[BrowsingRanking, FeatureElicitation, RecommendationReview],
    }
}

/// A customer's verdict on a feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum FeatureDecision {
    /// Confirm with the aspect-GUI `gui_id` from the feature's aspect ranking.
    SelectAspect { gui_id: String },
    /// Confirm as a textual requirement.
    RelevantNoAspect,
    NotRelevant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSubmission {
    pub feature: FeatureQuery,
    pub aspect_ranking: Vec<AspectGui>,
}

/// Status, chosen aspect and rerank produced by a feature decision.
type Resolution = (FeatureStatus, Option<AspectGui>, Option<Vec<RankedGui>>);

/// Runs session operations against a shared corpus and LLM provider.
///
/// Every operation validates and computes first, then records events, so a
/// failed call leaves the state untouched.
#[derive(Clone)]
pub struct SessionEngine {
    retriever: Arc<Retriever>,
    llm: Arc<dyn LlmProvider>,
    few_shot: Arc<FewShotLibrary>,
    clock: Arc<dyn Clock>,
    ids: Arc<dyn IdGenerator>,
}

impl SessionEngine {
    pub fn new(retriever: Arc<Retriever>, llm: Arc<dyn LlmProvider>) -> Self {
        Self {
            retriever,
            llm,
            few_shot: Arc::new(FewShotLibrary::default()),
            clock: Arc::new(SystemClock),
            ids: Arc::new(UuidIds),
        }
    }

    pub fn with_few_shot(mut self, library: FewShotLibrary) -> Self {
        self.few_shot = Arc::new(library);
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_ids(mut self, ids: Arc<dyn IdGenerator>) -> Self {
        self.ids = ids;
        self
    }

    pub fn retriever(&self) -> &Retriever {
        &self.retriever
    }

    pub fn llm(&self) -> &dyn LlmProvider {
        self.llm.as_ref()
    }

    pub fn create_session(&self, app_name: &str, config: SessionConfig) -> Result<SessionState, SessionError> {
        config.validate()?;
        let providers = ProviderSnapshot {
            embedding_fingerprint: self.retriever.embedder().fingerprint().to_string(),
            embedding_dim: self.retriever.embedder().dim(),
            llm_kind: self.llm.kind(),
        };
        SessionState::new(
            SessionEvent::Created {
                session_id: self.ids.session_id(),
                app_name: app_name.to_string(),
                config,
                providers,
                corpus_hash: self.retriever.corpus().content_hash(),
            },
            self.clock.now(),
        )
    }

    /// Current phase of `slot`. On a session without an active slot, the next
    /// slot index reads as a fresh `awaiting_query` slot.
    pub fn slot_phase(state: &SessionState, slot: usize) -> Result<Phase, SessionError> {
        match state.slots.get(slot) {
            Some(s) => Ok(s.phase),
            None if slot == state.slots.len() && state.active_slot_index.is_none() => Ok(Phase::AwaitingQuery),
            None => Err(SessionError::NotFound(format!("slot {slot} does not exist"))),
        }
    }

    fn guard(state: &SessionState, slot: usize, op: Operation) -> Result<(), SessionError> {
        let phase = Self::slot_phase(state, slot)?;
        if allowed_phases(op).contains(&phase) {
            Ok(())
        } else {
            Err(SessionError::StateConflict(format!(
                "{op:?} is not allowed in phase {} of slot {slot}",
                phase.as_str()
            )))
        }
    }

    pub fn submit_gui_query<'s>(
        &self,
        state: &'s mut SessionState,
        slot: usize,
        nlr_gui: &str,
    ) -> Result<&'s GuiSlot, SessionError> {
        Self::guard(state, slot, Operation::SubmitGuiQuery)?;
        let ranking = rank_guis(&self.retriever, nlr_gui, &state.config.ranking)?;
        if slot == state.slots.len() {
            state.record(SessionEvent::SlotOpened { slot }, self.clock.now())?;
        }
        state.record(
            SessionEvent::GuiQuerySubmitted {
                slot,
                nlr_gui: nlr_gui.to_string(),
                ranking,
            },
            self.clock.now(),
        )?;
        Ok(&state.slots[slot])
    }

    pub fn select_gui<'s>(
        &self,
        state: &'s mut SessionState,
        slot: usize,
        gui_id: &str,
    ) -> Result<&'s GuiSlot, SessionError> {
        Self::guard(state, slot, Operation::SelectGui)?;
        if !state.slots[slot].current_ranking.iter().any(|g| g.gui_id == gui_id) {
            return Err(SessionError::BadRequest(format!("GUI {gui_id:?} is not in the current ranking")));
        }
        state.record(
            SessionEvent::GuiSelected {
                slot,
                gui_id: gui_id.to_string(),
            },
            self.clock.now(),
        )?;
        Ok(&state.slots[slot])
    }

    pub fn submit_feature_query(
        &self,
        state: &mut SessionState,
        slot: usize,
        text: &str,
    ) -> Result<FeatureSubmission, SessionError> {
        Self::guard(state, slot, Operation::SubmitFeatureQuery)?;
        let s = &state.slots[slot];
        if s.current_ranking.is_empty() {
            return Err(SessionError::StateConflict("the slot has no GUI ranking to match against".into()));
        }
        let text = text.trim();
        if text.is_empty() {
            return Err(SessionError::BadRequest("feature text is empty".into()));
        }
        let lowered = text.to_lowercase();
        if let Some(dup) = s
            .features
            .iter()
            .find(|f| f.status != FeatureStatus::Rejected && f.text.to_lowercase() == lowered)
        {
            return Err(SessionError::BadRequest(format!(
                "feature {:?} is already specified as {}",
                text, dup.feature_id
            )));
        }
        let aspect_ranking = rank_aspect_guis(&self.retriever, text, &s.current_ranking, state.config.k_aspect)?;
        let feature = FeatureQuery::new(format!("f{}", state.feature_counter + 1), text, FeatureOrigin::Customer);
        state.record(
            SessionEvent::FeatureSubmitted {
                slot,
                feature: feature.clone(),
                aspect_ranking: aspect_ranking.clone(),
            },
            self.clock.now(),
        )?;
        Ok(FeatureSubmission { feature, aspect_ranking })
    }

    /// Decides an open customer feature: an aspect confirms it and reranks,
    /// `keep_text_only` confirms it as text, neither rejects it.
    pub fn select_aspect_gui<'s>(
        &self,
        state: &'s mut SessionState,
        slot: usize,
        feature_id: &str,
        aspect_gui_id: Option<&str>,
        keep_text_only: bool,
    ) -> Result<&'s GuiSlot, SessionError> {
        Self::guard(state, slot, Operation::SelectAspectGui)?;
        let decision = match (aspect_gui_id, keep_text_only) {
            (Some(_), true) => {
                return Err(SessionError::BadRequest(
                    "choose either an aspect-GUI or keep_text_only, not both".into(),
                ))
            }
            (Some(gui_id), false) => FeatureDecision::SelectAspect {
                gui_id: gui_id.to_string(),
            },
            (None, true) => FeatureDecision::RelevantNoAspect,
            (None, false) => FeatureDecision::NotRelevant,
        };
        let s = &state.slots[slot];
        let feature = s
            .feature(feature_id)
            .ok_or_else(|| SessionError::NotFound(format!("feature {feature_id:?} not found in slot {slot}")))?;
        if feature.status != FeatureStatus::Open {
            return Err(SessionError::StateConflict(format!(
                "feature {feature_id:?} was already decided"
            )));
        }
        let ranking = s.aspect_rankings.get(feature_id).map(Vec::as_slice).unwrap_or_default();
        let (status, aspect, reranked) = self.resolve(s, feature, ranking, &decision, &state.config)?;
        state.record(
            SessionEvent::FeatureDecided {
                slot,
                feature_id: feature_id.to_string(),
                status,
                aspect,
                reranked,
            },
            self.clock.now(),
        )?;
        Ok(&state.slots[slot])
    }

    fn resolve(
        &self,
        s: &GuiSlot,
        feature: &FeatureQuery,
        aspect_ranking: &[AspectGui],
        decision: &FeatureDecision,
        config: &SessionConfig,
    ) -> Result<Resolution, SessionError> {
        Ok(match decision {
            FeatureDecision::SelectAspect { gui_id } => {
                let aspect = aspect_ranking
                    .iter()
                    .find(|a| &a.gui_id == gui_id)
                    .cloned()
                    .ok_or_else(|| {
                        SessionError::BadRequest(format!(
                            "GUI {gui_id:?} is not in the aspect ranking of feature {:?}",
                            feature.feature_id
                        ))
                    })?;
                let mut confirmed: Vec<FeatureQuery> = s
                    .features
                    .iter()
                    .filter(|f| f.status.is_confirmed() && f.feature_id != feature.feature_id)
                    .cloned()
                    .collect();
                confirmed.push(feature.clone());
                let reranked = rerank(&self.retriever, &s.current_ranking, &confirmed, &config.ranking)?;
                (FeatureStatus::ConfirmedWithAspect, Some(aspect), Some(reranked))
            }
            FeatureDecision::RelevantNoAspect => (FeatureStatus::ConfirmedTextOnly, None, None),
            FeatureDecision::NotRelevant => (FeatureStatus::Rejected, None, None),
        })
    }

    pub fn request_recommendations(
        &self,
        state: &mut SessionState,
        slot: usize,
    ) -> Result<Vec<FeatureRecommendation>, SessionError> {
        Self::guard(state, slot, Operation::RequestRecommendations)?;
        let s = &state.slots[slot];
        let selected_id = s
            .selected_gui
            .as_deref()
            .ok_or_else(|| SessionError::StateConflict("select a GUI before requesting recommendations".into()))?;
        let selected = self
            .retriever
            .corpus()
            .get(selected_id)
            .ok_or_else(|| SessionError::NotFound(format!("GUI {selected_id:?} is not in the corpus")))?;
        let cfg = RecommendConfig {
            max_features: state.config.max_features,
            max_tokens: state.config.max_tokens,
            k_aspect: state.config.k_aspect,
        };
        let next = state.feature_counter;
        let recommendations = recommend_features(
            RecommendationContext {
                nlr_gui: &s.nlr_gui,
                features: &s.features,
                selected,
                ranking: &s.current_ranking,
            },
            &self.retriever,
            self.llm.as_ref(),
            &self.few_shot,
            &cfg,
            |i| format!("f{}", next + i as u64 + 1),
        )?;
        state.record(
            SessionEvent::RecommendationsGenerated {
                slot,
                recommendations: recommendations.clone(),
            },
            self.clock.now(),
        )?;
        Ok(recommendations)
    }

    pub fn respond_to_recommendation<'s>(
        &self,
        state: &'s mut SessionState,
        slot: usize,
        feature_id: &str,
        decision: &FeatureDecision,
    ) -> Result<&'s GuiSlot, SessionError> {
        Self::guard(state, slot, Operation::RespondToRecommendation)?;
        let s = &state.slots[slot];
        let rec = s
            .pending_recommendations
            .iter()
            .find(|r| r.feature.feature_id == feature_id)
            .ok_or_else(|| SessionError::NotFound(format!("no pending recommendation {feature_id:?} in slot {slot}")))?;
        let (status, aspect, reranked) = self.resolve(s, &rec.feature, &rec.aspect_ranking, decision, &state.config)?;
        state.record(
            SessionEvent::RecommendationDecided {
                slot,
                feature_id: feature_id.to_string(),
                status,
                aspect,
                reranked,
            },
            self.clock.now(),
        )?;
        Ok(&state.slots[slot])
    }

    /// Closes the slot and opens the next one.
    pub fn complete_slot<'s>(&self, state: &'s mut SessionState, slot: usize) -> Result<&'s SessionState, SessionError> {
        Self::guard(state, slot, Operation::CompleteSlot)?;
        if state.slots[slot].selected_gui.is_none() {
            return Err(SessionError::StateConflict("select a GUI before completing the slot".into()));
        }
        state.record(SessionEvent::SlotCompleted { slot }, self.clock.now())?;
        let next = state.slots.len();
        state.record(SessionEvent::SlotOpened { slot: next }, self.clock.now())?;
        Ok(state)
    }
}
