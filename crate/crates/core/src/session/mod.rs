//! The elicitation dialogue as an event-sourced state machine.
//!
//! A session is a sequence of GUI slots. Each slot moves through
//! `awaiting_query → browsing_ranking → feature_elicitation →
//! recommendation_review → done`. Every successful operation appends one or
//! more events to the log, and [`SessionState::replay`] rebuilds the exact
//! state from that log alone. Events carry computed results (rankings,
//! aspect rankings, recommendations) so replay never touches the corpus, the
//! embedder, or the LLM.

mod artifact;
mod engine;
mod store;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use artifact::{
    ArtifactAspect, PreviewStep, PrototypeArtifact, SlotRecord, ARTIFACT_FILE, ARTIFACT_SCHEMA_VERSION, SUMMARY_FILE,
};
pub use engine::{allowed_phases, FeatureDecision, FeatureSubmission, Operation, SessionEngine};
pub use store::SessionStore;

use crate::feature_match::{AspectGui, FeatureQuery, FeatureStatus, DEFAULT_K_ASPECT};
use crate::ranking::{RankedGui, RankingConfig, RankingError};
use crate::recommend::{FeatureRecommendation, RecommendError};
use crate::ErrorCode;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{0}")]
    StateConflict(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error("session store {path}: {reason}")]
    Store { path: String, reason: String },
    #[error("event log cannot be replayed: {0}")]
    Replay(String),
}

impl SessionError {
    pub fn code(&self) -> ErrorCode {
        match self {
            SessionError::StateConflict(_) => ErrorCode::StateConflict,
            SessionError::NotFound(_) => ErrorCode::NotFound,
            SessionError::BadRequest(_) => ErrorCode::BadRequest,
            SessionError::Ranking(e) => e.code(),
            SessionError::Recommend(e) => e.code(),
            SessionError::Store { .. } | SessionError::Replay(_) => ErrorCode::Internal,
        }
    }

    /// Raw provider output, when the failure was an unparseable LLM reply.
    pub fn raw(&self) -> Option<&str> {
        match self {
            SessionError::Recommend(RecommendError::Llm(e)) => e.raw(),
            _ => None,
        }
    }
}

impl From<crate::embedding::EmbeddingError> for SessionError {
    fn from(e: crate::embedding::EmbeddingError) -> Self {
        SessionError::Ranking(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AwaitingQuery,
    BrowsingRanking,
    FeatureElicitation,
    RecommendationReview,
    Done,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::AwaitingQuery,
        Phase::BrowsingRanking,
        Phase::FeatureElicitation,
        Phase::RecommendationReview,
        Phase::Done,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::AwaitingQuery => "awaiting_query",
            Phase::BrowsingRanking => "browsing_ranking",
            Phase::FeatureElicitation => "feature_elicitation",
            Phase::RecommendationReview => "recommendation_review",
            Phase::Done => "done",
        }
    }
}

/// Tunables fixed at session creation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    #[serde(default)]
    pub ranking: RankingConfig,
    #[serde(default = "default_k_aspect")]
    pub k_aspect: usize,
    #[serde(default = "default_max_features")]
    pub max_features: usize,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

fn default_k_aspect() -> usize {
    DEFAULT_K_ASPECT
}

fn default_max_features() -> usize {
    30
}

fn default_max_tokens() -> u32 {
    1024
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            ranking: RankingConfig::default(),
            k_aspect: DEFAULT_K_ASPECT,
            max_features: default_max_features(),
            max_tokens: default_max_tokens(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        self.ranking
            .validate()
            .map_err(|e| SessionError::BadRequest(e.to_string()))?;
        if self.k_aspect == 0 {
            return Err(SessionError::BadRequest("k_aspect must be positive".into()));
        }
        if self.max_features == 0 {
            return Err(SessionError::BadRequest("max_features must be positive".into()));
        }
        Ok(())
    }
}

/// Which providers served the session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderSnapshot {
    pub embedding_fingerprint: String,
    pub embedding_dim: usize,
    pub llm_kind: crate::llm::LlmProviderKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuiSlot {
    pub position: usize,
    pub nlr_gui: String,
    pub phase: Phase,
    pub current_ranking: Vec<RankedGui>,
    pub selected_gui: Option<String>,
    pub features: Vec<FeatureQuery>,
    pub aspect_selections: BTreeMap<String, AspectGui>,
    /// The last aspect ranking shown for each feature; aspect selections
    /// must come from here.
    pub aspect_rankings: BTreeMap<String, Vec<AspectGui>>,
    pub pending_recommendations: Vec<FeatureRecommendation>,
    pub unmatched_requirements: Vec<String>,
}

impl GuiSlot {
    fn new(position: usize) -> Self {
        Self {
            position,
            nlr_gui: String::new(),
            phase: Phase::AwaitingQuery,
            current_ranking: Vec::new(),
            selected_gui: None,
            features: Vec::new(),
            aspect_selections: BTreeMap::new(),
            aspect_rankings: BTreeMap::new(),
            pending_recommendations: Vec::new(),
            unmatched_requirements: Vec::new(),
        }
    }

    pub fn feature(&self, feature_id: &str) -> Option<&FeatureQuery> {
        self.features.iter().find(|f| f.feature_id == feature_id)
    }

    /// F: every confirmed feature, with or without an aspect.
    pub fn confirmed_features(&self) -> Vec<FeatureQuery> {
        self.features.iter().filter(|f| f.status.is_confirmed()).cloned().collect()
    }

    fn decide(
        &mut self,
        feature_id: &str,
        status: FeatureStatus,
        aspect: Option<AspectGui>,
        reranked: Option<Vec<RankedGui>>,
    ) -> Result<(), SessionError> {
        let f = self
            .features
            .iter_mut()
            .find(|f| f.feature_id == feature_id)
            .ok_or_else(|| SessionError::Replay(format!("decision on unknown feature {feature_id}")))?;
        f.status = status;
        if status == FeatureStatus::ConfirmedTextOnly {
            self.unmatched_requirements.push(f.text.clone());
        }
        if let Some(a) = aspect {
            self.aspect_selections.insert(feature_id.to_string(), a);
        }
        if let Some(r) = reranked {
            self.current_ranking = r;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    Created {
        session_id: String,
        app_name: String,
        config: SessionConfig,
        providers: ProviderSnapshot,
        corpus_hash: String,
    },
    SlotOpened {
        slot: usize,
    },
    GuiQuerySubmitted {
        slot: usize,
        nlr_gui: String,
        ranking: Vec<RankedGui>,
    },
    GuiSelected {
        slot: usize,
        gui_id: String,
    },
    FeatureSubmitted {
        slot: usize,
        feature: FeatureQuery,
        aspect_ranking: Vec<AspectGui>,
    },
    FeatureDecided {
        slot: usize,
        feature_id: String,
        status: FeatureStatus,
        aspect: Option<AspectGui>,
        reranked: Option<Vec<RankedGui>>,
    },
    RecommendationsGenerated {
        slot: usize,
        recommendations: Vec<FeatureRecommendation>,
    },
    RecommendationDecided {
        slot: usize,
        feature_id: String,
        status: FeatureStatus,
        aspect: Option<AspectGui>,
        reranked: Option<Vec<RankedGui>>,
    },
    SlotCompleted {
        slot: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub at: DateTime<Utc>,
    pub event: SessionEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub app_name: String,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub config: SessionConfig,
    pub providers: ProviderSnapshot,
    pub corpus_hash: String,
    pub slots: Vec<GuiSlot>,
    pub active_slot_index: Option<usize>,
    /// Number of feature ids handed out so far; ids are `f1`, `f2`, ...
    pub feature_counter: u64,
    pub event_log: Vec<EventRecord>,
}

impl SessionState {
    /// Rebuilds a session from its event log.
    pub fn replay(log: &[EventRecord]) -> Result<Self, SessionError> {
        let (first, rest) = log
            .split_first()
            .ok_or_else(|| SessionError::Replay("empty event log".into()))?;
        let mut state = Self::from_created(first)?;
        for rec in rest {
            state.apply(rec.clone())?;
        }
        Ok(state)
    }

    fn from_created(rec: &EventRecord) -> Result<Self, SessionError> {
        let SessionEvent::Created {
            session_id,
            app_name,
            config,
            providers,
            corpus_hash,
        } = &rec.event
        else {
            return Err(SessionError::Replay("log must start with a created event".into()));
        };
        if rec.seq != 1 {
            return Err(SessionError::Replay(format!("first event has seq {}", rec.seq)));
        }
        Ok(Self {
            session_id: session_id.clone(),
            app_name: app_name.clone(),
            created_at: rec.at,
            updated_at: rec.at,
            config: *config,
            providers: providers.clone(),
            corpus_hash: corpus_hash.clone(),
            slots: Vec::new(),
            active_slot_index: None,
            feature_counter: 0,
            event_log: vec![rec.clone()],
        })
    }

    fn new(event: SessionEvent, at: DateTime<Utc>) -> Result<Self, SessionError> {
        Self::from_created(&EventRecord { seq: 1, at, event })
    }

    /// Appends an event and applies it.
    fn record(&mut self, event: SessionEvent, at: DateTime<Utc>) -> Result<(), SessionError> {
        let seq = self.event_log.len() as u64 + 1;
        self.apply(EventRecord { seq, at, event })
    }

    fn slot_mut(&mut self, slot: usize) -> Result<&mut GuiSlot, SessionError> {
        self.slots
            .get_mut(slot)
            .ok_or_else(|| SessionError::Replay(format!("event refers to missing slot {slot}")))
    }

    fn apply(&mut self, rec: EventRecord) -> Result<(), SessionError> {
        let expected = self.event_log.len() as u64 + 1;
        if rec.seq != expected {
            return Err(SessionError::Replay(format!("expected seq {expected}, found {}", rec.seq)));
        }
        match &rec.event {
            SessionEvent::Created { .. } => {
                return Err(SessionError::Replay("duplicate created event".into()));
            }
            SessionEvent::SlotOpened { slot } => {
                if *slot != self.slots.len() {
                    return Err(SessionError::Replay(format!("slot {slot} opened out of order")));
                }
                self.slots.push(GuiSlot::new(*slot));
                self.active_slot_index = Some(*slot);
            }
            SessionEvent::GuiQuerySubmitted { slot, nlr_gui, ranking } => {
                let s = self.slot_mut(*slot)?;
                s.nlr_gui = nlr_gui.clone();
                s.current_ranking = ranking.clone();
                s.selected_gui = None;
                s.pending_recommendations.clear();
                s.phase = Phase::BrowsingRanking;
            }
            SessionEvent::GuiSelected { slot, gui_id } => {
                self.slot_mut(*slot)?.selected_gui = Some(gui_id.clone());
            }
            SessionEvent::FeatureSubmitted {
                slot,
                feature,
                aspect_ranking,
            } => {
                let s = self.slot_mut(*slot)?;
                s.aspect_rankings.insert(feature.feature_id.clone(), aspect_ranking.clone());
                s.features.push(feature.clone());
                s.phase = Phase::FeatureElicitation;
                self.feature_counter += 1;
            }
            SessionEvent::FeatureDecided {
                slot,
                feature_id,
                status,
                aspect,
                reranked,
            } => {
                self.slot_mut(*slot)?
                    .decide(feature_id, *status, aspect.clone(), reranked.clone())?;
            }
            SessionEvent::RecommendationsGenerated { slot, recommendations } => {
                let s = self.slot_mut(*slot)?;
                s.pending_recommendations = recommendations.clone();
                s.phase = Phase::RecommendationReview;
                self.feature_counter += recommendations.len() as u64;
            }
            SessionEvent::RecommendationDecided {
                slot,
                feature_id,
                status,
                aspect,
                reranked,
            } => {
                let s = self.slot_mut(*slot)?;
                let idx = s
                    .pending_recommendations
                    .iter()
                    .position(|r| &r.feature.feature_id == feature_id)
                    .ok_or_else(|| SessionError::Replay(format!("no pending recommendation {feature_id}")))?;
                let rec = s.pending_recommendations.remove(idx);
                s.aspect_rankings.insert(feature_id.clone(), rec.aspect_ranking);
                s.features.push(rec.feature);
                s.decide(feature_id, *status, aspect.clone(), reranked.clone())?;
            }
            SessionEvent::SlotCompleted { slot } => {
                self.slot_mut(*slot)?.phase = Phase::Done;
                self.active_slot_index = None;
            }
        }
        self.updated_at = rec.at;
        self.event_log.push(rec);
        Ok(())
    }

    pub fn completed_slots(&self) -> impl Iterator<Item = &GuiSlot> {
        self.slots.iter().filter(|s| s.phase == Phase::Done)
    }

    /// The artifact over all completed slots; fails when none is completed.
    pub fn export_artifact(&self) -> Result<PrototypeArtifact, SessionError> {
        PrototypeArtifact::from_session(self)
    }

    /// Hex SHA-256 over the session configuration and provider snapshot.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(&(&self.config, &self.providers)).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Source of event timestamps.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Deterministic clock: `start`, `start + step`, `start + 2·step`, ...
#[derive(Debug)]
pub struct SteppingClock {
    start: DateTime<Utc>,
    step: Duration,
    ticks: AtomicU64,
}

impl SteppingClock {
    pub fn new(start: DateTime<Utc>, step: Duration) -> Self {
        Self {
            start,
            step,
            ticks: AtomicU64::new(0),
        }
    }
}

impl Clock for SteppingClock {
    fn now(&self) -> DateTime<Utc> {
        let n = self.ticks.fetch_add(1, Ordering::SeqCst);
        self.start + self.step * n as i32
    }
}

/// Source of session ids.
pub trait IdGenerator: Send + Sync {
    fn session_id(&self) -> String;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct UuidIds;

impl IdGenerator for UuidIds {
    fn session_id(&self) -> String {
        uuid::Uuid::new_v4().simple().to_string()
    }
}

/// `"{prefix}-1"`, `"{prefix}-2"`, ...
#[derive(Debug)]
pub struct SequentialIds {
    prefix: String,
    next: AtomicU64,
}

impl SequentialIds {
    pub fn new(prefix: impl Into<String>) -> Self {
        Self {
            prefix: prefix.into(),
            next: AtomicU64::new(1),
        }
    }
}

impl IdGenerator for SequentialIds {
    fn session_id(&self) -> String {
        format!("{}-{}", self.prefix, self.next.fetch_add(1, Ordering::SeqCst))
    }
}

/// Checks that a session id is safe to use as a file name.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}
