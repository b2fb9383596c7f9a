mod common;

use common::{deterministic_engine, fixture_corpus};
use guielicit_core::feature_match::FeatureStatus;
use guielicit_core::ranking::{rerank, RankingConfig};
use guielicit_core::session::{
    FeatureDecision, Phase, SessionConfig, SessionEngine, SessionState, SessionStore, ARTIFACT_FILE, SUMMARY_FILE,
};
use guielicit_core::ErrorCode;

const SHOP_QUERY: &str = "shopping product detail page with price, add to cart button and customer reviews";

fn engine() -> SessionEngine {
    deterministic_engine(fixture_corpus())
}

fn browsing(engine: &SessionEngine) -> SessionState {
    let mut s = engine.create_session("Shop", SessionConfig::default()).unwrap();
    engine.submit_gui_query(&mut s, 0, SHOP_QUERY).unwrap();
    s
}

fn selected(engine: &SessionEngine) -> SessionState {
    let mut s = browsing(engine);
    let top = s.slots[0].current_ranking[0].gui_id.clone();
    engine.select_gui(&mut s, 0, &top).unwrap();
    s
}

fn assert_replays(s: &SessionState) {
    assert_eq!(&SessionState::replay(&s.event_log).unwrap(), s);
}

#[test]
fn create_starts_empty() {
    let e = engine();
    let a = e.create_session("App", SessionConfig::default()).unwrap();
    let b = e.create_session("App", SessionConfig::default()).unwrap();
    assert!(a.slots.is_empty());
    assert_eq!(a.active_slot_index, None);
    assert_ne!(a.session_id, b.session_id);
    assert_replays(&a);
}

#[test]
fn create_rejects_out_of_range_beta() {
    let mut cfg = SessionConfig::default();
    cfg.ranking.beta = 1.5;
    let err = engine().create_session("App", cfg).unwrap_err();
    assert_eq!(err.code(), ErrorCode::BadRequest);
}

#[test]
fn query_ranks_top_k() {
    let e = engine();
    let s = browsing(&e);
    let slot = &s.slots[0];
    assert_eq!(slot.current_ranking.len(), 30);
    assert_eq!(slot.phase, Phase::BrowsingRanking);
    assert_eq!(s.active_slot_index, Some(0));
    assert_replays(&s);
}

#[test]
fn empty_query_is_bad_request_and_changes_nothing() {
    let e = engine();
    let mut s = e.create_session("App", SessionConfig::default()).unwrap();
    let before = s.clone();
    let err = e.submit_gui_query(&mut s, 0, "   ").unwrap_err();
    assert_eq!(err.code(), ErrorCode::BadRequest);
    assert_eq!(s, before);
}

#[test]
fn requery_clears_selection_and_is_closed_after_features() {
    let e = engine();
    let mut s = selected(&e);
    let sub = e.submit_feature_query(&mut s, 0, "checkout button").unwrap();
    e.select_aspect_gui(&mut s, 0, &sub.feature.feature_id, None, true).unwrap();
    let err = e.submit_gui_query(&mut s, 0, "music player").unwrap_err();
    assert_eq!(err.code(), ErrorCode::StateConflict);

    let mut s = selected(&e);
    e.submit_gui_query(&mut s, 0, "music player with shuffle").unwrap();
    assert_eq!(s.slots[0].selected_gui, None);
    assert_eq!(s.slots[0].nlr_gui, "music player with shuffle");
    assert_replays(&s);
}

#[test]
fn select_gui_must_come_from_ranking() {
    let e = engine();
    let mut s = browsing(&e);
    let before = s.clone();
    let err = e.select_gui(&mut s, 0, "no_such_gui").unwrap_err();
    assert_eq!(err.code(), ErrorCode::BadRequest);
    assert_eq!(s, before);

    let first = s.slots[0].current_ranking[0].gui_id.clone();
    let second = s.slots[0].current_ranking[1].gui_id.clone();
    e.select_gui(&mut s, 0, &first).unwrap();
    e.select_gui(&mut s, 0, &second).unwrap();
    assert_eq!(s.slots[0].selected_gui.as_deref(), Some(second.as_str()));
}

#[test]
fn feature_query_returns_bounded_aspect_ranking() {
    let e = engine();
    let mut s = browsing(&e);
    let sub = e.submit_feature_query(&mut s, 0, "add to cart button").unwrap();
    assert!(sub.aspect_ranking.len() <= 15);
    assert_eq!(sub.feature.status, FeatureStatus::Open);
    assert_eq!(sub.feature.feature_id, "f1");
    assert_eq!(s.slots[0].phase, Phase::FeatureElicitation);
    assert!(sub.aspect_ranking.windows(2).all(|w| w[0].gui_score >= w[1].gui_score));
}

#[test]
fn duplicate_feature_is_rejected() {
    let e = engine();
    let mut s = browsing(&e);
    e.submit_feature_query(&mut s, 0, "Add to cart button").unwrap();
    let before = s.clone();
    let err = e.submit_feature_query(&mut s, 0, "add to CART button").unwrap_err();
    assert_eq!(err.code(), ErrorCode::BadRequest);
    assert_eq!(s, before);
}

#[test]
fn aspect_selection_confirms_and_reranks() {
    let e = engine();
    let mut s = browsing(&e);
    let sub = e.submit_feature_query(&mut s, 0, "add to cart button").unwrap();
    let before_ranking = s.slots[0].current_ranking.clone();
    let aspect = sub.aspect_ranking[0].clone();
    e.select_aspect_gui(&mut s, 0, "f1", Some(&aspect.gui_id), false).unwrap();
    let slot = &s.slots[0];
    assert_eq!(slot.features[0].status, FeatureStatus::ConfirmedWithAspect);
    assert_eq!(slot.aspect_selections["f1"], aspect);
    let expected = rerank(e.retriever(), &before_ranking, &slot.confirmed_features(), &RankingConfig::default()).unwrap();
    assert_eq!(slot.current_ranking, expected);
    assert!(slot.current_ranking.iter().all(|g| g.rerank_score.is_some()));
    assert_replays(&s);
}

#[test]
fn stale_or_conflicting_decisions_fail() {
    let e = engine();
    let mut s = browsing(&e);
    e.submit_feature_query(&mut s, 0, "add to cart button").unwrap();
    let before = s.clone();
    let stale = e.select_aspect_gui(&mut s, 0, "f1", Some("not_in_ranking"), false).unwrap_err();
    assert_eq!(stale.code(), ErrorCode::BadRequest);
    let both = e.select_aspect_gui(&mut s, 0, "f1", Some("shop_detail"), true).unwrap_err();
    assert_eq!(both.code(), ErrorCode::BadRequest);
    let unknown = e.select_aspect_gui(&mut s, 0, "f99", None, true).unwrap_err();
    assert_eq!(unknown.code(), ErrorCode::NotFound);
    assert_eq!(s, before);

    e.select_aspect_gui(&mut s, 0, "f1", None, false).unwrap();
    let again = e.select_aspect_gui(&mut s, 0, "f1", None, true).unwrap_err();
    assert_eq!(again.code(), ErrorCode::StateConflict);
}

#[test]
fn text_only_and_rejected_features() {
    let e = engine();
    let mut s = browsing(&e);
    e.submit_feature_query(&mut s, 0, "gift wrap option").unwrap();
    e.submit_feature_query(&mut s, 0, "dark theme").unwrap();
    e.select_aspect_gui(&mut s, 0, "f1", None, true).unwrap();
    e.select_aspect_gui(&mut s, 0, "f2", None, false).unwrap();
    let slot = &s.slots[0];
    assert_eq!(slot.unmatched_requirements, ["gift wrap option"]);
    assert_eq!(slot.features[1].status, FeatureStatus::Rejected);
    let confirmed: Vec<_> = slot.confirmed_features().into_iter().map(|f| f.text).collect();
    assert_eq!(confirmed, ["gift wrap option"]);
    // a rejected text may be entered again
    e.submit_feature_query(&mut s, 0, "dark theme").unwrap();
}

#[test]
fn recommendations_need_a_selected_gui() {
    let e = engine();
    let mut s = browsing(&e);
    let before = s.clone();
    let err = e.request_recommendations(&mut s, 0).unwrap_err();
    assert_eq!(err.code(), ErrorCode::StateConflict);
    assert_eq!(s, before);
}

#[test]
fn recommendations_are_scripted_and_replaced() {
    let e = engine();
    let mut s = selected(&e);
    let first = e.request_recommendations(&mut s, 0).unwrap();
    assert!(!first.is_empty());
    assert_eq!(s.slots[0].phase, Phase::RecommendationReview);
    assert!(first.windows(2).all(|w| w[0].coverage_score >= w[1].coverage_score));
    assert!(first.iter().all(|r| !r.explanation.is_empty()));

    let second = e.request_recommendations(&mut s, 0).unwrap();
    let texts = |v: &[guielicit_core::recommend::FeatureRecommendation]| {
        v.iter().map(|r| r.feature.text.clone()).collect::<Vec<_>>()
    };
    assert_eq!(texts(&first), texts(&second));
    assert_eq!(s.slots[0].pending_recommendations, second);
    assert_ne!(first[0].feature.feature_id, second[0].feature.feature_id);
    assert_replays(&s);
}

#[test]
fn recommendations_skip_known_features() {
    let e = engine();
    let mut s = selected(&e);
    e.submit_feature_query(&mut s, 0, "customer reviews").unwrap();
    let recs = e.request_recommendations(&mut s, 0).unwrap();
    assert!(recs.iter().all(|r| r.feature.text != "customer reviews"));
}

#[test]
fn recommendation_decisions() {
    let e = engine();
    let mut s = selected(&e);
    let recs = e.request_recommendations(&mut s, 0).unwrap();
    let ranking_before = s.slots[0].current_ranking.clone();

    e.respond_to_recommendation(&mut s, 0, &recs[2].feature.feature_id, &FeatureDecision::NotRelevant)
        .unwrap();
    assert_eq!(s.slots[0].current_ranking, ranking_before);

    e.respond_to_recommendation(&mut s, 0, &recs[1].feature.feature_id, &FeatureDecision::RelevantNoAspect)
        .unwrap();
    assert_eq!(s.slots[0].unmatched_requirements.len(), 1);

    let aspect = recs[0].aspect_ranking[0].gui_id.clone();
    e.respond_to_recommendation(
        &mut s,
        0,
        &recs[0].feature.feature_id,
        &FeatureDecision::SelectAspect { gui_id: aspect },
    )
    .unwrap();
    let slot = &s.slots[0];
    assert!(slot.current_ranking.iter().all(|g| g.rerank_score.is_some()));
    assert_eq!(slot.pending_recommendations.len(), recs.len() - 3);
    assert_eq!(slot.features.len(), 3);

    let gone = e
        .respond_to_recommendation(&mut s, 0, &recs[0].feature.feature_id, &FeatureDecision::NotRelevant)
        .unwrap_err();
    assert_eq!(gone.code(), ErrorCode::NotFound);
    assert_replays(&s);
}

#[test]
fn complete_slot_opens_next() {
    let e = engine();
    let mut s = browsing(&e);
    let err = e.complete_slot(&mut s, 0).unwrap_err();
    assert_eq!(err.code(), ErrorCode::StateConflict);

    let mut s = selected(&e);
    e.complete_slot(&mut s, 0).unwrap();
    assert_eq!(s.slots[0].phase, Phase::Done);
    assert_eq!(s.slots.len(), 2);
    assert_eq!(s.active_slot_index, Some(1));
    assert_eq!(s.slots[1].phase, Phase::AwaitingQuery);

    let done = e.submit_gui_query(&mut s, 0, "anything").unwrap_err();
    assert_eq!(done.code(), ErrorCode::StateConflict);
    let missing = e.submit_gui_query(&mut s, 5, "anything").unwrap_err();
    assert_eq!(missing.code(), ErrorCode::NotFound);
}

#[test]
fn three_slots_give_three_preview_steps() {
    let e = engine();
    let mut s = e.create_session("App", SessionConfig::default()).unwrap();
    for (i, q) in ["shopping cart", "weather forecast", "music player"].iter().enumerate() {
        e.submit_gui_query(&mut s, i, q).unwrap();
        let top = s.slots[i].current_ranking[0].gui_id.clone();
        e.select_gui(&mut s, i, &top).unwrap();
        e.complete_slot(&mut s, i).unwrap();
    }
    let artifact = s.export_artifact().unwrap();
    assert_eq!(artifact.preview_sequence.len(), 3);
    assert_eq!(artifact.slots.len(), 3);
    assert_replays(&s);
}

#[test]
fn export_requires_a_completed_slot() {
    let e = engine();
    let s = selected(&e);
    assert_eq!(s.export_artifact().unwrap_err().code(), ErrorCode::StateConflict);
}

#[test]
fn export_partitions_confirmed_features() {
    let e = engine();
    let mut s = browsing(&e);
    for text in ["add to cart button", "customer reviews", "gift wrap option"] {
        e.submit_feature_query(&mut s, 0, text).unwrap();
    }
    for fid in ["f1", "f2"] {
        let top = s.slots[0].aspect_rankings[fid][0].gui_id.clone();
        e.select_aspect_gui(&mut s, 0, fid, Some(&top), false).unwrap();
    }
    e.select_aspect_gui(&mut s, 0, "f3", None, true).unwrap();
    let top = s.slots[0].current_ranking[0].gui_id.clone();
    e.select_gui(&mut s, 0, &top).unwrap();
    e.complete_slot(&mut s, 0).unwrap();

    let a = s.export_artifact().unwrap();
    assert_eq!(a.slots[0].aspect_guis.len(), 2);
    assert_eq!(a.slots[0].textual_requirements, ["gift wrap option"]);
    assert_eq!(a.to_json(), s.export_artifact().unwrap().to_json());

    let dir = tempfile::tempdir().unwrap();
    a.write_to(dir.path()).unwrap();
    let json = std::fs::read_to_string(dir.path().join(ARTIFACT_FILE)).unwrap();
    assert_eq!(json, a.to_json());
    let md = std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    assert!(md.contains("gift wrap option"));
}

#[test]
fn store_round_trips_sessions() {
    let e = engine();
    let mut s = selected(&e);
    e.request_recommendations(&mut s, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    store.save(&s).unwrap();
    assert_eq!(store.load(&s.session_id).unwrap(), s);
    assert_eq!(store.list().unwrap(), [s.session_id.clone()]);
    assert_eq!(store.load("missing").unwrap_err().code(), ErrorCode::NotFound);
    assert_eq!(store.load("../etc").unwrap_err().code(), ErrorCode::NotFound);
}

#[test]
fn store_rejects_tampered_snapshot() {
    let e = engine();
    let s = selected(&e);
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    store.save(&s).unwrap();
    let path = dir.path().join(format!("{}.json", s.session_id));
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replace("\"feature_counter\": 0", "\"feature_counter\": 7")).unwrap();
    assert_eq!(store.load(&s.session_id).unwrap_err().code(), ErrorCode::Internal);
}

#[test]
fn replay_rejects_malformed_logs() {
    let e = engine();
    let s = selected(&e);
    assert!(SessionState::replay(&[]).is_err());
    assert!(SessionState::replay(&s.event_log[1..]).is_err());
    let mut swapped = s.event_log.clone();
    swapped.swap(1, 2);
    assert!(SessionState::replay(&swapped).is_err());
}
