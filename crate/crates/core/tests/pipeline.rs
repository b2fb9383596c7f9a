mod common;

use std::sync::Arc;

use guielicit_core::corpus::{filter_corpus, gui_full_text, load_corpus, write_corpus, FilterRules};
use guielicit_core::embedding::{CorpusEmbeddings, Embedder};
use guielicit_core::eval::{evaluate_run, EvalConfig};
use guielicit_core::llm::{CompletionRequest, PromptPurpose};
use guielicit_core::ranking::{rank_guis, RankingConfig};
use guielicit_core::recommend::FewShotLibrary;
use guielicit_core::Retriever;

#[test]
fn fixture_corpus_loads_cleanly() {
    let corpus = common::fixture_corpus();
    assert_eq!(corpus.len(), 60);
    assert_eq!(corpus.count_total, 60);
    assert!(corpus.load_errors.is_empty());
    assert!(corpus.iter().all(|g| g.component_count() <= 20));
}

#[test]
fn default_filter_drops_opened_menus() {
    let corpus = common::fixture_corpus();
    let (kept, report) = filter_corpus(&corpus, &FilterRules::default_pipeline());
    assert_eq!(kept.len(), 56);
    assert_eq!(report.removed_count(), 4);
    assert_eq!(report.removed_by_rule["exclude_flag:opened_menu"], 4);
    assert_eq!(kept.count_total, 60);
    assert!(report.removed.iter().all(|r| r.gui_id.ends_with("_settings")));
}

#[test]
fn written_corpus_reloads_equal() {
    let corpus = common::fixture_corpus();
    let (kept, _) = filter_corpus(&corpus, &FilterRules::default_pipeline());
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(&kept, dir.path()).unwrap();
    assert_eq!(manifest.count_filtered, 4);
    let again = load_corpus(dir.path()).unwrap();
    assert_eq!(again, kept);
    assert_eq!(again.content_hash(), kept.content_hash());
}

#[test]
fn embedding_cache_covers_texts_and_descriptions() {
    let corpus = Arc::new(common::fixture_corpus());
    let embedder = Arc::new(Embedder::deterministic());
    let (r, stats) = Retriever::build(corpus.clone(), embedder.clone(), None).unwrap();
    // one full text plus three descriptions per GUI
    assert_eq!(r.vectors().len(), 240);
    assert_eq!(stats.computed, 240);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vectors.json");
    r.vectors().save(&path).unwrap();
    let cached = CorpusEmbeddings::load(&path).unwrap();
    let (again, stats) = Retriever::build(corpus, embedder, Some(&cached)).unwrap();
    assert_eq!(stats.computed, 0);
    assert_eq!(stats.reused, 240);
    assert_eq!(again.vectors().full_text("shop_detail"), r.vectors().full_text("shop_detail"));
}

#[test]
fn exact_full_text_query_ranks_its_gui_first() {
    let corpus = common::fixture_corpus();
    let r = Retriever::deterministic(corpus.clone());
    for g in corpus.iter().step_by(7) {
        let ranked = rank_guis(&r, &gui_full_text(g), &RankingConfig::default()).unwrap();
        assert_eq!(ranked[0].gui_id, g.gui_id);
        assert!((ranked[0].s1 - 1.0).abs() < 1e-12);
    }
}

#[test]
fn few_shot_fixture_matches_builtin_defaults() {
    let lib = FewShotLibrary::from_file(&common::fixtures_dir().join("few_shot.json")).unwrap();
    assert_eq!(lib, FewShotLibrary::default());
    assert!(!lib.features.is_empty());
    assert!(!lib.explanations.is_empty());
}

#[test]
fn fixture_script_answers_both_prompt_kinds() {
    let llm = common::scripted_llm();
    let list = llm
        .complete(&CompletionRequest {
            prompt: "Requirements: a shopping app".into(),
            max_tokens: 256,
            purpose: PromptPurpose::FeatureList,
            subject: None,
        })
        .unwrap();
    let parsed: Vec<String> = serde_json::from_str(list.trim()).unwrap();
    assert!(!parsed.is_empty());

    let why = llm
        .complete(&CompletionRequest {
            prompt: "explain".into(),
            max_tokens: 256,
            purpose: PromptPurpose::Explanation,
            subject: Some("customer reviews".into()),
        })
        .unwrap();
    assert!(!why.trim().is_empty());
}

#[test]
fn evaluation_run_over_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("annotations.jsonl");
    std::fs::write(
        &path,
        concat!(
            r#"{"query_id":"a","ranked_item_ids":["x","y","z"],"relevance":{"y":1},"selected_rank":2,"initial_rank":5,"updated_rank":2}"#,
            "\n\n",
            r#"{"query_id":"b","ranked_item_ids":["x","y"],"relevance":{"x":1,"y":0}}"#,
            "\n"
        ),
    )
    .unwrap();
    let report = evaluate_run(&path, &EvalConfig { ks: vec![1, 2] }).unwrap();
    assert_eq!(report.n_queries, 2);
    assert!((report.map - 0.75).abs() < 1e-12);
    assert!((report.mrr - 0.75).abs() < 1e-12);
    assert!((report.hits_at_k[&1] - 0.5).abs() < 1e-12);
    let delta = report.rank_delta.unwrap();
    assert_eq!(delta.n, 1);
    assert!((delta.mean - 3.0).abs() < 1e-12);
}
