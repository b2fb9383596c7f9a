#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use guielicit_core::corpus::{load_corpus, CorpusIndex};
use guielicit_core::llm::{LlmProvider, ScriptedProvider};
use guielicit_core::session::{SequentialIds, SessionEngine, SteppingClock};
use guielicit_core::Retriever;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_corpus() -> CorpusIndex {
    load_corpus(&fixtures_dir().join("corpus")).expect("fixture corpus loads")
}

pub fn scripted_llm() -> Arc<dyn LlmProvider> {
    Arc::new(ScriptedProvider::from_file(&fixtures_dir().join("llm_script.json")).expect("fixture script loads"))
}

/// An engine with a stepping clock and sequential ids, so runs are repeatable.
pub fn deterministic_engine(corpus: CorpusIndex) -> SessionEngine {
    let start = Utc.with_ymd_and_hms(2024, 1, 1, 9, 0, 0).unwrap();
    SessionEngine::new(Arc::new(Retriever::deterministic(corpus)), scripted_llm())
        .with_clock(Arc::new(SteppingClock::new(start, Duration::seconds(1))))
        .with_ids(Arc::new(SequentialIds::new("session")))
}
