//! Python bindings. Structured values cross the boundary as plain
//! dicts and lists with the same shape as the HTTP API's JSON.

use std::path::PathBuf;
use std::sync::Arc;

use guielicit_core::corpus::{filter_corpus, load_corpus, FilterRules};
use guielicit_core::eval::{self, evaluate_run, EvalConfig};
use guielicit_core::feature_match::{rank_aspect_guis, score_feature_gui, FeatureOrigin, FeatureQuery, FeatureStatus};
use guielicit_core::llm::{LlmProvider, ScriptedProvider};
use guielicit_core::ranking::{rank_guis, rerank, RankingConfig};
use guielicit_core::session::{FeatureDecision, SessionConfig, SessionEngine, SessionState, SessionStore};
use guielicit_core::{ErrorCode, Retriever};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

create_exception!(guielicit, GuielicitError, PyException);
create_exception!(guielicit, BadRequestError, GuielicitError);
create_exception!(guielicit, NotFoundError, GuielicitError);
create_exception!(guielicit, StateConflictError, GuielicitError);
create_exception!(guielicit, ProviderUnavailableError, GuielicitError);
create_exception!(guielicit, ProviderFormatError, GuielicitError);

fn raise(code: ErrorCode, message: String) -> PyErr {
    match code {
        ErrorCode::BadRequest => BadRequestError::new_err(message),
        ErrorCode::NotFound => NotFoundError::new_err(message),
        ErrorCode::StateConflict => StateConflictError::new_err(message),
        ErrorCode::ProviderUnavailable => ProviderUnavailableError::new_err(message),
        ErrorCode::ProviderFormat => ProviderFormatError::new_err(message),
        ErrorCode::Internal => GuielicitError::new_err(message),
    }
}

/// Maps any core error with a `code()` onto the exception hierarchy.
macro_rules! py_err {
    ($($ty:ty),*) => {
        $(impl From<Wrapped<$ty>> for PyErr {
            fn from(e: Wrapped<$ty>) -> Self {
                raise(e.0.code(), e.0.to_string())
            }
        })*
    };
}

struct Wrapped<E>(E);

py_err!(
    guielicit_core::corpus::CorpusError,
    guielicit_core::embedding::EmbeddingError,
    guielicit_core::ranking::RankingError,
    guielicit_core::llm::LlmError,
    guielicit_core::session::SessionError,
    guielicit_core::eval::EvalError
);

trait OrRaise<T> {
    fn or_raise(self) -> PyResult<T>;
}

impl<T, E> OrRaise<T> for Result<T, E>
where
    PyErr: From<Wrapped<E>>,
{
    fn or_raise(self) -> PyResult<T> {
        self.map_err(|e| PyErr::from(Wrapped(e)))
    }
}

fn to_py(py: Python<'_>, value: &impl Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| GuielicitError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_py<T: DeserializeOwned>(value: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = value.py().import("json")?.call_method1("dumps", (value,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| BadRequestError::new_err(e.to_string()))
}

fn ranking_config(alpha: f64, beta: f64, top_k: usize) -> PyResult<RankingConfig> {
    let cfg = RankingConfig { alpha, beta, top_k };
    cfg.validate().or_raise()?;
    Ok(cfg)
}

/// A loaded, embedded GUI corpus (deterministic hash embedder).
#[pyclass(module = "guielicit", frozen)]
struct Corpus {
    retriever: Arc<Retriever>,
}

#[pymethods]
impl Corpus {
    #[new]
    #[pyo3(signature = (path, default_filters = false))]
    fn new(py: Python<'_>, path: PathBuf, default_filters: bool) -> PyResult<Self> {
        let retriever = py
            .detach(|| {
                let mut corpus = load_corpus(&path)?;
                if default_filters {
                    corpus = filter_corpus(&corpus, &FilterRules::default_pipeline()).0;
                }
                Ok::<_, guielicit_core::corpus::CorpusError>(Retriever::deterministic(corpus))
            })
            .or_raise()?;
        Ok(Self {
            retriever: Arc::new(retriever),
        })
    }

    fn __len__(&self) -> usize {
        self.retriever.corpus().len()
    }

    fn gui_ids(&self) -> Vec<String> {
        self.retriever.corpus().iter().map(|g| g.gui_id.clone()).collect()
    }

    fn content_hash(&self) -> String {
        self.retriever.corpus().content_hash()
    }

    fn gui(&self, py: Python<'_>, gui_id: &str) -> PyResult<Py<PyAny>> {
        let doc = self
            .retriever
            .corpus()
            .get(gui_id)
            .ok_or_else(|| NotFoundError::new_err(format!("unknown GUI {gui_id:?}")))?;
        to_py(py, doc)
    }

    /// Ranked GUIs for a GUI description.
    #[pyo3(signature = (query, alpha = 0.5, top_k = 30))]
    fn rank(&self, py: Python<'_>, query: &str, alpha: f64, top_k: usize) -> PyResult<Py<PyAny>> {
        let cfg = ranking_config(alpha, 0.5, top_k)?;
        let ranked = py.detach(|| rank_guis(&self.retriever, query, &cfg)).or_raise()?;
        to_py(py, &ranked)
    }

    /// Aspect-GUIs for `feature` among the GUIs ranked for `query`.
    #[pyo3(signature = (feature, query, k = 15, alpha = 0.5, top_k = 30))]
    fn match_feature(
        &self,
        py: Python<'_>,
        feature: &str,
        query: &str,
        k: usize,
        alpha: f64,
        top_k: usize,
    ) -> PyResult<Py<PyAny>> {
        let cfg = ranking_config(alpha, 0.5, top_k)?;
        let aspects = py
            .detach(|| {
                let ranked = rank_guis(&self.retriever, query, &cfg)?;
                rank_aspect_guis(&self.retriever, feature, &ranked, k)
            })
            .or_raise()?;
        to_py(py, &aspects)
    }

    /// Best-matching component of one GUI: `{"score": ..., "component_id": ...}`.
    fn score_feature(&self, py: Python<'_>, feature: &str, gui_id: &str) -> PyResult<Py<PyAny>> {
        let doc = self
            .retriever
            .corpus()
            .get(gui_id)
            .ok_or_else(|| NotFoundError::new_err(format!("unknown GUI {gui_id:?}")))?;
        let s = score_feature_gui(&self.retriever, feature, doc).or_raise()?;
        to_py(
            py,
            &serde_json::json!({"score": s.score, "component_id": s.component_id}),
        )
    }

    /// Ranks for `query`, then reranks with `features` as confirmed features.
    #[pyo3(signature = (query, features, alpha = 0.5, beta = 0.5, top_k = 30))]
    fn rerank(
        &self,
        py: Python<'_>,
        query: &str,
        features: Vec<String>,
        alpha: f64,
        beta: f64,
        top_k: usize,
    ) -> PyResult<Py<PyAny>> {
        let cfg = ranking_config(alpha, beta, top_k)?;
        let confirmed: Vec<FeatureQuery> = features
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut f = FeatureQuery::new(format!("f{}", i + 1), t.as_str(), FeatureOrigin::Customer);
                f.status = FeatureStatus::ConfirmedWithAspect;
                f
            })
            .collect();
        let out = py
            .detach(|| {
                let ranked = rank_guis(&self.retriever, query, &cfg)?;
                rerank(&self.retriever, &ranked, &confirmed, &cfg)
            })
            .or_raise()?;
        to_py(py, &out)
    }
}

/// An elicitation session over a [`Corpus`].
#[pyclass(module = "guielicit")]
struct Session {
    engine: SessionEngine,
    state: SessionState,
}

fn engine(corpus: &Corpus, script: Option<PathBuf>) -> PyResult<SessionEngine> {
    let llm: Arc<dyn LlmProvider> = match script {
        Some(p) => Arc::new(ScriptedProvider::from_file(&p).or_raise()?),
        None => Arc::new(ScriptedProvider::new(Vec::new())),
    };
    Ok(SessionEngine::new(corpus.retriever.clone(), llm))
}

#[pymethods]
impl Session {
    #[new]
    #[pyo3(signature = (corpus, app_name, script = None, config = None))]
    fn new(
        corpus: &Corpus,
        app_name: &str,
        script: Option<PathBuf>,
        config: Option<&Bound<'_, PyAny>>,
    ) -> PyResult<Self> {
        let config: SessionConfig = match config {
            Some(c) => from_py(c)?,
            None => SessionConfig::default(),
        };
        let engine = engine(corpus, script)?;
        let state = engine.create_session(app_name, config).or_raise()?;
        Ok(Self { engine, state })
    }

    /// Loads a session saved with [`Session::save`].
    #[staticmethod]
    #[pyo3(signature = (corpus, directory, session_id, script = None))]
    fn load(corpus: &Corpus, directory: PathBuf, session_id: &str, script: Option<PathBuf>) -> PyResult<Self> {
        let state = SessionStore::open(directory).or_raise()?.load(session_id).or_raise()?;
        if state.corpus_hash != corpus.retriever.corpus().content_hash() {
            return Err(StateConflictError::new_err("session was created against a different corpus"));
        }
        Ok(Self {
            engine: engine(corpus, script)?,
            state,
        })
    }

    fn save(&self, directory: PathBuf) -> PyResult<()> {
        SessionStore::open(directory).or_raise()?.save(&self.state).or_raise()
    }

    #[getter]
    fn session_id(&self) -> String {
        self.state.session_id.clone()
    }

    fn phase(&self, slot: usize) -> PyResult<String> {
        Ok(SessionEngine::slot_phase(&self.state, slot).or_raise()?.as_str().to_string())
    }

    fn state(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.state)
    }

    fn submit_gui_query(&mut self, py: Python<'_>, slot: usize, nlr_gui: &str) -> PyResult<Py<PyAny>> {
        let s = self.engine.submit_gui_query(&mut self.state, slot, nlr_gui).or_raise()?;
        to_py(py, s)
    }

    fn select_gui(&mut self, py: Python<'_>, slot: usize, gui_id: &str) -> PyResult<Py<PyAny>> {
        let s = self.engine.select_gui(&mut self.state, slot, gui_id).or_raise()?;
        to_py(py, s)
    }

    fn submit_feature(&mut self, py: Python<'_>, slot: usize, text: &str) -> PyResult<Py<PyAny>> {
        let sub = self.engine.submit_feature_query(&mut self.state, slot, text).or_raise()?;
        to_py(py, &sub)
    }

    /// `decision` is `{"decision": "select_aspect", "gui_id": ...}`,
    /// `{"decision": "relevant_no_aspect"}` or `{"decision": "not_relevant"}`.
    fn decide_feature(
        &mut self,
        py: Python<'_>,
        slot: usize,
        feature_id: &str,
        decision: &Bound<'_, PyAny>,
    ) -> PyResult<Py<PyAny>> {
        let decision: FeatureDecision = from_py(decision)?;
        let (aspect, text_only) = match &decision {
            FeatureDecision::SelectAspect { gui_id } => (Some(gui_id.as_str()), false),
            FeatureDecision::RelevantNoAspect => (None, true),
            FeatureDecision::NotRelevant => (None, false),
        };
        let s = self
            .engine
            .select_aspect_gui(&mut self.state, slot, feature_id, aspect, text_only)
            .or_raise()?;
        to_py(py, s)
    }

    fn request_recommendations(&mut self, py: Python<'_>, slot: usize) -> PyResult<Py<PyAny>> {
        let recs = self.engine.request_recommendations(&mut self.state, slot).or_raise()?;
        to_py(py, &recs)
    }

    fn respond_to_recommendation(
        &mut self,
        py: Python<'_>,
        slot: usize,
        feature_id: &str,
        decision: &Bound<'_, PyAny>,
    ) -> PyResult<Py<PyAny>> {
        let decision: FeatureDecision = from_py(decision)?;
        let s = self
            .engine
            .respond_to_recommendation(&mut self.state, slot, feature_id, &decision)
            .or_raise()?;
        to_py(py, s)
    }

    fn complete_slot(&mut self, slot: usize) -> PyResult<()> {
        self.engine.complete_slot(&mut self.state, slot).or_raise()?;
        Ok(())
    }

    fn export_artifact(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.state.export_artifact().or_raise()?)
    }

    /// The artifact exactly as written to `artifact.json`.
    fn artifact_json(&self) -> PyResult<String> {
        Ok(self.state.export_artifact().or_raise()?.to_json())
    }

    fn summary_markdown(&self) -> PyResult<String> {
        Ok(self.state.export_artifact().or_raise()?.render_summary())
    }

    /// True when replaying the event log reproduces the current state.
    fn verify_replay(&self) -> PyResult<bool> {
        Ok(SessionState::replay(&self.state.event_log).or_raise()? == self.state)
    }
}

#[pyfunction]
fn average_precision(relevance: Vec<bool>) -> f64 {
    eval::average_precision(&relevance)
}

#[pyfunction]
fn reciprocal_rank(relevance: Vec<bool>) -> f64 {
    eval::reciprocal_rank(&relevance)
}

#[pyfunction]
fn precision_at(relevance: Vec<bool>, k: usize) -> PyResult<f64> {
    if k == 0 {
        return Err(BadRequestError::new_err("k must be positive"));
    }
    Ok(eval::precision_at(&relevance, k))
}

/// Fraction of queries whose target rank (1-based, None if absent) is within k.
#[pyfunction]
fn hits_at(ranks: Vec<Option<usize>>, k: usize) -> f64 {
    eval::hits_at(&ranks, k)
}

/// Metrics report for a JSON-lines annotation file.
#[pyfunction]
#[pyo3(signature = (path, ks = vec![1, 5, 10, 15]))]
fn evaluate(py: Python<'_>, path: PathBuf, ks: Vec<usize>) -> PyResult<Py<PyAny>> {
    let report = evaluate_run(&path, &EvalConfig { ks }).or_raise()?;
    to_py(py, &report)
}

/// Registers every binding on `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<Corpus>()?;
    m.add_class::<Session>()?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(reciprocal_rank, m)?)?;
    m.add_function(wrap_pyfunction!(precision_at, m)?)?;
    m.add_function(wrap_pyfunction!(hits_at, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add("GuielicitError", py.get_type::<GuielicitError>())?;
    m.add("BadRequestError", py.get_type::<BadRequestError>())?;
    m.add("NotFoundError", py.get_type::<NotFoundError>())?;
    m.add("StateConflictError", py.get_type::<StateConflictError>())?;
    m.add("ProviderUnavailableError", py.get_type::<ProviderUnavailableError>())?;
    m.add("ProviderFormatError", py.get_type::<ProviderFormatError>())?;
    Ok(())
}

#[pymodule]
fn guielicit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
