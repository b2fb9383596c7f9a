//! Corpus and provider wiring shared by the CLI verbs and the server.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use guielicit_core::corpus::{filter_corpus, load_corpus, CorpusIndex, FilterRules};
use guielicit_core::embedding::{CorpusEmbeddings, EmbeddingProviderConfig, EmbeddingProviderKind};
use guielicit_core::llm::{LlmProvider, LlmProviderConfig, ScriptedProvider};
use guielicit_core::recommend::FewShotLibrary;
use guielicit_core::session::{SessionEngine, SessionState};
use guielicit_core::Retriever;

use crate::error::ApiError;

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Corpus directory or JSON-lines bundle.
    #[arg(long, env = "GUIELICIT_CORPUS")]
    pub corpus: PathBuf,

    /// JSON array of filter rules applied after loading.
    #[arg(long, env = "GUIELICIT_FILTERS")]
    pub filters: Option<PathBuf>,

    /// Remote embedding endpoint; the deterministic hash embedder is used when unset.
    #[arg(long, env = "GUIELICIT_EMBED_ENDPOINT")]
    pub embed_endpoint: Option<String>,

    #[arg(long, env = "GUIELICIT_EMBED_API_KEY", hide_env_values = true)]
    pub embed_api_key: Option<String>,

    #[arg(long, env = "GUIELICIT_EMBED_DIM", default_value_t = 256)]
    pub embed_dim: usize,

    /// Embedding cache file, reused when valid and rewritten after embedding.
    #[arg(long, env = "GUIELICIT_EMBED_CACHE")]
    pub embed_cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct LlmArgs {
    /// Scripted LLM responses.
    #[arg(long, env = "GUIELICIT_LLM_SCRIPT")]
    pub script: Option<PathBuf>,

    /// Remote LLM endpoint; takes precedence over `--script`.
    #[arg(long, env = "GUIELICIT_LLM_ENDPOINT")]
    pub llm_endpoint: Option<String>,

    #[arg(long, env = "GUIELICIT_LLM_API_KEY", hide_env_values = true)]
    pub llm_api_key: Option<String>,

    /// Few-shot exemplar file; built-in exemplars when unset.
    #[arg(long, env = "GUIELICIT_FEW_SHOT")]
    pub few_shot: Option<PathBuf>,
}

impl CorpusArgs {
    pub fn embedding_config(&self) -> EmbeddingProviderConfig {
        EmbeddingProviderConfig {
            provider_kind: if self.embed_endpoint.is_some() {
                EmbeddingProviderKind::RemoteHttp
            } else {
                EmbeddingProviderKind::DeterministicHash
            },
            dim: self.embed_dim,
            endpoint: self.embed_endpoint.clone(),
            api_key: self.embed_api_key.clone(),
            cache_path: self.embed_cache.clone(),
        }
    }

    /// Loads and filters the corpus.
    pub fn load(&self) -> Result<CorpusIndex, ApiError> {
        let corpus = load_corpus(&self.corpus)?;
        for e in &corpus.load_errors {
            log::warn!("skipped record {}: {}", e.source, e.reason);
        }
        match &self.filters {
            Some(path) => {
                let raw = std::fs::read_to_string(path)
                    .map_err(|e| ApiError::bad_request(format!("cannot read {}: {e}", path.display())))?;
                let (kept, report) = filter_corpus(&corpus, &FilterRules::from_json(&raw)?);
                log::info!("filters removed {} GUIs", report.removed_count());
                Ok(kept)
            }
            None => Ok(corpus),
        }
    }

    /// Embeds `corpus`, going through the cache file when configured.
    pub fn retriever(&self, corpus: CorpusIndex) -> Result<Retriever, ApiError> {
        let cfg = self.embedding_config();
        let embedder = Arc::new(cfg.build()?);
        let cache = match &cfg.cache_path {
            Some(p) if p.exists() => match CorpusEmbeddings::load(p) {
                Ok(c) => Some(c),
                Err(e) => {
                    log::warn!("ignoring embedding cache {}: {e}", p.display());
                    None
                }
            },
            _ => None,
        };
        let (retriever, stats) = Retriever::build(Arc::new(corpus), embedder, cache.as_ref())?;
        log::info!("embeddings: {} computed, {} reused", stats.computed, stats.reused);
        if let Some(p) = &cfg.cache_path {
            if stats.computed > 0 {
                retriever.vectors().save(p)?;
            }
        }
        Ok(retriever)
    }

    /// Directory that relative screenshot references resolve against.
    pub fn asset_root(&self) -> PathBuf {
        if self.corpus.is_dir() {
            self.corpus.clone()
        } else {
            self.corpus.parent().map(Path::to_path_buf).unwrap_or_default()
        }
    }
}

impl LlmArgs {
    /// Without any configuration the provider is an empty script, so
    /// recommendation requests fail with `provider_unavailable`.
    pub fn provider(&self) -> Result<Arc<dyn LlmProvider>, ApiError> {
        let cfg = match (&self.llm_endpoint, &self.script) {
            (Some(endpoint), _) => LlmProviderConfig::remote(endpoint.clone(), self.llm_api_key.clone()),
            (None, Some(script)) => LlmProviderConfig::scripted(script.clone()),
            (None, None) => return Ok(Arc::new(ScriptedProvider::new(Vec::new()))),
        };
        Ok(Arc::from(cfg.build()?))
    }

    pub fn few_shot(&self) -> Result<FewShotLibrary, ApiError> {
        match &self.few_shot {
            Some(p) => Ok(FewShotLibrary::from_file(p)?),
            None => Ok(FewShotLibrary::default()),
        }
    }

    pub fn engine(&self, retriever: Retriever) -> Result<SessionEngine, ApiError> {
        Ok(SessionEngine::new(Arc::new(retriever), self.provider()?).with_few_shot(self.few_shot()?))
    }
}

/// Sessions are bound to the corpus they were created against.
pub fn check_corpus(engine: &SessionEngine, state: &SessionState) -> Result<(), ApiError> {
    let hash = engine.retriever().corpus().content_hash();
    if state.corpus_hash != hash {
        return Err(ApiError::new(
            guielicit_core::ErrorCode::StateConflict,
            format!(
                "session {} was created against corpus {}, the loaded corpus is {hash}",
                state.session_id, state.corpus_hash
            ),
        ));
    }
    Ok(())
}
