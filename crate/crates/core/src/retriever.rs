//! Shared scoring context: the corpus, an embedder and precomputed GUI vectors.

use std::sync::Arc;

use crate::corpus::{gui_full_text, CorpusIndex, GuiDocument};
use crate::embedding::{embed_corpus, CorpusEmbeddings, EmbedStats, Embedder, EmbeddingError, EmbeddingVector};

#[derive(Debug, Clone)]
pub struct Retriever {
    corpus: Arc<CorpusIndex>,
    embedder: Arc<Embedder>,
    vectors: Arc<CorpusEmbeddings>,
}

impl Retriever {
    /// Embeds the corpus (reusing `cache` where valid) and builds the context.
    pub fn build(
        corpus: Arc<CorpusIndex>,
        embedder: Arc<Embedder>,
        cache: Option<&CorpusEmbeddings>,
    ) -> Result<(Self, EmbedStats), EmbeddingError> {
        let (vectors, stats) = embed_corpus(&corpus, &embedder, cache)?;
        Ok((
            Self {
                corpus,
                embedder,
                vectors: Arc::new(vectors),
            },
            stats,
        ))
    }

    /// Deterministic embedder, no cache.
    pub fn deterministic(corpus: CorpusIndex) -> Self {
        Self::build(Arc::new(corpus), Arc::new(Embedder::deterministic()), None)
            .expect("hash embedder is infallible")
            .0
    }

    pub fn corpus(&self) -> &CorpusIndex {
        &self.corpus
    }

    pub fn embedder(&self) -> &Embedder {
        &self.embedder
    }

    pub fn vectors(&self) -> &CorpusEmbeddings {
        &self.vectors
    }

    pub fn embed(&self, text: &str) -> Result<Arc<EmbeddingVector>, EmbeddingError> {
        self.embedder.embed(text)
    }

    /// Vector of the GUI's full text; embedded on the fly for documents that
    /// are not part of the indexed corpus.
    pub fn full_text_vector(&self, g: &GuiDocument) -> Result<Arc<EmbeddingVector>, EmbeddingError> {
        match self.cached(g).and_then(|_| self.vectors.full_text(&g.gui_id)) {
            Some(v) => Ok(v.clone()),
            None => self.embedder.embed(&gui_full_text(g)),
        }
    }

    pub fn description_vectors(
        &self,
        g: &GuiDocument,
    ) -> Result<Vec<Arc<EmbeddingVector>>, EmbeddingError> {
        if self.cached(g).is_some() {
            let cached = self.vectors.descriptions(&g.gui_id);
            if cached.len() == g.s2w_descriptions.len() {
                return Ok(cached.into_iter().cloned().collect());
            }
        }
        let texts: Vec<&str> = g.s2w_descriptions.iter().map(String::as_str).collect();
        self.embedder.embed_many(&texts)
    }

    // cached vectors only apply to the exact document that was indexed
    fn cached(&self, g: &GuiDocument) -> Option<()> {
        self.corpus.get(&g.gui_id).filter(|d| std::ptr::eq(*d, g) || *d == g).map(|_| ())
    }
}
