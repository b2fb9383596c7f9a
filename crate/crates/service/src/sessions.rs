use std::collections::HashMap;
use std::sync::Arc;

use guielicit_core::session::{valid_session_id, SessionEngine, SessionError, SessionState, SessionStore};
use parking_lot::RwLock;

use crate::error::ApiError;
use crate::runtime::check_corpus;

/// One session: writers queue on `write`, readers take the published snapshot.
struct Cell {
    write: tokio::sync::Mutex<()>,
    snapshot: RwLock<Arc<SessionState>>,
}

/// Live sessions, optionally backed by a [`SessionStore`].
pub struct Registry {
    engine: Arc<SessionEngine>,
    store: Option<Arc<SessionStore>>,
    cells: RwLock<HashMap<String, Arc<Cell>>>,
}

impl Registry {
    pub fn new(engine: Arc<SessionEngine>, store: Option<SessionStore>) -> Self {
        Self {
            engine,
            store: store.map(Arc::new),
            cells: RwLock::new(HashMap::new()),
        }
    }

    pub fn engine(&self) -> &Arc<SessionEngine> {
        &self.engine
    }

    pub fn len(&self) -> usize {
        self.cells.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub async fn insert(&self, state: SessionState) -> Result<Arc<SessionState>, ApiError> {
        let state = Arc::new(state);
        if let Some(store) = self.store.clone() {
            let copy = state.clone();
            blocking(move || store.save(&copy).map_err(ApiError::from)).await?;
        }
        let cell = Arc::new(Cell {
            write: tokio::sync::Mutex::new(()),
            snapshot: RwLock::new(state.clone()),
        });
        self.cells.write().insert(state.session_id.clone(), cell);
        Ok(state)
    }

    async fn cell(&self, session_id: &str) -> Result<Arc<Cell>, ApiError> {
        if let Some(c) = self.cells.read().get(session_id) {
            return Ok(c.clone());
        }
        let missing = || ApiError::from(SessionError::NotFound(format!("unknown session {session_id:?}")));
        if !valid_session_id(session_id) {
            return Err(missing());
        }
        let store = self.store.clone().ok_or_else(missing)?;
        let id = session_id.to_string();
        let state = blocking(move || store.load(&id).map_err(ApiError::from)).await?;
        check_corpus(&self.engine, &state)?;
        let mut cells = self.cells.write();
        let cell = cells.entry(session_id.to_string()).or_insert_with(|| {
            Arc::new(Cell {
                write: tokio::sync::Mutex::new(()),
                snapshot: RwLock::new(Arc::new(state)),
            })
        });
        Ok(cell.clone())
    }

    pub async fn snapshot(&self, session_id: &str) -> Result<Arc<SessionState>, ApiError> {
        let cell = self.cell(session_id).await?;
        let snapshot = cell.snapshot.read().clone();
        Ok(snapshot)
    }

    /// Runs `op` on a copy of the session and publishes the copy only when
    /// `op` succeeds and the store (if any) accepted it.
    pub async fn mutate<T, F>(&self, session_id: &str, op: F) -> Result<(Arc<SessionState>, T), ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&SessionEngine, &mut SessionState) -> Result<T, SessionError> + Send + 'static,
    {
        let cell = self.cell(session_id).await?;
        let _writer = cell.write.lock().await;
        let mut working = SessionState::clone(&cell.snapshot.read());
        let engine = self.engine.clone();
        let store = self.store.clone();
        let (state, out) = blocking(move || {
            let out = op(&engine, &mut working)?;
            if let Some(store) = store {
                store.save(&working)?;
            }
            Ok::<_, ApiError>((Arc::new(working), out))
        })
        .await?;
        *cell.snapshot.write() = state.clone();
        Ok((state, out))
    }
}

pub async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}
