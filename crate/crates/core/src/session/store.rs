use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{valid_session_id, EventRecord, SessionError, SessionState};

const STORE_VERSION: u32 = 1;

#[derive(Serialize)]
struct StoredRef<'a> {
    schema_version: u32,
    snapshot: &'a SessionState,
}

#[derive(Deserialize)]
struct Stored {
    schema_version: u32,
    snapshot: SessionState,
}

/// One JSON file per session: `<dir>/<session_id>.json`, holding the
/// snapshot with its event log. Loading replays the log and rejects files
/// whose snapshot disagrees with it.
#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| SessionError::Store {
            path: dir.display().to_string(),
            reason: e.to_string(),
        })?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, session_id: &str) -> Result<PathBuf, SessionError> {
        if !valid_session_id(session_id) {
            return Err(SessionError::NotFound(format!("invalid session id {session_id:?}")));
        }
        Ok(self.dir.join(format!("{session_id}.json")))
    }

    pub fn save(&self, state: &SessionState) -> Result<(), SessionError> {
        let path = self.path_for(&state.session_id)?;
        let err = |reason: String| SessionError::Store {
            path: path.display().to_string(),
            reason,
        };
        let json = serde_json::to_vec_pretty(&StoredRef {
            schema_version: STORE_VERSION,
            snapshot: state,
        })
        .map_err(|e| err(e.to_string()))?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, json).map_err(|e| err(e.to_string()))?;
        std::fs::rename(&tmp, &path).map_err(|e| err(e.to_string()))
    }

    pub fn load(&self, session_id: &str) -> Result<SessionState, SessionError> {
        let path = self.path_for(session_id)?;
        let err = |reason: String| SessionError::Store {
            path: path.display().to_string(),
            reason,
        };
        let raw = match std::fs::read(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(SessionError::NotFound(format!("session {session_id:?} not found")))
            }
            Err(e) => return Err(err(e.to_string())),
        };
        let stored: Stored = serde_json::from_slice(&raw).map_err(|e| err(e.to_string()))?;
        if stored.schema_version != STORE_VERSION {
            return Err(err(format!("unsupported store version {}", stored.schema_version)));
        }
        let replayed = SessionState::replay(&stored.snapshot.event_log)?;
        if replayed != stored.snapshot {
            return Err(err("snapshot does not match its event log".into()));
        }
        Ok(replayed)
    }

    /// Loads only the event log of a stored session.
    pub fn load_log(&self, session_id: &str) -> Result<Vec<EventRecord>, SessionError> {
        Ok(self.load(session_id)?.event_log)
    }

    /// Ids of all stored sessions, sorted.
    pub fn list(&self) -> Result<Vec<String>, SessionError> {
        let entries = std::fs::read_dir(&self.dir).map_err(|e| SessionError::Store {
            path: self.dir.display().to_string(),
            reason: e.to_string(),
        })?;
        let mut ids: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                let id = name.strip_suffix(".json")?;
                valid_session_id(id).then(|| id.to_string())
            })
            .collect();
        ids.sort();
        Ok(ids)
    }
}
