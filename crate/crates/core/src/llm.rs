//! LLM provider abstraction.
//!
//! Providers are one-shot text completers. [`ScriptedProvider`] answers from a
//! JSON script and makes the recommendation pipeline fully deterministic;
//! [`RemoteLlm`] posts `{"prompt", "max_tokens"}` and reads `{"text"}`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::http::{post_json, HttpError};
use crate::ErrorCode;

pub const SCRIPT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("LLM provider unavailable: {0}")]
    Transport(String),
    #[error("LLM output has unexpected format: {message}")]
    Format { message: String, raw: String },
    #[error("no scripted response for {purpose:?} prompt{}", subject.as_ref().map(|s| format!(" about {s:?}")).unwrap_or_default())]
    NoScriptMatch {
        purpose: PromptPurpose,
        subject: Option<String>,
    },
    #[error("invalid LLM configuration: {0}")]
    Config(String),
    #[error("cannot load LLM script {path}: {reason}")]
    Script { path: String, reason: String },
}

impl LlmError {
    pub fn code(&self) -> ErrorCode {
        match self {
            LlmError::Transport(_) | LlmError::NoScriptMatch { .. } => ErrorCode::ProviderUnavailable,
            LlmError::Format { .. } => ErrorCode::ProviderFormat,
            LlmError::Config(_) | LlmError::Script { .. } => ErrorCode::BadRequest,
        }
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, LlmError::Transport(_))
    }

    /// Raw provider text, when the failure was a malformed response.
    pub fn raw(&self) -> Option<&str> {
        match self {
            LlmError::Format { raw, .. } => Some(raw),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptPurpose {
    FeatureList,
    Explanation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub prompt: String,
    pub max_tokens: u32,
    pub purpose: PromptPurpose,
    /// What the prompt is about, e.g. the feature text for explanations.
    pub subject: Option<String>,
}

pub trait LlmProvider: Send + Sync {
    fn kind(&self) -> LlmProviderKind;
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError>;
}

/// Hex SHA-256 of a rendered prompt; usable as a `sha256:` script key.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// One canned response.
///
/// Matching, strongest first: `feature` equals the request subject
/// (case-insensitive); `key` is `sha256:<hex>` of the prompt; `key` is a
/// substring of the prompt (longer keys win); an entry with neither is a
/// fallback. `kind` restricts an entry to one prompt purpose. Remaining ties go
/// to the earliest entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<PromptPurpose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature: Option<String>,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Script {
    pub version: u32,
    pub responses: Vec<ScriptEntry>,
}

#[derive(Debug, Clone)]
pub struct ScriptedProvider {
    entries: Vec<ScriptEntry>,
}

impl ScriptedProvider {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        Self { entries }
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let bad = |reason: String| LlmError::Script {
            path: path.display().to_string(),
            reason,
        };
        let raw = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        let script: Script = serde_json::from_str(&raw).map_err(|e| bad(e.to_string()))?;
        if script.version != SCRIPT_VERSION {
            return Err(bad(format!("unsupported script version {}", script.version)));
        }
        Ok(Self::new(script.responses))
    }

    fn strength(entry: &ScriptEntry, req: &CompletionRequest, hash: &str) -> Option<(u8, usize)> {
        if entry.kind.is_some_and(|k| k != req.purpose) {
            return None;
        }
        if let Some(feature) = &entry.feature {
            let subject = req.subject.as_deref()?;
            return (subject.to_lowercase() == feature.to_lowercase()).then_some((3, 0));
        }
        match &entry.key {
            Some(key) => match key.strip_prefix("sha256:") {
                Some(h) => (h.eq_ignore_ascii_case(hash)).then_some((2, 0)),
                None => req.prompt.contains(key.as_str()).then_some((1, key.len())),
            },
            None => Some((0, 0)),
        }
    }
}

impl LlmProvider for ScriptedProvider {
    fn kind(&self) -> LlmProviderKind {
        LlmProviderKind::Scripted
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let hash = prompt_hash(&req.prompt);
        let mut best: Option<((u8, usize), &ScriptEntry)> = None;
        for entry in &self.entries {
            if let Some(s) = Self::strength(entry, req, &hash) {
                if best.is_none_or(|(b, _)| s > b) {
                    best = Some((s, entry));
                }
            }
        }
        best.map(|(_, e)| e.response.clone())
            .ok_or_else(|| LlmError::NoScriptMatch {
                purpose: req.purpose,
                subject: req.subject.clone(),
            })
    }
}

#[derive(Serialize)]
struct RemoteRequest<'a> {
    prompt: &'a str,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct RemoteResponse {
    text: String,
}

#[derive(Debug, Clone)]
pub struct RemoteLlm {
    endpoint: String,
    api_key: Option<String>,
}

impl RemoteLlm {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key,
        }
    }
}

impl LlmProvider for RemoteLlm {
    fn kind(&self) -> LlmProviderKind {
        LlmProviderKind::RemoteHttp
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let body = RemoteRequest {
            prompt: &req.prompt,
            max_tokens: req.max_tokens,
        };
        let resp: RemoteResponse =
            post_json(&self.endpoint, self.api_key.as_deref(), &body).map_err(|e| match e {
                HttpError::Transport(m) => LlmError::Transport(m),
                HttpError::Format(m) => LlmError::Format {
                    message: m,
                    raw: String::new(),
                },
            })?;
        Ok(resp.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmProviderKind {
    Scripted,
    RemoteHttp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmProviderConfig {
    pub provider_kind: LlmProviderKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script_path: Option<PathBuf>,
    #[serde(default = "default_max_features")]
    pub max_features: usize,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

fn default_max_features() -> usize {
    30
}

fn default_max_tokens() -> u32 {
    1024
}

impl LlmProviderConfig {
    pub fn scripted(script_path: impl Into<PathBuf>) -> Self {
        Self {
            provider_kind: LlmProviderKind::Scripted,
            endpoint: None,
            api_key: None,
            script_path: Some(script_path.into()),
            max_features: default_max_features(),
            max_tokens: default_max_tokens(),
        }
    }

    pub fn remote(endpoint: impl Into<String>, api_key: Option<String>) -> Self {
        Self {
            provider_kind: LlmProviderKind::RemoteHttp,
            endpoint: Some(endpoint.into()),
            api_key,
            script_path: None,
            max_features: default_max_features(),
            max_tokens: default_max_tokens(),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        match self.provider_kind {
            LlmProviderKind::Scripted if self.script_path.is_none() => {
                Err(LlmError::Config("scripted provider requires script_path".into()))
            }
            LlmProviderKind::RemoteHttp if self.endpoint.is_none() => {
                Err(LlmError::Config("remote_http provider requires endpoint".into()))
            }
            _ if self.max_features == 0 => Err(LlmError::Config("max_features must be positive".into())),
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Box<dyn LlmProvider>, LlmError> {
        self.validate()?;
        Ok(match self.provider_kind {
            LlmProviderKind::Scripted => Box::new(ScriptedProvider::from_file(
                self.script_path.as_deref().expect("validated"),
            )?),
            LlmProviderKind::RemoteHttp => Box::new(RemoteLlm::new(
                self.endpoint.clone().expect("validated"),
                self.api_key.clone(),
            )),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::test_server;

    fn req(prompt: &str, purpose: PromptPurpose, subject: Option<&str>) -> CompletionRequest {
        CompletionRequest {
            prompt: prompt.into(),
            max_tokens: 64,
            purpose,
            subject: subject.map(String::from),
        }
    }

    fn entry(kind: Option<PromptPurpose>, key: Option<&str>, feature: Option<&str>, response: &str) -> ScriptEntry {
        ScriptEntry {
            kind,
            key: key.map(String::from),
            feature: feature.map(String::from),
            response: response.into(),
        }
    }

    #[test]
    fn longest_substring_wins() {
        let p = ScriptedProvider::new(vec![
            entry(None, Some("shop"), None, "short"),
            entry(None, Some("shopping cart"), None, "long"),
        ]);
        let out = p.complete(&req("a shopping cart screen", PromptPurpose::FeatureList, None)).unwrap();
        assert_eq!(out, "long");
    }

    #[test]
    fn feature_key_matches_subject_case_insensitively() {
        let p = ScriptedProvider::new(vec![
            entry(Some(PromptPurpose::Explanation), None, Some("Search Bar"), "Lets users search."),
            entry(Some(PromptPurpose::Explanation), Some("search"), None, "generic"),
        ]);
        let out = p
            .complete(&req("explain search bar", PromptPurpose::Explanation, Some("search bar")))
            .unwrap();
        assert_eq!(out, "Lets users search.");
    }

    #[test]
    fn kind_filter_and_hash_key() {
        let prompt = "exact prompt";
        let p = ScriptedProvider::new(vec![
            entry(Some(PromptPurpose::Explanation), Some("exact"), None, "wrong kind"),
            entry(None, Some(&format!("sha256:{}", prompt_hash(prompt))), None, "by hash"),
        ]);
        assert_eq!(p.complete(&req(prompt, PromptPurpose::FeatureList, None)).unwrap(), "by hash");
    }

    #[test]
    fn no_match_is_reported() {
        let p = ScriptedProvider::new(vec![entry(None, Some("zzz"), None, "x")]);
        let err = p.complete(&req("abc", PromptPurpose::FeatureList, None)).unwrap_err();
        assert!(matches!(err, LlmError::NoScriptMatch { .. }));
    }

    #[test]
    fn fallback_entry_matches_anything() {
        let p = ScriptedProvider::new(vec![entry(Some(PromptPurpose::FeatureList), None, None, "[]")]);
        assert_eq!(p.complete(&req("abc", PromptPurpose::FeatureList, None)).unwrap(), "[]");
    }

    #[test]
    fn script_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("script.json");
        let script = Script {
            version: SCRIPT_VERSION,
            responses: vec![entry(None, Some("a"), None, "b")],
        };
        std::fs::write(&path, serde_json::to_string(&script).unwrap()).unwrap();
        let provider = LlmProviderConfig::scripted(&path).build().unwrap();
        assert_eq!(provider.kind(), LlmProviderKind::Scripted);
        assert_eq!(provider.complete(&req("a", PromptPurpose::FeatureList, None)).unwrap(), "b");
    }

    #[test]
    fn config_validation() {
        let mut cfg = LlmProviderConfig::scripted("x");
        cfg.script_path = None;
        assert!(matches!(cfg.validate(), Err(LlmError::Config(_))));
        let mut cfg = LlmProviderConfig::remote("http://x", None);
        cfg.endpoint = None;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn remote_posts_prompt_and_reads_text() {
        let (url, rx) = test_server::serve(vec![(200, r#"{"text":"[\"a\"]"}"#.into())]);
        let llm = RemoteLlm::new(url, Some("secret".into()));
        let out = llm.complete(&req("hello", PromptPurpose::FeatureList, None)).unwrap();
        assert_eq!(out, "[\"a\"]");
        let sent: serde_json::Value = serde_json::from_str(&rx.recv().unwrap()).unwrap();
        assert_eq!(sent, serde_json::json!({"prompt": "hello", "max_tokens": 64}));
    }

    #[test]
    fn remote_failure_is_retryable() {
        let (url, _rx) = test_server::serve(vec![(500, "{}".into())]);
        let err = RemoteLlm::new(url, None)
            .complete(&req("x", PromptPurpose::FeatureList, None))
            .unwrap_err();
        assert!(err.is_retryable());
        assert_eq!(err.code(), ErrorCode::ProviderUnavailable);
    }
}
