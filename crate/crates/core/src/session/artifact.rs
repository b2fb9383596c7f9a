use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{SessionError, SessionState};
use crate::feature_match::{AspectGui, FeatureOrigin, FeatureStatus};

pub const ARTIFACT_SCHEMA_VERSION: u32 = 1;
pub const ARTIFACT_FILE: &str = "artifact.json";
pub const SUMMARY_FILE: &str = "summary.md";

/// A confirmed feature together with its selected aspect-GUI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactAspect {
    pub feature_id: String,
    pub feature_text: String,
    pub origin: FeatureOrigin,
    #[serde(flatten)]
    pub aspect: AspectGui,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub position: usize,
    pub nlr_gui: String,
    pub selected_gui: String,
    pub aspect_guis: Vec<ArtifactAspect>,
    pub textual_requirements: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreviewStep {
    pub step: usize,
    pub position: usize,
    pub gui_id: String,
}

/// The exported prototype specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeArtifact {
    pub schema_version: u32,
    pub app_name: String,
    pub session_id: String,
    /// Time of the session's last event, so re-exports are identical.
    pub exported_at: DateTime<Utc>,
    pub corpus_hash: String,
    pub config_hash: String,
    pub slots: Vec<SlotRecord>,
    pub preview_sequence: Vec<PreviewStep>,
}

impl PrototypeArtifact {
    /// Builds the artifact from every completed slot.
    pub fn from_session(state: &SessionState) -> Result<Self, SessionError> {
        let mut slots = Vec::new();
        for s in state.completed_slots() {
            let selected_gui = s
                .selected_gui
                .clone()
                .ok_or_else(|| SessionError::Replay(format!("completed slot {} has no selection", s.position)))?;
            let mut aspect_guis = Vec::new();
            let mut textual_requirements = Vec::new();
            for f in &s.features {
                match f.status {
                    FeatureStatus::ConfirmedWithAspect => {
                        let aspect = s.aspect_selections.get(&f.feature_id).cloned().ok_or_else(|| {
                            SessionError::Replay(format!("feature {} has no stored aspect", f.feature_id))
                        })?;
                        aspect_guis.push(ArtifactAspect {
                            feature_id: f.feature_id.clone(),
                            feature_text: f.text.clone(),
                            origin: f.origin,
                            aspect,
                        });
                    }
                    FeatureStatus::ConfirmedTextOnly => textual_requirements.push(f.text.clone()),
                    FeatureStatus::Open | FeatureStatus::Rejected => {}
                }
            }
            slots.push(SlotRecord {
                position: s.position,
                nlr_gui: s.nlr_gui.clone(),
                selected_gui,
                aspect_guis,
                textual_requirements,
            });
        }
        if slots.is_empty() {
            return Err(SessionError::StateConflict("the session has no completed GUI slot to export".into()));
        }
        let preview_sequence = slots
            .iter()
            .enumerate()
            .map(|(i, s)| PreviewStep {
                step: i + 1,
                position: s.position,
                gui_id: s.selected_gui.clone(),
            })
            .collect();
        Ok(Self {
            schema_version: ARTIFACT_SCHEMA_VERSION,
            app_name: state.app_name.clone(),
            session_id: state.session_id.clone(),
            exported_at: state.updated_at,
            corpus_hash: state.corpus_hash.clone(),
            config_hash: state.config_hash(),
            slots,
            preview_sequence,
        })
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }

    pub fn render_summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}\n", self.app_name);
        let _ = writeln!(
            out,
            "Session `{}`, exported {}.\n",
            self.session_id,
            self.exported_at.to_rfc3339_opts(SecondsFormat::Secs, true)
        );
        out.push_str("## App preview\n\n");
        for step in &self.preview_sequence {
            let _ = writeln!(out, "{}. `{}`", step.step, step.gui_id);
        }
        for s in &self.slots {
            let _ = writeln!(out, "\n## GUI {}: `{}`\n", s.position + 1, s.selected_gui);
            let _ = writeln!(out, "Requirements: {}\n", s.nlr_gui.trim());
            out.push_str("### Aspect-GUIs\n\n");
            if s.aspect_guis.is_empty() {
                out.push_str("(none)\n");
            }
            for a in &s.aspect_guis {
                let component = a.aspect.component_id.as_deref().unwrap_or("-");
                let _ = writeln!(
                    out,
                    "- {}: `{}` component `{}` (score {:.3})",
                    a.feature_text, a.aspect.gui_id, component, a.aspect.score
                );
            }
            out.push_str("\n### Textual requirements\n\n");
            if s.textual_requirements.is_empty() {
                out.push_str("(none)\n");
            }
            for t in &s.textual_requirements {
                let _ = writeln!(out, "- {t}");
            }
        }
        let _ = write!(
            out,
            "\n---\ncorpus `{}`, config `{}`\n",
            &self.corpus_hash[..self.corpus_hash.len().min(12)],
            &self.config_hash[..self.config_hash.len().min(12)]
        );
        out
    }

    /// Writes `artifact.json` and `summary.md` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), SessionError> {
        let err = |path: &Path, e: std::io::Error| SessionError::Store {
            path: path.display().to_string(),
            reason: e.to_string(),
        };
        std::fs::create_dir_all(dir).map_err(|e| err(dir, e))?;
        let json = dir.join(ARTIFACT_FILE);
        std::fs::write(&json, self.to_json()).map_err(|e| err(&json, e))?;
        let md = dir.join(SUMMARY_FILE);
        std::fs::write(&md, self.render_summary()).map_err(|e| err(&md, e))
    }
}
