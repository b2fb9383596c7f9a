//! On-disk GUI record schema.
//!
//! One JSON document per GUI, Rico-compatible in spirit: a component tree with
//! displayed text, resource ids and semantic classes, plus up to five crowd
//! descriptions and a set of precomputed filter flags.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Version written to every GUI record and to the corpus manifest.
pub const SCHEMA_VERSION: u32 = 1;

/// Maximum number of crowd descriptions kept per GUI.
pub const MAX_DESCRIPTIONS: usize = 5;

/// Closed vocabulary of component types. Anything else is rejected at load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ComponentType {
    Container,
    Button,
    ImageButton,
    Text,
    TextInput,
    Image,
    Icon,
    Checkbox,
    Switch,
    RadioButton,
    Slider,
    Spinner,
    ProgressBar,
    List,
    ListItem,
    Card,
    Toolbar,
    Tab,
    BottomNavigation,
    Drawer,
    Map,
    WebView,
    Video,
    DatePicker,
}

impl ComponentType {
    pub fn as_str(self) -> &'static str {
        match self {
            ComponentType::Container => "CONTAINER",
            ComponentType::Button => "BUTTON",
            ComponentType::ImageButton => "IMAGE_BUTTON",
            ComponentType::Text => "TEXT",
            ComponentType::TextInput => "TEXT_INPUT",
            ComponentType::Image => "IMAGE",
            ComponentType::Icon => "ICON",
            ComponentType::Checkbox => "CHECKBOX",
            ComponentType::Switch => "SWITCH",
            ComponentType::RadioButton => "RADIO_BUTTON",
            ComponentType::Slider => "SLIDER",
            ComponentType::Spinner => "SPINNER",
            ComponentType::ProgressBar => "PROGRESS_BAR",
            ComponentType::List => "LIST",
            ComponentType::ListItem => "LIST_ITEM",
            ComponentType::Card => "CARD",
            ComponentType::Toolbar => "TOOLBAR",
            ComponentType::Tab => "TAB",
            ComponentType::BottomNavigation => "BOTTOM_NAVIGATION",
            ComponentType::Drawer => "DRAWER",
            ComponentType::Map => "MAP",
            ComponentType::WebView => "WEB_VIEW",
            ComponentType::Video => "VIDEO",
            ComponentType::DatePicker => "DATE_PICKER",
        }
    }
}

impl fmt::Display for ComponentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Closed vocabulary of precomputed filter flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterFlag {
    /// An opened menu or drawer overlays the screen.
    OpenedMenu,
    /// Launcher, system dialog or other screen that is not part of the app.
    NonAppScreen,
    /// Soft keyboard covers part of the screen.
    KeyboardOpen,
    /// Splash or loading screen without usable content.
    LoadingScreen,
    /// Screen is dominated by a single web view.
    WebviewDominant,
    /// Captured in landscape orientation.
    Landscape,
}

impl FilterFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterFlag::OpenedMenu => "opened_menu",
            FilterFlag::NonAppScreen => "non_app_screen",
            FilterFlag::KeyboardOpen => "keyboard_open",
            FilterFlag::LoadingScreen => "loading_screen",
            FilterFlag::WebviewDominant => "webview_dominant",
            FilterFlag::Landscape => "landscape",
        }
    }
}

impl fmt::Display for FilterFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pixel bounds as `[left, top, right, bottom]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[i32; 4]", into = "[i32; 4]")]
pub struct Bounds {
    pub left: i32,
    pub top: i32,
    pub right: i32,
    pub bottom: i32,
}

impl Bounds {
    pub fn new(left: i32, top: i32, right: i32, bottom: i32) -> Self {
        Self { left, top, right, bottom }
    }

    pub fn is_valid(&self) -> bool {
        self.left <= self.right && self.top <= self.bottom
    }
}

impl From<[i32; 4]> for Bounds {
    fn from(b: [i32; 4]) -> Self {
        Self::new(b[0], b[1], b[2], b[3])
    }
}

impl From<Bounds> for [i32; 4] {
    fn from(b: Bounds) -> Self {
        [b.left, b.top, b.right, b.bottom]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuiComponent {
    pub component_id: String,
    pub component_type: ComponentType,
    #[serde(default)]
    pub displayed_text: String,
    #[serde(default)]
    pub resource_id: String,
    #[serde(default)]
    pub semantic_classes: Vec<String>,
    pub bounds: Bounds,
    #[serde(default)]
    pub children: Vec<GuiComponent>,
}

impl GuiComponent {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Pre-order (document order) traversal of this component and its descendants.
    pub fn iter(&self) -> ComponentIter<'_> {
        ComponentIter { stack: vec![self] }
    }
}

pub struct ComponentIter<'a> {
    stack: Vec<&'a GuiComponent>,
}

impl<'a> Iterator for ComponentIter<'a> {
    type Item = &'a GuiComponent;

    fn next(&mut self) -> Option<Self::Item> {
        let next = self.stack.pop()?;
        self.stack.extend(next.children.iter().rev());
        Some(next)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuiDocument {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub gui_id: String,
    pub app_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screenshot_ref: Option<String>,
    #[serde(default = "default_language")]
    pub language_tag: String,
    #[serde(default)]
    pub filter_flags: BTreeSet<FilterFlag>,
    #[serde(default)]
    pub s2w_descriptions: Vec<String>,
    pub root: GuiComponent,
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_language() -> String {
    "en".to_string()
}

impl GuiDocument {
    /// All components in document order, root first.
    pub fn components(&self) -> ComponentIter<'_> {
        self.root.iter()
    }

    pub fn component_count(&self) -> usize {
        self.components().count()
    }

    pub fn component(&self, component_id: &str) -> Option<&GuiComponent> {
        self.components().find(|c| c.component_id == component_id)
    }

    /// Checks the per-document invariants. Returns the first violation found.
    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.gui_id.trim().is_empty() {
            return Err("gui_id is empty".to_string());
        }
        if self.s2w_descriptions.len() > MAX_DESCRIPTIONS {
            return Err(format!(
                "{} s2w_descriptions (at most {MAX_DESCRIPTIONS} allowed)",
                self.s2w_descriptions.len()
            ));
        }
        let mut seen = HashSet::new();
        for c in self.components() {
            if c.component_id.is_empty() {
                return Err("component with empty component_id".to_string());
            }
            if !seen.insert(c.component_id.as_str()) {
                return Err(format!("duplicate component_id {:?}", c.component_id));
            }
            if !c.bounds.is_valid() {
                return Err(format!(
                    "component {:?} has inverted bounds {:?}",
                    c.component_id,
                    <[i32; 4]>::from(c.bounds)
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(id: &str) -> GuiComponent {
        GuiComponent {
            component_id: id.into(),
            component_type: ComponentType::Button,
            displayed_text: String::new(),
            resource_id: String::new(),
            semantic_classes: vec![],
            bounds: Bounds::new(0, 0, 10, 10),
            children: vec![],
        }
    }

    fn doc(root: GuiComponent) -> GuiDocument {
        GuiDocument {
            schema_version: SCHEMA_VERSION,
            gui_id: "g1".into(),
            app_id: "app".into(),
            screenshot_ref: None,
            language_tag: "en".into(),
            filter_flags: BTreeSet::new(),
            s2w_descriptions: vec![],
            root,
        }
    }

    #[test]
    fn traversal_is_preorder() {
        let mut root = leaf("r");
        let mut a = leaf("a");
        a.children = vec![leaf("a1"), leaf("a2")];
        root.children = vec![a, leaf("b")];
        let ids: Vec<_> = root.iter().map(|c| c.component_id.as_str()).collect();
        assert_eq!(ids, ["r", "a", "a1", "a2", "b"]);
    }

    #[test]
    fn rejects_duplicate_component_ids() {
        let mut root = leaf("r");
        root.children = vec![leaf("x"), leaf("x")];
        assert!(doc(root).validate().unwrap_err().contains("duplicate"));
    }

    #[test]
    fn rejects_inverted_bounds() {
        let mut root = leaf("r");
        root.bounds = Bounds::new(10, 0, 5, 10);
        assert!(doc(root).validate().is_err());
    }

    #[test]
    fn rejects_six_descriptions() {
        let mut d = doc(leaf("r"));
        d.s2w_descriptions = vec!["x".into(); 6];
        assert!(d.validate().is_err());
    }

    #[test]
    fn unknown_component_type_fails_to_parse() {
        let raw = r#"{"component_id":"a","component_type":"HOLOGRAM","bounds":[0,0,1,1]}"#;
        assert!(serde_json::from_str::<GuiComponent>(raw).is_err());
        let raw = r#"{"component_id":"a","component_type":"TEXT_INPUT","bounds":[0,0,1,1]}"#;
        let c: GuiComponent = serde_json::from_str(raw).unwrap();
        assert_eq!(c.component_type, ComponentType::TextInput);
    }
}
