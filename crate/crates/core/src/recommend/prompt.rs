//! Few-shot prompt templates for feature recommendation and explanations.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{flatten_hierarchy_for_prompt, GuiDocument};
use crate::feature_match::{FeatureQuery, FeatureStatus};
use crate::llm::{LlmError, PromptPurpose};

pub const NO_FEATURES_MARKER: &str = "(none)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub context: String,
    pub output: String,
}

/// Exemplars for both prompt kinds. Loadable from a JSON file with the same
/// shape: `{"features": [{"context", "output"}], "explanations": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotLibrary {
    #[serde(default)]
    pub features: Vec<FewShotExample>,
    #[serde(default)]
    pub explanations: Vec<FewShotExample>,
}

impl FewShotLibrary {
    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let bad = |reason: String| LlmError::Script {
            path: path.display().to_string(),
            reason,
        };
        let raw = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        serde_json::from_str(&raw).map_err(|e| bad(e.to_string()))
    }
}

impl Default for FewShotLibrary {
    fn default() -> Self {
        let ex = |context: &str, output: &str| FewShotExample {
            context: context.to_string(),
            output: output.to_string(),
        };
        Self {
            features: vec![
                ex(
                    "Requirements: A login screen where users sign in with email and password.\n\
                     Specified features: email field, password field\n\
                     GUI:\n- \"\" (CONTAINER) (login_form)\n  - \"Email\" (TEXT_INPUT) (email_input)\n  - \"Password\" (TEXT_INPUT) (password_input)\n  - \"Sign in\" (BUTTON) (btn_sign_in)",
                    r#"["forgot password link", "sign up button", "remember me checkbox", "sign in with google button", "show password toggle"]"#,
                ),
                ex(
                    "Requirements: A recipe detail page showing ingredients and steps.\n\
                     Specified features: ingredient list\n\
                     GUI:\n- \"\" (CONTAINER) (recipe_detail)\n  - \"Pancakes\" (TEXT) (recipe_title)\n  - \"\" (IMAGE) (recipe_photo)\n  - \"Ingredients\" (LIST) (ingredient_list)",
                    r#"["cooking time label", "servings selector", "save to favorites button", "step by step instructions", "share recipe button"]"#,
                ),
            ],
            explanations: vec![
                ex(
                    "Requirements: A login screen where users sign in with email and password.\nFeature: \"forgot password link\"",
                    "Lets users who cannot remember their password recover access without contacting support.",
                ),
                ex(
                    "Requirements: A recipe detail page showing ingredients and steps.\nFeature: \"servings selector\"",
                    "Scales the ingredient quantities to the number of people the user is cooking for.",
                ),
            ],
        }
    }
}

/// A filled-in prompt. `rendered` is derived from the other fields only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub purpose: PromptPurpose,
    pub task_instructions: String,
    pub nlr_gui: String,
    pub specified_features: Vec<String>,
    pub flattened_gui: String,
    pub few_shot_examples: Vec<FewShotExample>,
    pub rendered: String,
}

impl PromptBundle {
    fn assemble(
        purpose: PromptPurpose,
        task_instructions: String,
        nlr_gui: &str,
        specified_features: Vec<String>,
        flattened_gui: String,
        few_shot_examples: Vec<FewShotExample>,
    ) -> Self {
        let mut bundle = Self {
            purpose,
            task_instructions,
            nlr_gui: nlr_gui.to_string(),
            specified_features,
            flattened_gui,
            few_shot_examples,
            rendered: String::new(),
        };
        bundle.rendered = bundle.render();
        bundle
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "## A. Task\n{}\n\n", self.task_instructions);
        let _ = write!(out, "## B. Initial requirements\n{}\n\n", self.nlr_gui.trim());
        match self.purpose {
            PromptPurpose::FeatureList => {
                let _ = write!(out, "## C. Selected GUI\n{}\n", self.flattened_gui);
                out.push_str("## Already specified features\n");
                if self.specified_features.is_empty() {
                    let _ = writeln!(out, "{NO_FEATURES_MARKER}");
                }
                for f in &self.specified_features {
                    let _ = writeln!(out, "- {f}");
                }
                out.push('\n');
            }
            PromptPurpose::Explanation => {
                for f in &self.specified_features {
                    let _ = write!(out, "## C. Feature\nFeature: \"{f}\"\n\n");
                }
            }
        }
        if !self.few_shot_examples.is_empty() {
            out.push_str("## Examples\n");
            for (i, ex) in self.few_shot_examples.iter().enumerate() {
                let _ = write!(
                    out,
                    "### Example {}\nContext:\n{}\nAnswer:\n{}\n\n",
                    i + 1,
                    ex.context.trim_end(),
                    ex.output.trim_end()
                );
            }
        }
        out.push_str("## Answer\n");
        out
    }
}

/// Prompt asking for up to `max_features` further features of the selected GUI.
///
/// Specified features are every feature of the slot that was not rejected.
pub fn build_recommendation_prompt(
    nlr_gui: &str,
    features: &[FeatureQuery],
    selected: &GuiDocument,
    examples: &[FewShotExample],
    max_features: usize,
) -> PromptBundle {
    let instructions = format!(
        "You help a customer specify the screens of a mobile app. Given the customer's \
         requirements for one screen (B), the GUI they picked as a starting point (C) and the \
         features they already asked for, recommend the top-{max_features} additional GUI \
         features this screen is likely to need. Do not repeat already specified features. \
         Reply with a JSON array of short feature descriptions (strings), most relevant first, \
         and nothing else."
    );
    let specified = features
        .iter()
        .filter(|f| f.status != FeatureStatus::Rejected)
        .map(|f| f.text.clone())
        .collect();
    PromptBundle::assemble(
        PromptPurpose::FeatureList,
        instructions,
        nlr_gui,
        specified,
        flatten_hierarchy_for_prompt(selected),
        examples.to_vec(),
    )
}

/// Prompt asking for a one-to-two sentence explanation of a feature.
pub fn build_explanation_prompt(feature_text: &str, nlr_gui: &str, examples: &[FewShotExample]) -> PromptBundle {
    let instructions = "Explain in one or two sentences why the feature (C) is useful on the \
                        screen described by the requirements (B). Reply with the explanation only."
        .to_string();
    PromptBundle::assemble(
        PromptPurpose::Explanation,
        instructions,
        nlr_gui,
        vec![feature_text.to_string()],
        String::new(),
        examples.to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Bounds, ComponentType, GuiComponent, SCHEMA_VERSION};
    use crate::feature_match::FeatureOrigin;

    fn gui_with_leaves(n: usize) -> GuiDocument {
        let leaf = |i: usize| GuiComponent {
            component_id: format!("c{i}"),
            component_type: ComponentType::Button,
            displayed_text: format!("Button {i}"),
            resource_id: format!("btn_{i}"),
            semantic_classes: vec![],
            bounds: Bounds::new(0, 0, 1, 1),
            children: vec![],
        };
        let mut root = leaf(0);
        root.component_type = ComponentType::Container;
        root.children = (1..=n).map(leaf).collect();
        GuiDocument {
            schema_version: SCHEMA_VERSION,
            gui_id: "g".into(),
            app_id: "a".into(),
            screenshot_ref: None,
            language_tag: "en".into(),
            filter_flags: Default::default(),
            s2w_descriptions: vec![],
            root,
        }
    }

    #[test]
    fn sections_appear_in_order() {
        let p = build_recommendation_prompt("A shop home page", &[], &gui_with_leaves(1), &[], 30);
        let r = &p.rendered;
        let a = r.find("## A. Task").unwrap();
        let b = r.find("## B. Initial requirements").unwrap();
        let c = r.find("## C. Selected GUI").unwrap();
        let f = r.find("## Already specified features").unwrap();
        assert!(a < b && b < c && c < f);
        assert!(r.contains(&format!("## Already specified features\n{NO_FEATURES_MARKER}\n")));
        assert!(r.contains("top-30"));
        assert!(r.contains("JSON array"));
        assert!(r.contains("A shop home page"));
    }

    #[test]
    fn rendering_is_pure() {
        let feats = [FeatureQuery::new("f1", "search bar", FeatureOrigin::Customer)];
        let lib = FewShotLibrary::default();
        let a = build_recommendation_prompt("x", &feats, &gui_with_leaves(2), &lib.features, 30);
        let b = build_recommendation_prompt("x", &feats, &gui_with_leaves(2), &lib.features, 30);
        assert_eq!(a.rendered, b.rendered);
        assert_eq!(a.rendered, a.render());
        let examples = a.rendered.find("## Examples").unwrap();
        assert!(a.rendered.find("- search bar").unwrap() < examples);
    }

    #[test]
    fn flattened_gui_lists_every_leaf() {
        let p = build_recommendation_prompt("x", &[], &gui_with_leaves(5), &[], 30);
        let items = p.rendered.lines().filter(|l| l.starts_with("  - \"Button")).count();
        assert_eq!(items, 5);
    }

    #[test]
    fn rejected_features_are_not_listed() {
        let mut rejected = FeatureQuery::new("f2", "dark mode", FeatureOrigin::Recommended);
        rejected.status = FeatureStatus::Rejected;
        let p = build_recommendation_prompt("x", &[rejected], &gui_with_leaves(1), &[], 30);
        assert!(!p.rendered.contains("dark mode"));
    }

    #[test]
    fn explanation_prompt_names_feature_and_requirements() {
        let p = build_explanation_prompt("search bar", "A news reader", &FewShotLibrary::default().explanations);
        assert!(p.rendered.contains("Feature: \"search bar\""));
        assert!(p.rendered.contains("A news reader"));
        assert_eq!(p.purpose, PromptPurpose::Explanation);
    }
}
