use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::model::FilterFlag;
use super::{CorpusError, CorpusIndex, GuiDocument};

/// One named filter stage. Unknown rule names fail deserialization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterRule {
    /// Drop GUIs carrying this precomputed flag (e.g. `opened_menu`, which
    /// stands in for a learned menu classifier).
    ExcludeFlag { flag: FilterFlag },
    /// Drop GUIs with fewer components than `value`.
    MinComponents { value: usize },
    /// Keep only GUIs whose language tag is listed.
    Language { tags: Vec<String> },
}

impl FilterRule {
    pub fn label(&self) -> String {
        match self {
            FilterRule::ExcludeFlag { flag } => format!("exclude_flag:{flag}"),
            FilterRule::MinComponents { value } => format!("min_components:{value}"),
            FilterRule::Language { tags } => format!("language:{}", tags.join(",")),
        }
    }

    fn rejects(&self, doc: &GuiDocument) -> bool {
        match self {
            FilterRule::ExcludeFlag { flag } => doc.filter_flags.contains(flag),
            FilterRule::MinComponents { value } => doc.component_count() < *value,
            FilterRule::Language { tags } => !tags.iter().any(|t| t == &doc.language_tag),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FilterRules(pub Vec<FilterRule>);

impl FilterRules {
    /// Parses a JSON array of rules, e.g.
    /// `[{"rule":"exclude_flag","flag":"opened_menu"},{"rule":"min_components","value":3}]`.
    pub fn from_json(raw: &str) -> Result<Self, CorpusError> {
        serde_json::from_str(raw).map_err(|e| CorpusError::Config(e.to_string()))
    }

    /// The default pipeline: every known flag excluded.
    pub fn default_pipeline() -> Self {
        use FilterFlag::*;
        Self(
            [OpenedMenu, NonAppScreen, KeyboardOpen, LoadingScreen, WebviewDominant, Landscape]
                .into_iter()
                .map(|flag| FilterRule::ExcludeFlag { flag })
                .collect(),
        )
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub gui_id: String,
    pub reasons: Vec<String>,
}

/// Accounts for every GUI removed by [`filter_corpus`]. A GUI tripping several
/// rules is counted once per rule but listed once.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub removed_by_rule: BTreeMap<String, usize>,
    pub removed: Vec<Removal>,
}

impl FilterReport {
    pub fn removed_count(&self) -> usize {
        self.removed.len()
    }
}

pub fn filter_corpus(index: &CorpusIndex, rules: &FilterRules) -> (CorpusIndex, FilterReport) {
    let mut report = FilterReport::default();
    let mut kept = BTreeMap::new();
    for (id, doc) in &index.documents {
        let reasons: Vec<String> = rules
            .0
            .iter()
            .filter(|r| r.rejects(doc))
            .map(FilterRule::label)
            .collect();
        if reasons.is_empty() {
            kept.insert(id.clone(), doc.clone());
        } else {
            for r in &reasons {
                *report.removed_by_rule.entry(r.clone()).or_default() += 1;
            }
            report.removed.push(Removal {
                gui_id: id.clone(),
                reasons,
            });
        }
    }
    let filtered = CorpusIndex {
        documents: kept,
        count_total: index.count_total,
        count_filtered: index.count_filtered + report.removed.len(),
        build_timestamp: index.build_timestamp,
        load_errors: index.load_errors.clone(),
    };
    (filtered, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::model::{Bounds, ComponentType, GuiComponent, SCHEMA_VERSION};

    fn doc(id: &str, components: usize, flags: &[FilterFlag]) -> GuiDocument {
        let child = |i: usize| GuiComponent {
            component_id: format!("c{i}"),
            component_type: ComponentType::Text,
            displayed_text: format!("t{i}"),
            resource_id: String::new(),
            semantic_classes: vec![],
            bounds: Bounds::new(0, 0, 1, 1),
            children: vec![],
        };
        let mut root = child(0);
        root.component_type = ComponentType::Container;
        root.children = (1..components).map(child).collect();
        GuiDocument {
            schema_version: SCHEMA_VERSION,
            gui_id: id.into(),
            app_id: "a".into(),
            screenshot_ref: None,
            language_tag: "en".into(),
            filter_flags: flags.iter().copied().collect(),
            s2w_descriptions: vec![],
            root,
        }
    }

    fn sixty() -> CorpusIndex {
        CorpusIndex::from_documents((0..60).map(|i| {
            let flags: &[FilterFlag] = if i % 15 == 0 { &[FilterFlag::OpenedMenu] } else { &[] };
            doc(&format!("g{i:02}"), 5, flags)
        }))
    }

    #[test]
    fn flag_filter_removes_flagged() {
        let rules = FilterRules::from_json(r#"[{"rule":"exclude_flag","flag":"opened_menu"}]"#)
            .unwrap();
        let (out, report) = filter_corpus(&sixty(), &rules);
        assert_eq!(out.len(), 56);
        assert_eq!(report.removed_count(), 4);
        assert_eq!(report.removed_by_rule["exclude_flag:opened_menu"], 4);
        assert_eq!(out.count_total, out.count_filtered + out.len());
    }

    #[test]
    fn min_components_predicate() {
        let index = CorpusIndex::from_documents([doc("small", 2, &[]), doc("big", 3, &[])]);
        let (out, report) = filter_corpus(&index, &FilterRules(vec![FilterRule::MinComponents { value: 3 }]));
        assert!(out.get("small").is_none());
        assert!(out.get("big").is_some());
        assert_eq!(report.removed[0].gui_id, "small");
    }

    #[test]
    fn empty_rules_are_identity() {
        let index = sixty();
        let (out, report) = filter_corpus(&index, &FilterRules::default());
        assert_eq!(out, index);
        assert_eq!(report, FilterReport::default());
    }

    #[test]
    fn unknown_rule_or_flag_is_config_error() {
        assert!(matches!(
            FilterRules::from_json(r#"[{"rule":"cnn_menu"}]"#),
            Err(CorpusError::Config(_))
        ));
        assert!(FilterRules::from_json(r#"[{"rule":"exclude_flag","flag":"blurry"}]"#).is_err());
    }

    #[test]
    fn multiple_rules_count_each() {
        let index = CorpusIndex::from_documents([doc("x", 1, &[FilterFlag::OpenedMenu])]);
        let rules = FilterRules(vec![
            FilterRule::ExcludeFlag { flag: FilterFlag::OpenedMenu },
            FilterRule::MinComponents { value: 2 },
            FilterRule::Language { tags: vec!["de".into()] },
        ]);
        let (out, report) = filter_corpus(&index, &rules);
        assert!(out.is_empty());
        assert_eq!(report.removed_count(), 1);
        assert_eq!(report.removed_by_rule.values().sum::<usize>(), 3);
    }

    #[test]
    fn filtering_is_idempotent() {
        let rules = FilterRules::default_pipeline();
        let (once, _) = filter_corpus(&sixty(), &rules);
        let (twice, report) = filter_corpus(&once, &rules);
        assert_eq!(once, twice);
        assert_eq!(report.removed_count(), 0);
    }
}
