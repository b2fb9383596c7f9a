//! Text extraction from GUI components and prompt-oriented flattening.

use std::fmt::Write as _;

use super::model::{ComponentType, GuiComponent, GuiDocument};

/// Splits a resource id into lowercase words.
///
/// Any `package:id/` style prefix is dropped (everything up to the last `/`).
/// Word boundaries are underscores, hyphens and lower-to-upper camel-case
/// transitions.
pub fn split_resource_id(resource_id: &str) -> String {
    let name = resource_id.rsplit('/').next().unwrap_or(resource_id);
    let mut words: Vec<String> = Vec::new();
    let mut current = String::new();
    let mut prev_lower = false;
    for ch in name.chars() {
        if ch == '_' || ch == '-' {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            prev_lower = false;
            continue;
        }
        if ch.is_uppercase() && prev_lower && !current.is_empty() {
            words.push(std::mem::take(&mut current));
        }
        prev_lower = ch.is_lowercase();
        current.extend(ch.to_lowercase());
    }
    if !current.is_empty() {
        words.push(current);
    }
    words.retain(|w| !w.trim().is_empty());
    words.join(" ")
}

/// Candidate strings a feature description can be matched against:
/// the displayed text verbatim, the split resource id, then each semantic
/// class label. Blank candidates are omitted.
pub fn component_text_candidates(c: &GuiComponent) -> Vec<String> {
    let mut out = Vec::with_capacity(2 + c.semantic_classes.len());
    if !c.displayed_text.trim().is_empty() {
        out.push(c.displayed_text.clone());
    }
    let rid = split_resource_id(&c.resource_id);
    if !rid.is_empty() {
        out.push(rid);
    }
    out.extend(
        c.semantic_classes
            .iter()
            .filter(|s| !s.trim().is_empty())
            .cloned(),
    );
    out
}

/// Space-separated concatenation of every component's text candidates in
/// document order. This is the text a whole GUI is embedded from.
pub fn gui_full_text(g: &GuiDocument) -> String {
    g.components()
        .flat_map(component_text_candidates)
        .collect::<Vec<_>>()
        .join(" ")
}

fn render_component(c: &GuiComponent) -> String {
    let text: Vec<&str> = c.displayed_text.split_whitespace().collect();
    format!(
        "\"{}\" ({}) ({})",
        text.join(" "),
        c.component_type,
        c.resource_id
    )
}

/// Header used for leaves that have no CONTAINER ancestor.
pub const UNGROUPED_HEADER: &str = "- (ungrouped)";

/// Renders a GUI as a two-level list for inclusion in a prompt.
///
/// Each leaf becomes `  - "text" (TYPE) (resource-id)` under a header line for
/// its nearest CONTAINER ancestor (`- "text" (CONTAINER) (resource-id)`).
/// Leaves without such an ancestor are listed under `- (ungrouped)`. Groups
/// appear in the order of their first leaf; containers without leaves are
/// omitted.
pub fn flatten_hierarchy_for_prompt(g: &GuiDocument) -> String {
    // (group header, items) in order of first appearance
    let mut groups: Vec<(Option<&GuiComponent>, Vec<&GuiComponent>)> = Vec::new();
    collect_leaves(&g.root, None, &mut groups);

    let mut out = String::new();
    for (header, items) in &groups {
        match header {
            Some(container) => {
                let _ = writeln!(out, "- {}", render_component(container));
            }
            None => {
                let _ = writeln!(out, "{UNGROUPED_HEADER}");
            }
        }
        for item in items {
            let _ = writeln!(out, "  - {}", render_component(item));
        }
    }
    out
}

fn collect_leaves<'a>(
    c: &'a GuiComponent,
    group: Option<&'a GuiComponent>,
    groups: &mut Vec<(Option<&'a GuiComponent>, Vec<&'a GuiComponent>)>,
) {
    if c.is_leaf() {
        let key = group.map(|g| g.component_id.as_str());
        match groups
            .iter_mut()
            .find(|(h, _)| h.map(|g| g.component_id.as_str()) == key)
        {
            Some((_, items)) => items.push(c),
            None => groups.push((group, vec![c])),
        }
        return;
    }
    let child_group = if c.component_type == ComponentType::Container {
        Some(c)
    } else {
        group
    };
    for child in &c.children {
        collect_leaves(child, child_group, groups);
    }
}
