use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::action::{parse_action_ref, ActionRef};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionResponse {
    pub raw_text: String,
    pub parsed: Option<(usize, ActionRef)>,
}

fn block_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        // `{INDEX [VERB]<a>(id)<b>}`; brackets around the verb are optional
        Regex::new(r"\{\s*(\d+)\s+\[?([A-Za-z]+)\]?\s*((?:<[^<>{}]+>\s*(?:\(\d+\))?\s*)*)\}").unwrap()
    })
}

/// Extracts the last well-formed `{INDEX [VERB]<...>}` block; anything before it is reasoning.
pub fn parse_selection(raw: &str) -> SelectionResponse {
    let parsed = block_regex().captures_iter(raw).collect::<Vec<_>>().into_iter().rev().find_map(|c| {
        let index: usize = c[1].parse().ok()?;
        let args: String = c[3].chars().filter(|ch| !ch.is_whitespace()).collect();
        let action = parse_action_ref(&format!("[{}]{args}", c[2].to_ascii_uppercase())).ok()?;
        Some((index, action))
    });
    SelectionResponse { raw_text: raw.to_string(), parsed }
}

/// The canonical reply for picking `action` at `index`.
pub fn format_selection(index: usize, action: &ActionRef) -> String {
    format!("{{{index} {action}}}")
}
