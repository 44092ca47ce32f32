//! Plain-text object listing used in guide-generation prompts.
//!
//! `facecream: properties - {GRABBABLE, POURABLE, CAN_OPEN, CREAM} | states - {CLOSED}`

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::state::EnvironmentState;
use super::EnvError;

/// How much environment detail a guide prompt receives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfoLevel {
    #[default]
    None,
    Objects,
    Static,
    Dynamic,
}

impl InfoLevel {
    pub const ALL: [InfoLevel; 4] = [InfoLevel::None, InfoLevel::Objects, InfoLevel::Static, InfoLevel::Dynamic];

    pub fn as_str(self) -> &'static str {
        match self {
            InfoLevel::None => "none",
            InfoLevel::Objects => "objects",
            InfoLevel::Static => "static",
            InfoLevel::Dynamic => "dynamic",
        }
    }
}

impl fmt::Display for InfoLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InfoLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InfoLevel::ALL
            .into_iter()
            .find(|l| l.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown info level `{s}` (none, objects, static, dynamic)"))
    }
}

/// One listing line. Tokens are kept as text so foreign listings round-trip.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ListingEntry {
    pub name: String,
    pub properties: Option<Vec<String>>,
    pub states: Option<Vec<String>>,
}

impl fmt::Display for ListingEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if let Some(props) = &self.properties {
            write!(f, ": properties - {{{}}}", props.join(", "))?;
            if let Some(states) = &self.states {
                write!(f, " | states - {{{}}}", states.join(", "))?;
            }
        }
        Ok(())
    }
}

fn braces(text: &str, line: &str) -> Result<Vec<String>, EnvError> {
    let inner = text
        .trim()
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| EnvError::Malformed(format!("expected a braces block in `{line}`")))?;
    Ok(inner.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::to_string).collect())
}

impl FromStr for ListingEntry {
    type Err = EnvError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let Some((name, rest)) = line.split_once(": ") else {
            if line.is_empty() || line.contains([' ', '{', '}', '|']) {
                return Err(EnvError::Malformed(format!("bad listing line `{line}`")));
            }
            return Ok(ListingEntry { name: line.to_string(), properties: None, states: None });
        };
        let rest = rest
            .strip_prefix("properties - ")
            .ok_or_else(|| EnvError::Malformed(format!("expected `properties - ` in `{line}`")))?;
        let (props, states) = match rest.split_once(" | states - ") {
            Some((p, s)) => (braces(p, line)?, Some(braces(s, line)?)),
            None => (braces(rest, line)?, None),
        };
        Ok(ListingEntry { name: name.to_string(), properties: Some(props), states })
    }
}

/// Parses a listing, one entry per non-empty line.
pub fn parse_listing(text: &str) -> Result<Vec<ListingEntry>, EnvError> {
    text.lines().filter(|l| !l.trim().is_empty()).map(str::parse).collect()
}

pub fn render_listing(entries: &[ListingEntry]) -> String {
    entries.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")
}

/// One line per object in id order. Empty at [`InfoLevel::None`].
pub fn render_environment_info(env: &EnvironmentState, level: InfoLevel) -> String {
    if level == InfoLevel::None {
        return String::new();
    }
    let entries: Vec<ListingEntry> = env
        .objects()
        .map(|o| ListingEntry {
            name: o.name().to_string(),
            properties: (level >= InfoLevel::Static).then(|| o.node.properties.clone()),
            states: (level == InfoLevel::Dynamic).then(|| o.states.iter().map(|t| t.as_str().to_string()).collect()),
        })
        .collect();
    render_listing(&entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_forms() {
        let e: ListingEntry = "bathroom: properties - {ROOM} | states - {}".parse().unwrap();
        assert_eq!(e.properties.as_deref(), Some(&["ROOM".to_string()][..]));
        assert_eq!(e.states.as_deref(), Some(&[][..]));
        assert_eq!(e.to_string(), "bathroom: properties - {ROOM} | states - {}");
        let e: ListingEntry = "sink: properties - {RECIPIENT, CONTAINERS}".parse().unwrap();
        assert_eq!(e.states, None);
        let e: ListingEntry = "floor".parse().unwrap();
        assert_eq!(e.to_string(), "floor");
        assert!("sink: props {}".parse::<ListingEntry>().is_err());
        assert!("two words".parse::<ListingEntry>().is_err());
    }

    #[test]
    fn info_level_parse() {
        assert_eq!("Dynamic".parse::<InfoLevel>().unwrap(), InfoLevel::Dynamic);
        assert!("full".parse::<InfoLevel>().is_err());
    }
}
