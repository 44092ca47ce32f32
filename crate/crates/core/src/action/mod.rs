//! Action language, schema ledger, grounding and the transition function.

mod ledger;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::ObjectId;

pub use ledger::{applicable_actions, apply, check_applicable, ActionSchema, ApplyError, LedgerError, SchemaLedger};
pub(crate) use ledger::{apply_ground, Ground, Grounder};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ActionError {
    #[error("syntax error in `{0}`")]
    Syntax(String),
    #[error("unknown verb `{0}`")]
    UnknownVerb(String),
    #[error("{verb} takes {expected} argument(s), got {got}")]
    Arity { verb: Verb, expected: usize, got: usize },
    #[error("empty guide line")]
    EmptyLine,
}

macro_rules! verbs {
    ($($variant:ident => $text:literal / $arity:literal),+ $(,)?) => {
        /// Action verbs in inventory order.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Verb {
            $($variant),+
        }

        impl Verb {
            pub const ALL: &'static [Verb] = &[$(Verb::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Verb::$variant => $text),+
                }
            }

            pub fn arity(self) -> usize {
                match self {
                    $(Verb::$variant => $arity),+
                }
            }
        }
    };
}

verbs! {
    Walk => "WALK" / 1,
    Close => "CLOSE" / 1,
    Cut => "CUT" / 1,
    Drink => "DRINK" / 1,
    Drop => "DROP" / 1,
    Eat => "EAT" / 1,
    Grab => "GRAB" / 1,
    Greet => "GREET" / 1,
    Lie => "LIE" / 1,
    Move => "MOVE" / 1,
    Open => "OPEN" / 1,
    PlugIn => "PLUGIN" / 1,
    PlugOut => "PLUGOUT" / 1,
    Pour => "POUR" / 2,
    PlaceOn => "PLACEON" / 2,
    PutIn => "PUTIN" / 2,
    PutOn => "PUTON" / 1,
    Read => "READ" / 1,
    Sit => "SIT" / 1,
    Sleep => "SLEEP" / 0,
    StandUp => "STANDUP" / 0,
    SwitchOff => "SWITCHOFF" / 1,
    SwitchOn => "SWITCHON" / 1,
    TakeOff => "TAKEOFF" / 1,
    Touch => "TOUCH" / 1,
    Type => "TYPE" / 1,
    Use => "USE" / 1,
    WakeUp => "WAKEUP" / 0,
    Wash => "WASH" / 1,
    Watch => "WATCH" / 1,
    Wipe => "WIPE" / 2,
}

impl Verb {
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verb {
    type Err = ActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        Verb::ALL
            .iter()
            .copied()
            .find(|v| v.as_str() == upper)
            .ok_or_else(|| ActionError::UnknownVerb(s.trim().to_string()))
    }
}

impl Serialize for Verb {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Verb {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionArg {
    pub name: String,
    pub id: ObjectId,
}

/// A verb bound to concrete objects, e.g. `[PUTIN]<salmon>(311)<microwave>(297)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundedAction {
    pub verb: Verb,
    pub args: Vec<ActionArg>,
}

impl GroundedAction {
    pub fn new(verb: Verb, args: &[(&str, u32)]) -> Self {
        GroundedAction {
            verb,
            args: args.iter().map(|(n, id)| ActionArg { name: n.to_string(), id: ObjectId(*id) }).collect(),
        }
    }

    /// Id-free view.
    pub fn to_ref(&self) -> ActionRef {
        ActionRef { verb: self.verb, names: self.args.iter().map(|a| a.name.clone()).collect() }
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.args.iter().map(|a| a.id)
    }
}

impl fmt::Display for GroundedAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_action(self, true))
    }
}

impl Serialize for GroundedAction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_action(self, true))
    }
}

impl<'de> Deserialize<'de> for GroundedAction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_action(&s).map_err(serde::de::Error::custom)
    }
}

/// A verb with argument names only, as used in prompts and guides.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionRef {
    pub verb: Verb,
    pub names: Vec<String>,
}

impl ActionRef {
    pub fn new(verb: Verb, names: &[&str]) -> Self {
        ActionRef { verb, names: names.iter().map(|n| n.to_string()).collect() }
    }

    pub fn matches(&self, action: &GroundedAction) -> bool {
        self.verb == action.verb
            && self.names.len() == action.args.len()
            && self.names.iter().zip(&action.args).all(|(n, a)| *n == a.name)
    }

    /// Lowercase pipe form, e.g. `placeon | cupcake | coffeetable`.
    pub fn to_guide_line(&self) -> String {
        let mut parts = vec![self.verb.as_str().to_ascii_lowercase()];
        parts.extend(self.names.iter().cloned());
        parts.join(" | ")
    }
}

impl fmt::Display for ActionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.verb)?;
        for n in &self.names {
            write!(f, "<{n}>")?;
        }
        Ok(())
    }
}

impl Serialize for ActionRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ActionRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_action_ref(&s).map_err(serde::de::Error::custom)
    }
}

pub fn format_action(action: &GroundedAction, with_ids: bool) -> String {
    let mut out = format!("[{}]", action.verb);
    for a in &action.args {
        out.push('<');
        out.push_str(&a.name);
        out.push('>');
        if with_ids {
            out.push('(');
            out.push_str(&a.id.to_string());
            out.push(')');
        }
    }
    out
}

struct Scanned {
    verb: Verb,
    args: Vec<(String, Option<u32>)>,
}

/// `[VERB]` followed by `<name>` segments, each optionally followed by `(id)`.
fn scan(text: &str) -> Result<Scanned, ActionError> {
    let syntax = || ActionError::Syntax(text.to_string());
    let rest = text.strip_prefix('[').ok_or_else(syntax)?;
    let (verb, mut rest) = rest.split_once(']').ok_or_else(syntax)?;
    if verb.is_empty() || !verb.chars().all(|c| c.is_ascii_alphabetic()) {
        return Err(syntax());
    }
    let verb: Verb = verb.parse()?;
    let mut args = Vec::new();
    while !rest.is_empty() {
        let inner = rest.strip_prefix('<').ok_or_else(syntax)?;
        let (name, after) = inner.split_once('>').ok_or_else(syntax)?;
        if name.is_empty() || name.contains(['<', '(', ')', '[', ']']) {
            return Err(syntax());
        }
        rest = after;
        let mut id = None;
        if let Some(inner) = rest.strip_prefix('(') {
            let (digits, after) = inner.split_once(')').ok_or_else(syntax)?;
            if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
                return Err(syntax());
            }
            id = Some(digits.parse().map_err(|_| syntax())?);
            rest = after;
        }
        args.push((name.to_string(), id));
    }
    if args.len() != verb.arity() {
        return Err(ActionError::Arity { verb, expected: verb.arity(), got: args.len() });
    }
    Ok(Scanned { verb, args })
}

/// Parses `[VERB]<name>(id)...`; every argument must carry an id.
pub fn parse_action(text: &str) -> Result<GroundedAction, ActionError> {
    let s = scan(text.trim())?;
    let args = s
        .args
        .into_iter()
        .map(|(name, id)| {
            id.map(|id| ActionArg { name, id: ObjectId(id) }).ok_or_else(|| ActionError::Syntax(text.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GroundedAction { verb: s.verb, args })
}

/// Parses `[VERB]<name>...`; ids, if present, are dropped.
pub fn parse_action_ref(text: &str) -> Result<ActionRef, ActionError> {
    let s = scan(text.trim())?;
    Ok(ActionRef { verb: s.verb, names: s.args.into_iter().map(|(n, _)| n).collect() })
}

/// Parses a low-level guide line such as `4. placeon | coffeepot | coffeetable`.
pub fn parse_guide_line(text: &str) -> Result<ActionRef, ActionError> {
    let mut line = text.trim();
    if line.is_empty() {
        return Err(ActionError::EmptyLine);
    }
    // optional "N." index
    if let Some((num, rest)) = line.split_once('.') {
        if !num.is_empty() && num.trim().chars().all(|c| c.is_ascii_digit()) {
            line = rest.trim();
        }
    }
    let mut parts = line.split('|').map(str::trim);
    let verb_text = parts.next().unwrap_or_default();
    if verb_text.is_empty() {
        return Err(ActionError::EmptyLine);
    }
    let verb: Verb = verb_text.parse()?;
    let names: Vec<String> = parts.map(str::to_string).collect();
    if names.iter().any(|n| n.is_empty() || n.contains(char::is_whitespace)) {
        return Err(ActionError::Syntax(text.to_string()));
    }
    if names.len() != verb.arity() {
        return Err(ActionError::Arity { verb, expected: verb.arity(), got: names.len() });
    }
    Ok(ActionRef { verb, names })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        let a = parse_action("[PUTIN]<salmon>(311)<microwave>(297)").unwrap();
        assert_eq!(a, GroundedAction::new(Verb::PutIn, &[("salmon", 311), ("microwave", 297)]));
        assert_eq!(format_action(&a, true), "[PUTIN]<salmon>(311)<microwave>(297)");
        assert_eq!(format_action(&a, false), "[PUTIN]<salmon><microwave>");
        let s = parse_action("[SLEEP]").unwrap();
        assert!(s.args.is_empty());
        assert_eq!(format_action(&GroundedAction::new(Verb::WakeUp, &[]), false), "[WAKEUP]");
        assert_eq!(format_action(&GroundedAction::new(Verb::WakeUp, &[]), true), "[WAKEUP]");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_action("[PUTIN]<salmon>(311)"), Err(ActionError::Arity { expected: 2, got: 1, .. })));
        assert!(matches!(parse_action("[FLY]<bird>(3)"), Err(ActionError::UnknownVerb(_))));
        assert!(matches!(parse_action("PUTIN <salmon>(3)"), Err(ActionError::Syntax(_))));
        assert!(matches!(parse_action("[WALK]<salmon>"), Err(ActionError::Syntax(_))));
        assert!(matches!(parse_action("[WALK]<salmon>(x1)"), Err(ActionError::Syntax(_))));
        assert!(parse_action("[WALK]<salmon>(1) ").is_ok());
    }

    #[test]
    fn refs() {
        let r = parse_action_ref("[WALK]<bottle>(15)").unwrap();
        assert_eq!(r, ActionRef::new(Verb::Walk, &["bottle"]));
        assert_eq!(r.to_string(), "[WALK]<bottle>");
        assert!(r.matches(&GroundedAction::new(Verb::Walk, &[("bottle", 9)])));
        assert!(!r.matches(&GroundedAction::new(Verb::Grab, &[("bottle", 9)])));
    }

    #[test]
    fn guide_lines() {
        assert_eq!(
            parse_guide_line("4. placeon | coffeepot | coffeetable").unwrap(),
            ActionRef::new(Verb::PlaceOn, &["coffeepot", "coffeetable"])
        );
        assert_eq!(parse_guide_line("walk | kitchen").unwrap(), ActionRef::new(Verb::Walk, &["kitchen"]));
        assert_eq!(parse_guide_line("standup").unwrap(), ActionRef::new(Verb::StandUp, &[]));
        assert!(matches!(parse_guide_line("teleport | kitchen"), Err(ActionError::UnknownVerb(_))));
        assert!(matches!(parse_guide_line("   "), Err(ActionError::EmptyLine)));
        assert!(matches!(parse_guide_line("walk"), Err(ActionError::Arity { .. })));
        assert_eq!(
            ActionRef::new(Verb::PlaceOn, &["cupcake", "coffeetable"]).to_guide_line(),
            "placeon | cupcake | coffeetable"
        );
    }

    #[test]
    fn inventory_has_thirty_one_verbs() {
        assert_eq!(Verb::ALL.len(), 31);
        assert_eq!(Verb::ALL.iter().filter(|v| v.arity() == 0).count(), 3);
        assert_eq!(Verb::ALL.iter().filter(|v| v.arity() == 2).count(), 4);
    }
}
