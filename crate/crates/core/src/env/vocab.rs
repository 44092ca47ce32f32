//! Fixed vocabularies for dynamic object states and relations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Identifier of an object node, unique within an environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u32);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

macro_rules! token_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownToken;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let upper = s.trim().to_ascii_uppercase();
                $name::ALL
                    .iter()
                    .copied()
                    .find(|t| t.as_str() == upper)
                    .ok_or_else(|| UnknownToken(s.to_string()))
            }
        }
    };
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown token `{0}`")]
pub struct UnknownToken(pub String);

token_enum! {
    /// Dynamic state carried by an object. Declaration order is the rendering order.
    StateToken {
        On => "ON",
        Off => "OFF",
        Open => "OPEN",
        Closed => "CLOSED",
        PluggedIn => "PLUGGED_IN",
        PluggedOut => "PLUGGED_OUT",
        Clean => "CLEAN",
        Dirty => "DIRTY",
        Heated => "HEATED",
        Filled => "FILLED",
        Sitting => "SITTING",
        Lying => "LYING",
        Sleeping => "SLEEPING",
        Used => "USED",
        Eaten => "EATEN",
    }
}

token_enum! {
    /// Kind of a directed relation between two objects.
    RelationKind {
        Inside => "INSIDE",
        OnTop => "ON_TOP",
        Close => "CLOSE",
        HoldsRh => "HOLDS_RH",
        HoldsLh => "HOLDS_LH",
        Facing => "FACING",
    }
}

impl RelationKind {
    /// Accepts the exporter spelling `ON` in addition to `ON_TOP`.
    pub fn parse_edge_kind(s: &str) -> Result<Self, UnknownToken> {
        if s.trim().eq_ignore_ascii_case("ON") {
            Ok(RelationKind::OnTop)
        } else {
            s.parse()
        }
    }
}

impl StateToken {
    /// The mutually exclusive partner of this token, if any.
    pub fn complement(self) -> Option<StateToken> {
        use StateToken::*;
        match self {
            On => Some(Off),
            Off => Some(On),
            Open => Some(Closed),
            Closed => Some(Open),
            PluggedIn => Some(PluggedOut),
            PluggedOut => Some(PluggedIn),
            Clean => Some(Dirty),
            Dirty => Some(Clean),
            _ => None,
        }
    }

    /// Static property an object must carry to hold this token at all.
    pub fn required_property(self) -> Option<&'static str> {
        use StateToken::*;
        match self {
            On | Off => Some("HAS_SWITCH"),
            Open | Closed => Some("CAN_OPEN"),
            PluggedIn | PluggedOut => Some("HAS_PLUG"),
            _ => None,
        }
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

/// Compact set of [`StateToken`]s.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateSet(u16);

impl StateSet {
    pub const EMPTY: StateSet = StateSet(0);

    pub fn contains(self, token: StateToken) -> bool {
        self.0 & token.bit() != 0
    }

    pub fn insert(&mut self, token: StateToken) -> bool {
        let had = self.contains(token);
        self.0 |= token.bit();
        !had
    }

    pub fn remove(&mut self, token: StateToken) -> bool {
        let had = self.contains(token);
        self.0 &= !token.bit();
        had
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = StateToken> {
        StateToken::ALL.iter().copied().filter(move |t| self.contains(*t))
    }

    pub fn bits(self) -> u16 {
        self.0
    }
}

impl FromIterator<StateToken> for StateSet {
    fn from_iter<I: IntoIterator<Item = StateToken>>(iter: I) -> Self {
        let mut set = StateSet::EMPTY;
        for t in iter {
            set.insert(t);
        }
        set
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Directed relation `subject kind object`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Relation {
    pub subject: ObjectId,
    pub kind: RelationKind,
    pub object: ObjectId,
}

impl Relation {
    pub fn new(subject: ObjectId, kind: RelationKind, object: ObjectId) -> Self {
        Relation { subject, kind, object }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.kind, self.subject, self.object)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complements_are_symmetric() {
        for t in StateToken::ALL {
            if let Some(c) = t.complement() {
                assert_eq!(c.complement(), Some(*t));
                assert_eq!(c.required_property(), t.required_property());
            }
        }
    }

    #[test]
    fn state_set_iterates_in_declaration_order() {
        let set: StateSet = [StateToken::Closed, StateToken::Off].into_iter().collect();
        let v: Vec<_> = set.iter().map(|t| t.as_str()).collect();
        assert_eq!(v, ["OFF", "CLOSED"]);
    }

    #[test]
    fn edge_kind_alias() {
        assert_eq!(RelationKind::parse_edge_kind("ON").unwrap(), RelationKind::OnTop);
        assert_eq!(RelationKind::parse_edge_kind("on_top").unwrap(), RelationKind::OnTop);
        assert!(RelationKind::parse_edge_kind("BESIDE").is_err());
    }
}
