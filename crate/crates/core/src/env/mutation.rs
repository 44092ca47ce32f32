use std::fmt;

use serde::{Deserialize, Serialize};

use super::state::EnvironmentState;
use super::vocab::{ObjectId, StateToken};
use super::EnvError;

/// Object selector of a mutation: every object with a name, or one id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Id(u32),
    Name(String),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Id(id) => write!(f, "#{id}"),
            Target::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationChange {
    Set,
    Clear,
}

/// Forced state change, e.g. `{ "target": "tv", "set": "ON" }`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMutation", into = "RawMutation")]
pub struct StateMutation {
    pub target: Target,
    pub change: MutationChange,
    pub token: StateToken,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMutation {
    target: Target,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    set: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clear: Option<String>,
}

impl TryFrom<RawMutation> for StateMutation {
    type Error = String;

    fn try_from(raw: RawMutation) -> Result<Self, Self::Error> {
        let (change, token) = match (raw.set, raw.clear) {
            (Some(t), None) => (MutationChange::Set, t),
            (None, Some(t)) => (MutationChange::Clear, t),
            _ => return Err("a mutation needs exactly one of `set` or `clear`".into()),
        };
        let token = token.parse::<StateToken>().map_err(|e| e.to_string())?;
        Ok(StateMutation { target: raw.target, change, token })
    }
}

impl From<StateMutation> for RawMutation {
    fn from(m: StateMutation) -> Self {
        let token = Some(m.token.as_str().to_string());
        match m.change {
            MutationChange::Set => RawMutation { target: m.target, set: token, clear: None },
            MutationChange::Clear => RawMutation { target: m.target, set: None, clear: token },
        }
    }
}

impl StateMutation {
    pub fn set(target: &str, token: StateToken) -> Self {
        StateMutation { target: Target::Name(target.to_string()), change: MutationChange::Set, token }
    }

    pub fn clear(target: &str, token: StateToken) -> Self {
        StateMutation { target: Target::Name(target.to_string()), change: MutationChange::Clear, token }
    }

    fn resolve(&self, state: &EnvironmentState) -> Result<Vec<ObjectId>, EnvError> {
        let ids = match &self.target {
            Target::Id(id) => {
                let id = ObjectId(*id);
                if state.contains_object(id) {
                    vec![id]
                } else {
                    vec![]
                }
            }
            Target::Name(n) => state.objects_named(n).to_vec(),
        };
        if ids.is_empty() {
            return Err(EnvError::UnknownTarget(self.target.to_string()));
        }
        Ok(ids)
    }
}

/// Applies forced state changes, keeping complementary tokens consistent,
/// then re-settles derived rules. Only targeted objects change directly.
pub fn apply_mutations(state: &EnvironmentState, mutations: &[StateMutation]) -> Result<EnvironmentState, EnvError> {
    let mut next = state.clone();
    for m in mutations {
        for id in m.resolve(&next)? {
            if let Some(prop) = m.token.required_property() {
                if !next.node(id).has_property(prop) {
                    return Err(EnvError::StateWithoutProperty { object: id, token: m.token });
                }
            }
            match m.change {
                MutationChange::Set => {
                    next.insert_state(id, m.token);
                    if let Some(c) = m.token.complement() {
                        next.remove_state(id, c);
                    }
                }
                MutationChange::Clear => {
                    if next.remove_state(id, m.token) {
                        if let Some(c) = m.token.complement() {
                            next.insert_state(id, c);
                        }
                    }
                }
            }
        }
    }
    if !mutations.is_empty() {
        next.settle();
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_forms() {
        let m: StateMutation = serde_json::from_str(r#"{"target":"tv","set":"ON"}"#).unwrap();
        assert_eq!(m, StateMutation::set("tv", StateToken::On));
        let m: StateMutation = serde_json::from_str(r#"{"target":204,"clear":"on"}"#).unwrap();
        assert_eq!(m.target, Target::Id(204));
        assert_eq!(m.change, MutationChange::Clear);
        assert!(serde_json::from_str::<StateMutation>(r#"{"target":"tv"}"#).is_err());
        assert!(serde_json::from_str::<StateMutation>(r#"{"target":"tv","set":"ON","clear":"OFF"}"#).is_err());
        let back = serde_json::to_string(&StateMutation::set("tv", StateToken::On)).unwrap();
        assert_eq!(back, r#"{"target":"tv","set":"ON"}"#);
    }
}
