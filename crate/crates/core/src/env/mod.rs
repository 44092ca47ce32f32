//! Symbolic household world: objects, relations, derived rules and mutations.

mod document;
mod listing;
mod mutation;
mod rules;
mod state;
mod vocab;

pub use document::{load_environment, EdgeDoc, EnvironmentDocument, NodeDoc};
pub use listing::{parse_listing, render_environment_info, render_listing, InfoLevel, ListingEntry};
pub use mutation::{apply_mutations, MutationChange, StateMutation, Target};
pub use rules::{apply_derived_rules, DerivedRule, PairingDecl, RuleSet};
pub use state::{EnvironmentState, ObjectNode, ObjectView, Pairing, AGENT_NAME};
pub use vocab::{ObjectId, Relation, RelationKind, StateSet, StateToken, UnknownToken};

use crate::pattern::PatternError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnvError {
    #[error("malformed environment document: {0}")]
    Malformed(String),
    #[error("duplicate object id {0}")]
    DuplicateId(ObjectId),
    #[error("expected exactly one `character` object, found {0}")]
    AgentCount(usize),
    #[error("relation {relation} references missing object {missing}")]
    DanglingEndpoint { relation: String, missing: ObjectId },
    #[error("object {object} carries {token} without the matching property")]
    StateWithoutProperty { object: ObjectId, token: StateToken },
    #[error("object {object} carries {token} together with its complement")]
    ComplementClash { object: ObjectId, token: StateToken },
    #[error("agent holds more than one object in {0}")]
    HandOverflow(RelationKind),
    #[error("mutation target `{0}` matches no object")]
    UnknownTarget(String),
    #[error(transparent)]
    Token(#[from] UnknownToken),
    #[error("rule file: {0}")]
    Rules(String),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}
