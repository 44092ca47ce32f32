use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::rules::RuleSet;
use super::state::{EnvironmentState, ObjectNode, Pairing, World};
use super::vocab::{ObjectId, Relation, RelationKind, StateSet, StateToken};
use super::EnvError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: u32,
    pub name: String,
    #[serde(default)]
    pub properties: Vec<String>,
    #[serde(default)]
    pub states: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub from: u32,
    pub kind: String,
    pub to: u32,
}

/// On-disk environment graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentDocument {
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<EdgeDoc>,
}

impl EnvironmentDocument {
    pub fn from_json(text: &str) -> Result<Self, EnvError> {
        serde_json::from_str(text).map_err(|e| EnvError::Malformed(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }
}

/// Builds a validated state from a document, computes pairings and settles the rules.
pub fn load_environment(doc: &EnvironmentDocument, rules: &RuleSet) -> Result<EnvironmentState, EnvError> {
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    let mut node_states = Vec::with_capacity(doc.nodes.len());
    for n in &doc.nodes {
        if n.id == 0 {
            return Err(EnvError::Malformed("object ids must be positive".into()));
        }
        if n.name.is_empty() || n.name.chars().any(|c| c.is_whitespace() || c.is_ascii_uppercase()) {
            return Err(EnvError::Malformed(format!("bad object name `{}`", n.name)));
        }
        let states = n.states.iter().map(|s| s.parse::<StateToken>()).collect::<Result<StateSet, _>>()?;
        nodes.push(ObjectNode { id: ObjectId(n.id), name: n.name.clone(), properties: n.properties.clone() });
        node_states.push((ObjectId(n.id), states));
    }
    let mut world = World::new(nodes)?;
    node_states.sort_by_key(|(id, _)| *id);
    let states: Vec<StateSet> = node_states.into_iter().map(|(_, s)| s).collect();

    let mut relations = Vec::with_capacity(doc.edges.len());
    for e in &doc.edges {
        let kind = RelationKind::parse_edge_kind(&e.kind)?;
        let rel = Relation::new(ObjectId(e.from), kind, ObjectId(e.to));
        for end in [rel.subject, rel.object] {
            if world.index_of(end).is_none() {
                return Err(EnvError::DanglingEndpoint { relation: rel.to_string(), missing: end });
            }
        }
        relations.push(rel);
    }
    relations.sort();
    relations.dedup();

    // pair by co-location in the initial graph
    let mut pairing_list = Vec::new();
    for decl in &rules.pairings {
        let froms = world.by_name.get(&decl.from).cloned().unwrap_or_default();
        let tos = world.by_name.get(&decl.to).cloned().unwrap_or_default();
        for &f in &froms {
            for &t in &tos {
                let linked = relations.iter().any(|r| {
                    matches!(r.kind, RelationKind::Close | RelationKind::Inside | RelationKind::OnTop)
                        && ((r.subject == f && r.object == t) || (r.subject == t && r.object == f))
                });
                if linked {
                    pairing_list.push(Pairing { name: decl.name.clone(), from: f, to: t });
                }
            }
        }
    }
    world.pairings = pairing_list.iter().map(|p| (p.from, p.to)).collect::<BTreeSet<_>>();
    world.pairing_list = pairing_list;
    world.rules = rules.clone();

    let mut state = EnvironmentState { world: Arc::new(world), states, relations };
    state.check_invariants()?;
    state.settle();
    Ok(state)
}

impl EnvironmentState {
    /// Exports the current state in the on-disk format.
    pub fn to_document(&self) -> EnvironmentDocument {
        EnvironmentDocument {
            nodes: self
                .objects()
                .map(|o| NodeDoc {
                    id: o.id().0,
                    name: o.name().to_string(),
                    properties: o.node.properties.clone(),
                    states: o.states.iter().map(|t| t.as_str().to_string()).collect(),
                })
                .collect(),
            edges: self
                .relations()
                .iter()
                .map(|r| EdgeDoc { from: r.subject.0, kind: r.kind.as_str().to_string(), to: r.object.0 })
                .collect(),
        }
    }

    /// The rule set this state settles under.
    pub fn rules(&self) -> &RuleSet {
        &self.world.rules
    }
}
