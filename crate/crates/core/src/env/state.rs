use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use super::rules::RuleSet;
use super::vocab::{ObjectId, Relation, RelationKind, StateSet, StateToken};
use super::EnvError;

/// Name of the unique agent object.
pub const AGENT_NAME: &str = "character";

/// Static part of an object node. Dynamic states live in [`EnvironmentState`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectNode {
    pub id: ObjectId,
    pub name: String,
    /// Static property tokens in document order.
    pub properties: Vec<String>,
}

impl ObjectNode {
    pub fn has_property(&self, prop: &str) -> bool {
        self.properties.iter().any(|p| p == prop)
    }

    pub fn is_room(&self) -> bool {
        self.has_property("ROOM")
    }
}

/// Object paired with another by a pairing declaration, e.g. a faucet and its sink.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pairing {
    pub name: String,
    pub from: ObjectId,
    pub to: ObjectId,
}

/// Everything about an environment that no action can change.
#[derive(Debug, PartialEq, Eq)]
pub(crate) struct World {
    pub(crate) objects: Vec<ObjectNode>,
    pub(crate) agent: ObjectId,
    pub(crate) pairings: BTreeSet<(ObjectId, ObjectId)>,
    pub(crate) pairing_list: Vec<Pairing>,
    pub(crate) by_name: HashMap<String, Vec<ObjectId>>,
    pub(crate) rules: RuleSet,
}

impl World {
    pub(crate) fn new(objects: Vec<ObjectNode>) -> Result<World, EnvError> {
        let mut objects = objects;
        objects.sort_by_key(|o| o.id);
        for pair in objects.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(EnvError::DuplicateId(pair[0].id));
            }
        }
        let agents: Vec<_> = objects.iter().filter(|o| o.name == AGENT_NAME).collect();
        if agents.len() != 1 {
            return Err(EnvError::AgentCount(agents.len()));
        }
        let agent = agents[0].id;
        let mut by_name: HashMap<String, Vec<ObjectId>> = HashMap::new();
        for o in &objects {
            by_name.entry(o.name.clone()).or_default().push(o.id);
        }
        Ok(World {
            objects,
            agent,
            pairings: BTreeSet::new(),
            pairing_list: Vec::new(),
            by_name,
            rules: RuleSet::empty(),
        })
    }

    pub(crate) fn index_of(&self, id: ObjectId) -> Option<usize> {
        self.objects.binary_search_by_key(&id, |o| o.id).ok()
    }
}

/// A full symbolic world state: objects, their dynamic states, and the relation set.
///
/// Values are immutable from the outside; every operation returns a new state.
/// The static part is shared between all states derived from the same document.
#[derive(Clone)]
pub struct EnvironmentState {
    pub(crate) world: Arc<World>,
    pub(crate) states: Vec<StateSet>,
    pub(crate) relations: Vec<Relation>,
}

/// Read-only view of one object together with its current dynamic states.
#[derive(Clone, Copy, Debug)]
pub struct ObjectView<'a> {
    pub node: &'a ObjectNode,
    pub states: StateSet,
}

impl<'a> ObjectView<'a> {
    pub fn id(&self) -> ObjectId {
        self.node.id
    }

    pub fn name(&self) -> &'a str {
        &self.node.name
    }
}

impl EnvironmentState {
    pub fn agent_id(&self) -> ObjectId {
        self.world.agent
    }

    pub fn object_count(&self) -> usize {
        self.world.objects.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    /// Objects in ascending id order.
    pub fn objects(&self) -> impl Iterator<Item = ObjectView<'_>> {
        self.world.objects.iter().zip(self.states.iter()).map(|(node, states)| ObjectView { node, states: *states })
    }

    pub fn object(&self, id: ObjectId) -> Option<ObjectView<'_>> {
        let ix = self.world.index_of(id)?;
        Some(ObjectView { node: &self.world.objects[ix], states: self.states[ix] })
    }

    pub(crate) fn node(&self, id: ObjectId) -> &ObjectNode {
        let ix = self.world.index_of(id).expect("object id belongs to this environment");
        &self.world.objects[ix]
    }

    pub fn contains_object(&self, id: ObjectId) -> bool {
        self.world.index_of(id).is_some()
    }

    /// Ids of every object with the given name, ascending.
    pub fn objects_named(&self, name: &str) -> &[ObjectId] {
        self.world.by_name.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn name_of(&self, id: ObjectId) -> Option<&str> {
        self.world.index_of(id).map(|ix| self.world.objects[ix].name.as_str())
    }

    pub fn states_of(&self, id: ObjectId) -> StateSet {
        self.world.index_of(id).map(|ix| self.states[ix]).unwrap_or_default()
    }

    pub fn has_state(&self, id: ObjectId, token: StateToken) -> bool {
        self.states_of(id).contains(token)
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn has_relation(&self, subject: ObjectId, kind: RelationKind, object: ObjectId) -> bool {
        self.relations.binary_search(&Relation::new(subject, kind, object)).is_ok()
    }

    /// All relations of one kind leaving `subject`.
    pub fn relations_from(&self, subject: ObjectId, kind: RelationKind) -> &[Relation] {
        let lo = self.relations.partition_point(|r| (r.subject, r.kind) < (subject, kind));
        let hi = self.relations.partition_point(|r| (r.subject, r.kind) <= (subject, kind));
        &self.relations[lo..hi]
    }

    /// All relations of one kind arriving at `object`.
    pub fn relations_to(&self, object: ObjectId, kind: RelationKind) -> impl Iterator<Item = &Relation> {
        self.relations.iter().filter(move |r| r.kind == kind && r.object == object)
    }

    /// Object held in the given hand relation by the agent.
    pub fn held_in(&self, hand: RelationKind) -> Option<ObjectId> {
        self.relations_from(self.agent_id(), hand).first().map(|r| r.object)
    }

    pub fn is_held(&self, id: ObjectId) -> bool {
        let agent = self.agent_id();
        self.has_relation(agent, RelationKind::HoldsRh, id) || self.has_relation(agent, RelationKind::HoldsLh, id)
    }

    /// Rooms the object sits in directly.
    pub fn rooms_of(&self, id: ObjectId) -> impl Iterator<Item = ObjectId> + '_ {
        self.relations_from(id, RelationKind::Inside).iter().map(|r| r.object).filter(|o| self.node(*o).is_room())
    }

    pub fn pairings(&self) -> &[Pairing] {
        &self.world.pairing_list
    }

    pub fn paired(&self, a: ObjectId, b: ObjectId) -> bool {
        self.world.pairings.contains(&(a, b))
    }

    // mutation helpers, crate-internal; callers re-establish invariants

    pub(crate) fn insert_relation(&mut self, rel: Relation) -> bool {
        match self.relations.binary_search(&rel) {
            Ok(_) => false,
            Err(pos) => {
                self.relations.insert(pos, rel);
                true
            }
        }
    }

    pub(crate) fn remove_relation(&mut self, rel: &Relation) -> bool {
        match self.relations.binary_search(rel) {
            Ok(pos) => {
                self.relations.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub(crate) fn retain_relations(&mut self, mut keep: impl FnMut(&Relation) -> bool) -> bool {
        let before = self.relations.len();
        self.relations.retain(|r| keep(r));
        before != self.relations.len()
    }

    pub(crate) fn insert_state(&mut self, id: ObjectId, token: StateToken) -> bool {
        match self.world.index_of(id) {
            Some(ix) => self.states[ix].insert(token),
            None => false,
        }
    }

    pub(crate) fn remove_state(&mut self, id: ObjectId, token: StateToken) -> bool {
        match self.world.index_of(id) {
            Some(ix) => self.states[ix].remove(token),
            None => false,
        }
    }

    /// 128-bit digest of the dynamic content (states and relations).
    ///
    /// Static properties are excluded since no action changes them. Two
    /// independent multiply-rotate lanes; not cryptographic, but collisions
    /// between distinct reachable states are vanishingly unlikely.
    pub fn fingerprint(&self) -> u128 {
        let mut a: u64 = 0x243f_6a88_85a3_08d3;
        let mut b: u64 = 0x1319_8a2e_0370_7344;
        let mut mix = |v: u64| {
            a = (a ^ v).wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(29);
            b = (b.wrapping_add(v) ^ a.rotate_left(17)).wrapping_mul(0xc2b2_ae3d_27d4_eb4f).rotate_left(31);
        };
        for chunk in self.states.chunks(4) {
            let mut word = 0u64;
            for (i, s) in chunk.iter().enumerate() {
                word |= (s.bits() as u64) << (16 * i);
            }
            mix(word);
        }
        mix(self.relations.len() as u64);
        for r in &self.relations {
            mix(((r.subject.0 as u64) << 8) | r.kind as u64);
            mix(r.object.0 as u64);
        }
        ((finalize(b) as u128) << 64) | finalize(a) as u128
    }

    /// Checks every structural invariant; used after loading and in tests.
    pub fn check_invariants(&self) -> Result<(), EnvError> {
        for view in self.objects() {
            for token in view.states.iter() {
                if let Some(prop) = token.required_property() {
                    if !view.node.has_property(prop) {
                        return Err(EnvError::StateWithoutProperty { object: view.id(), token });
                    }
                }
                if let Some(c) = token.complement() {
                    if view.states.contains(c) {
                        return Err(EnvError::ComplementClash { object: view.id(), token });
                    }
                }
            }
        }
        let agent = self.agent_id();
        for rel in &self.relations {
            for end in [rel.subject, rel.object] {
                if !self.contains_object(end) {
                    return Err(EnvError::DanglingEndpoint { relation: rel.to_string(), missing: end });
                }
            }
            if matches!(rel.kind, RelationKind::HoldsRh | RelationKind::HoldsLh) && rel.subject != agent {
                return Err(EnvError::Malformed(format!("{rel}: only the agent can hold objects")));
            }
        }
        for hand in [RelationKind::HoldsRh, RelationKind::HoldsLh] {
            if self.relations_from(agent, hand).len() > 1 {
                return Err(EnvError::HandOverflow(hand));
            }
        }
        if let (Some(r), Some(l)) = (self.held_in(RelationKind::HoldsRh), self.held_in(RelationKind::HoldsLh)) {
            if r == l {
                return Err(EnvError::Malformed(format!("object {r} held in both hands")));
            }
        }
        Ok(())
    }
}

impl PartialEq for EnvironmentState {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.world, &other.world) || self.world == other.world)
            && self.states == other.states
            && self.relations == other.relations
    }
}

impl Eq for EnvironmentState {}

impl fmt::Debug for EnvironmentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnvironmentState")
            .field("objects", &self.object_count())
            .field("relations", &self.relation_count())
            .field("fingerprint", &format_args!("{:032x}", self.fingerprint()))
            .finish()
    }
}

// splitmix64 finalizer
fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
