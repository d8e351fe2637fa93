//! Discrete mental-state graph.
//!
//! The graph is a boolean adjacency tensor indexed `[relation][src][dst]`
//! over a fixed entity registry. Entities never change after construction;
//! every update is expressed as a [`GraphDelta`] of ADD/DEL edge operations
//! and returns a new graph value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of an entity inside one graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityId(pub usize);

impl EntityId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Agent,
    Object,
    Room,
    Description,
    Persona,
    Sink,
}

impl EntityKind {
    pub const ALL: [EntityKind; 6] = [
        EntityKind::Agent,
        EntityKind::Object,
        EntityKind::Room,
        EntityKind::Description,
        EntityKind::Persona,
        EntityKind::Sink,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Agent => "agent",
            EntityKind::Object => "object",
            EntityKind::Room => "room",
            EntityKind::Description => "description",
            EntityKind::Persona => "persona",
            EntityKind::Sink => "sink",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Object affordance flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Wearable,
    Food,
    Drink,
    Container,
    Surface,
    Consumed,
}

impl Flag {
    pub const ALL: [Flag; 6] = [
        Flag::Wearable,
        Flag::Food,
        Flag::Drink,
        Flag::Container,
        Flag::Surface,
        Flag::Consumed,
    ];

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Wearable => "wearable",
            Flag::Food => "food",
            Flag::Drink => "drink",
            Flag::Container => "container",
            Flag::Surface => "surface",
            Flag::Consumed => "consumed",
        }
    }

    pub fn parse(s: &str) -> Option<Flag> {
        Flag::ALL.into_iter().find(|f| f.as_str() == s)
    }
}

/// Set of [`Flag`]s, serialized as a sorted list of names.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Flags(u8);

impl Flags {
    pub fn empty() -> Self {
        Flags(0)
    }

    pub fn contains(self, flag: Flag) -> bool {
        self.0 & flag.bit() != 0
    }

    pub fn insert(&mut self, flag: Flag) {
        self.0 |= flag.bit();
    }

    pub fn remove(&mut self, flag: Flag) {
        self.0 &= !flag.bit();
    }

    pub fn with(mut self, flag: Flag) -> Self {
        self.insert(flag);
        self
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Flag> {
        Flag::ALL.into_iter().filter(move |f| self.contains(*f))
    }
}

impl FromIterator<Flag> for Flags {
    fn from_iter<I: IntoIterator<Item = Flag>>(iter: I) -> Self {
        let mut flags = Flags::empty();
        for f in iter {
            flags.insert(f);
        }
        flags
    }
}

impl fmt::Debug for Flags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for Flags {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for Flags {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let list = Vec::<Flag>::deserialize(deserializer)?;
        Ok(list.into_iter().collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entity {
    pub id: EntityId,
    pub name: String,
    pub kind: EntityKind,
    pub flags: Flags,
    /// Free text attached to the node (persona, description, room text).
    pub text: String,
}

/// Named relation vocabulary. Relation slots beyond these six are reserved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Contains,
    Carrying,
    Wearing,
    Wielding,
    HasDescription,
    HasPersona,
}

impl Relation {
    pub const ALL: [Relation; 6] = [
        Relation::Contains,
        Relation::Carrying,
        Relation::Wearing,
        Relation::Wielding,
        Relation::HasDescription,
        Relation::HasPersona,
    ];

    /// Relations that place an object somewhere.
    pub const HOLDERS: [Relation; 4] = [
        Relation::Contains,
        Relation::Carrying,
        Relation::Wearing,
        Relation::Wielding,
    ];

    /// Relations from an agent to something it has on its person.
    pub const POSSESSION: [Relation; 3] = [Relation::Carrying, Relation::Wearing, Relation::Wielding];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Relation> {
        Relation::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Contains => "contains",
            Relation::Carrying => "carrying",
            Relation::Wearing => "wearing",
            Relation::Wielding => "wielding",
            Relation::HasDescription => "has_description",
            Relation::HasPersona => "has_persona",
        }
    }

    pub fn parse(s: &str) -> Option<Relation> {
        Relation::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    /// Maximum number of entities (N).
    pub max_entities: usize,
    /// Number of relation slots (R), at least the six named relations.
    pub relation_slots: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            max_entities: 64,
            relation_slots: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub relation: Relation,
    pub src: EntityId,
    pub dst: EntityId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum OpKind {
    Add,
    Del,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AtomicOp {
    pub kind: OpKind,
    pub src: EntityId,
    pub dst: EntityId,
    pub relation: Relation,
}

impl AtomicOp {
    pub fn add(src: EntityId, dst: EntityId, relation: Relation) -> Self {
        AtomicOp {
            kind: OpKind::Add,
            src,
            dst,
            relation,
        }
    }

    pub fn del(src: EntityId, dst: EntityId, relation: Relation) -> Self {
        AtomicOp {
            kind: OpKind::Del,
            src,
            dst,
            relation,
        }
    }

    pub fn inverse(self) -> Self {
        let kind = match self.kind {
            OpKind::Add => OpKind::Del,
            OpKind::Del => OpKind::Add,
        };
        AtomicOp { kind, ..self }
    }
}

impl fmt::Display for AtomicOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            OpKind::Add => "ADD",
            OpKind::Del => "DEL",
        };
        write!(f, "{kind}(#{}, #{}, {})", self.src.0, self.dst.0, self.relation)
    }
}

/// Ordered sequence of atomic edge operations.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDelta {
    pub ops: Vec<AtomicOp>,
}

impl GraphDelta {
    pub fn new(ops: Vec<AtomicOp>) -> Self {
        GraphDelta { ops }
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Reversed op list with ADD and DEL swapped.
    pub fn invert(&self) -> GraphDelta {
        GraphDelta {
            ops: self.ops.iter().rev().map(|op| op.inverse()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApplyMode {
    /// ADD requires the edge to be absent and DEL requires it present.
    #[default]
    Strict,
    /// Redundant ops are skipped.
    Lenient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Invariant {
    HolderUniqueness,
    Exclusivity,
    RoomSanity,
    Consumed,
    SingleRoom,
    SingleSink,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Invariant::HolderUniqueness => "holder-uniqueness",
            Invariant::Exclusivity => "exclusivity",
            Invariant::RoomSanity => "room-sanity",
            Invariant::Consumed => "consumed",
            Invariant::SingleRoom => "single-room",
            Invariant::SingleSink => "single-sink",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("inapplicable op {op}: {reason}")]
    InapplicableOp { op: AtomicOp, reason: String },
    #[error("invariant {name} violated: {detail}")]
    InvariantViolation { name: Invariant, detail: String },
    #[error("entity cap of {0} exceeded")]
    TooManyEntities(usize),
    #[error("duplicate entity name {0:?}")]
    DuplicateName(String),
    #[error("unknown entity #{0}")]
    UnknownEntity(usize),
    #[error("invalid graph configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed snapshot: {0}")]
    MalformedSnapshot(String),
}

/// Incremental constructor for [`DiscreteGraph`]; validates on [`GraphBuilder::build`].
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    config: GraphConfig,
    entities: Vec<Entity>,
    edges: BTreeSet<Edge>,
    names: BTreeMap<String, EntityId>,
}

impl GraphBuilder {
    pub fn new(config: GraphConfig) -> Self {
        GraphBuilder {
            config,
            entities: Vec::new(),
            edges: BTreeSet::new(),
            names: BTreeMap::new(),
        }
    }

    pub fn entity(&mut self, name: &str, kind: EntityKind) -> Result<EntityId, GraphError> {
        self.entity_with(name, kind, Flags::empty(), "")
    }

    pub fn entity_with(
        &mut self,
        name: &str,
        kind: EntityKind,
        flags: Flags,
        text: &str,
    ) -> Result<EntityId, GraphError> {
        if self.entities.len() >= self.config.max_entities {
            return Err(GraphError::TooManyEntities(self.config.max_entities));
        }
        let name = name.trim().to_lowercase();
        if name.is_empty() {
            return Err(GraphError::DuplicateName(name));
        }
        if self.names.contains_key(&name) {
            return Err(GraphError::DuplicateName(name));
        }
        let id = EntityId(self.entities.len());
        self.names.insert(name.clone(), id);
        self.entities.push(Entity {
            id,
            name,
            kind,
            flags,
            text: text.to_string(),
        });
        Ok(id)
    }

    pub fn edge(&mut self, relation: Relation, src: EntityId, dst: EntityId) -> Result<(), GraphError> {
        for id in [src, dst] {
            if id.0 >= self.entities.len() {
                return Err(GraphError::UnknownEntity(id.0));
            }
        }
        self.edges.insert(Edge { relation, src, dst });
        Ok(())
    }

    pub fn build(self) -> Result<DiscreteGraph, GraphError> {
        if self.config.relation_slots < Relation::ALL.len() {
            return Err(GraphError::InvalidConfig(format!(
                "relation_slots {} < {}",
                self.config.relation_slots,
                Relation::ALL.len()
            )));
        }
        let n = self.entities.len();
        let mut graph = DiscreteGraph {
            config: self.config,
            adjacency: vec![false; self.config.relation_slots * n * n],
            room: None,
            sink: None,
            entities: self.entities,
            names: self.names,
        };
        for e in &self.edges {
            graph.set(e.relation, e.src, e.dst, true);
        }
        graph.locate_special()?;
        graph.check_invariants()?;
        Ok(graph)
    }
}

/// Boolean typed adjacency over a fixed entity registry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteGraph {
    config: GraphConfig,
    entities: Vec<Entity>,
    adjacency: Vec<bool>,
    names: BTreeMap<String, EntityId>,
    room: Option<EntityId>,
    sink: Option<EntityId>,
}

impl DiscreteGraph {
    pub fn empty(config: GraphConfig) -> Self {
        DiscreteGraph {
            config,
            entities: Vec::new(),
            adjacency: Vec::new(),
            names: BTreeMap::new(),
            room: None,
            sink: None,
        }
    }

    pub fn config(&self) -> GraphConfig {
        self.config
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn entity(&self, id: EntityId) -> &Entity {
        &self.entities[id.0]
    }

    pub fn get_entity(&self, id: EntityId) -> Option<&Entity> {
        self.entities.get(id.0)
    }

    pub fn kind(&self, id: EntityId) -> EntityKind {
        self.entities[id.0].kind
    }

    pub fn name(&self, id: EntityId) -> &str {
        &self.entities[id.0].name
    }

    pub fn find(&self, name: &str) -> Option<EntityId> {
        self.names.get(name).copied()
    }

    pub fn room(&self) -> Option<EntityId> {
        self.room
    }

    pub fn sink(&self) -> Option<EntityId> {
        self.sink
    }

    pub fn ids_of_kind(&self, kind: EntityKind) -> impl Iterator<Item = EntityId> + '_ {
        self.entities.iter().filter(move |e| e.kind == kind).map(|e| e.id)
    }

    #[inline]
    fn offset(&self, relation: Relation, src: EntityId, dst: EntityId) -> usize {
        let n = self.entities.len();
        (relation.index() * n + src.0) * n + dst.0
    }

    pub fn has_edge(&self, relation: Relation, src: EntityId, dst: EntityId) -> bool {
        if src.0 >= self.len() || dst.0 >= self.len() {
            return false;
        }
        self.adjacency[self.offset(relation, src, dst)]
    }

    fn set(&mut self, relation: Relation, src: EntityId, dst: EntityId, value: bool) {
        let off = self.offset(relation, src, dst);
        self.adjacency[off] = value;
    }

    /// All edges in (relation, src, dst) order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let n = self.len();
        Relation::ALL.into_iter().flat_map(move |relation| {
            (0..n).flat_map(move |s| {
                (0..n).filter_map(move |d| {
                    let (src, dst) = (EntityId(s), EntityId(d));
                    self.has_edge(relation, src, dst).then_some(Edge { relation, src, dst })
                })
            })
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().filter(|b| **b).count()
    }

    /// Entities that hold `object` through a holder relation.
    pub fn holders(&self, object: EntityId) -> Vec<(Relation, EntityId)> {
        let mut out = Vec::new();
        for relation in Relation::HOLDERS {
            for s in 0..self.len() {
                if self.has_edge(relation, EntityId(s), object) {
                    out.push((relation, EntityId(s)));
                }
            }
        }
        out
    }

    /// Targets of `relation` edges leaving `src`.
    pub fn targets(&self, relation: Relation, src: EntityId) -> impl Iterator<Item = EntityId> + '_ {
        (0..self.len())
            .map(EntityId)
            .filter(move |d| self.has_edge(relation, src, *d))
    }

    pub fn is_consumed(&self, id: EntityId) -> bool {
        self.entities[id.0].flags.contains(Flag::Consumed)
    }

    fn locate_special(&mut self) -> Result<(), GraphError> {
        let rooms: Vec<_> = self.ids_of_kind(EntityKind::Room).collect();
        let sinks: Vec<_> = self.ids_of_kind(EntityKind::Sink).collect();
        if rooms.len() > 1 {
            return Err(GraphError::InvariantViolation {
                name: Invariant::SingleRoom,
                detail: format!("{} room entities", rooms.len()),
            });
        }
        if sinks.len() > 1 {
            return Err(GraphError::InvariantViolation {
                name: Invariant::SingleSink,
                detail: format!("{} sink entities", sinks.len()),
            });
        }
        self.room = rooms.first().copied();
        self.sink = sinks.first().copied();
        Ok(())
    }

    /// Checks every graph invariant in O(R·N²).
    pub fn check_invariants(&self) -> Result<(), GraphError> {
        let n = self.len();
        let violation = |name: Invariant, detail: String| Err(GraphError::InvariantViolation { name, detail });
        for dst in 0..n {
            let dst_id = EntityId(dst);
            let mut holders = 0;
            let mut possessors: BTreeMap<usize, usize> = BTreeMap::new();
            let mut sink_holds = false;
            for relation in Relation::HOLDERS {
                for src in 0..n {
                    if !self.has_edge(relation, EntityId(src), dst_id) {
                        continue;
                    }
                    holders += 1;
                    if relation == Relation::Contains && Some(EntityId(src)) == self.sink {
                        sink_holds = true;
                    }
                    if relation != Relation::Contains {
                        *possessors.entry(src).or_default() += 1;
                        if self.entities[dst].kind == EntityKind::Room {
                            return violation(
                                Invariant::RoomSanity,
                                format!("room {:?} is the target of {relation}", self.entities[dst].name),
                            );
                        }
                    }
                }
            }
            if possessors.values().any(|c| *c > 1) {
                return violation(
                    Invariant::Exclusivity,
                    format!(
                        "{:?} is held through several possession relations",
                        self.entities[dst].name
                    ),
                );
            }
            let entity = &self.entities[dst];
            if entity.kind == EntityKind::Object && holders > 1 {
                return violation(
                    Invariant::HolderUniqueness,
                    format!("object {:?} has {holders} holders", entity.name),
                );
            }
            let consumed = entity.flags.contains(Flag::Consumed);
            if consumed != sink_holds {
                return violation(
                    Invariant::Consumed,
                    format!(
                        "{:?}: consumed flag {consumed} but sink containment {sink_holds}",
                        entity.name
                    ),
                );
            }
            if consumed && holders != 1 {
                return violation(
                    Invariant::Consumed,
                    format!("consumed {:?} has {holders} holders", entity.name),
                );
            }
        }
        Ok(())
    }

    /// Applies `delta` to a copy of this graph.
    pub fn apply_delta(&self, delta: &GraphDelta, mode: ApplyMode) -> Result<DiscreteGraph, GraphError> {
        let mut next = self.clone();
        for op in &delta.ops {
            if op.src.0 >= next.len() {
                return Err(GraphError::UnknownEntity(op.src.0));
            }
            if op.dst.0 >= next.len() {
                return Err(GraphError::UnknownEntity(op.dst.0));
            }
            let present = next.has_edge(op.relation, op.src, op.dst);
            let target = match op.kind {
                OpKind::Add => true,
                OpKind::Del => false,
            };
            if present == target {
                match mode {
                    ApplyMode::Lenient => continue,
                    ApplyMode::Strict => {
                        let reason = if present { "edge already present" } else { "edge absent" };
                        return Err(GraphError::InapplicableOp {
                            op: *op,
                            reason: reason.to_string(),
                        });
                    }
                }
            }
            next.set(op.relation, op.src, op.dst, target);
            if op.relation == Relation::Contains && Some(op.src) == next.sink {
                let flags = &mut next.entities[op.dst.0].flags;
                if target {
                    flags.insert(Flag::Consumed);
                } else {
                    flags.remove(Flag::Consumed);
                }
            }
        }
        next.check_invariants()?;
        Ok(next)
    }

    /// Equality up to entity numbering: same entities by (kind, name, flags,
    /// text) and same edges by endpoint names.
    pub fn structurally_eq(&self, other: &DiscreteGraph) -> bool {
        fn entity_set(g: &DiscreteGraph) -> BTreeSet<(EntityKind, &str, Flags, &str)> {
            g.entities
                .iter()
                .map(|e| (e.kind, e.name.as_str(), e.flags, e.text.as_str()))
                .collect()
        }
        fn edge_set(g: &DiscreteGraph) -> BTreeSet<(Relation, &str, &str)> {
            g.edges().map(|e| (e.relation, g.name(e.src), g.name(e.dst))).collect()
        }
        self.len() == other.len() && entity_set(self) == entity_set(other) && edge_set(self) == edge_set(other)
    }

    /// Human-readable edge list, e.g. `carrying(king, scepter)`.
    pub fn describe_edges(&self) -> Vec<String> {
        self.edges()
            .map(|e| format!("{}({}, {})", e.relation, self.name(e.src), self.name(e.dst)))
            .collect()
    }

    pub fn describe_op(&self, op: &AtomicOp) -> String {
        let kind = match op.kind {
            OpKind::Add => "ADD",
            OpKind::Del => "DEL",
        };
        format!("{kind}({}, {}, {})", self.name(op.src), self.name(op.dst), op.relation)
    }
}
