//! Canonical JSON snapshots of [`DiscreteGraph`].
//!
//! Entities are written sorted by `(kind, name)` and edges sorted
//! lexicographically, so structurally equal graphs serialize to identical
//! bytes regardless of construction order.

use serde::{Deserialize, Serialize};

use crate::graph::{DiscreteGraph, EntityKind, Flags, GraphBuilder, GraphConfig, GraphError, Relation};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotDoc {
    version: u32,
    entities: Vec<SnapshotEntity>,
    edges: Vec<(String, String, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotEntity {
    name: String,
    kind: EntityKind,
    flags: Flags,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    text: String,
}

impl DiscreteGraph {
    /// Canonical byte encoding.
    pub fn snapshot(&self) -> Vec<u8> {
        let mut entities: Vec<_> = self
            .entities()
            .iter()
            .map(|e| SnapshotEntity {
                name: e.name.clone(),
                kind: e.kind,
                flags: e.flags,
                text: e.text.clone(),
            })
            .collect();
        entities.sort_by(|a, b| (a.kind, &a.name).cmp(&(b.kind, &b.name)));
        let mut edges: Vec<_> = self
            .edges()
            .map(|e| {
                (
                    e.relation.as_str().to_string(),
                    self.name(e.src).to_string(),
                    self.name(e.dst).to_string(),
                )
            })
            .collect();
        edges.sort();
        let doc = SnapshotDoc {
            version: SNAPSHOT_VERSION,
            entities,
            edges,
        };
        serde_json::to_vec(&doc).expect("snapshot serialization is infallible")
    }

    pub fn restore(bytes: &[u8]) -> Result<DiscreteGraph, GraphError> {
        DiscreteGraph::restore_with(bytes, GraphConfig::default())
    }

    /// Rebuilds a graph from [`DiscreteGraph::snapshot`] output. The result
    /// uses canonical entity numbering.
    pub fn restore_with(bytes: &[u8], config: GraphConfig) -> Result<DiscreteGraph, GraphError> {
        let malformed = |msg: String| GraphError::MalformedSnapshot(msg);
        let doc: SnapshotDoc = serde_json::from_slice(bytes).map_err(|e| malformed(e.to_string()))?;
        if doc.version != SNAPSHOT_VERSION {
            return Err(malformed(format!("unsupported version {}", doc.version)));
        }
        let mut builder = GraphBuilder::new(config);
        for e in &doc.entities {
            if e.name != e.name.trim().to_lowercase() {
                return Err(malformed(format!("non-canonical name {:?}", e.name)));
            }
            builder
                .entity_with(&e.name, e.kind, e.flags, &e.text)
                .map_err(|err| malformed(err.to_string()))?;
        }
        let lookup: std::collections::BTreeMap<&str, usize> = doc
            .entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.name.as_str(), i))
            .collect();
        for (rel, src, dst) in &doc.edges {
            let relation = Relation::parse(rel).ok_or_else(|| malformed(format!("unknown relation {rel:?}")))?;
            let s = lookup
                .get(src.as_str())
                .ok_or_else(|| malformed(format!("edge source {src:?} is not an entity")))?;
            let d = lookup
                .get(dst.as_str())
                .ok_or_else(|| malformed(format!("edge target {dst:?} is not an entity")))?;
            builder
                .edge(relation, crate::graph::EntityId(*s), crate::graph::EntityId(*d))
                .map_err(|err| malformed(err.to_string()))?;
        }
        builder.build().map_err(|err| malformed(err.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Flag, GraphBuilder};

    #[test]
    fn empty_graph_is_header_only() {
        let g = DiscreteGraph::empty(GraphConfig::default());
        let bytes = g.snapshot();
        assert_eq!(
            std::str::from_utf8(&bytes).unwrap(),
            r#"{"version":1,"entities":[],"edges":[]}"#
        );
        let back = DiscreteGraph::restore(&bytes).unwrap();
        assert!(back.structurally_eq(&g));
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let mut a = GraphBuilder::new(GraphConfig::default());
        let room = a.entity("hall", EntityKind::Room).unwrap();
        let cup = a
            .entity_with("cup", EntityKind::Object, Flags::empty().with(Flag::Drink), "")
            .unwrap();
        a.edge(Relation::Contains, room, cup).unwrap();
        let mut b = GraphBuilder::new(GraphConfig::default());
        let cup2 = b
            .entity_with("cup", EntityKind::Object, Flags::empty().with(Flag::Drink), "")
            .unwrap();
        let room2 = b.entity("hall", EntityKind::Room).unwrap();
        b.edge(Relation::Contains, room2, cup2).unwrap();
        let (a, b) = (a.build().unwrap(), b.build().unwrap());
        assert_ne!(a, b);
        assert!(a.structurally_eq(&b));
        assert_eq!(a.snapshot(), b.snapshot());
    }

    #[test]
    fn malformed_inputs_rejected() {
        for bad in [
            &b"not json"[..],
            br#"{"version":2,"entities":[],"edges":[]}"#,
            br#"{"version":1,"entities":[],"edges":[["contains","a","b"]]}"#,
            br#"{"version":1,"entities":[{"name":"a","kind":"room","flags":[]},{"name":"b","kind":"object","flags":[]}],"edges":[["hugging","a","b"]]}"#,
            br#"{"version":1,"entities":[{"name":"a","kind":"dragon","flags":[]}],"edges":[]}"#,
            br#"{"version":1,"entities":[{"name":"a","kind":"object","flags":["consumed"]}],"edges":[]}"#,
        ] {
            assert!(
                matches!(DiscreteGraph::restore(bad), Err(GraphError::MalformedSnapshot(_))),
                "{}",
                String::from_utf8_lossy(bad)
            );
        }
    }
}
