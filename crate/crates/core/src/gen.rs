//! Random valid worlds and applicable deltas, for property tests and
//! synthetic data.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::actions::{effects, enumerate_feasible};
use crate::graph::{
    ApplyMode, DiscreteGraph, EntityId, EntityKind, Flag, Flags, GraphBuilder, GraphConfig, GraphDelta, Relation,
};

pub const OBJECT_NAMES: [&str; 24] = [
    "scepter", "crown", "apple", "goblet", "cloak", "chest", "table", "bread", "wine", "sword", "shield", "ring",
    "lantern", "basket", "shelf", "cheese", "potion", "boots", "hat", "barrel", "rope", "book", "bowl", "amulet",
];

pub const AGENT_NAMES: [&str; 10] = [
    "king", "servant", "wizard", "guard", "merchant", "knight", "priest", "thief", "farmer", "queen",
];

pub const ROOM_NAMES: [&str; 6] = ["palace", "tavern", "forest", "dungeon", "market", "chapel"];

#[derive(Clone, Copy, Debug)]
pub struct WorldShape {
    pub agents: usize,
    pub max_objects: usize,
    /// Probability that an agent is inside the room.
    pub presence: f64,
}

impl Default for WorldShape {
    fn default() -> Self {
        WorldShape {
            agents: 3,
            max_objects: 6,
            presence: 0.85,
        }
    }
}

fn random_flags<R: Rng>(rng: &mut R) -> Flags {
    let mut flags = Flags::empty();
    for f in [Flag::Wearable, Flag::Food, Flag::Drink, Flag::Container, Flag::Surface] {
        if rng.gen_bool(0.3) {
            flags.insert(f);
        }
    }
    flags
}

/// A random graph satisfying every invariant: one room, one sink, some agents
/// (not necessarily present) and objects held by the room, an agent, a
/// previously created object, or the sink.
pub fn random_world<R: Rng>(rng: &mut R, shape: WorldShape) -> DiscreteGraph {
    let mut b = GraphBuilder::new(GraphConfig::default());
    let room = b
        .entity(ROOM_NAMES.choose(rng).expect("non-empty"), EntityKind::Room)
        .expect("fresh builder");
    let sink = b.entity("consumed", EntityKind::Sink).expect("unique");
    let mut agent_names = AGENT_NAMES.to_vec();
    agent_names.shuffle(rng);
    let mut agents = Vec::new();
    for name in agent_names.iter().take(shape.agents.max(1)) {
        let id = b.entity(name, EntityKind::Agent).expect("unique");
        if rng.gen_bool(shape.presence) {
            b.edge(Relation::Contains, room, id).expect("known");
        }
        agents.push(id);
    }
    let mut object_names = OBJECT_NAMES.to_vec();
    object_names.shuffle(rng);
    let n_objects = rng.gen_range(0..=shape.max_objects);
    let mut objects: Vec<EntityId> = Vec::new();
    for name in object_names.iter().take(n_objects) {
        let mut flags = random_flags(rng);
        let holder = rng.gen_range(0..10);
        let (relation, src) = match holder {
            0..=2 => (Some(Relation::Contains), room),
            3..=6 => {
                let rel = *Relation::POSSESSION.choose(rng).expect("non-empty");
                (Some(rel), *agents.choose(rng).expect("non-empty"))
            }
            7 if !objects.is_empty() => (Some(Relation::Contains), *objects.choose(rng).expect("non-empty")),
            8 => {
                flags.insert(Flag::Consumed);
                (Some(Relation::Contains), sink)
            }
            _ => (None, room),
        };
        let id = b.entity_with(name, EntityKind::Object, flags, "").expect("unique");
        if let Some(rel) = relation {
            b.edge(rel, src, id).expect("known");
        }
        objects.push(id);
    }
    b.build().expect("generator respects invariants")
}

/// Concatenated effects of up to `steps` random feasible actions by random
/// agents. The result is applicable to `graph` in strict mode.
pub fn random_action_delta<R: Rng>(rng: &mut R, graph: &DiscreteGraph, steps: usize) -> GraphDelta {
    let agents: Vec<EntityId> = graph.ids_of_kind(EntityKind::Agent).collect();
    let mut current = graph.clone();
    let mut ops = Vec::new();
    for _ in 0..steps {
        let Some(&actor) = agents.choose(rng) else { break };
        let options: Vec<_> = enumerate_feasible(actor, &current).into_iter().collect();
        let Some(action) = options.choose(rng) else { continue };
        let delta = effects(action, &current).expect("enumerated actions are feasible");
        current = current
            .apply_delta(&delta, ApplyMode::Strict)
            .expect("feasible effects apply");
        ops.extend(delta.ops);
    }
    GraphDelta::new(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_worlds_are_valid_and_varied() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut sizes = std::collections::BTreeSet::new();
        for _ in 0..200 {
            let g = random_world(&mut rng, WorldShape::default());
            g.check_invariants().unwrap();
            sizes.insert(g.len());
        }
        assert!(sizes.len() > 3);
    }

    #[test]
    fn action_deltas_apply_strictly() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let g = random_world(&mut rng, WorldShape::default());
            let d = random_action_delta(&mut rng, &g, 5);
            g.apply_delta(&d, ApplyMode::Strict).unwrap();
        }
    }
}
