use std::collections::{BTreeMap, VecDeque};

use super::{NodeId, Topology};

/// Hop-count shortest-path tree toward the sink over the unit-disc graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingTree {
    sink: NodeId,
    /// `None` for the sink and for nodes that cannot reach it.
    parent: BTreeMap<NodeId, Option<NodeId>>,
    hops: BTreeMap<NodeId, u32>,
}

impl RoutingTree {
    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.parent.get(&node).copied().flatten()
    }

    pub fn hops(&self, node: NodeId) -> Option<u32> {
        self.hops.get(&node).copied()
    }

    /// The sink routes to itself; everything else needs a parent.
    pub fn has_route(&self, node: NodeId) -> bool {
        node == self.sink || self.parent(node).is_some()
    }

    pub fn is_parent(&self, node: NodeId) -> bool {
        self.parent.values().any(|p| *p == Some(node))
    }

    pub fn parents(&self) -> &BTreeMap<NodeId, Option<NodeId>> {
        &self.parent
    }
}

/// Breadth-first search from the sink; each node's parent is the
/// lowest-id neighbour one hop closer to the sink.
pub fn compute_routes(topology: &Topology, range: f64) -> RoutingTree {
    let sink = topology.sink();
    let mut ids: Vec<NodeId> = topology.nodes.iter().map(|n| n.id).collect();
    ids.sort_unstable();
    let pos = &topology.positions();
    let ids = &ids;
    let neighbours = |a: NodeId| {
        let pa = pos[&a];
        ids.iter()
            .copied()
            .filter(move |&b| b != a && pa.distance(&pos[&b]) <= range)
    };

    let mut hops: BTreeMap<NodeId, u32> = BTreeMap::new();
    let mut parent: BTreeMap<NodeId, Option<NodeId>> = ids.iter().map(|&id| (id, None)).collect();
    hops.insert(sink, 0);
    let mut frontier = VecDeque::from([sink]);
    while let Some(u) = frontier.pop_front() {
        let h = hops[&u];
        for v in neighbours(u) {
            if let std::collections::btree_map::Entry::Vacant(e) = hops.entry(v) {
                e.insert(h + 1);
                frontier.push_back(v);
            }
        }
    }
    for &id in ids {
        if id == sink {
            continue;
        }
        if let Some(&h) = hops.get(&id) {
            parent.insert(
                id,
                neighbours(id)
                    .filter(|n| hops.get(n) == Some(&(h - 1)))
                    .min(),
            );
        }
    }
    RoutingTree { sink, parent, hops }
}
