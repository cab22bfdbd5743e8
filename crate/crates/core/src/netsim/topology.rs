use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One node as it appears in a preset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub sink: bool,
}

impl NodeSpec {
    pub fn position(&self) -> Position {
        Position::new(self.x, self.y)
    }
}

/// Node placement on the plane. Serialises as the preset-file document
/// `{"name": .., "nodes": [{"id", "x", "y", "sink"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub name: String,
    pub nodes: Vec<NodeSpec>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("topology has no nodes")]
    Empty,
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),
    #[error("topology must have exactly one sink, found {0}")]
    SinkCount(usize),
    #[error("node {0} has a non-finite coordinate")]
    NonFinite(NodeId),
    #[error("malformed topology document: {0}")]
    Parse(String),
}

impl Topology {
    pub fn from_json(text: &str) -> Result<Self, TopologyError> {
        let topo: Topology =
            serde_json::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))?;
        topo.validate()?;
        Ok(topo)
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.nodes.is_empty() {
            return Err(TopologyError::Empty);
        }
        let mut seen = HashSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id) {
                return Err(TopologyError::DuplicateId(n.id));
            }
            if !(n.x.is_finite() && n.y.is_finite()) {
                return Err(TopologyError::NonFinite(n.id));
            }
        }
        let sinks = self.nodes.iter().filter(|n| n.sink).count();
        if sinks != 1 {
            return Err(TopologyError::SinkCount(sinks));
        }
        Ok(())
    }

    pub fn sink(&self) -> NodeId {
        self.nodes
            .iter()
            .find(|n| n.sink)
            .map(|n| n.id)
            .expect("validated topology has a sink")
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut NodeSpec> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    pub fn positions(&self) -> BTreeMap<NodeId, Position> {
        self.nodes.iter().map(|n| (n.id, n.position())).collect()
    }

    /// Star around a central sink: node 0 at the origin, `leaves` nodes on a
    /// circle of the given radius.
    pub fn star(leaves: u32, radius: f64) -> Self {
        let mut nodes = vec![NodeSpec {
            id: 0,
            x: 0.0,
            y: 0.0,
            sink: true,
        }];
        for k in 0..leaves {
            let a = std::f64::consts::TAU * f64::from(k) / f64::from(leaves);
            nodes.push(NodeSpec {
                id: k + 1,
                x: radius * a.cos(),
                y: radius * a.sin(),
                sink: false,
            });
        }
        Topology {
            name: format!("star{}", leaves + 1),
            nodes,
        }
    }
}

const BUILTIN: [(&str, &str); 3] = [
    ("line", include_str!("../../presets/line.json")),
    ("grid", include_str!("../../presets/grid.json")),
    ("star", include_str!("../../presets/star.json")),
];

/// Named topologies a running simulation can switch between.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PresetLibrary {
    presets: BTreeMap<String, Topology>,
}

impl PresetLibrary {
    /// The shipped `line`, `grid` and `star` presets (15 nodes, sink 0).
    pub fn builtin() -> Self {
        let mut lib = PresetLibrary::default();
        for (name, text) in BUILTIN {
            let topo = Topology::from_json(text).expect("builtin preset parses");
            debug_assert_eq!(topo.name, name);
            lib.insert(topo);
        }
        lib
    }

    pub fn insert(&mut self, topology: Topology) {
        self.presets.insert(topology.name.clone(), topology);
    }

    pub fn get(&self, name: &str) -> Option<&Topology> {
        self.presets.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.presets.keys().map(String::as_str)
    }
}
