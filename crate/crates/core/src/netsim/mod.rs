//! Sensor network model: unit-disc radio, shortest-path routing to one
//! sink, Poisson traffic, and two MAC variants.

mod params;
mod power;
mod radio;
mod routing;
mod sim;
mod stats;
mod topology;

pub use params::{
    InvalidParams, MacVariant, PowerTable, SimParams, MAC_MAX_BE, MAC_MAX_CSMA_BACKOFFS,
    MAC_MAX_FRAME_RETRIES, MAC_MIN_BE, TURNAROUND, UNIT_BACKOFF,
};
pub use power::{RadioMeter, RadioTime, TimeRegression};
pub use radio::{link_delivery, RadioState, Transmission};
pub use routing::{compute_routes, RoutingTree};
pub use sim::{
    BuildError, Command, CommandError, DeliveryRecord, Event, NodeView, Packet, Recording,
    SimError, Simulation, TraceEntry,
};
pub use stats::{DropCounts, DropReason, DropRecord, StatsWindow, Totals};
pub use topology::{NodeId, NodeSpec, Position, PresetLibrary, Topology, TopologyError};
