//! Live-steerable discrete-event simulation of a sensor network, with an
//! embedded WAMP endpoint for remote control and per-second statistics.
//!
//! - [`wire`]: the WAMP message subset, its JSON codec and session FSM.
//! - [`des`]: the event kernel, simulated time and named random streams.
//! - [`netsim`]: topology, routing, CSMA/CA and TDMA MACs, power accounting.
//! - [`endpoint`]: router, WebSocket server and client peer.
//! - [`control`]: the procedure and topic catalogue binding the two.

pub mod control;
pub mod des;
pub mod endpoint;
pub mod netsim;
pub mod wire;

pub use des::{Kernel, SimTime};
pub use netsim::{MacVariant, SimParams, Simulation, StatsWindow, Topology};
pub use wire::WampMessage;
