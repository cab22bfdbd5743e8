use serde::{Deserialize, Serialize};

use crate::des::SimTime;

use super::{NodeId, Position};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RadioState {
    Tx,
    /// Receiving or listening.
    Rx,
    Sleep,
}

impl RadioState {
    pub const ALL: [RadioState; 3] = [RadioState::Tx, RadioState::Rx, RadioState::Sleep];
}

/// One frame on the air over the half-open interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub tx: NodeId,
    pub rx: NodeId,
    pub start: SimTime,
    pub end: SimTime,
}

impl Transmission {
    pub fn overlaps(&self, start: SimTime, end: SimTime) -> bool {
        self.start < end && start < self.end
    }

    pub fn active_at(&self, t: SimTime) -> bool {
        self.start <= t && t < self.end
    }
}

/// Unit-disc reception with destructive collisions: the frame arrives iff
/// the receiver is within `range` of the sender and no other node within
/// `range` of the receiver (the receiver itself included) transmits at any
/// overlapping instant.
pub fn link_delivery(
    tx_pos: Position,
    rx_pos: Position,
    range: f64,
    interferers: impl IntoIterator<Item = Position>,
) -> bool {
    tx_pos.distance(&rx_pos) <= range
        && interferers.into_iter().all(|p| p.distance(&rx_pos) > range)
}
