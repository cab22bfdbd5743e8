use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::des::SimTime;

use super::{NodeId, Position, RadioTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DropReason {
    QueueOverflow,
    ChannelAccessFailure,
    RetryExhausted,
    NoRoute,
}

impl DropReason {
    pub const ALL: [DropReason; 4] = [
        DropReason::QueueOverflow,
        DropReason::ChannelAccessFailure,
        DropReason::RetryExhausted,
        DropReason::NoRoute,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::QueueOverflow => "QUEUE_OVERFLOW",
            DropReason::ChannelAccessFailure => "CHANNEL_ACCESS_FAILURE",
            DropReason::RetryExhausted => "RETRY_EXHAUSTED",
            DropReason::NoRoute => "NO_ROUTE",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropRecord {
    pub time: SimTime,
    pub node: NodeId,
    pub position: Position,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DropCounts {
    pub queue_overflow: u64,
    pub channel_access_failure: u64,
    pub retry_exhausted: u64,
    pub no_route: u64,
}

impl DropCounts {
    pub fn get(&self, reason: DropReason) -> u64 {
        match reason {
            DropReason::QueueOverflow => self.queue_overflow,
            DropReason::ChannelAccessFailure => self.channel_access_failure,
            DropReason::RetryExhausted => self.retry_exhausted,
            DropReason::NoRoute => self.no_route,
        }
    }

    pub fn add(&mut self, reason: DropReason) {
        match reason {
            DropReason::QueueOverflow => self.queue_overflow += 1,
            DropReason::ChannelAccessFailure => self.channel_access_failure += 1,
            DropReason::RetryExhausted => self.retry_exhausted += 1,
            DropReason::NoRoute => self.no_route += 1,
        }
    }

    pub fn total(&self) -> u64 {
        DropReason::ALL.iter().map(|&r| self.get(r)).sum()
    }

    pub fn merge(&mut self, other: &DropCounts) {
        self.queue_overflow += other.queue_overflow;
        self.channel_access_failure += other.channel_access_failure;
        self.retry_exhausted += other.retry_exhausted;
        self.no_route += other.no_route;
    }
}

/// Aggregates of one simulated second `[index, index + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsWindow {
    pub index: u64,
    pub generated: u64,
    pub delivered: u64,
    pub drops: DropCounts,
    /// Mean power per node over the window, milliwatts.
    pub per_node_mw: BTreeMap<NodeId, f64>,
    /// Sum of the per-node means, milliwatts.
    pub total_mw: f64,
    pub radio_time: BTreeMap<NodeId, RadioTime>,
    /// Located drops; only collected while drop-location recording is on.
    pub located: Vec<DropRecord>,
}

/// Whole-run packet bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Totals {
    pub generated: u64,
    pub delivered: u64,
    pub drops: DropCounts,
    pub queued: u64,
    pub in_flight: u64,
}

impl Totals {
    /// `generated = delivered + drops + queued + in_flight`
    pub fn conserved(&self) -> bool {
        self.generated == self.delivered + self.drops.total() + self.queued + self.in_flight
    }
}
