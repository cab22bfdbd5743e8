use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::des::SimTime;

use super::RadioState;

/// Medium access scheme of one simulation instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MacVariant {
    /// Unslotted CSMA/CA with 802.15.4 default parameters.
    Csma,
    /// Dedicated-slot TDMA, one slot per node in node-id order.
    Tdma,
}

impl MacVariant {
    pub fn label(self) -> &'static str {
        match self {
            MacVariant::Csma => "CSMA",
            MacVariant::Tdma => "TDMA",
        }
    }
}

impl fmt::Display for MacVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MacVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csma" => Ok(MacVariant::Csma),
            "tdma" => Ok(MacVariant::Tdma),
            other => Err(format!(
                "unknown protocol {other:?} (expected csma or tdma)"
            )),
        }
    }
}

/// Radio power draw per state, milliwatts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTable {
    pub tx: f64,
    pub rx: f64,
    pub sleep: f64,
}

impl Default for PowerTable {
    fn default() -> Self {
        PowerTable {
            tx: 36.0,
            rx: 19.0,
            sleep: 0.02,
        }
    }
}

impl PowerTable {
    pub fn draw(&self, state: RadioState) -> f64 {
        match state {
            RadioState::Tx => self.tx,
            RadioState::Rx => self.rx,
            RadioState::Sleep => self.sleep,
        }
    }
}

// 802.15.4 unslotted CSMA/CA defaults.
pub const UNIT_BACKOFF: SimTime = SimTime::from_micros(320);
pub const MAC_MIN_BE: u32 = 3;
pub const MAC_MAX_BE: u32 = 5;
pub const MAC_MAX_CSMA_BACKOFFS: u32 = 4;
pub const MAC_MAX_FRAME_RETRIES: u32 = 3;
/// Rx-to-Tx turnaround after a clear channel assessment (12 symbols).
pub const TURNAROUND: SimTime = SimTime::from_micros(192);

/// Tunable model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    /// Waiting packets per node, excluding the one held by the MAC.
    pub queue_capacity: usize,
    pub range_m: f64,
    pub airtime: SimTime,
    /// TDMA slot length; must fit at least one frame.
    pub slot: SimTime,
    pub power: PowerTable,
    /// Initial mean delay between two generated packets, seconds.
    pub mean_interval: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            queue_capacity: 8,
            range_m: 30.0,
            airtime: SimTime::from_millis(4),
            slot: SimTime::from_millis(8),
            power: PowerTable::default(),
            mean_interval: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid parameter {name}: {reason}")]
pub struct InvalidParams {
    pub name: &'static str,
    pub reason: String,
}

fn invalid(name: &'static str, reason: impl Into<String>) -> InvalidParams {
    InvalidParams {
        name,
        reason: reason.into(),
    }
}

impl SimParams {
    /// Documented ranges: queue 1..=4096, range in (0, 10 km], airtime in
    /// (0, 1 s], slot in [airtime, 10 s], non-negative finite power draws,
    /// positive finite mean interval.
    pub fn validate(&self) -> Result<(), InvalidParams> {
        if !(1..=4096).contains(&self.queue_capacity) {
            return Err(invalid("queue_capacity", "must be in 1..=4096"));
        }
        if !(self.range_m > 0.0 && self.range_m <= 10_000.0) {
            return Err(invalid("range_m", "must be in (0, 10000]"));
        }
        if self.airtime == SimTime::ZERO || self.airtime > SimTime::from_secs(1) {
            return Err(invalid("airtime", "must be in (0, 1 s]"));
        }
        if self.slot < self.airtime || self.slot > SimTime::from_secs(10) {
            return Err(invalid(
                "slot",
                "must be at least one airtime and at most 10 s",
            ));
        }
        for (name, v) in [
            ("power.tx", self.power.tx),
            ("power.rx", self.power.rx),
            ("power.sleep", self.power.sleep),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be finite and non-negative"));
            }
        }
        if !(self.mean_interval > 0.0 && self.mean_interval.is_finite()) {
            return Err(invalid("mean_interval", "must be positive"));
        }
        Ok(())
    }
}
