use serde::{Deserialize, Serialize};

use crate::des::SimTime;

use super::{PowerTable, RadioState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("radio state change at {at} precedes state entry at {entered}")]
pub struct TimeRegression {
    pub at: SimTime,
    pub entered: SimTime,
}

/// Nanoseconds spent in each radio state during one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RadioTime {
    pub tx_ns: u64,
    pub rx_ns: u64,
    pub sleep_ns: u64,
}

impl RadioTime {
    pub fn total(&self) -> SimTime {
        SimTime::from_nanos(self.tx_ns + self.rx_ns + self.sleep_ns)
    }

    fn add(&mut self, state: RadioState, ns: u64) {
        match state {
            RadioState::Tx => self.tx_ns += ns,
            RadioState::Rx => self.rx_ns += ns,
            RadioState::Sleep => self.sleep_ns += ns,
        }
    }

    pub fn get(&self, state: RadioState) -> u64 {
        match state {
            RadioState::Tx => self.tx_ns,
            RadioState::Rx => self.rx_ns,
            RadioState::Sleep => self.sleep_ns,
        }
    }

    /// Energy in millijoules under the given draw table.
    pub fn energy_mj(&self, table: &PowerTable) -> f64 {
        RadioState::ALL
            .iter()
            .map(|&s| self.get(s) as f64 / 1e9 * table.draw(s))
            .sum()
    }
}

/// Tracks one radio's current state and the time it accrued per state
/// since the last window roll.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioMeter {
    state: RadioState,
    entered: SimTime,
    window: RadioTime,
}

impl RadioMeter {
    pub fn new(state: RadioState, at: SimTime) -> Self {
        RadioMeter {
            state,
            entered: at,
            window: RadioTime::default(),
        }
    }

    pub fn state(&self) -> RadioState {
        self.state
    }

    /// Books the time since the last change to the old state, then switches.
    pub fn account_power(
        &mut self,
        new_state: RadioState,
        at: SimTime,
    ) -> Result<(), TimeRegression> {
        if at < self.entered {
            return Err(TimeRegression {
                at,
                entered: self.entered,
            });
        }
        self.window.add(self.state, (at - self.entered).as_nanos());
        self.state = new_state;
        self.entered = at;
        Ok(())
    }

    /// Closes the open interval at `at` and returns the window's totals.
    pub fn roll(&mut self, at: SimTime) -> Result<RadioTime, TimeRegression> {
        self.account_power(self.state, at)?;
        Ok(std::mem::take(&mut self.window))
    }

    pub fn energy_mj(&self, table: &PowerTable) -> f64 {
        self.window.energy_mj(table)
    }
}
