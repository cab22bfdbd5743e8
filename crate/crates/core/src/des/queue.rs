use std::collections::BTreeMap;

use super::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("cannot schedule at {at} before now ({now})")]
pub struct SchedulingInPast {
    pub at: SimTime,
    pub now: SimTime,
}

/// Identifies a scheduled event for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventHandle {
    time: SimTime,
    seq: u64,
    epoch: u64,
}

impl EventHandle {
    pub fn time(&self) -> SimTime {
        self.time
    }
}

/// A fired event as handed to the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Fired<E> {
    pub time: SimTime,
    pub seq: u64,
    pub event: E,
}

/// Pending events ordered by `(time, sequence)` plus the simulation clock.
///
/// A restart empties the queue, rewinds the clock to zero and begins a new
/// epoch; handles from earlier epochs no longer cancel anything.
#[derive(Debug)]
pub struct Scheduler<E> {
    now: SimTime,
    next_seq: u64,
    epoch: u64,
    pending: BTreeMap<(SimTime, u64), E>,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Scheduler {
            now: SimTime::ZERO,
            next_seq: 0,
            epoch: 0,
            pending: BTreeMap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn schedule(&mut self, at: SimTime, event: E) -> Result<EventHandle, SchedulingInPast> {
        if at < self.now {
            return Err(SchedulingInPast { at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.pending.insert((at, seq), event);
        Ok(EventHandle {
            time: at,
            seq,
            epoch: self.epoch,
        })
    }

    pub fn schedule_in(&mut self, delay: SimTime, event: E) -> EventHandle {
        self.schedule(self.now + delay, event)
            .expect("a non-negative delay is never in the past")
    }

    /// True iff the event was pending and has been removed.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        handle.epoch == self.epoch && self.pending.remove(&(handle.time, handle.seq)).is_some()
    }

    pub fn is_pending(&self, handle: EventHandle) -> bool {
        handle.epoch == self.epoch && self.pending.contains_key(&(handle.time, handle.seq))
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.pending.keys().next().map(|(t, _)| *t)
    }

    /// Removes the earliest event and advances the clock to its time.
    pub fn pop(&mut self) -> Option<Fired<E>> {
        let ((time, seq), event) = self.pending.pop_first()?;
        debug_assert!(time >= self.now);
        self.now = time;
        Some(Fired { time, seq, event })
    }

    /// Pops the earliest event only if it fires at or before `limit`.
    pub fn pop_until(&mut self, limit: SimTime) -> Option<Fired<E>> {
        match self.peek_time() {
            Some(t) if t <= limit => self.pop(),
            _ => None,
        }
    }

    /// Moves the clock forward without firing anything. Never moves it back,
    /// and never past the next pending event.
    pub fn advance_to(&mut self, t: SimTime) {
        let bound = self.peek_time().map_or(t, |next| next.min(t));
        if bound > self.now {
            self.now = bound;
        }
    }

    pub fn restart(&mut self) {
        self.pending.clear();
        self.now = SimTime::ZERO;
        self.next_seq = 0;
        self.epoch += 1;
    }
}
