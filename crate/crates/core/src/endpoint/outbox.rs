use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outgoing {
    Frame(String),
    /// Flush what precedes and close the transport.
    Close,
}

#[derive(Debug, Default)]
struct State {
    queue: VecDeque<(bool, Outgoing)>,
    events: usize,
    dropped: u64,
    closed: bool,
}

/// Per-session outbound queue. EVENT frames are bounded; when the bound is
/// hit the oldest queued EVENT is discarded. Replies are never dropped.
#[derive(Debug, Default)]
pub struct Outbox {
    state: Mutex<State>,
    ready: Condvar,
}

impl Outbox {
    pub const EVENT_CAPACITY: usize = 256;

    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn push_reply(&self, text: String) {
        self.push(false, Outgoing::Frame(text));
    }

    pub fn push_event(&self, text: String) {
        self.push(true, Outgoing::Frame(text));
    }

    pub fn push_close(&self) {
        self.push(false, Outgoing::Close);
    }

    fn push(&self, event: bool, item: Outgoing) {
        let mut s = self.lock();
        if s.closed {
            return;
        }
        if event {
            if s.events >= Self::EVENT_CAPACITY {
                if let Some(oldest) = s.queue.iter().position(|(e, _)| *e) {
                    s.queue.remove(oldest);
                    s.events -= 1;
                    s.dropped += 1;
                }
            }
            s.events += 1;
        }
        if item == Outgoing::Close {
            s.closed = true;
        }
        s.queue.push_back((event, item));
        self.ready.notify_all();
    }

    pub fn try_pop(&self) -> Option<Outgoing> {
        let mut s = self.lock();
        let (event, item) = s.queue.pop_front()?;
        if event {
            s.events -= 1;
        }
        Some(item)
    }

    /// Waits up to `timeout` for an item.
    pub fn pop_timeout(&self, timeout: Duration) -> Option<Outgoing> {
        let s = self.lock();
        let (mut s, _) = self
            .ready
            .wait_timeout_while(s, timeout, |s| s.queue.is_empty())
            .unwrap_or_else(|e| e.into_inner());
        let (event, item) = s.queue.pop_front()?;
        if event {
            s.events -= 1;
        }
        Some(item)
    }

    pub fn len(&self) -> usize {
        self.lock().queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// EVENT frames discarded because the session fell behind.
    pub fn dropped_events(&self) -> u64 {
        self.lock().dropped
    }

    pub fn is_closed(&self) -> bool {
        self.lock().closed
    }
}
