use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::{Fired, Scheduler, SchedulingInPast, SimTime};

/// Longest the paced loop blocks before re-checking the stop signal.
const IDLE_POLL: Duration = Duration::from_millis(20);

/// A simulation model driven by [`Kernel`].
pub trait Model {
    type Event;
    type Command;
    type Error: From<SchedulingInPast>;

    /// Schedules the initial events. Called once by [`Kernel::new`].
    fn start(&mut self, sched: &mut Scheduler<Self::Event>);

    fn handle_event(
        &mut self,
        fired: Fired<Self::Event>,
        sched: &mut Scheduler<Self::Event>,
    ) -> Result<(), Self::Error>;

    /// Applies an external command at the current simulated time.
    fn handle_command(
        &mut self,
        cmd: Self::Command,
        sched: &mut Scheduler<Self::Event>,
    ) -> Result<(), Self::Error>;
}

/// Cooperative stop request shared between the loop and its owner.
#[derive(Debug, Clone, Default)]
pub struct StopSignal(Arc<AtomicBool>);

impl StopSignal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stop(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_stopped(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

/// Thread-safe handle for injecting commands into a running kernel.
#[derive(Debug)]
pub struct CommandInjector<C>(Sender<C>);

impl<C> Clone for CommandInjector<C> {
    fn clone(&self) -> Self {
        CommandInjector(self.0.clone())
    }
}

impl<C> CommandInjector<C> {
    /// Returns false once the kernel has been dropped.
    pub fn inject(&self, cmd: C) -> bool {
        self.0.send(cmd).is_ok()
    }
}

/// Single-threaded event loop owning the model and its scheduler.
///
/// Injected commands are stamped with the current simulated time and applied
/// before the next pending event fires.
pub struct Kernel<M: Model> {
    model: M,
    sched: Scheduler<M::Event>,
    commands: Receiver<M::Command>,
    injector: Sender<M::Command>,
}

impl<M: Model> Kernel<M> {
    pub fn new(mut model: M) -> Self {
        let mut sched = Scheduler::new();
        model.start(&mut sched);
        let (injector, commands) = mpsc::channel();
        Kernel {
            model,
            sched,
            commands,
            injector,
        }
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn model_mut(&mut self) -> &mut M {
        &mut self.model
    }

    pub fn scheduler(&self) -> &Scheduler<M::Event> {
        &self.sched
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    pub fn injector(&self) -> CommandInjector<M::Command> {
        CommandInjector(self.injector.clone())
    }

    /// Applies a command synchronously at the current simulated time.
    pub fn apply(&mut self, cmd: M::Command) -> Result<(), M::Error> {
        self.model.handle_command(cmd, &mut self.sched)
    }

    fn drain_commands(&mut self) -> Result<(), M::Error> {
        while let Ok(cmd) = self.commands.try_recv() {
            self.model.handle_command(cmd, &mut self.sched)?;
        }
        Ok(())
    }

    /// Fires the next event if it is due at or before `limit`.
    pub fn step_until(&mut self, limit: SimTime) -> Result<bool, M::Error> {
        match self.sched.pop_until(limit) {
            Some(fired) => {
                self.model.handle_event(fired, &mut self.sched)?;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    /// Executes every event due at or before `end` as fast as possible and
    /// leaves the clock at `end`.
    pub fn run_until(&mut self, end: SimTime) -> Result<(), M::Error> {
        loop {
            self.drain_commands()?;
            if !self.step_until(end)? {
                break;
            }
        }
        self.sched.advance_to(end);
        Ok(())
    }

    /// Runs in wall-clock lockstep: an event at simulated time `t` fires no
    /// earlier than `t / factor` wall seconds after the pacing anchor. When
    /// handlers overrun, due events fire back to back until caught up. A
    /// restart by the model (reset) re-anchors pacing at the new epoch.
    pub fn run_paced(&mut self, factor: f64, stop: &StopSignal) -> Result<(), M::Error> {
        assert!(
            factor > 0.0 && factor.is_finite(),
            "pace factor must be > 0"
        );
        let mut anchor = Anchor::new(&self.sched);
        while !stop.is_stopped() {
            self.drain_paced(factor, &mut anchor)?;
            let wait = match self.sched.peek_time() {
                Some(t) => {
                    let due = anchor.wall_at(t, factor);
                    let now = Instant::now();
                    if now >= due {
                        if let Some(fired) = self.sched.pop() {
                            self.model.handle_event(fired, &mut self.sched)?;
                        }
                        anchor.follow_epoch(&self.sched);
                        continue;
                    }
                    (due - now).min(IDLE_POLL)
                }
                None => IDLE_POLL,
            };
            match self.commands.recv_timeout(wait) {
                Ok(cmd) => {
                    self.sched.advance_to(anchor.sim_at(Instant::now(), factor));
                    self.model.handle_command(cmd, &mut self.sched)?;
                    anchor.follow_epoch(&self.sched);
                }
                Err(RecvTimeoutError::Timeout) => {}
                // The kernel holds a sender, so the channel never disconnects.
                Err(RecvTimeoutError::Disconnected) => unreachable!(),
            }
        }
        Ok(())
    }

    fn drain_paced(&mut self, factor: f64, anchor: &mut Anchor) -> Result<(), M::Error> {
        while let Ok(cmd) = self.commands.try_recv() {
            self.sched.advance_to(anchor.sim_at(Instant::now(), factor));
            self.model.handle_command(cmd, &mut self.sched)?;
            anchor.follow_epoch(&self.sched);
        }
        Ok(())
    }
}

struct Anchor {
    wall: Instant,
    sim: SimTime,
    epoch: u64,
}

impl Anchor {
    fn new<E>(sched: &Scheduler<E>) -> Self {
        Anchor {
            wall: Instant::now(),
            sim: sched.now(),
            epoch: sched.epoch(),
        }
    }

    fn follow_epoch<E>(&mut self, sched: &Scheduler<E>) {
        if sched.epoch() != self.epoch {
            *self = Anchor::new(sched);
        }
    }

    fn wall_at(&self, t: SimTime, factor: f64) -> Instant {
        let sim_elapsed = t.saturating_sub(self.sim).as_secs_f64();
        self.wall + Duration::from_secs_f64(sim_elapsed / factor)
    }

    fn sim_at(&self, wall: Instant, factor: f64) -> SimTime {
        let elapsed = wall.saturating_duration_since(self.wall).as_secs_f64();
        self.sim + SimTime::from_secs_f64(elapsed * factor)
    }
}
