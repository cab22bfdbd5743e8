//! Deterministic discrete-event kernel.
//!
//! Events are ordered by `(time, sequence)` where the sequence number is
//! assigned at scheduling, so equal-time events fire in insertion order.
//! Time is kept in integer nanoseconds. The loop runs either as fast as
//! possible up to a horizon or paced against the wall clock.

mod kernel;
mod queue;
mod rng;
mod time;

pub use kernel::{CommandInjector, Kernel, Model, StopSignal};
pub use queue::{EventHandle, Fired, Scheduler, SchedulingInPast};
pub use rng::{NonPositiveMean, RngStream};
pub use time::SimTime;
