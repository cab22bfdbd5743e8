//! Glue between a running [`Simulation`] and its [`Router`]: the procedure
//! catalogue, command injection onto the simulation thread, and statistics
//! topics published only while someone listens.

pub mod payload;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde_json::{json, Value};

use crate::des::{CommandInjector, Fired, Model, Scheduler, SimTime};
use crate::endpoint::{
    CallError, Invocation, Payload, RegisterError, Responder, Router, INVALID_ARGUMENT,
};
use crate::netsim::{Command, CommandError, Event, NodeId, Recording, SimError, Simulation, StatsWindow};

pub use payload::{DROPS_LOCATED, PACKETS, POWER, STATS_TOPICS, TOPOLOGY_CHANGED};

pub const INFO: &str = "sim.info";
pub const RESET: &str = "sim.control.reset";
pub const SET_INTERVAL: &str = "sim.traffic.set_interval";
pub const MOVE_NODE: &str = "sim.topology.move_node";
pub const SET_PRESET: &str = "sim.topology.set_preset";
pub const GET_TOPOLOGY: &str = "sim.topology.get";

pub const PROCEDURES: [&str; 6] = [INFO, RESET, SET_INTERVAL, MOVE_NODE, SET_PRESET, GET_TOPOLOGY];

pub const UNKNOWN_NODE: &str = "sim.error.unknown_node";
pub const UNKNOWN_PRESET: &str = "sim.error.unknown_preset";
pub const INCOMPATIBLE_PRESET: &str = "sim.error.incompatible_preset";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn call_error(e: &CommandError) -> CallError {
    let uri = match e {
        CommandError::UnknownNode(_) => UNKNOWN_NODE,
        CommandError::UnknownPreset(_) => UNKNOWN_PRESET,
        CommandError::IncompatiblePreset(_) => INCOMPATIBLE_PRESET,
        CommandError::InvalidInterval(_) | CommandError::InvalidPosition => INVALID_ARGUMENT,
    };
    CallError::new(uri, e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Query {
    Info,
    Topology,
}

/// Work for the simulation thread.
#[derive(Debug)]
pub enum ControlCommand {
    /// Apply, then answer the caller.
    Apply(Command, Responder),
    Query(Query, Responder),
    /// A subscription changed; re-evaluate what to record.
    SubscriptionsChanged,
    /// Scripted command without a caller.
    Headless(Command),
}

/// Publication counters, shared with observers outside the simulation thread.
#[derive(Debug, Default)]
pub struct PublishStats {
    pub power: AtomicU64,
    pub packets: AtomicU64,
    pub drops_located: AtomicU64,
    pub topology: AtomicU64,
}

impl PublishStats {
    pub fn stats_total(&self) -> u64 {
        self.power.load(Ordering::SeqCst)
            + self.packets.load(Ordering::SeqCst)
            + self.drops_located.load(Ordering::SeqCst)
    }
}

type Builder = fn(&StatsWindow) -> Value;

/// A simulation that publishes its windows to a router.
#[derive(Debug)]
pub struct LiveSim {
    sim: Simulation,
    router: Arc<Router>,
    label: String,
    published: Arc<PublishStats>,
}

impl LiveSim {
    pub fn new(sim: Simulation, router: Arc<Router>, label: impl Into<String>) -> Self {
        let mut live = LiveSim {
            sim,
            router,
            label: label.into(),
            published: Arc::default(),
        };
        live.update_recording();
        live
    }

    pub fn sim(&self) -> &Simulation {
        &self.sim
    }

    pub fn sim_mut(&mut self) -> &mut Simulation {
        &mut self.sim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn published(&self) -> Arc<PublishStats> {
        self.published.clone()
    }

    fn update_recording(&mut self) {
        let count = |t| self.router.subscriber_count(t) > 0;
        let recording = Recording {
            windows: STATS_TOPICS.iter().any(|t| count(t)),
            drop_locations: count(DROPS_LOCATED),
        };
        if recording != self.sim.recording() {
            log::debug!("recording {recording:?}");
            self.sim.set_recording(recording);
        }
    }

    /// `now` is reported as `time`, simulated seconds since the last (re)start.
    pub fn info(&self, now: SimTime) -> Value {
        json!({
            "label": self.label,
            "protocol": self.sim.mac().label(),
            "version": VERSION,
            "seed": self.sim.seed(),
            "mean_interval": self.sim.mean_interval(),
            "preset": self.sim.preset_name(),
            "time": now.as_secs_f64(),
        })
    }

    pub fn topology(&self) -> Value {
        payload::topology(self.sim.topology(), self.sim.preset_name())
    }

    fn publish_pending(&mut self) {
        for w in self.sim.take_windows() {
            let topics: [(&str, Builder, &AtomicU64); 3] = [
                (POWER, payload::power, &self.published.power),
                (PACKETS, payload::packets, &self.published.packets),
                (DROPS_LOCATED, payload::drops_located, &self.published.drops_located),
            ];
            for (topic, build, counter) in topics {
                if self.router.subscriber_count(topic) > 0 {
                    self.router.publish(topic, Payload::args(vec![build(&w)]));
                    counter.fetch_add(1, Ordering::SeqCst);
                }
            }
        }
        if self.sim.take_topology_changed() && self.router.subscriber_count(TOPOLOGY_CHANGED) > 0 {
            self.router
                .publish(TOPOLOGY_CHANGED, Payload::args(vec![self.topology()]));
            self.published.topology.fetch_add(1, Ordering::SeqCst);
        }
    }
}

impl Model for LiveSim {
    type Event = Event;
    type Command = ControlCommand;
    type Error = SimError;

    fn start(&mut self, sched: &mut Scheduler<Event>) {
        self.sim.start(sched);
    }

    fn handle_event(&mut self, fired: Fired<Event>, sched: &mut Scheduler<Event>) -> Result<(), SimError> {
        self.sim.handle_event(fired, sched)?;
        self.publish_pending();
        Ok(())
    }

    fn handle_command(&mut self, cmd: ControlCommand, sched: &mut Scheduler<Event>) -> Result<(), SimError> {
        match cmd {
            ControlCommand::Apply(c, responder) => {
                let result = self.sim.apply_command(c, sched);
                self.publish_pending();
                responder.respond(result.map(|()| Payload::empty()).map_err(|e| call_error(&e)));
            }
            ControlCommand::Query(q, responder) => {
                let v = match q {
                    Query::Info => self.info(sched.now()),
                    Query::Topology => self.topology(),
                };
                responder.respond(Ok(Payload::args(vec![v])));
            }
            ControlCommand::SubscriptionsChanged => self.update_recording(),
            ControlCommand::Headless(c) => {
                self.sim.apply_command(c, sched)?;
                self.publish_pending();
            }
        }
        Ok(())
    }
}

// ---- argument parsing ------------------------------------------------------

fn arg<'a>(inv: &'a Invocation, index: usize, name: &str) -> Option<&'a Value> {
    inv.args.get(index).or_else(|| inv.kwargs.get(name))
}

fn number(inv: &Invocation, index: usize, name: &str) -> Result<f64, CallError> {
    arg(inv, index, name)
        .and_then(Value::as_f64)
        .ok_or_else(|| CallError::invalid_argument(format!("{name}: number required")))
}

fn expect_no_args(inv: &Invocation) -> Result<(), CallError> {
    if inv.args.is_empty() && inv.kwargs.is_empty() {
        Ok(())
    } else {
        Err(CallError::invalid_argument("no arguments expected"))
    }
}

/// Translates a CALL into a simulation command.
pub fn parse_command(inv: &Invocation) -> Result<Command, CallError> {
    match inv.procedure.as_str() {
        RESET => expect_no_args(inv).map(|()| Command::Reset),
        SET_INTERVAL => {
            let mean = number(inv, 0, "mean")?;
            if !(mean > 0.0 && mean.is_finite()) {
                return Err(call_error(&CommandError::InvalidInterval(mean)));
            }
            Ok(Command::SetMeanInterval(mean))
        }
        MOVE_NODE => {
            let id = arg(inv, 0, "id")
                .and_then(Value::as_u64)
                .and_then(|v| NodeId::try_from(v).ok())
                .ok_or_else(|| CallError::invalid_argument("id: node id required"))?;
            let x = number(inv, 1, "x")?;
            let y = number(inv, 2, "y")?;
            Ok(Command::MoveNode { id, x, y })
        }
        SET_PRESET => arg(inv, 0, "name")
            .and_then(Value::as_str)
            .map(|n| Command::SetPreset(n.to_owned()))
            .ok_or_else(|| CallError::invalid_argument("name: preset name required")),
        other => Err(CallError::new(
            "wamp.error.no_such_procedure",
            format!("{other} is not a command"),
        )),
    }
}

/// The procedures a bound simulation answers.
#[derive(Debug)]
pub struct ControlSurface {
    router: Arc<Router>,
}

impl ControlSurface {
    /// Registers the catalogue on `router`, forwarding every call to the
    /// simulation thread behind `injector`.
    pub fn bind(router: &Arc<Router>, injector: CommandInjector<ControlCommand>) -> Result<Self, RegisterError> {
        for uri in PROCEDURES {
            if router.procedures().iter().any(|p| p == uri) {
                return Err(crate::endpoint::DuplicateRegistration(uri.to_owned()).into());
            }
        }
        for uri in PROCEDURES {
            let inj = injector.clone();
            let handler: crate::endpoint::Handler = match uri {
                INFO | GET_TOPOLOGY => {
                    let q = if uri == INFO { Query::Info } else { Query::Topology };
                    Arc::new(move |inv: Invocation, r: Responder| {
                        if let Err(e) = expect_no_args(&inv) {
                            return r.respond(Err(e));
                        }
                        // An unreachable simulation drops the responder,
                        // which answers with a runtime error.
                        inj.inject(ControlCommand::Query(q, r));
                    })
                }
                _ => Arc::new(move |inv: Invocation, r: Responder| match parse_command(&inv) {
                    Ok(cmd) => {
                        inj.inject(ControlCommand::Apply(cmd, r));
                    }
                    Err(e) => r.respond(Err(e)),
                }),
            };
            router.register(uri, handler)?;
        }
        let inj = injector;
        router.on_subscription_change(move |topic, _| {
            if STATS_TOPICS.contains(&topic) {
                inj.inject(ControlCommand::SubscriptionsChanged);
            }
        });
        Ok(ControlSurface {
            router: router.clone(),
        })
    }

    pub fn router(&self) -> &Arc<Router> {
        &self.router
    }
}
