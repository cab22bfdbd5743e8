use std::collections::{BTreeMap, VecDeque};

use crate::des::{EventHandle, Fired, Model, RngStream, Scheduler, SchedulingInPast, SimTime};

use super::params::{
    MAC_MAX_BE, MAC_MAX_CSMA_BACKOFFS, MAC_MAX_FRAME_RETRIES, MAC_MIN_BE, TURNAROUND, UNIT_BACKOFF,
};
use super::{
    compute_routes, link_delivery, DropCounts, DropReason, DropRecord, InvalidParams, MacVariant,
    NodeId, Position, PresetLibrary, RadioMeter, RadioState, RoutingTree, SimParams, StatsWindow,
    TimeRegression, Topology, TopologyError, Totals, Transmission,
};

const WINDOW: SimTime = SimTime::from_secs(1);

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: u64,
    pub origin: NodeId,
    pub created: SimTime,
    /// Node currently holding the packet.
    pub hop: NodeId,
    pub retries: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Generate(NodeId),
    WindowBoundary,
    /// End of a CSMA random backoff; the clear channel assessment happens here.
    BackoffEnd(NodeId),
    TxStart(NodeId),
    TxEnd(NodeId),
    SlotStart,
    /// A command scheduled ahead of time, e.g. from a test script.
    Command(Command),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Reset,
    SetMeanInterval(f64),
    MoveNode { id: NodeId, x: f64, y: f64 },
    SetPreset(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CommandError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("preset {0:?} does not contain the same nodes and sink as the running topology")]
    IncompatiblePreset(String),
    #[error("mean interval must be positive, got {0}")]
    InvalidInterval(f64),
    #[error("node position must be finite")]
    InvalidPosition,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    InvalidTopology(#[from] TopologyError),
    #[error(transparent)]
    InvalidParams(#[from] InvalidParams),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Scheduling(#[from] SchedulingInPast),
    #[error(transparent)]
    Command(#[from] CommandError),
    #[error(transparent)]
    Power(#[from] TimeRegression),
}

/// What the simulation retains per window beyond its scalar counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Recording {
    /// Build a [`StatsWindow`] at every boundary.
    pub windows: bool,
    /// Keep a [`DropRecord`] per drop for the open window.
    pub drop_locations: bool,
}

impl Recording {
    pub const ALL: Recording = Recording {
        windows: true,
        drop_locations: true,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub time: SimTime,
    pub seq: u64,
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryRecord {
    pub packet: u64,
    pub origin: NodeId,
    pub created: SimTime,
    pub delivered: SimTime,
}

#[derive(Debug, Clone)]
struct Trace {
    limit: usize,
    events: Vec<TraceEntry>,
    deliveries: Vec<DeliveryRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MacPhase {
    Idle,
    Backoff { nb: u32, be: u32 },
    Turnaround,
    Transmitting,
}

#[derive(Debug, Clone)]
struct Node {
    id: NodeId,
    sink: bool,
    pos: Position,
    queue: VecDeque<Packet>,
    /// Packet owned by the MAC (backing off, on air, or awaiting retry).
    current: Option<Packet>,
    phase: MacPhase,
    radio: RadioMeter,
    traffic: RngStream,
    mac_rng: RngStream,
    mean_interval: f64,
    next_generation: Option<EventHandle>,
}

/// Read-only view of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeView {
    pub id: NodeId,
    pub sink: bool,
    pub position: Position,
    pub queue_len: usize,
    pub holds_packet: bool,
    pub radio: RadioState,
    pub mean_interval: f64,
    pub parent: Option<NodeId>,
}

#[derive(Debug, Clone, Default)]
struct WindowCounters {
    generated: u64,
    delivered: u64,
    drops: DropCounts,
    located: Vec<DropRecord>,
}

#[derive(Debug, Clone)]
struct Initial {
    topology: Topology,
    mac: MacVariant,
    params: SimParams,
    seed: u64,
}

/// The demonstration network: sensors sending toward one sink over CSMA/CA
/// or dedicated-slot TDMA, with per-second statistics windows.
#[derive(Debug, Clone)]
pub struct Simulation {
    initial: Initial,
    presets: PresetLibrary,
    topology: Topology,
    preset_name: String,
    routes: RoutingTree,
    nodes: Vec<Node>,
    index: BTreeMap<NodeId, usize>,
    jammed: bool,
    air: Vec<Transmission>,
    next_packet: u64,
    window: WindowCounters,
    generated: u64,
    delivered: u64,
    drops: DropCounts,
    recording: Recording,
    windows_built: u64,
    completed: VecDeque<StatsWindow>,
    topology_changed: bool,
    trace: Option<Trace>,
}

impl Simulation {
    pub fn build(
        topology: Topology,
        mac: MacVariant,
        params: SimParams,
        seed: u64,
    ) -> Result<Self, BuildError> {
        topology.validate()?;
        params.validate()?;
        Ok(Self::fresh(Initial {
            topology,
            mac,
            params,
            seed,
        }))
    }

    fn fresh(initial: Initial) -> Self {
        let mut specs = initial.topology.nodes.clone();
        specs.sort_by_key(|n| n.id);
        let nodes: Vec<Node> = specs
            .iter()
            .map(|n| Node {
                id: n.id,
                sink: n.sink,
                pos: n.position(),
                queue: VecDeque::with_capacity(initial.params.queue_capacity),
                current: None,
                phase: MacPhase::Idle,
                radio: RadioMeter::new(RadioState::Sleep, SimTime::ZERO),
                traffic: RngStream::new(initial.seed, &format!("traffic.{}", n.id)),
                mac_rng: RngStream::new(initial.seed, &format!("mac.{}", n.id)),
                mean_interval: initial.params.mean_interval,
                next_generation: None,
            })
            .collect();
        let index = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let routes = compute_routes(&initial.topology, initial.params.range_m);
        Simulation {
            presets: PresetLibrary::builtin(),
            topology: initial.topology.clone(),
            preset_name: initial.topology.name.clone(),
            routes,
            nodes,
            index,
            jammed: false,
            air: Vec::new(),
            next_packet: 1,
            window: WindowCounters::default(),
            generated: 0,
            delivered: 0,
            drops: DropCounts::default(),
            recording: Recording::default(),
            windows_built: 0,
            completed: VecDeque::new(),
            topology_changed: false,
            trace: None,
            initial,
        }
    }

    pub fn with_presets(mut self, presets: PresetLibrary) -> Self {
        self.presets = presets;
        self
    }

    pub fn presets(&self) -> &PresetLibrary {
        &self.presets
    }

    pub fn mac(&self) -> MacVariant {
        self.initial.mac
    }

    pub fn seed(&self) -> u64 {
        self.initial.seed
    }

    pub fn params(&self) -> &SimParams {
        &self.initial.params
    }

    pub fn routes(&self) -> &RoutingTree {
        &self.routes
    }

    /// Current topology with live positions.
    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn preset_name(&self) -> &str {
        &self.preset_name
    }

    /// Mean generation interval currently configured (all nodes share it).
    pub fn mean_interval(&self) -> f64 {
        self.nodes
            .iter()
            .find(|n| !n.sink)
            .map_or(self.initial.params.mean_interval, |n| n.mean_interval)
    }

    pub fn recording(&self) -> Recording {
        self.recording
    }

    /// Takes effect immediately. Located drops are only kept from the
    /// moment drop-location recording is switched on.
    pub fn set_recording(&mut self, recording: Recording) {
        self.recording = recording;
        if !recording.drop_locations {
            self.window.located = Vec::new();
        }
    }

    /// Number of [`StatsWindow`] objects constructed so far.
    pub fn windows_built(&self) -> u64 {
        self.windows_built
    }

    pub fn take_windows(&mut self) -> Vec<StatsWindow> {
        self.completed.drain(..).collect()
    }

    /// True once after any change of node positions (move, preset, reset).
    pub fn take_topology_changed(&mut self) -> bool {
        std::mem::take(&mut self.topology_changed)
    }

    /// A jammer in range of every node: all clear channel assessments fail.
    pub fn set_channel_jammed(&mut self, jammed: bool) {
        self.jammed = jammed;
    }

    /// Records the first `limit` fired events and every delivery.
    pub fn enable_trace(&mut self, limit: usize) {
        self.trace = Some(Trace {
            limit,
            events: Vec::new(),
            deliveries: Vec::new(),
        });
    }

    pub fn trace(&self) -> &[TraceEntry] {
        self.trace.as_ref().map_or(&[], |t| &t.events)
    }

    pub fn deliveries(&self) -> &[DeliveryRecord] {
        self.trace.as_ref().map_or(&[], |t| &t.deliveries)
    }

    pub fn totals(&self) -> Totals {
        Totals {
            generated: self.generated,
            delivered: self.delivered,
            drops: self.drops,
            queued: self.nodes.iter().map(|n| n.queue.len() as u64).sum(),
            in_flight: self.nodes.iter().filter(|n| n.current.is_some()).count() as u64,
        }
    }

    pub fn node(&self, id: NodeId) -> Option<NodeView> {
        let n = &self.nodes[*self.index.get(&id)?];
        Some(NodeView {
            id: n.id,
            sink: n.sink,
            position: n.pos,
            queue_len: n.queue.len(),
            holds_packet: n.current.is_some(),
            radio: n.radio.state(),
            mean_interval: n.mean_interval,
            parent: self.routes.parent(n.id),
        })
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeView> + '_ {
        self.nodes.iter().filter_map(|n| self.node(n.id))
    }

    /// Fire time of the node's pending packet generation.
    pub fn pending_generation(&self, id: NodeId) -> Option<SimTime> {
        let n = &self.nodes[*self.index.get(&id)?];
        n.next_generation.map(|h| h.time())
    }

    /// Frames that may still interfere with an ongoing reception.
    pub fn air_len(&self) -> usize {
        self.air.len()
    }

    pub fn superframe(&self) -> SimTime {
        SimTime::from_nanos(self.initial.params.slot.as_nanos() * self.nodes.len() as u64)
    }

    // ---- commands ----------------------------------------------------

    pub fn apply_command(
        &mut self,
        cmd: Command,
        sched: &mut Scheduler<Event>,
    ) -> Result<(), CommandError> {
        match cmd {
            Command::Reset => {
                let mut fresh = Self::fresh(self.initial.clone());
                fresh.presets = std::mem::take(&mut self.presets);
                fresh.recording = self.recording;
                fresh.trace = self.trace.take().map(|t| Trace {
                    events: Vec::new(),
                    deliveries: Vec::new(),
                    ..t
                });
                fresh.topology_changed = true;
                *self = fresh;
                sched.restart();
                self.start(sched);
            }
            Command::SetMeanInterval(mean) => {
                if !(mean > 0.0 && mean.is_finite()) {
                    return Err(CommandError::InvalidInterval(mean));
                }
                for n in &mut self.nodes {
                    n.mean_interval = mean;
                }
            }
            Command::MoveNode { id, x, y } => {
                if !self.index.contains_key(&id) {
                    return Err(CommandError::UnknownNode(id));
                }
                if !(x.is_finite() && y.is_finite()) {
                    return Err(CommandError::InvalidPosition);
                }
                let spec = self.topology.node_mut(id).expect("indexed node");
                spec.x = x;
                spec.y = y;
                self.topology_moved(sched);
            }
            Command::SetPreset(name) => {
                let preset = self
                    .presets
                    .get(&name)
                    .ok_or_else(|| CommandError::UnknownPreset(name.clone()))?;
                let mut ids: Vec<(NodeId, bool)> =
                    preset.nodes.iter().map(|n| (n.id, n.sink)).collect();
                let mut ours: Vec<(NodeId, bool)> =
                    self.topology.nodes.iter().map(|n| (n.id, n.sink)).collect();
                ids.sort_unstable();
                ours.sort_unstable();
                if ids != ours {
                    return Err(CommandError::IncompatiblePreset(name));
                }
                self.topology = preset.clone();
                self.preset_name = name;
                self.topology_moved(sched);
            }
        }
        Ok(())
    }

    fn topology_moved(&mut self, sched: &mut Scheduler<Event>) {
        for spec in &self.topology.nodes {
            let i = self.index[&spec.id];
            self.nodes[i].pos = spec.position();
        }
        self.routes = compute_routes(&self.topology, self.initial.params.range_m);
        let now = sched.now();
        for i in 0..self.nodes.len() {
            if !matches!(
                self.nodes[i].phase,
                MacPhase::Transmitting | MacPhase::Turnaround
            ) {
                let s = self.idle_state(i, now);
                self.set_radio(i, s, now);
            }
        }
        for i in 0..self.nodes.len() {
            self.kick(i, sched);
        }
        self.topology_changed = true;
    }

    // ---- helpers -----------------------------------------------------

    fn set_radio(&mut self, i: usize, state: RadioState, now: SimTime) {
        self.nodes[i]
            .radio
            .account_power(state, now)
            .expect("radio changes follow the simulation clock");
    }

    /// Radio state of a node with nothing to send right now.
    fn idle_state(&self, i: usize, now: SimTime) -> RadioState {
        let n = &self.nodes[i];
        match self.initial.mac {
            MacVariant::Csma => {
                if n.sink || self.routes.is_parent(n.id) {
                    RadioState::Rx
                } else {
                    RadioState::Sleep
                }
            }
            MacVariant::Tdma => {
                let owner = self.nodes[self.slot_owner(now)].id;
                if self.routes.parent(owner) == Some(n.id) {
                    RadioState::Rx
                } else {
                    RadioState::Sleep
                }
            }
        }
    }

    fn drop_packet(&mut self, i: usize, reason: DropReason, now: SimTime) {
        self.drops.add(reason);
        self.window.drops.add(reason);
        if self.recording.drop_locations {
            let n = &self.nodes[i];
            self.window.located.push(DropRecord {
                time: now,
                node: n.id,
                position: n.pos,
                reason,
            });
        }
    }

    fn enqueue(&mut self, i: usize, packet: Packet, sched: &mut Scheduler<Event>) {
        if self.nodes[i].queue.len() >= self.initial.params.queue_capacity {
            self.drop_packet(i, DropReason::QueueOverflow, sched.now());
            return;
        }
        self.nodes[i].queue.push_back(packet);
        self.kick(i, sched);
    }

    fn kick(&mut self, i: usize, sched: &mut Scheduler<Event>) {
        if self.nodes[i].sink || self.nodes[i].phase != MacPhase::Idle {
            return;
        }
        match self.initial.mac {
            MacVariant::Csma => self.csma_start_next(i, sched),
            MacVariant::Tdma => self.tdma_try_send(i, sched),
        }
    }

    /// Ensures the MAC holds a routable packet, dropping unroutable ones.
    fn take_routable(&mut self, i: usize, now: SimTime) -> bool {
        loop {
            if self.nodes[i].current.is_none() {
                match self.nodes[i].queue.pop_front() {
                    Some(p) => self.nodes[i].current = Some(p),
                    None => return false,
                }
            }
            if self.routes.has_route(self.nodes[i].id) {
                return true;
            }
            self.nodes[i].current = None;
            self.drop_packet(i, DropReason::NoRoute, now);
        }
    }

    fn receive(&mut self, rx: usize, mut packet: Packet, sched: &mut Scheduler<Event>) {
        let now = sched.now();
        if self.nodes[rx].sink {
            self.delivered += 1;
            self.window.delivered += 1;
            if let Some(t) = &mut self.trace {
                t.deliveries.push(DeliveryRecord {
                    packet: packet.id,
                    origin: packet.origin,
                    created: packet.created,
                    delivered: now,
                });
            }
        } else {
            packet.hop = self.nodes[rx].id;
            packet.retries = 0;
            self.enqueue(rx, packet, sched);
        }
    }

    // ---- traffic -----------------------------------------------------

    fn schedule_generation(&mut self, i: usize, sched: &mut Scheduler<Event>) {
        let n = &mut self.nodes[i];
        let delay = n
            .traffic
            .draw_exponential(n.mean_interval)
            .expect("mean interval validated positive");
        n.next_generation =
            Some(sched.schedule_in(SimTime::from_secs_f64(delay), Event::Generate(n.id)));
    }

    fn on_generate(&mut self, i: usize, sched: &mut Scheduler<Event>) {
        self.nodes[i].next_generation = None;
        // The interval is read now, so a changed mean never moves an
        // already-pending generation.
        self.schedule_generation(i, sched);
        let packet = Packet {
            id: self.next_packet,
            origin: self.nodes[i].id,
            created: sched.now(),
            hop: self.nodes[i].id,
            retries: 0,
        };
        self.next_packet += 1;
        self.generated += 1;
        self.window.generated += 1;
        self.enqueue(i, packet, sched);
    }

    // ---- CSMA/CA -----------------------------------------------------

    fn csma_start_next(&mut self, i: usize, sched: &mut Scheduler<Event>) {
        if !self.take_routable(i, sched.now()) {
            self.nodes[i].phase = MacPhase::Idle;
            return;
        }
        self.nodes[i].phase = MacPhase::Backoff {
            nb: 0,
            be: MAC_MIN_BE,
        };
        self.schedule_backoff(i, MAC_MIN_BE, sched);
    }

    fn schedule_backoff(&mut self, i: usize, be: u32, sched: &mut Scheduler<Event>) {
        let periods = self.nodes[i].mac_rng.uniform_inclusive((1u64 << be) - 1);
        let delay = SimTime::from_nanos(UNIT_BACKOFF.as_nanos() * periods);
        sched.schedule_in(delay, Event::BackoffEnd(self.nodes[i].id));
    }

    fn channel_busy(&self, i: usize, now: SimTime) -> bool {
        let here = self.nodes[i].pos;
        let range = self.initial.params.range_m;
        self.jammed
            || self.air.iter().any(|t| {
                t.active_at(now) && self.nodes[self.index[&t.tx]].pos.distance(&here) <= range
            })
    }

    fn on_backoff_end(&mut self, i: usize, sched: &mut Scheduler<Event>) {
        let MacPhase::Backoff { nb, be } = self.nodes[i].phase else {
            return;
        };
        let now = sched.now();
        if self.channel_busy(i, now) {
            let nb = nb + 1;
            let be = (be + 1).min(MAC_MAX_BE);
            if nb >= MAC_MAX_CSMA_BACKOFFS {
                self.nodes[i].current = None;
                self.nodes[i].phase = MacPhase::Idle;
                self.drop_packet(i, DropReason::ChannelAccessFailure, now);
                self.csma_start_next(i, sched);
            } else {
                self.nodes[i].phase = MacPhase::Backoff { nb, be };
                self.schedule_backoff(i, be, sched);
            }
        } else {
            self.nodes[i].phase = MacPhase::Turnaround;
            self.set_radio(i, RadioState::Rx, now);
            sched.schedule_in(TURNAROUND, Event::TxStart(self.nodes[i].id));
        }
    }

    fn begin_transmission(&mut self, i: usize, sched: &mut Scheduler<Event>) {
        let now = sched.now();
        let id = self.nodes[i].id;
        let Some(parent) = self.routes.parent(id) else {
            self.nodes[i].current = None;
            self.nodes[i].phase = MacPhase::Idle;
            self.drop_packet(i, DropReason::NoRoute, now);
            let s = self.idle_state(i, now);
            self.set_radio(i, s, now);
            self.kick(i, sched);
            return;
        };
        let end = now + self.initial.params.airtime;
        self.air.push(Transmission {
            tx: id,
            rx: parent,
            start: now,
            end,
        });
        self.nodes[i].phase = MacPhase::Transmitting;
        self.set_radio(i, RadioState::Tx, now);
        sched
            .schedule(end, Event::TxEnd(id))
            .expect("end lies in the future");
    }

    fn on_tx_end(&mut self, i: usize, sched: &mut Scheduler<Event>) {
        let now = sched.now();
        let id = self.nodes[i].id;
        let airtime = self.initial.params.airtime;
        let frame = *self
            .air
            .iter()
            .rev()
            .find(|t| t.tx == id && t.end == now)
            .expect("transmission recorded at start");
        let range = self.initial.params.range_m;
        let pos = |n: NodeId| self.nodes[self.index[&n]].pos;
        let interferers = self
            .air
            .iter()
            .filter(|t| t.tx != id && t.overlaps(frame.start, frame.end))
            .map(|t| pos(t.tx));
        let delivered = link_delivery(pos(id), pos(frame.rx), range, interferers);
        self.air.retain(|t| t.end + airtime > now);

        self.nodes[i].phase = MacPhase::Idle;
        let s = self.idle_state(i, now);
        self.set_radio(i, s, now);

        if delivered {
            let packet = self.nodes[i].current.take().expect("MAC holds the frame");
            self.receive(self.index[&frame.rx], packet, sched);
            self.kick(i, sched);
            return;
        }
        match self.initial.mac {
            MacVariant::Csma => {
                let packet = self.nodes[i].current.as_mut().expect("MAC holds the frame");
                if packet.retries >= MAC_MAX_FRAME_RETRIES {
                    self.nodes[i].current = None;
                    self.drop_packet(i, DropReason::RetryExhausted, now);
                    self.kick(i, sched);
                } else {
                    packet.retries += 1;
                    self.nodes[i].phase = MacPhase::Backoff {
                        nb: 0,
                        be: MAC_MIN_BE,
                    };
                    self.schedule_backoff(i, MAC_MIN_BE, sched);
                }
            }
            // Only a node moved mid-frame can miss; it resends in a later slot.
            MacVariant::Tdma => self.kick(i, sched),
        }
    }

    // ---- TDMA --------------------------------------------------------

    fn slot_owner(&self, now: SimTime) -> usize {
        let slot = self.initial.params.slot.as_nanos();
        ((now.as_nanos() / slot) % self.nodes.len() as u64) as usize
    }

    fn slot_end(&self, now: SimTime) -> SimTime {
        let slot = self.initial.params.slot.as_nanos();
        SimTime::from_nanos((now.as_nanos() / slot + 1) * slot)
    }

    fn on_slot_start(&mut self, sched: &mut Scheduler<Event>) {
        let now = sched.now();
        for i in 0..self.nodes.len() {
            if self.nodes[i].phase != MacPhase::Transmitting {
                let s = self.idle_state(i, now);
                self.set_radio(i, s, now);
            }
        }
        let owner = self.slot_owner(now);
        self.kick(owner, sched);
        sched.schedule_in(self.initial.params.slot, Event::SlotStart);
    }

    fn tdma_try_send(&mut self, i: usize, sched: &mut Scheduler<Event>) {
        let now = sched.now();
        if self.slot_owner(now) != i || now + self.initial.params.airtime > self.slot_end(now) {
            return;
        }
        if self.take_routable(i, now) {
            self.begin_transmission(i, sched);
        }
    }

    // ---- windows -----------------------------------------------------

    fn on_window_boundary(&mut self, sched: &mut Scheduler<Event>) {
        let now = sched.now();
        let index = now.whole_secs() - 1;
        let table = self.initial.params.power;
        let mut radio_time = BTreeMap::new();
        for n in &mut self.nodes {
            let rt = n.radio.roll(now).expect("boundary follows the clock");
            radio_time.insert(n.id, rt);
        }
        let counters = std::mem::take(&mut self.window);
        if self.recording.windows {
            let per_node_mw: BTreeMap<NodeId, f64> = radio_time
                .iter()
                .map(|(&id, rt)| (id, rt.energy_mj(&table) / WINDOW.as_secs_f64()))
                .collect();
            let total_mw = per_node_mw.values().sum();
            self.windows_built += 1;
            self.completed.push_back(StatsWindow {
                index,
                generated: counters.generated,
                delivered: counters.delivered,
                drops: counters.drops,
                per_node_mw,
                total_mw,
                radio_time,
                located: counters.located,
            });
        }
        sched.schedule_in(WINDOW, Event::WindowBoundary);
    }
}

impl Model for Simulation {
    type Event = Event;
    type Command = Command;
    type Error = SimError;

    fn start(&mut self, sched: &mut Scheduler<Event>) {
        let now = sched.now();
        for i in 0..self.nodes.len() {
            if !self.nodes[i].sink {
                self.schedule_generation(i, sched);
            }
        }
        sched.schedule_in(WINDOW, Event::WindowBoundary);
        match self.initial.mac {
            MacVariant::Csma => {
                for i in 0..self.nodes.len() {
                    let s = self.idle_state(i, now);
                    self.set_radio(i, s, now);
                }
            }
            MacVariant::Tdma => {
                sched.schedule_in(SimTime::ZERO, Event::SlotStart);
            }
        }
    }

    fn handle_event(
        &mut self,
        fired: Fired<Event>,
        sched: &mut Scheduler<Event>,
    ) -> Result<(), SimError> {
        if let Some(t) = &mut self.trace {
            if t.events.len() < t.limit {
                t.events.push(TraceEntry {
                    time: fired.time,
                    seq: fired.seq,
                    event: fired.event.clone(),
                });
            }
        }
        let idx = |id: &NodeId| self.index[id];
        match fired.event {
            Event::Generate(id) => self.on_generate(idx(&id), sched),
            Event::WindowBoundary => self.on_window_boundary(sched),
            Event::BackoffEnd(id) => self.on_backoff_end(idx(&id), sched),
            Event::TxStart(id) => self.begin_transmission(idx(&id), sched),
            Event::TxEnd(id) => self.on_tx_end(idx(&id), sched),
            Event::SlotStart => self.on_slot_start(sched),
            Event::Command(cmd) => self.apply_command(cmd, sched)?,
        }
        Ok(())
    }

    fn handle_command(
        &mut self,
        cmd: Command,
        sched: &mut Scheduler<Event>,
    ) -> Result<(), SimError> {
        self.apply_command(cmd, sched).map_err(SimError::from)
    }
}
