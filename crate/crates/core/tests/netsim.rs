use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simlive_core::des::{Kernel, RngStream, SimTime};
use simlive_core::netsim::*;

fn kernel(topology: Topology, mac: MacVariant, mean: f64, seed: u64) -> Kernel<Simulation> {
    let params = SimParams {
        mean_interval: mean,
        ..SimParams::default()
    };
    Kernel::new(Simulation::build(topology, mac, params, seed).unwrap())
}

fn preset(name: &str) -> Topology {
    PresetLibrary::builtin().get(name).unwrap().clone()
}

fn node(id: NodeId, x: f64, y: f64, sink: bool) -> NodeSpec {
    NodeSpec { id, x, y, sink }
}

fn topo(nodes: Vec<NodeSpec>) -> Topology {
    Topology {
        name: "custom".into(),
        nodes,
    }
}

fn secs(s: u64) -> SimTime {
    SimTime::from_secs(s)
}

#[test]
fn build_rejects_two_sinks() {
    let t = topo(vec![node(0, 0.0, 0.0, true), node(1, 5.0, 0.0, true)]);
    let err = Simulation::build(t, MacVariant::Csma, SimParams::default(), 1).unwrap_err();
    assert!(matches!(err, BuildError::InvalidTopology(_)));
}

#[test]
fn build_rejects_bad_params() {
    let params = SimParams {
        queue_capacity: 0,
        ..SimParams::default()
    };
    let err = Simulation::build(preset("star"), MacVariant::Csma, params, 1).unwrap_err();
    assert!(matches!(err, BuildError::InvalidParams(_)));
}

#[test]
fn build_starts_asleep_with_routes_and_pending_traffic() {
    let t = topo(vec![node(0, 0.0, 0.0, true), node(1, 10.0, 0.0, false)]);
    let sim = Simulation::build(t, MacVariant::Csma, SimParams::default(), 4).unwrap();
    assert!(sim.nodes().all(|n| n.radio == RadioState::Sleep));
    assert_eq!(sim.routes().parent(1), Some(0));
    assert_eq!(sim.routes().hops(1), Some(1));
    let k = Kernel::new(sim);
    assert!(k.model().pending_generation(1).is_some());
    assert_eq!(k.model().pending_generation(0), None);
}

// ---- routing oracle ------------------------------------------------------

fn all_pairs_hops(t: &Topology, range: f64) -> BTreeMap<(NodeId, NodeId), u32> {
    let ids: Vec<NodeId> = t.nodes.iter().map(|n| n.id).collect();
    let pos = t.positions();
    const INF: u32 = u32::MAX / 2;
    let mut d = BTreeMap::new();
    for &a in &ids {
        for &b in &ids {
            let w = if a == b {
                0
            } else if pos[&a].distance(&pos[&b]) <= range {
                1
            } else {
                INF
            };
            d.insert((a, b), w);
        }
    }
    for &k in &ids {
        for &a in &ids {
            for &b in &ids {
                let via = d[&(a, k)] + d[&(k, b)];
                if via < d[&(a, b)] {
                    d.insert((a, b), via);
                }
            }
        }
    }
    d.retain(|_, v| *v < INF);
    d
}

#[test]
fn routes_match_floyd_warshall() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for round in 0..10 {
        let nodes = (0..20)
            .map(|i| node(i, rng.random_range(0.0..100.0), rng.random_range(0.0..100.0), i == 0))
            .collect();
        let t = topo(nodes);
        let r = compute_routes(&t, 30.0);
        let d = all_pairs_hops(&t, 30.0);
        let pos = t.positions();
        for n in &t.nodes {
            let id = n.id;
            let hops = d.get(&(id, 0)).copied();
            assert_eq!(r.hops(id), hops, "round {round} node {id}");
            let expected_parent = match hops {
                Some(h) if h > 0 => t
                    .nodes
                    .iter()
                    .map(|m| m.id)
                    .filter(|&m| m != id && pos[&m].distance(&pos[&id]) <= 30.0)
                    .filter(|m| d.get(&(*m, 0)) == Some(&(h - 1)))
                    .min(),
                _ => None,
            };
            assert_eq!(r.parent(id), expected_parent, "round {round} node {id}");
        }
    }
}

// ---- CSMA event walk -------------------------------------------------------

#[derive(Debug, PartialEq, Eq, Clone, Copy)]
enum Next {
    BackoffEnd(SimTime),
    TxStart(SimTime),
    TxEnd(SimTime),
}

struct WalkNode {
    pos: Position,
    traffic: RngStream,
    mac: RngStream,
    next_gen: SimTime,
    queue: usize,
    holding: Option<u32>,
    nb: u32,
    be: u32,
    next: Option<Next>,
}

/// Independent step-by-step re-derivation of single-hop CSMA/CA toward the
/// sink, predicting every fired event from the raw random streams.
struct CsmaWalk {
    nodes: BTreeMap<NodeId, WalkNode>,
    sink: Position,
    air: Vec<(NodeId, SimTime, SimTime)>,
    mean: f64,
    delivered: u64,
    caf: u64,
    retry: u64,
    overflow: u64,
    range: f64,
}

impl CsmaWalk {
    fn new(t: &Topology, seed: u64, mean: f64) -> Self {
        let sink = t.node(t.sink()).unwrap().position();
        let nodes = t
            .nodes
            .iter()
            .filter(|n| !n.sink)
            .map(|n| {
                let mut traffic = RngStream::new(seed, &format!("traffic.{}", n.id));
                let first = SimTime::from_secs_f64(traffic.draw_exponential(mean).unwrap());
                let w = WalkNode {
                    pos: n.position(),
                    traffic,
                    mac: RngStream::new(seed, &format!("mac.{}", n.id)),
                    next_gen: first,
                    queue: 0,
                    holding: None,
                    nb: 0,
                    be: 3,
                    next: None,
                };
                (n.id, w)
            })
            .collect();
        CsmaWalk {
            nodes,
            sink,
            air: Vec::new(),
            mean,
            delivered: 0,
            caf: 0,
            retry: 0,
            overflow: 0,
            range: 30.0,
        }
    }

    fn backoff(&mut self, id: NodeId, t: SimTime) {
        let w = self.nodes.get_mut(&id).unwrap();
        let k = w.mac.uniform_inclusive((1 << w.be) - 1);
        w.next = Some(Next::BackoffEnd(t + SimTime::from_micros(320 * k)));
    }

    fn begin(&mut self, id: NodeId, t: SimTime) {
        let w = self.nodes.get_mut(&id).unwrap();
        w.holding = Some(0);
        w.nb = 0;
        w.be = 3;
        self.backoff(id, t);
    }

    fn finish(&mut self, id: NodeId, t: SimTime) {
        let w = self.nodes.get_mut(&id).unwrap();
        w.holding = None;
        w.next = None;
        if w.queue > 0 {
            w.queue -= 1;
            self.begin(id, t);
        }
    }

    fn step(&mut self, e: &TraceEntry) {
        let t = e.time;
        match e.event {
            Event::Generate(id) => {
                let mean = self.mean;
                let w = self.nodes.get_mut(&id).unwrap();
                assert_eq!(t, w.next_gen, "generation of {id}");
                w.next_gen = t + SimTime::from_secs_f64(w.traffic.draw_exponential(mean).unwrap());
                if w.holding.is_none() {
                    self.begin(id, t);
                } else if w.queue < 8 {
                    w.queue += 1;
                } else {
                    self.overflow += 1;
                }
            }
            Event::BackoffEnd(id) => {
                let here = self.nodes[&id].pos;
                assert_eq!(self.nodes[&id].next, Some(Next::BackoffEnd(t)), "backoff of {id}");
                let busy = self.air.iter().any(|&(tx, s, end)| {
                    s <= t && t < end && self.nodes[&tx].pos.distance(&here) <= self.range
                });
                let w = self.nodes.get_mut(&id).unwrap();
                if busy {
                    w.nb += 1;
                    w.be = (w.be + 1).min(5);
                    if w.nb >= 4 {
                        self.caf += 1;
                        self.finish(id, t);
                    } else {
                        self.backoff(id, t);
                    }
                } else {
                    w.next = Some(Next::TxStart(t + SimTime::from_micros(192)));
                }
            }
            Event::TxStart(id) => {
                let w = self.nodes.get_mut(&id).unwrap();
                assert_eq!(w.next, Some(Next::TxStart(t)), "tx start of {id}");
                let end = t + SimTime::from_millis(4);
                w.next = Some(Next::TxEnd(end));
                self.air.push((id, t, end));
            }
            Event::TxEnd(id) => {
                assert_eq!(self.nodes[&id].next, Some(Next::TxEnd(t)), "tx end of {id}");
                let start = t - SimTime::from_millis(4);
                let clean = self.air.iter().all(|&(tx, s, end)| {
                    tx == id
                        || !(s < t && start < end)
                        || self.nodes[&tx].pos.distance(&self.sink) > self.range
                });
                if clean {
                    self.delivered += 1;
                    self.finish(id, t);
                } else {
                    let w = self.nodes.get_mut(&id).unwrap();
                    let retries = w.holding.unwrap();
                    if retries >= 3 {
                        self.retry += 1;
                        self.finish(id, t);
                    } else {
                        w.holding = Some(retries + 1);
                        w.nb = 0;
                        w.be = 3;
                        self.backoff(id, t);
                    }
                }
            }
            Event::WindowBoundary => {}
            ref other => panic!("unexpected event {other:?}"),
        }
    }
}

fn walk_csma(t: Topology, seed: u64, mean: f64, horizon: SimTime) -> (CsmaWalk, Totals) {
    let mut k = kernel(t.clone(), MacVariant::Csma, mean, seed);
    k.model_mut().enable_trace(usize::MAX);
    k.run_until(horizon).unwrap();
    let mut walk = CsmaWalk::new(&t, seed, mean);
    for e in k.model().trace() {
        walk.step(e);
    }
    (walk, k.model().totals())
}

fn assert_walk_agrees(walk: &CsmaWalk, totals: &Totals) {
    assert_eq!(walk.delivered, totals.delivered);
    assert_eq!(walk.caf, totals.drops.channel_access_failure);
    assert_eq!(walk.retry, totals.drops.retry_exhausted);
    assert_eq!(walk.overflow, totals.drops.queue_overflow);
}

#[test]
fn csma_sole_sender_first_attempt() {
    let t = topo(vec![node(0, 0.0, 0.0, true), node(1, 10.0, 0.0, false)]);
    let mut k = kernel(t.clone(), MacVariant::Csma, 0.5, 9);
    k.model_mut().enable_trace(usize::MAX);
    k.run_until(secs(30)).unwrap();
    let totals = k.model().totals();
    assert_eq!(totals.drops.total(), 0);
    assert!(totals.generated > 20);
    assert_eq!(
        k.model()
            .trace()
            .iter()
            .filter(|e| matches!(e.event, Event::TxStart(_)))
            .count() as u64,
        totals.delivered,
        "every frame delivered on its first transmission"
    );
    let mut walk = CsmaWalk::new(&t, 9, 0.5);
    k.model().trace().iter().for_each(|e| walk.step(e));
    assert_walk_agrees(&walk, &totals);
}

#[test]
fn csma_two_saturated_senders_match_walk() {
    let t = topo(vec![
        node(0, 0.0, 0.0, true),
        node(1, 10.0, 0.0, false),
        node(2, -10.0, 0.0, false),
    ]);
    for seed in 0..5 {
        let (walk, totals) = walk_csma(t.clone(), seed, 0.002, secs(5));
        assert_walk_agrees(&walk, &totals);
        assert!(totals.drops.retry_exhausted + totals.drops.channel_access_failure > 0 || totals.delivered > 0);
    }
    let (walk, totals) = walk_csma(t, 11, 0.002, secs(20));
    assert_walk_agrees(&walk, &totals);
    assert!(totals.delivered > 0);
}

#[test]
fn csma_hidden_terminal_star_matches_walk() {
    let (walk, totals) = walk_csma(preset("star"), 5, 0.05, secs(5));
    assert_walk_agrees(&walk, &totals);
    assert!(totals.drops.retry_exhausted > 0);
}

#[test]
fn csma_jammed_channel_fails_access() {
    let t = topo(vec![node(0, 0.0, 0.0, true), node(1, 10.0, 0.0, false)]);
    let mut k = kernel(t, MacVariant::Csma, 0.5, 2);
    k.model_mut().set_channel_jammed(true);
    k.model_mut().enable_trace(usize::MAX);
    k.run_until(secs(20)).unwrap();
    let totals = k.model().totals();
    assert_eq!(totals.delivered, 0);
    assert!(totals.drops.channel_access_failure > 0);
    assert_eq!(
        totals.drops.channel_access_failure + totals.in_flight + totals.queued,
        totals.generated
    );
    let backoffs = k
        .model()
        .trace()
        .iter()
        .filter(|e| matches!(e.event, Event::BackoffEnd(_)))
        .count() as u64;
    let caf = totals.drops.channel_access_failure;
    assert!((4 * caf..4 * caf + 4).contains(&backoffs), "{backoffs} attempts for {caf} failures");
}

#[test]
fn queue_overflow_keeps_queue_bounded() {
    let t = topo(vec![node(0, 0.0, 0.0, true), node(1, 10.0, 0.0, false)]);
    let mut k = kernel(t, MacVariant::Csma, 0.001, 2);
    k.model_mut().set_channel_jammed(true);
    for ms in 1..=2000 {
        k.run_until(SimTime::from_millis(ms)).unwrap();
        assert!(k.model().node(1).unwrap().queue_len <= 8);
    }
    let totals = k.model().totals();
    assert!(totals.drops.queue_overflow > 0);
    assert_eq!(k.model().node(1).unwrap().queue_len, 8);
    assert!(totals.conserved());
}

#[test]
fn moving_out_of_range_drops_no_route() {
    let t = topo(vec![node(0, 0.0, 0.0, true), node(1, 10.0, 0.0, false)]);
    for mac in [MacVariant::Csma, MacVariant::Tdma] {
        let mut k = kernel(t.clone(), mac, 0.1, 3);
        k.run_until(secs(2)).unwrap();
        k.apply(Command::MoveNode {
            id: 1,
            x: 500.0,
            y: 0.0,
        })
        .unwrap();
        assert!(!k.model().routes().has_route(1));
        let before = k.model().totals();
        k.run_until(secs(6)).unwrap();
        let after = k.model().totals();
        assert!(after.drops.no_route > before.drops.no_route, "{mac}");
        assert_eq!(after.delivered, before.delivered + before.in_flight, "{mac}");
        assert!(after.conserved());
        assert!(k.model_mut().take_topology_changed());
    }
}

// ---- TDMA --------------------------------------------------------------------

fn own_slot_start(t: SimTime, owner: u64, n: u64, slot: u64, air: u64) -> SimTime {
    let t = t.as_nanos();
    let superframe = slot * n;
    let base = t - t % superframe + owner * slot;
    let candidates = [base, base + superframe];
    for s in candidates {
        if t <= s {
            return SimTime::from_nanos(s);
        }
        if t < s + slot && t + air <= s + slot {
            return SimTime::from_nanos(t);
        }
    }
    unreachable!()
}

#[test]
fn tdma_idle_latency_closed_form() {
    let t = preset("star");
    let mut k = kernel(t, MacVariant::Tdma, 5.0, 8);
    k.model_mut().enable_trace(0);
    k.run_until(secs(300)).unwrap();
    let sim = k.model();
    let superframe = sim.superframe();
    assert_eq!(superframe, SimTime::from_millis(120));
    let mut last_done: BTreeMap<NodeId, SimTime> = BTreeMap::new();
    let mut checked = 0;
    for d in sim.deliveries() {
        let idle = last_done.get(&d.origin).is_none_or(|&done| done <= d.created);
        if idle {
            let start = own_slot_start(d.created, u64::from(d.origin), 15, 8_000_000, 4_000_000);
            assert_eq!(d.delivered, start + SimTime::from_millis(4), "{d:?}");
            assert!(d.delivered - d.created <= superframe);
            checked += 1;
        }
        last_done.insert(d.origin, d.delivered);
    }
    assert!(checked > 500);
}

#[test]
fn tdma_saturated_star_is_collision_free() {
    let t = Topology::star(4, 20.0);
    let mut k = kernel(t, MacVariant::Tdma, 0.001, 1);
    k.run_until(secs(30)).unwrap();
    let totals = k.model().totals();
    assert_eq!(totals.drops.channel_access_failure, 0);
    assert_eq!(totals.drops.retry_exhausted, 0);
    assert!(totals.drops.queue_overflow > 0);
    // Two frames per 8 ms slot, four senders in a 40 ms superframe.
    let per_second = 4.0 * 2.0 / 0.040;
    assert!((totals.delivered as f64 - 30.0 * per_second).abs() <= 4.0 * 2.0);
}

fn overlap_ns(a0: u64, a1: u64, b0: u64, b1: u64) -> u64 {
    a1.min(b1).saturating_sub(a0.max(b0))
}

#[test]
fn tdma_radio_time_follows_slot_roles() {
    let t = preset("star");
    let mut k = kernel(t, MacVariant::Tdma, 2.0, 6);
    k.model_mut().set_recording(Recording::ALL);
    k.run_until(secs(20)).unwrap();
    let windows = k.model_mut().take_windows();
    assert_eq!(windows.len(), 20);
    let slot = 8_000_000u64;
    for w in &windows {
        let (w0, w1) = (w.index * 1_000_000_000, (w.index + 1) * 1_000_000_000);
        let sink_listen: u64 = (w0 / slot..w1 / slot + 1)
            .filter(|s| s % 15 != 0)
            .map(|s| overlap_ns(s * slot, (s + 1) * slot, w0, w1))
            .sum();
        assert_eq!(w.radio_time[&0].rx_ns, sink_listen, "window {}", w.index);
        for leaf in 1..15 {
            let rt = w.radio_time[&leaf];
            assert_eq!(rt.rx_ns, 0, "leaf {leaf} never listens");
            assert_eq!(rt.tx_ns % 4_000_000, 0);
        }
    }
}

// ---- traffic -----------------------------------------------------------------

#[test]
fn poisson_generation_count() {
    let t = preset("star");
    let mut k = kernel(t, MacVariant::Tdma, 0.5, 21);
    k.run_until(secs(10)).unwrap();
    let generated = k.model().totals().generated as f64;
    let expected = 14.0 * 10.0 / 0.5;
    assert!((generated - expected).abs() <= 3.0 * expected.sqrt(), "{generated}");
}

#[test]
fn changed_mean_leaves_pending_generation() {
    let t = topo(vec![node(0, 0.0, 0.0, true), node(1, 10.0, 0.0, false)]);
    let seed = 31;
    let mut oracle = RngStream::new(seed, "traffic.1");
    let mut k = kernel(t, MacVariant::Csma, 0.5, seed);
    let mut fire = SimTime::from_secs_f64(oracle.draw_exponential(0.5).unwrap());
    while fire < secs(4) {
        fire = fire + SimTime::from_secs_f64(oracle.draw_exponential(0.5).unwrap());
    }
    k.run_until(fire - SimTime::from_millis(1).min(fire)).unwrap();
    let cut = k.now();
    assert_eq!(k.model().pending_generation(1), Some(fire));
    k.apply(Command::SetMeanInterval(0.1)).unwrap();
    assert_eq!(k.model().pending_generation(1), Some(fire));
    k.model_mut().enable_trace(usize::MAX);
    k.run_until(cut + secs(1)).unwrap();
    let gens: Vec<SimTime> = k
        .model()
        .trace()
        .iter()
        .filter(|e| e.event == Event::Generate(1))
        .map(|e| e.time)
        .collect();
    assert_eq!(gens[0], fire);
    let next = fire + SimTime::from_secs_f64(oracle.draw_exponential(0.1).unwrap());
    assert_eq!(gens[1], next);
}

// ---- commands ----------------------------------------------------------------

#[test]
fn command_errors() {
    let mut k = kernel(preset("star"), MacVariant::Csma, 0.5, 1);
    let err = |r: Result<(), SimError>| match r {
        Err(SimError::Command(c)) => c,
        other => panic!("{other:?}"),
    };
    assert_eq!(
        err(k.apply(Command::MoveNode { id: 99, x: 0.0, y: 0.0 })),
        CommandError::UnknownNode(99)
    );
    assert_eq!(
        err(k.apply(Command::MoveNode { id: 1, x: f64::NAN, y: 0.0 })),
        CommandError::InvalidPosition
    );
    assert_eq!(
        err(k.apply(Command::SetPreset("ring".into()))),
        CommandError::UnknownPreset("ring".into())
    );
    assert_eq!(
        err(k.apply(Command::SetMeanInterval(0.0))),
        CommandError::InvalidInterval(0.0)
    );
    assert_eq!(
        err(k.apply(Command::SetMeanInterval(f64::INFINITY))),
        CommandError::InvalidInterval(f64::INFINITY)
    );
    let mut small = PresetLibrary::builtin();
    small.insert(Topology {
        name: "pair".into(),
        ..topo(vec![node(0, 0.0, 0.0, true), node(1, 1.0, 0.0, false)])
    });
    let mut k = Kernel::new(
        Simulation::build(preset("star"), MacVariant::Csma, SimParams::default(), 1)
            .unwrap()
            .with_presets(small),
    );
    assert_eq!(
        err(k.apply(Command::SetPreset("pair".into()))),
        CommandError::IncompatiblePreset("pair".into())
    );
}

#[test]
fn set_preset_moves_nodes_and_reroutes() {
    let mut k = kernel(preset("star"), MacVariant::Csma, 0.5, 1);
    k.run_until(secs(3)).unwrap();
    k.apply(Command::SetPreset("line".into())).unwrap();
    let sim = k.model();
    assert_eq!(sim.preset_name(), "line");
    assert_eq!(sim.node(14).unwrap().position, Position::new(280.0, 0.0));
    assert_eq!(sim.routes().parent(14), Some(13));
    assert_eq!(sim.routes().hops(14), Some(14));
    assert!(k.model_mut().take_topology_changed());
    assert!(!k.model_mut().take_topology_changed());
    k.run_until(secs(10)).unwrap();
    assert!(k.model().totals().conserved());
}

// ---- determinism and reset -----------------------------------------------------

#[test]
fn identical_builds_share_first_hundred_events() {
    for mac in [MacVariant::Csma, MacVariant::Tdma] {
        let traces: Vec<Vec<TraceEntry>> = (0..2)
            .map(|_| {
                let mut k = kernel(preset("grid"), mac, 0.1, 42);
                k.model_mut().enable_trace(100);
                k.run_until(secs(30)).unwrap();
                k.model().trace().to_vec()
            })
            .collect();
        assert_eq!(traces[0].len(), 100);
        assert_eq!(traces[0], traces[1]);
    }
}

#[test]
fn different_seeds_diverge() {
    let a = {
        let mut k = kernel(preset("grid"), MacVariant::Csma, 0.1, 1);
        k.model_mut().enable_trace(50);
        k.run_until(secs(5)).unwrap();
        k.model().trace().to_vec()
    };
    let mut k = kernel(preset("grid"), MacVariant::Csma, 0.1, 2);
    k.model_mut().enable_trace(50);
    k.run_until(secs(5)).unwrap();
    assert_ne!(a, k.model().trace());
}

fn windows_of(k: &mut Kernel<Simulation>, until: u64) -> Vec<StatsWindow> {
    k.model_mut().set_recording(Recording::ALL);
    k.run_until(secs(until)).unwrap();
    k.model_mut().take_windows()
}

#[test]
fn reset_reproduces_fresh_instance() {
    for mac in [MacVariant::Csma, MacVariant::Tdma] {
        let mut fresh = kernel(preset("grid"), mac, 0.2, 5);
        let expected = windows_of(&mut fresh, 10);

        let mut k = kernel(preset("grid"), mac, 0.2, 5);
        k.model_mut().set_recording(Recording::ALL);
        k.run_until(SimTime::from_millis(3700)).unwrap();
        k.apply(Command::SetMeanInterval(0.05)).unwrap();
        k.apply(Command::MoveNode { id: 3, x: 4.0, y: 33.0 }).unwrap();
        k.run_until(SimTime::from_millis(12_300)).unwrap();
        k.apply(Command::SetPreset("line".into())).unwrap();
        k.run_until(SimTime::from_millis(15_100)).unwrap();
        k.apply(Command::Reset).unwrap();
        assert_eq!(k.now(), SimTime::ZERO);
        assert_eq!(k.model().preset_name(), "grid");
        assert_eq!(k.model().mean_interval(), 0.2);
        k.model_mut().take_windows();
        assert_eq!(windows_of(&mut k, 10), expected, "{mac}");
    }
}

// ---- invariants --------------------------------------------------------------

#[derive(Debug, Clone)]
enum Perturb {
    Move(NodeId, f64, f64),
    Mean(f64),
    Preset(&'static str),
}

fn perturbation() -> impl Strategy<Value = (u64, Perturb)> {
    let p = prop_oneof![
        (0u32..15, -40.0..200.0f64, -40.0..80.0f64).prop_map(|(n, x, y)| Perturb::Move(n, x, y)),
        (0.01..2.0f64).prop_map(Perturb::Mean),
        prop::sample::select(vec!["star", "line", "grid"]).prop_map(Perturb::Preset),
    ];
    (100u64..15_000, p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conservation_and_radio_time(
        seed in any::<u64>(),
        tdma in any::<bool>(),
        mean in 0.01..1.0f64,
        script in prop::collection::vec(perturbation(), 0..6),
    ) {
        let mac = if tdma { MacVariant::Tdma } else { MacVariant::Csma };
        let mut k = kernel(preset("grid"), mac, mean, seed);
        k.model_mut().set_recording(Recording { windows: true, drop_locations: false });
        let mut script = script;
        script.sort_by_key(|(t, _)| *t);
        let mut script = script.into_iter().peekable();
        for ms in (250..=15_000).step_by(250) {
            while let Some((_, p)) = script.next_if(|(t, _)| *t <= ms) {
                let cmd = match p {
                    Perturb::Move(id, x, y) => Command::MoveNode { id, x, y },
                    Perturb::Mean(m) => Command::SetMeanInterval(m),
                    Perturb::Preset(name) => Command::SetPreset(name.into()),
                };
                k.apply(cmd).unwrap();
            }
            k.run_until(SimTime::from_millis(ms)).unwrap();
            let totals = k.model().totals();
            prop_assert!(totals.conserved(), "{:?}", totals);
            prop_assert!(k.model().nodes().all(|n| n.queue_len <= 8));
        }
        let windows = k.model_mut().take_windows();
        prop_assert_eq!(windows.len(), 15);
        for w in windows {
            for (id, rt) in &w.radio_time {
                prop_assert_eq!(rt.total(), secs(1), "node {} window {}", id, w.index);
            }
            let sum: f64 = w.per_node_mw.values().sum();
            prop_assert!((sum - w.total_mw).abs() < 1e-9);
            prop_assert!(w.per_node_mw.values().all(|&p| (0.02 - 1e-12..=36.0 + 1e-9).contains(&p)));
        }
    }
}
