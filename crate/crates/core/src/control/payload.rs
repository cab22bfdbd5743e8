use serde_json::{json, Map, Value};

use crate::netsim::{DropReason, StatsWindow, Topology};

pub const POWER: &str = "stats.power";
pub const PACKETS: &str = "stats.packets";
pub const DROPS_LOCATED: &str = "stats.drops.located";
pub const TOPOLOGY_CHANGED: &str = "topology.changed";

/// Topics whose payloads are derived from statistics windows.
pub const STATS_TOPICS: [&str; 3] = [POWER, PACKETS, DROPS_LOCATED];

pub fn power(w: &StatsWindow) -> Value {
    let per_node: Map<String, Value> = w
        .per_node_mw
        .iter()
        .map(|(id, mw)| (id.to_string(), json!(mw)))
        .collect();
    json!({ "window": w.index, "total_mw": w.total_mw, "per_node": per_node })
}

pub fn packets(w: &StatsWindow) -> Value {
    let drops: Map<String, Value> = DropReason::ALL
        .iter()
        .map(|&r| (r.as_str().to_owned(), json!(w.drops.get(r))))
        .collect();
    json!({
        "window": w.index,
        "generated": w.generated,
        "delivered": w.delivered,
        "drops": drops,
    })
}

pub fn drops_located(w: &StatsWindow) -> Value {
    let drops: Vec<Value> = w
        .located
        .iter()
        .map(|d| {
            json!({
                "t": d.time.as_secs_f64(),
                "node": d.node,
                "x": d.position.x,
                "y": d.position.y,
                "reason": d.reason.as_str(),
            })
        })
        .collect();
    json!({ "window": w.index, "drops": drops })
}

/// The preset file layout plus the name of the preset last applied.
pub fn topology(t: &Topology, preset: &str) -> Value {
    let nodes: Vec<Value> = t
        .nodes
        .iter()
        .map(|n| json!({ "id": n.id, "x": n.x, "y": n.y, "sink": n.sink }))
        .collect();
    json!({ "name": t.name, "nodes": nodes, "preset": preset })
}
