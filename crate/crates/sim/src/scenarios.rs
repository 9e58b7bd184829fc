//! Built-in scenarios used by the CLI and the tests.

use figoa_core::forwarder::Mode;
use figoa_core::time::{SimDuration, SimTime};
use figoa_core::wire::Name;

use crate::topology::{LinkSpec, NodeSpec, Scenario, SimTopology, WorkItem};

/// Payload size whose signed object splits into seven 1300-byte fragments
/// under name [`LINE8_NAME`] at MTU 1300.
pub const LINE8_PAYLOAD: usize = 7867;
pub const LINE8_NAME: &str = "/line8/1";
pub const LINE8_FLOWS: [u32; 6] = [5, 10, 20, 30, 50, 100];

fn name(s: &str) -> Name {
    s.parse().expect("static name")
}

/// A line `ids[0] - ids[1] - ... - ids[n-1]` with routes for `prefix` pointing
/// towards the last node, which produces `contents`.
fn line(ids: &[String], prefix: &Name, mode: Mode, contents: Vec<(Name, usize)>) -> SimTopology {
    let mut nodes: Vec<NodeSpec> = ids.iter().map(NodeSpec::new).collect();
    for (i, n) in nodes.iter_mut().enumerate() {
        n.mode = mode;
        if i + 1 < ids.len() {
            n.routes.push((prefix.clone(), ids[i + 1].clone()));
        }
    }
    nodes.last_mut().expect("non-empty line").contents = contents;
    let links = ids.windows(2).map(|w| LinkSpec::new(&w[0], &w[1])).collect();
    SimTopology { nodes, links }
}

/// The eight-hop line of the latency table: 10 ms links at 100 Mb/s, MTU 1300,
/// `flows` competing flows on every link, one 7-fragment object.
pub fn line8(flows: u32, mode: Mode) -> Scenario {
    let ids: Vec<String> = std::iter::once("c".to_string())
        .chain((1..=7).map(|i| format!("r{i}")))
        .chain(std::iter::once("p".to_string()))
        .collect();
    let obj = name(LINE8_NAME);
    let mut topology = line(&ids, &name("/line8"), mode, vec![(obj.clone(), LINE8_PAYLOAD)]);
    for l in &mut topology.links {
        l.mtu_ab = 1300;
        l.mtu_ba = 1300;
        l.flows = flows;
    }
    Scenario { topology, workload: vec![WorkItem { at: SimTime::ZERO, node: "c".into(), name: obj }] }
}

/// Consumer, router, producer with default links and a 4 KiB object.
pub fn three_node(mode: Mode) -> Scenario {
    let ids = ["c", "r", "p"].map(String::from);
    let obj = name("/demo/obj");
    let topology = line(&ids, &name("/demo"), mode, vec![(obj.clone(), 4096)]);
    Scenario { topology, workload: vec![WorkItem { at: SimTime::ZERO, node: "c".into(), name: obj }] }
}

/// Eight hops with MTUs shrinking towards the producer, plus a second
/// consumer `c2` hanging off `r4` over a 600-byte link whose interest
/// arrives while the first consumer's content is streaming through `r4`.
pub fn mumtu_line(mode: Mode) -> Scenario {
    let ids: Vec<String> = std::iter::once("c".to_string())
        .chain((1..=7).map(|i| format!("r{i}")))
        .chain(std::iter::once("p".to_string()))
        .collect();
    let prefix = name("/mumtu");
    let obj = name("/mumtu/obj");
    let mut topology = line(&ids, &prefix, mode, vec![(obj.clone(), 20_000)]);
    for (i, l) in topology.links.iter_mut().enumerate() {
        let mtu = 1500 - 50 * i as u32;
        l.mtu_ab = mtu;
        l.mtu_ba = mtu;
        l.bandwidth_bps = 10_000_000;
    }
    let mut c2 = NodeSpec::new("c2");
    c2.routes.push((prefix, "r4".into()));
    topology.nodes.push(c2);
    let mut side = LinkSpec::new("r4", "c2");
    side.latency = SimDuration::from_millis(5);
    side.mtu_ab = 600;
    side.mtu_ba = 600;
    topology.links.push(side);
    Scenario {
        topology,
        workload: vec![
            WorkItem { at: SimTime::ZERO, node: "c".into(), name: obj.clone() },
            WorkItem { at: SimTime::ZERO + SimDuration::from_millis(125), node: "c2".into(), name: obj },
        ],
    }
}

/// Consumer, two routers, producer; the link between the routers flips a
/// payload bit of each content fragment with probability `corrupt`.
pub fn corrupt(corrupt: f64, mode: Mode) -> Scenario {
    let ids = ["c", "r1", "r2", "p"].map(String::from);
    let obj = name("/corrupt/obj");
    let mut topology = line(&ids, &name("/corrupt"), mode, vec![(obj.clone(), 6000)]);
    topology.links[1].corrupt = corrupt;
    Scenario { topology, workload: vec![WorkItem { at: SimTime::ZERO, node: "c".into(), name: obj }] }
}

/// Looks a built-in scenario up by name.
pub fn by_name(s: &str, mode: Mode) -> Option<Scenario> {
    match s {
        "three-node" => Some(three_node(mode)),
        "line8" => Some(line8(1, mode)),
        "mumtu" => Some(mumtu_line(mode)),
        "corrupt" => Some(corrupt(1.0, mode)),
        _ => None,
    }
}

pub const NAMES: [&str; 4] = ["three-node", "line8", "mumtu", "corrupt"];
