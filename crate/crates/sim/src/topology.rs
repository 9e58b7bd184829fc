//! Network description: nodes, links and the interests to issue.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use figoa_core::forwarder::Mode;
use figoa_core::time::{SimDuration, SimTime};
use figoa_core::verifier::DEFAULT_BUFFER_TIMEOUT;
use figoa_core::wire::{Name, MIN_VIABLE_MTU};

use crate::SimError;

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub id: String,
    pub mode: Mode,
    pub verify_signatures: bool,
    pub cs_capacity: usize,
    pub buffer_timeout: SimDuration,
    pub pit_lifetime: SimDuration,
    /// Delay between receiving a packet and sending the resulting packets.
    pub processing_delay: SimDuration,
    /// `(prefix, next-hop node id)`.
    pub routes: Vec<(Name, String)>,
    /// `(name, payload bytes)` this node produces.
    pub contents: Vec<(Name, usize)>,
}

impl NodeSpec {
    pub fn new(id: impl Into<String>) -> Self {
        NodeSpec {
            id: id.into(),
            mode: Mode::CutThrough,
            verify_signatures: true,
            cs_capacity: 64,
            buffer_timeout: DEFAULT_BUFFER_TIMEOUT,
            pit_lifetime: SimDuration::from_secs(4),
            processing_delay: SimDuration::ZERO,
            routes: Vec::new(),
            contents: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub a: String,
    pub b: String,
    pub latency: SimDuration,
    pub bandwidth_bps: u64,
    /// MTU for traffic from `a` to `b`.
    pub mtu_ab: u32,
    /// MTU for traffic from `b` to `a`.
    pub mtu_ba: u32,
    /// Flows sharing the link; fragments of other flows are interleaved
    /// round-robin between consecutive packets.
    pub flows: u32,
    /// Upper bound of uniform random extra delay per packet.
    pub reorder: SimDuration,
    /// Probability of flipping one payload bit of a content fragment.
    pub corrupt: f64,
}

impl LinkSpec {
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Self {
        LinkSpec {
            a: a.into(),
            b: b.into(),
            latency: SimDuration::from_millis(10),
            bandwidth_bps: 100_000_000,
            mtu_ab: 1500,
            mtu_ba: 1500,
            flows: 1,
            reorder: SimDuration::ZERO,
            corrupt: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTopology {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkItem {
    pub at: SimTime,
    pub node: String,
    pub name: Name,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub topology: SimTopology,
    pub workload: Vec<WorkItem>,
}

impl SimTopology {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidTopology(m));
        if self.nodes.is_empty() {
            return bad("no nodes".into());
        }
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id.as_str()) {
                return bad(format!("duplicate node {}", n.id));
            }
        }
        let mut adjacency: BTreeMap<&str, BTreeSet<&str>> = ids.iter().map(|&id| (id, BTreeSet::new())).collect();
        for l in &self.links {
            for end in [&l.a, &l.b] {
                if !ids.contains(end.as_str()) {
                    return bad(format!("link endpoint {end} is not a node"));
                }
            }
            if l.a == l.b {
                return bad(format!("link from {} to itself", l.a));
            }
            if !adjacency.get_mut(l.a.as_str()).expect("checked").insert(&l.b) {
                return bad(format!("more than one link between {} and {}", l.a, l.b));
            }
            adjacency.get_mut(l.b.as_str()).expect("checked").insert(&l.a);
            if l.mtu_ab < MIN_VIABLE_MTU || l.mtu_ba < MIN_VIABLE_MTU {
                return bad(format!("link {}-{} MTU below {MIN_VIABLE_MTU}", l.a, l.b));
            }
            if l.bandwidth_bps == 0 {
                return bad(format!("link {}-{} has zero bandwidth", l.a, l.b));
            }
            if l.flows == 0 {
                return bad(format!("link {}-{} needs at least one flow", l.a, l.b));
            }
            if !(0.0..=1.0).contains(&l.corrupt) {
                return bad(format!("link {}-{} corrupt probability outside [0, 1]", l.a, l.b));
            }
        }
        for n in &self.nodes {
            for (prefix, hop) in &n.routes {
                if !adjacency[n.id.as_str()].contains(hop.as_str()) {
                    return bad(format!("node {} routes {prefix} via non-neighbour {hop}", n.id));
                }
            }
        }
        // Connectivity.
        let start = self.nodes[0].id.as_str();
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &y in &adjacency[x] {
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        if seen.len() != ids.len() {
            return bad("topology is not connected".into());
        }
        Ok(())
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        self.topology.validate()?;
        for w in &self.workload {
            if self.topology.node_index(&w.node).is_none() {
                return Err(SimError::InvalidTopology(format!("workload names unknown node {}", w.node)));
            }
        }
        Ok(())
    }
}
