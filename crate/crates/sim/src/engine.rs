//! Discrete-event execution of a scenario.
//!
//! Events are processed in `(time, sequence)` order from a single queue. A
//! link direction transmits one packet at a time; after each packet it stays
//! busy for `F - 1` further packet-times, standing in for the fragments of the
//! other `F - 1` flows interleaved round-robin on that link.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use figoa_core::crypto::{KeyLocator, KeyPair, SchemeId};
use figoa_core::forwarder::{Event, FaceId, Node, NodeConfig, Outcome};
use figoa_core::time::{SimDuration, SimTime};
use figoa_core::wire::{ContentObject, Name, Packet};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::topology::Scenario;
use crate::trace::{SimTrace, TraceEvent};
use crate::SimError;

/// Hard stop for runaway scenarios.
const MAX_EVENTS: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConsumerOutcome {
    Accepted,
    /// Some node on the way rejected the content.
    Rejected {
        node: String,
    },
    TimedOut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub node: String,
    pub name: Name,
    pub requested_at: SimTime,
    /// When the producer or a cache first started answering for this name.
    pub served_at: Option<SimTime>,
    pub completed_at: Option<SimTime>,
    pub outcome: ConsumerOutcome,
    pub object: Option<ContentObject>,
}

impl Completion {
    /// Time from the first serve to delivery at the consumer.
    pub fn content_latency(&self) -> Option<SimDuration> {
        Some(self.completed_at? - self.served_at?)
    }

    /// Time from issuing the interest to delivery.
    pub fn round_trip(&self) -> Option<SimDuration> {
        Some(self.completed_at? - self.requested_at)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub trace: SimTrace,
    pub completions: Vec<Completion>,
    pub end_time: SimTime,
    pub events_processed: u64,
}

#[derive(Debug)]
enum Action {
    Arrive { node: usize, face: FaceId, packet: Box<Packet> },
    Express { request: usize },
    Timer { node: usize },
}

struct Queued {
    time: SimTime,
    seq: u64,
    action: Action,
}

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        (self.time, self.seq) == (o.time, o.seq)
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        (self.time, self.seq).cmp(&(o.time, o.seq))
    }
}

/// One end of a link as seen from a node's face.
#[derive(Debug, Clone, Copy)]
struct FaceEnd {
    link: usize,
    /// True if the node is the link's `a` side.
    a_side: bool,
    peer: usize,
    peer_face: FaceId,
}

struct Engine<'a> {
    sc: &'a Scenario,
    nodes: Vec<Node>,
    faces: Vec<Vec<FaceEnd>>,
    /// Next time each link direction is free; index `2 * link + (b -> a)`.
    next_free: Vec<SimTime>,
    queue: BinaryHeap<Reverse<Queued>>,
    seq: u64,
    timers: Vec<Option<SimTime>>,
    rng: ChaCha8Rng,
    trace: SimTrace,
    completions: Vec<Completion>,
    served: BTreeMap<Name, SimTime>,
    rejected: BTreeMap<Name, String>,
}

pub fn run(sc: &Scenario, seed: u64) -> Result<SimResult, SimError> {
    sc.validate()?;
    let mut engine = Engine::new(sc, seed);
    engine.run()
}

fn serialization(bytes: usize, bps: u64) -> SimDuration {
    let bits = bytes as u128 * 8 * 1_000_000_000;
    SimDuration(bits.div_ceil(bps as u128) as u64)
}

fn summary(p: &Packet) -> (Option<String>, Option<u64>, Option<u64>) {
    match p {
        Packet::Interest(i) => (Some(i.name.to_string()), None, None),
        Packet::InterestFragment(f) => (None, Some(f.seq as u64), Some(f.payload.len() as u64)),
        Packet::ContentObject(co) => (Some(co.name().to_string()), Some(0), Some(co.signable_len())),
        Packet::ContentFragment(cf) => {
            (Some(cf.name.to_string()), Some(cf.payload_offset), Some(cf.payload.len() as u64))
        }
    }
}

impl<'a> Engine<'a> {
    fn new(sc: &'a Scenario, seed: u64) -> Self {
        let topo = &sc.topology;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut faces: Vec<Vec<FaceEnd>> = vec![Vec::new(); topo.nodes.len()];
        for (li, l) in topo.links.iter().enumerate() {
            let a = topo.node_index(&l.a).expect("validated");
            let b = topo.node_index(&l.b).expect("validated");
            let fa = faces[a].len() as FaceId + 1;
            let fb = faces[b].len() as FaceId + 1;
            faces[a].push(FaceEnd { link: li, a_side: true, peer: b, peer_face: fb });
            faces[b].push(FaceEnd { link: li, a_side: false, peer: a, peer_face: fa });
        }
        let mut nodes = Vec::with_capacity(topo.nodes.len());
        for (i, spec) in topo.nodes.iter().enumerate() {
            let mut cfg = NodeConfig {
                mode: spec.mode,
                verify_signatures: spec.verify_signatures,
                cs_capacity: spec.cs_capacity,
                buffer_timeout: spec.buffer_timeout,
                pit_lifetime: spec.pit_lifetime,
                ..NodeConfig::default()
            };
            for (f, end) in faces[i].iter().enumerate() {
                let l = &topo.links[end.link];
                cfg.faces.insert(f as FaceId + 1, if end.a_side { l.mtu_ab } else { l.mtu_ba });
            }
            let mut node = Node::new(spec.id.clone(), cfg);
            for (prefix, hop) in &spec.routes {
                let hop = topo.node_index(hop).expect("validated");
                let face = faces[i].iter().position(|e| e.peer == hop).expect("validated neighbour");
                node.add_route(prefix.clone(), face as FaceId + 1);
            }
            if !spec.contents.is_empty() {
                let mut secret = [0u8; 32];
                rng.fill_bytes(&mut secret);
                let kp = KeyPair::from_private(SchemeId::Ed25519, secret);
                for (name, size) in &spec.contents {
                    let mut payload = vec![0u8; *size];
                    rng.fill_bytes(&mut payload);
                    let kl = KeyLocator::Key(kp.public().clone());
                    node.produce(ContentObject::sign(name.clone(), kl, payload, &kp));
                }
            }
            nodes.push(node);
        }
        let completions = sc
            .workload
            .iter()
            .map(|w| Completion {
                node: w.node.clone(),
                name: w.name.clone(),
                requested_at: w.at,
                served_at: None,
                completed_at: None,
                outcome: ConsumerOutcome::TimedOut,
                object: None,
            })
            .collect();
        Engine {
            sc,
            timers: vec![None; nodes.len()],
            nodes,
            faces,
            next_free: vec![SimTime::ZERO; 2 * topo.links.len()],
            queue: BinaryHeap::new(),
            seq: 0,
            rng,
            trace: SimTrace::default(),
            completions,
            served: BTreeMap::new(),
            rejected: BTreeMap::new(),
        }
    }

    fn schedule(&mut self, time: SimTime, action: Action) {
        self.seq += 1;
        self.queue.push(Reverse(Queued { time, seq: self.seq, action }));
    }

    fn run(&mut self) -> Result<SimResult, SimError> {
        for (i, w) in self.sc.workload.iter().enumerate() {
            self.schedule(w.at, Action::Express { request: i });
        }
        let mut now = SimTime::ZERO;
        let mut processed = 0u64;
        while let Some(Reverse(q)) = self.queue.pop() {
            now = q.time;
            processed += 1;
            if processed > MAX_EVENTS {
                return Err(SimError::Runaway(MAX_EVENTS));
            }
            match q.action {
                Action::Express { request } => {
                    let w = &self.sc.workload[request];
                    let node = self.sc.topology.node_index(&w.node).expect("validated");
                    let nonce: [u8; 8] = self.rng.gen();
                    let out = self.nodes[node].express_interest(w.name.clone(), nonce, now);
                    self.handle(node, out, now);
                }
                Action::Arrive { node, face, packet } => {
                    let (name, offset, size) = summary(&packet);
                    self.trace.push(TraceEvent {
                        time: now,
                        node: self.nodes[node].id().to_string(),
                        kind: "receive",
                        name,
                        offset,
                        size,
                        face: Some(face),
                    });
                    let out = self.nodes[node].on_packet(*packet, face, now);
                    self.handle(node, out, now);
                }
                Action::Timer { node } => {
                    if self.timers[node] == Some(now) {
                        self.timers[node] = None;
                    }
                    let out = self.nodes[node].expire(now);
                    self.handle(node, out, now);
                }
            }
        }
        let rejected = std::mem::take(&mut self.rejected);
        for c in &mut self.completions {
            if c.served_at.is_none() {
                c.served_at = self.served.get(&c.name).copied();
            }
            if c.completed_at.is_none() && c.outcome == ConsumerOutcome::TimedOut {
                if let Some(node) = rejected.get(&c.name) {
                    c.outcome = ConsumerOutcome::Rejected { node: node.clone() };
                }
            }
        }
        Ok(SimResult {
            trace: std::mem::take(&mut self.trace),
            completions: std::mem::take(&mut self.completions),
            end_time: now,
            events_processed: processed,
        })
    }

    fn handle(&mut self, node: usize, out: Outcome, now: SimTime) {
        let id = self.nodes[node].id().to_string();
        for e in &out.events {
            self.record(node, &id, e, now);
        }
        let depart = now + self.sc.topology.nodes[node].processing_delay;
        for (face, packet) in out.sends {
            self.transmit(node, face, packet, now, depart);
        }
        if let Some(deadline) = self.nodes[node].next_deadline() {
            let deadline = deadline.max(now);
            if self.timers[node].is_none_or(|t| deadline < t) {
                self.timers[node] = Some(deadline);
                self.schedule(deadline, Action::Timer { node });
            }
        }
    }

    fn record(&mut self, node: usize, id: &str, e: &Event, now: SimTime) {
        let mut ev = TraceEvent {
            time: now,
            node: id.to_string(),
            kind: e.kind(),
            name: e.name().map(ToString::to_string),
            offset: None,
            size: None,
            face: None,
        };
        match e {
            Event::Forward { offset, size, face, .. } | Event::Refragment { offset, size, face, .. } => {
                ev.offset = Some(*offset);
                ev.size = Some(*size);
                ev.face = Some(*face);
            }
            Event::HoldHostage { offset, size, .. } => {
                ev.offset = Some(*offset);
                ev.size = Some(*size);
            }
            Event::Produce { fragments, face, name, .. } => {
                ev.size = Some(*fragments as u64);
                ev.face = Some(*face);
                self.served.entry(name.clone()).or_insert(now);
            }
            Event::CacheHit { face, name } => {
                ev.face = Some(*face);
                self.served.entry(name.clone()).or_insert(now);
            }
            Event::InterestForwarded { face, .. } | Event::InterestCollapsed { face, .. } => ev.face = Some(*face),
            Event::Reject { name, .. } | Event::ConsumerReject { name, .. } => {
                self.rejected.entry(name.clone()).or_insert_with(|| id.to_string());
            }
            Event::Deliver { object } => {
                let served = self.served.get(object.name()).copied();
                let node_id = &self.sc.topology.nodes[node].id;
                for c in self.completions.iter_mut() {
                    if &c.node == node_id
                        && c.name == *object.name()
                        && c.completed_at.is_none()
                        && c.requested_at <= now
                    {
                        c.completed_at = Some(now);
                        c.served_at = served;
                        c.outcome = ConsumerOutcome::Accepted;
                        c.object = Some(object.clone());
                    }
                }
            }
            _ => {}
        }
        self.trace.push(ev);
    }

    fn transmit(&mut self, node: usize, face: FaceId, mut packet: Packet, now: SimTime, depart: SimTime) {
        let end = self.faces[node][face as usize - 1];
        let link = &self.sc.topology.links[end.link];
        let dir = 2 * end.link + usize::from(!end.a_side);
        let (name, offset, size) = summary(&packet);
        self.trace.push(TraceEvent {
            time: now,
            node: self.nodes[node].id().to_string(),
            kind: "send",
            name,
            offset,
            size,
            face: Some(face),
        });
        let bytes = packet.encoded_len();
        let ser = serialization(bytes, link.bandwidth_bps);
        let start = depart.max(self.next_free[dir]);
        let done = start + ser;
        self.next_free[dir] = done + SimDuration(ser.0 * (link.flows as u64 - 1));
        if link.corrupt > 0.0 && self.rng.gen_bool(link.corrupt) {
            if let Packet::ContentFragment(cf) = &mut packet {
                let bit = self.rng.gen_range(0..cf.payload.len() * 8);
                cf.payload[bit / 8] ^= 1 << (bit % 8);
            }
        }
        let jitter = if link.reorder.is_zero() { 0 } else { self.rng.gen_range(0..=link.reorder.0) };
        let arrival = done + link.latency + SimDuration(jitter);
        self.schedule(arrival, Action::Arrive { node: end.peer, face: end.peer_face, packet: Box::new(packet) });
    }
}
