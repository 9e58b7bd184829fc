//! A named-data forwarding node.
//!
//! A node is a single-threaded state machine: each call takes one packet (or a
//! timer tick) and returns the packets to send and the events that happened.
//! Interests are matched against the PIT, then the Content Store, then locally
//! produced content, then routed by longest-prefix match. Each interest is
//! stamped with the smallest MTU seen on its reverse path, so a producer can
//! fragment content once for the whole path.
//!
//! Content fragments are checked by the node's [`Verifier`]. In cut-through
//! mode interior fragments go downstream as soon as they verify against their
//! neighbours and only the final fragment is held; in hop-by-hop mode nothing
//! leaves until the whole object has been reassembled and verified.

pub mod interest;
pub mod tables;

use std::collections::BTreeMap;

use crate::crypto::{verify_digest, KeyRegistry};
use crate::fragmenter::{fragment_content, refragment};
use crate::hashstate::Digest;
use crate::time::{SimDuration, SimTime};
use crate::verifier::{BufferStatus, Decision, RejectReason, SignaturePolicy, Verifier, DEFAULT_BUFFER_TIMEOUT};
use crate::wire::{ContentFragment, ContentObject, Interest, InterestFragment, Name, Packet};

pub use interest::{fragment_interest, packetize_interest, reassemble_interest, InterestFragmentError};
pub use tables::{ContentStore, Fib, FibEntry, Pit, PitEntry, PitFace};

pub type FaceId = u32;

/// The local application. Its MTU is unbounded; content reaching it is
/// delivered whole.
pub const APP_FACE: FaceId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    CutThrough,
    HopByHopReassembly,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cut_through" | "cut-through" => Ok(Mode::CutThrough),
            "hop_by_hop_reassembly" | "hop-by-hop" | "reassembly" => Ok(Mode::HopByHopReassembly),
            _ => Err(format!("unknown mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NodeConfig {
    pub mode: Mode,
    /// Check signatures of transiting content when the key is known locally.
    pub verify_signatures: bool,
    pub cs_capacity: usize,
    pub buffer_timeout: SimDuration,
    pub pit_lifetime: SimDuration,
    /// MTU for sending on each face.
    pub faces: BTreeMap<FaceId, u32>,
    pub registry: KeyRegistry,
}

impl Default for NodeConfig {
    fn default() -> Self {
        NodeConfig {
            mode: Mode::CutThrough,
            verify_signatures: true,
            cs_capacity: 64,
            buffer_timeout: DEFAULT_BUFFER_TIMEOUT,
            pit_lifetime: SimDuration::from_secs(4),
            faces: BTreeMap::new(),
            registry: KeyRegistry::new(),
        }
    }
}

/// Something a node did, for tracing and tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    /// A content fragment went out on `face`.
    Forward {
        name: Name,
        offset: u64,
        size: u64,
        face: FaceId,
    },
    /// A fragment starting at `offset` was split into `pieces` for `face`.
    Refragment {
        name: Name,
        offset: u64,
        size: u64,
        face: FaceId,
        pieces: usize,
    },
    /// Locally produced content was fragmented to answer an interest.
    Produce {
        name: Name,
        fragments: usize,
        mtu: usize,
        face: FaceId,
    },
    CacheHit {
        name: Name,
        face: FaceId,
    },
    HoldHostage {
        name: Name,
        offset: u64,
        size: u64,
    },
    Accept {
        name: Name,
        digest: Digest,
    },
    Reject {
        name: Name,
        reason: RejectReason,
    },
    /// Verified content handed to the local application.
    Deliver {
        object: ContentObject,
    },
    /// Content for the local application failed its signature check.
    ConsumerReject {
        name: Name,
        reason: RejectReason,
    },
    InterestForwarded {
        name: Name,
        face: FaceId,
        mu_mtu: Option<u32>,
    },
    InterestCollapsed {
        name: Name,
        face: FaceId,
    },
    Drop {
        name: Option<Name>,
        reason: &'static str,
    },
    /// PIT entry or fragment buffer removed after its timeout.
    Timeout {
        name: Name,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Forward { .. } => "forward",
            Event::Refragment { .. } => "refragment",
            Event::Produce { .. } => "produce",
            Event::CacheHit { .. } => "cache_hit",
            Event::HoldHostage { .. } => "hold",
            Event::Accept { .. } => "accept",
            Event::Reject { .. } => "reject",
            Event::Deliver { .. } => "deliver",
            Event::ConsumerReject { .. } => "consumer_reject",
            Event::InterestForwarded { .. } => "interest",
            Event::InterestCollapsed { .. } => "collapse",
            Event::Drop { .. } => "drop",
            Event::Timeout { .. } => "timeout",
        }
    }

    pub fn name(&self) -> Option<&Name> {
        match self {
            Event::Forward { name, .. }
            | Event::Refragment { name, .. }
            | Event::Produce { name, .. }
            | Event::CacheHit { name, .. }
            | Event::HoldHostage { name, .. }
            | Event::Accept { name, .. }
            | Event::Reject { name, .. }
            | Event::ConsumerReject { name, .. }
            | Event::InterestForwarded { name, .. }
            | Event::InterestCollapsed { name, .. }
            | Event::Timeout { name } => Some(name),
            Event::Deliver { object } => Some(object.name()),
            Event::Drop { name, .. } => name.as_ref(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub sends: Vec<(FaceId, Packet)>,
    pub events: Vec<Event>,
}

impl Outcome {
    fn send(&mut self, face: FaceId, packet: Packet) {
        self.sends.push((face, packet));
    }

    fn event(&mut self, e: Event) {
        self.events.push(e);
    }

    pub fn extend(&mut self, other: Outcome) {
        self.sends.extend(other.sends);
        self.events.extend(other.events);
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    id: String,
    config: NodeConfig,
    pit: Pit,
    fib: Fib,
    cs: ContentStore,
    produced: BTreeMap<Name, ContentObject>,
    verifier: Verifier,
    interests: interest::InterestReassembly,
}

impl Node {
    pub fn new(id: impl Into<String>, config: NodeConfig) -> Self {
        let policy = if config.verify_signatures { SignaturePolicy::IfKeyAvailable } else { SignaturePolicy::Skip };
        let verifier = Verifier::new(policy, config.registry.clone()).with_timeout(config.buffer_timeout);
        Node {
            id: id.into(),
            cs: ContentStore::new(config.cs_capacity),
            config,
            pit: Pit::default(),
            fib: Fib::default(),
            produced: BTreeMap::new(),
            verifier,
            interests: interest::InterestReassembly::default(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &NodeConfig {
        &self.config
    }

    pub fn pit(&self) -> &Pit {
        &self.pit
    }

    pub fn fib(&self) -> &Fib {
        &self.fib
    }

    pub fn cs(&self) -> &ContentStore {
        &self.cs
    }

    pub fn verifier(&self) -> &Verifier {
        &self.verifier
    }

    pub fn add_face(&mut self, face: FaceId, mtu: u32) {
        self.config.faces.insert(face, mtu);
    }

    pub fn add_route(&mut self, prefix: Name, face: FaceId) {
        self.fib.add_route(prefix, face);
    }

    /// Registers content this node answers for itself.
    pub fn produce(&mut self, object: ContentObject) {
        self.produced.insert(object.name().clone(), object);
    }

    pub fn face_mtu(&self, face: FaceId) -> u32 {
        if face == APP_FACE {
            u32::MAX
        } else {
            self.config.faces.get(&face).copied().unwrap_or(u32::MAX)
        }
    }

    pub fn on_packet(&mut self, packet: Packet, in_face: FaceId, now: SimTime) -> Outcome {
        match packet {
            Packet::Interest(i) => self.on_interest(i, in_face, now),
            Packet::InterestFragment(f) => self.on_interest_fragment(f, in_face, now),
            Packet::ContentFragment(cf) => self.on_content_fragment(cf, in_face, now),
            Packet::ContentObject(co) => {
                // A whole object is treated as its own single fragment.
                match fragment_content(&co, usize::MAX) {
                    Ok(mut frags) => self.on_content_fragment(frags.remove(0), in_face, now),
                    Err(_) => Outcome::default(),
                }
            }
        }
    }

    /// An interest from the local application.
    pub fn express_interest(&mut self, name: Name, nonce: [u8; 8], now: SimTime) -> Outcome {
        self.on_interest(Interest::new(name, nonce), APP_FACE, now)
    }

    pub fn on_interest_fragment(&mut self, frag: InterestFragment, in_face: FaceId, now: SimTime) -> Outcome {
        match self.interests.accept(frag, in_face, now) {
            None => Outcome::default(),
            Some(Ok(interest)) => self.on_interest(interest, in_face, now),
            Some(Err(_)) => {
                let mut out = Outcome::default();
                out.event(Event::Drop { name: None, reason: "bad interest fragments" });
                out
            }
        }
    }

    pub fn on_interest(&mut self, interest: Interest, in_face: FaceId, now: SimTime) -> Outcome {
        let mut out = Outcome::default();
        let name = interest.name.clone();
        let stamped = match interest.mu_mtu {
            Some(m) => m.min(self.face_mtu(in_face)),
            None => self.face_mtu(in_face),
        };

        if let Some(entry) = self.pit.get_mut(&name) {
            if entry.faces.contains_key(&in_face) {
                out.event(Event::Drop { name: Some(name), reason: "duplicate interest" });
                return out;
            }
            entry.faces.insert(in_face, PitFace { mu_mtu: stamped, arrived_at: now });
            out.event(Event::InterestCollapsed { name: name.clone(), face: in_face });
            self.replay_buffered(&name, in_face, stamped, &mut out);
            return out;
        }

        if let Some(object) = self.cs.lookup(&name) {
            out.event(Event::CacheHit { name: name.clone(), face: in_face });
            self.send_object(&object, in_face, stamped, &mut out);
            return out;
        }

        if let Some(object) = self.produced.get(&name).cloned() {
            if in_face == APP_FACE {
                out.event(Event::Deliver { object });
                return out;
            }
            match fragment_content(&object, stamped as usize) {
                Ok(frags) => {
                    out.event(Event::Produce {
                        name: name.clone(),
                        fragments: frags.len(),
                        mtu: stamped as usize,
                        face: in_face,
                    });
                    for f in frags {
                        self.emit_fragment(f, in_face, &mut out);
                    }
                }
                Err(_) => out.event(Event::Drop { name: Some(name), reason: "MTU too small for content" }),
            }
            return out;
        }

        let Some(upstream) = self.fib.lookup(&name).and_then(|e| e.faces.first().copied()) else {
            out.event(Event::Drop { name: Some(name), reason: "no route" });
            return out;
        };
        if upstream == in_face {
            out.event(Event::Drop { name: Some(name), reason: "route points back" });
            return out;
        }
        let mut faces = BTreeMap::new();
        faces.insert(in_face, PitFace { mu_mtu: stamped, arrived_at: now });
        self.pit.insert(PitEntry {
            name: name.clone(),
            faces,
            upstream: Some(upstream),
            created_at: now,
            expiry: now + self.config.pit_lifetime,
        });
        let mut fwd = interest;
        fwd.mu_mtu = (stamped != u32::MAX).then_some(stamped);
        out.event(Event::InterestForwarded { name: name.clone(), face: upstream, mu_mtu: fwd.mu_mtu });
        let mtu = self.face_mtu(upstream) as usize;
        match packetize_interest(&fwd, mtu, fwd.nonce) {
            Ok(packets) => {
                for p in packets {
                    out.send(upstream, p);
                }
            }
            Err(_) => {
                self.pit.remove(&name);
                out.event(Event::Drop { name: Some(name), reason: "interest does not fit upstream MTU" });
            }
        }
        out
    }

    pub fn on_content_fragment(&mut self, cf: ContentFragment, in_face: FaceId, now: SimTime) -> Outcome {
        let mut out = Outcome::default();
        let name = cf.name.clone();
        if self.pit.get(&name).is_none() {
            out.event(Event::Drop { name: Some(name), reason: "unsolicited" });
            return out;
        }
        let (offset, size) = (cf.payload_offset, cf.payload.len() as u64);
        match self.verifier.on_fragment(&cf, now) {
            Decision::Forward(f) => {
                if self.config.mode == Mode::CutThrough {
                    for (face, target) in self.downstream(&name, in_face) {
                        self.emit_fragment_to(&f, face, target, &mut out);
                    }
                }
            }
            Decision::HoldHostage => out.event(Event::HoldHostage { name, offset, size }),
            Decision::DuplicateIgnored => out.event(Event::Drop { name: Some(name), reason: "duplicate fragment" }),
            Decision::Reject(reason) => {
                self.pit.remove(&name);
                out.event(Event::Reject { name, reason });
            }
            Decision::AcceptComplete { object, release } => {
                out.event(Event::Accept { name: name.clone(), digest: object.digest() });
                self.cs.insert(object.clone());
                for (face, target) in self.downstream(&name, in_face) {
                    if face == APP_FACE {
                        self.deliver(&object, &mut out);
                    } else if self.config.mode == Mode::CutThrough {
                        for f in &release {
                            self.emit_fragment_to(f, face, target, &mut out);
                        }
                    } else {
                        self.send_object(&object, face, target, &mut out);
                    }
                }
                self.pit.remove(&name);
            }
        }
        out
    }

    /// Faces waiting for `name`, other than the one content arrived on, with
    /// the MTU each should receive.
    fn downstream(&self, name: &Name, in_face: FaceId) -> Vec<(FaceId, u32)> {
        self.pit
            .get(name)
            .map(|e| e.faces.iter().filter(|(&f, _)| f != in_face).map(|(&f, p)| (f, p.mu_mtu)).collect())
            .unwrap_or_default()
    }

    /// Sends fragments already forwarded for `name` to a face that joined late.
    fn replay_buffered(&mut self, name: &Name, face: FaceId, target: u32, out: &mut Outcome) {
        if self.config.mode != Mode::CutThrough || face == APP_FACE {
            return;
        }
        let frags: Vec<ContentFragment> = self
            .verifier
            .buffers()
            .filter(|b| &b.key().name == name && b.status() == BufferStatus::Accumulating)
            .flat_map(|b| b.interior_fragments())
            .collect();
        for f in frags {
            self.emit_fragment_to(&f, face, target, out);
        }
    }

    /// Sends one fragment, splitting it first if it exceeds `target`.
    fn emit_fragment_to(&self, cf: &ContentFragment, face: FaceId, target: u32, out: &mut Outcome) {
        if face == APP_FACE {
            return;
        }
        let target = target.min(self.face_mtu(face)) as usize;
        if cf.encoded_len() <= target {
            self.emit_fragment(cf.clone(), face, out);
            return;
        }
        match refragment(cf, target) {
            Ok(pieces) => {
                out.event(Event::Refragment {
                    name: cf.name.clone(),
                    offset: cf.payload_offset,
                    size: cf.payload.len() as u64,
                    face,
                    pieces: pieces.len(),
                });
                for p in pieces {
                    self.emit_fragment(p, face, out);
                }
            }
            Err(_) => out.event(Event::Drop { name: Some(cf.name.clone()), reason: "MTU too small for fragment" }),
        }
    }

    fn emit_fragment(&self, cf: ContentFragment, face: FaceId, out: &mut Outcome) {
        out.event(Event::Forward {
            name: cf.name.clone(),
            offset: cf.payload_offset,
            size: cf.payload.len() as u64,
            face,
        });
        out.send(face, Packet::ContentFragment(cf));
    }

    /// Sends a whole verified object toward `face`, fragmented for `target`.
    fn send_object(&self, object: &ContentObject, face: FaceId, target: u32, out: &mut Outcome) {
        if face == APP_FACE {
            self.deliver(object, out);
            return;
        }
        let target = target.min(self.face_mtu(face)) as usize;
        match fragment_content(object, target) {
            Ok(frags) => {
                for f in frags {
                    self.emit_fragment(f, face, out);
                }
            }
            Err(_) => out.event(Event::Drop { name: Some(object.name().clone()), reason: "MTU too small for content" }),
        }
    }

    /// Consumers always check the signature, whatever the router policy.
    fn deliver(&self, object: &ContentObject, out: &mut Outcome) {
        let name = object.name().clone();
        match self.config.registry.resolve(object.key_locator()) {
            None => out.event(Event::ConsumerReject { name, reason: RejectReason::KeyUnavailable }),
            Some(key) if !verify_digest(&key, &object.digest(), object.signature()) => {
                out.event(Event::ConsumerReject { name, reason: RejectReason::BadSignature })
            }
            Some(_) => out.event(Event::Deliver { object: object.clone() }),
        }
    }

    /// Flushes timed-out fragment buffers, PIT entries and interest buffers.
    pub fn expire(&mut self, now: SimTime) -> Outcome {
        let mut out = Outcome::default();
        for key in self.verifier.expire(now) {
            if self.pit.remove(&key.name).is_some() {
                out.event(Event::Timeout { name: key.name });
            }
        }
        for name in self.pit.expire(now) {
            out.event(Event::Timeout { name });
        }
        if self.interests.expire(now, self.config.buffer_timeout) > 0 {
            out.event(Event::Drop { name: None, reason: "incomplete interest" });
        }
        out
    }

    /// Earliest time at which [`Node::expire`] has something to do.
    pub fn next_deadline(&self) -> Option<SimTime> {
        [self.verifier.next_expiry(), self.pit.next_expiry(), self.interests.next_expiry(self.config.buffer_timeout)]
            .into_iter()
            .flatten()
            .min()
    }
}
