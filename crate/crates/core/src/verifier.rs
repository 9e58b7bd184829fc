//! Incremental, order-independent verification of content fragments.
//!
//! Each fragment claims the hash state at its start offset. On arrival the
//! verifier advances that state over the payload and compares the result with
//! whatever neighbours it already holds: the predecessor's computed end state
//! must equal this fragment's claim, and this fragment's computed end state
//! must equal the successor's claim. Interior fragments that pass are
//! forwarded at once. The final fragment, which carries the signature, is held
//! back as a hostage until every byte has arrived and the finalized digest
//! (and signature, where a key is available) checks out.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::crypto::{verify_digest, KeyRegistry};
use crate::hashstate::{Digest, HashState};
use crate::time::{SimDuration, SimTime};
use crate::wire::{ContentFragment, ContentObject, Name, Trailer};

/// Fragment buffers live this long by default.
pub const DEFAULT_BUFFER_TIMEOUT: SimDuration = SimDuration(4_000_000_000);

/// Buffers are keyed by name and the digest the producer signed, so distinct
/// objects under one name never mix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BufferKey {
    pub name: Name,
    pub digest: Digest,
}

impl BufferKey {
    pub fn of(cf: &ContentFragment) -> Self {
        BufferKey { name: cf.name.clone(), digest: cf.content_digest }
    }
}

impl fmt::Display for BufferKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.name, &self.digest.to_hex()[..16])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RejectReason {
    #[error("fragment is malformed: {0}")]
    Malformed(String),
    #[error("content was already rejected")]
    AlreadyRejected,
    #[error("fragment disagrees with earlier fragments on {0}")]
    InconsistentHeader(&'static str),
    #[error("first fragment does not start from the initialization vector")]
    InitialState,
    #[error("hash state mismatch at offset {0}")]
    StateMismatch(u64),
    #[error("fragment at offset {0} overlaps different data")]
    Overlap(u64),
    #[error("reassembled digest does not match the content digest")]
    DigestMismatch,
    #[error("reassembled content is malformed: {0}")]
    BadContent(String),
    #[error("signature does not verify")]
    BadSignature,
    #[error("no key available to check the signature")]
    KeyUnavailable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    /// Consistent interior fragment; send it on now.
    Forward(ContentFragment),
    /// The final fragment, withheld until the whole object verifies.
    HoldHostage,
    /// Every byte arrived and verified. `release` holds what still has to be
    /// sent: the triggering fragment if it was an interior one, then the hostage.
    AcceptComplete {
        object: ContentObject,
        release: Vec<ContentFragment>,
    },
    Reject(RejectReason),
    DuplicateIgnored,
}

impl Decision {
    pub fn kind(&self) -> &'static str {
        match self {
            Decision::Forward(_) => "forward",
            Decision::HoldHostage => "hold",
            Decision::AcceptComplete { .. } => "accept",
            Decision::Reject(_) => "reject",
            Decision::DuplicateIgnored => "duplicate",
        }
    }
}

/// How much a verifier demands of the signature once the digest matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignaturePolicy {
    /// Digest match alone is enough.
    Skip,
    /// Check the signature when the key locator resolves locally.
    IfKeyAvailable,
    /// Reject unless the signature is checked and valid (consumers).
    Require,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateOrigin {
    /// Carried in a fragment starting at this offset.
    Claimed,
    /// Computed from a fragment ending at this offset.
    Computed,
    /// Both were seen and compared equal.
    Matched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnownState {
    pub state: HashState,
    pub origin: StateOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferStatus {
    Accumulating,
    Rejected,
}

#[derive(Debug, Clone)]
struct Segment {
    claimed: HashState,
    payload: Vec<u8>,
}

/// Reassembly and verification state for one content object.
#[derive(Debug, Clone)]
pub struct PendingContentBuffer {
    key: BufferKey,
    total: u64,
    segments: BTreeMap<u64, Segment>,
    known_states: BTreeMap<u64, KnownState>,
    hostage: Option<ContentFragment>,
    received: u64,
    created_at: SimTime,
    status: BufferStatus,
}

impl PendingContentBuffer {
    fn new(cf: &ContentFragment, now: SimTime) -> Self {
        PendingContentBuffer {
            key: BufferKey::of(cf),
            total: cf.object_size,
            segments: BTreeMap::new(),
            known_states: BTreeMap::new(),
            hostage: None,
            received: 0,
            created_at: now,
            status: BufferStatus::Accumulating,
        }
    }

    pub fn key(&self) -> &BufferKey {
        &self.key
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn received(&self) -> u64 {
        self.received
    }

    pub fn created_at(&self) -> SimTime {
        self.created_at
    }

    pub fn status(&self) -> BufferStatus {
        self.status
    }

    pub fn hostage(&self) -> Option<&ContentFragment> {
        self.hostage.as_ref()
    }

    pub fn known_states(&self) -> &BTreeMap<u64, KnownState> {
        &self.known_states
    }

    /// Received byte ranges as `(offset, size)`, in offset order.
    pub fn ranges(&self) -> Vec<(u64, u64)> {
        self.segments.iter().map(|(&v, s)| (v, s.payload.len() as u64)).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.received == self.total
    }

    /// Interior fragments received so far, rebuilt in the form they arrived.
    pub fn interior_fragments(&self) -> Vec<ContentFragment> {
        let hostage_offset = self.hostage.as_ref().map(|h| h.payload_offset);
        self.segments
            .iter()
            .filter(|(&v, _)| Some(v) != hostage_offset)
            .map(|(&v, seg)| ContentFragment {
                name: self.key.name.clone(),
                object_size: self.total,
                internal_state: seg.claimed,
                payload_offset: v,
                content_digest: self.key.digest,
                payload: seg.payload.clone(),
                trailer: None,
            })
            .collect()
    }

    fn mark_rejected(&mut self) {
        self.status = BufferStatus::Rejected;
        self.segments.clear();
        self.known_states.clear();
        self.hostage = None;
        self.received = 0;
    }

    /// Returns the segment whose range intersects `[v, end)`, if any.
    fn overlapping(&self, v: u64, end: u64) -> Option<(u64, &Segment)> {
        if let Some((&off, seg)) = self.segments.range(..end).next_back() {
            if off + seg.payload.len() as u64 > v {
                return Some((off, seg));
            }
        }
        None
    }

    fn check_and_insert(&mut self, cf: &ContentFragment) -> Result<(), RejectReason> {
        let v = cf.payload_offset;
        let w = cf.end_offset();
        if v == 0 && !cf.internal_state.is_initial() {
            return Err(RejectReason::InitialState);
        }
        // Predecessor: its computed end state must equal our claim.
        let start = match self.known_states.get(&v) {
            Some(k) if k.state != cf.internal_state => return Err(RejectReason::StateMismatch(v)),
            Some(_) => StateOrigin::Matched,
            None => StateOrigin::Claimed,
        };
        // Successor: our computed end state must equal its claim.
        let end = if cf.is_last() {
            None
        } else {
            let computed = cf.internal_state.compress_prefix(&cf.payload);
            let origin = match self.known_states.get(&w) {
                Some(k) if k.state != computed => return Err(RejectReason::StateMismatch(w)),
                Some(_) => StateOrigin::Matched,
                None => StateOrigin::Computed,
            };
            Some((computed, origin))
        };
        self.known_states.insert(v, KnownState { state: cf.internal_state, origin: start });
        if let Some((state, origin)) = end {
            self.known_states.insert(w, KnownState { state, origin });
        }
        self.segments.insert(v, Segment { claimed: cf.internal_state, payload: cf.payload.clone() });
        self.received += cf.payload.len() as u64;
        if cf.is_last() {
            self.hostage = Some(cf.clone());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssembleError {
    #[error("Incomplete: {missing} of {total} bytes missing")]
    Incomplete { missing: u64, total: u64 },
    #[error("{0}")]
    Malformed(String),
}

/// Rebuilds the content object from a complete buffer. The digest of the
/// result is recomputed from the bytes, never copied from fragment headers.
pub fn assemble(buffer: &PendingContentBuffer) -> Result<ContentObject, AssembleError> {
    let incomplete = || AssembleError::Incomplete { missing: buffer.total - buffer.received, total: buffer.total };
    let hostage = buffer.hostage.as_ref().ok_or_else(incomplete)?;
    let trailer = hostage.trailer.as_ref().ok_or_else(incomplete)?;
    let mut region = Vec::with_capacity(buffer.total as usize);
    for (&v, seg) in &buffer.segments {
        if v != region.len() as u64 {
            return Err(incomplete());
        }
        region.extend_from_slice(&seg.payload);
    }
    if region.len() as u64 != buffer.total {
        return Err(incomplete());
    }
    let (name, key_locator, payload) =
        ContentObject::parse_signable_region(&region).map_err(|e| AssembleError::Malformed(e.to_string()))?;
    if name != buffer.key.name {
        return Err(AssembleError::Malformed("reassembled name differs from fragment name".into()));
    }
    let Trailer { key_locator: trailer_kl, signature } = trailer.clone();
    if key_locator != trailer_kl {
        return Err(AssembleError::Malformed("trailer key locator differs from signed key locator".into()));
    }
    Ok(ContentObject::from_parts(name, key_locator, payload, signature))
}

/// Buffer table plus the policy applied on completion.
#[derive(Debug, Clone)]
pub struct Verifier {
    buffers: BTreeMap<BufferKey, PendingContentBuffer>,
    registry: KeyRegistry,
    policy: SignaturePolicy,
    timeout: SimDuration,
}

impl Verifier {
    pub fn new(policy: SignaturePolicy, registry: KeyRegistry) -> Self {
        Verifier { buffers: BTreeMap::new(), registry, policy, timeout: DEFAULT_BUFFER_TIMEOUT }
    }

    pub fn with_timeout(mut self, timeout: SimDuration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn policy(&self) -> SignaturePolicy {
        self.policy
    }

    pub fn timeout(&self) -> SimDuration {
        self.timeout
    }

    pub fn registry(&self) -> &KeyRegistry {
        &self.registry
    }

    pub fn buffer(&self, key: &BufferKey) -> Option<&PendingContentBuffer> {
        self.buffers.get(key)
    }

    pub fn buffers(&self) -> impl Iterator<Item = &PendingContentBuffer> {
        self.buffers.values()
    }

    /// Number of buffers, including rejected ones kept as tombstones.
    pub fn len(&self) -> usize {
        self.buffers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffers.is_empty()
    }

    /// Drops any state for `key`, e.g. when the interest behind it is gone.
    pub fn remove(&mut self, key: &BufferKey) -> Option<PendingContentBuffer> {
        self.buffers.remove(key)
    }

    pub fn on_fragment(&mut self, cf: &ContentFragment, now: SimTime) -> Decision {
        let key = BufferKey::of(cf);
        if let Err(e) = cf.validate() {
            return self.reject(&key, RejectReason::Malformed(e.to_string()));
        }
        let buffer = self.buffers.entry(key.clone()).or_insert_with(|| PendingContentBuffer::new(cf, now));
        if buffer.status == BufferStatus::Rejected {
            return Decision::Reject(RejectReason::AlreadyRejected);
        }
        if buffer.total != cf.object_size {
            return self.reject(&key, RejectReason::InconsistentHeader("object size"));
        }
        let v = cf.payload_offset;
        if let Some((off, seg)) = buffer.overlapping(v, cf.end_offset()) {
            let same_hostage = match (&buffer.hostage, cf.is_last()) {
                (Some(h), true) => h == cf,
                (None, false) => true,
                _ => false,
            };
            let exact = off == v && seg.payload == cf.payload && seg.claimed == cf.internal_state;
            if exact && same_hostage {
                return Decision::DuplicateIgnored;
            }
            return self.reject(&key, RejectReason::Overlap(v));
        }
        if let Err(reason) = buffer.check_and_insert(cf) {
            return self.reject(&key, reason);
        }
        if !buffer.is_complete() {
            return if cf.is_last() { Decision::HoldHostage } else { Decision::Forward(cf.clone()) };
        }
        match self.complete(&key) {
            Ok(object) => {
                let buffer = self.buffers.remove(&key).expect("buffer present");
                let mut release = Vec::with_capacity(2);
                if !cf.is_last() {
                    release.push(cf.clone());
                }
                release.push(buffer.hostage.expect("complete buffer has a hostage"));
                Decision::AcceptComplete { object, release }
            }
            Err(reason) => self.reject(&key, reason),
        }
    }

    fn complete(&self, key: &BufferKey) -> Result<ContentObject, RejectReason> {
        let buffer = &self.buffers[key];
        let hostage = buffer.hostage.as_ref().expect("complete buffer has a hostage");
        let digest = hostage
            .internal_state
            .finalize(&hostage.payload, buffer.total)
            .map_err(|e| RejectReason::Malformed(e.to_string()))?;
        if digest != key.digest {
            return Err(RejectReason::DigestMismatch);
        }
        let object = assemble(buffer).map_err(|e| RejectReason::BadContent(e.to_string()))?;
        if object.digest() != key.digest {
            return Err(RejectReason::DigestMismatch);
        }
        match (self.policy, self.registry.resolve(object.key_locator())) {
            (SignaturePolicy::Skip, _) | (SignaturePolicy::IfKeyAvailable, None) => {}
            (SignaturePolicy::Require, None) => return Err(RejectReason::KeyUnavailable),
            (_, Some(key)) => {
                if !verify_digest(&key, &digest, object.signature()) {
                    return Err(RejectReason::BadSignature);
                }
            }
        }
        Ok(object)
    }

    /// Marks the buffer rejected. It stays as a tombstone until it expires so
    /// late fragments of the same content are refused too.
    fn reject(&mut self, key: &BufferKey, reason: RejectReason) -> Decision {
        if let Some(b) = self.buffers.get_mut(key) {
            b.mark_rejected();
        }
        Decision::Reject(reason)
    }

    /// Removes buffers at least `timeout` old. Returns the keys of buffers
    /// that were still accumulating; their hostages are dropped.
    pub fn expire_buffers(&mut self, now: SimTime, timeout: SimDuration) -> Vec<BufferKey> {
        let expired: Vec<BufferKey> =
            self.buffers.iter().filter(|(_, b)| b.created_at + timeout <= now).map(|(k, _)| k.clone()).collect();
        let mut flushed = Vec::new();
        for key in expired {
            let b = self.buffers.remove(&key).expect("listed above");
            if b.status == BufferStatus::Accumulating {
                flushed.push(key);
            }
        }
        flushed
    }

    /// [`Verifier::expire_buffers`] with the configured timeout.
    pub fn expire(&mut self, now: SimTime) -> Vec<BufferKey> {
        self.expire_buffers(now, self.timeout)
    }

    /// Earliest time at which some buffer will expire.
    pub fn next_expiry(&self) -> Option<SimTime> {
        self.buffers.values().map(|b| b.created_at + self.timeout).min()
    }
}
