//! Packet formats and their canonical TLV encoding.
//!
//! Every packet is a top-level TLV (`0x01` Interest, `0x02` InterestFragment,
//! `0x03` ContentObject, `0x04` ContentFragment) whose value is a fixed
//! sequence of nested field TLVs. Encoding is canonical: fields always appear
//! in the same order, and decoding rejects anything else, including trailing
//! bytes. The full layout is documented in `docs/wire-format.md`.

pub mod tlv;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::crypto::{sign_digest, KeyLocator, KeyPair, PublicKey, SchemeId, Signature};
use crate::hashstate::{sha256, Digest, HashState, BLOCK_SIZE, DIGEST_LEN, STATE_ENCODED_LEN};
use tlv::{Reader, Writer, HEADER_LEN};

/// Largest encoded name accepted.
pub const MAX_NAME_LEN: usize = 8192;

/// No face or discovered path MTU may be smaller than this.
pub const MIN_VIABLE_MTU: u32 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("truncated {field}")]
    Truncated { field: &'static str },
    #[error("unknown packet type 0x{0:02x}")]
    UnknownType(u8),
    #[error("invalid {field}: {reason}")]
    InvariantViolation { field: &'static str, reason: String },
}

fn violation(field: &'static str, reason: impl Into<String>) -> WireError {
    WireError::InvariantViolation { field, reason: reason.into() }
}

/// Hierarchical content name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    components: Vec<Vec<u8>>,
}

impl Name {
    pub fn new(components: Vec<Vec<u8>>) -> Result<Self, WireError> {
        if components.is_empty() {
            return Err(violation("name", "at least one component required"));
        }
        if components.iter().any(|c| c.is_empty()) {
            return Err(violation("name", "empty component"));
        }
        let name = Name { components };
        if name.encoded_len() > MAX_NAME_LEN {
            return Err(violation("name", format!("encoding exceeds {MAX_NAME_LEN} bytes")));
        }
        Ok(name)
    }

    pub fn components(&self) -> &[Vec<u8>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn is_prefix_of(&self, other: &Name) -> bool {
        other.components.len() >= self.components.len()
            && self.components.iter().zip(&other.components).all(|(a, b)| a == b)
    }

    /// Size of this name's TLV encoding.
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.components.iter().map(|c| HEADER_LEN + c.len()).sum::<usize>()
    }

    fn write(&self, w: &mut Writer) {
        w.nested(tlv::NAME, |w| {
            for c in &self.components {
                w.put(tlv::NAME_COMPONENT, c);
            }
        });
    }

    fn read(r: &mut Reader<'_>) -> Result<Self, WireError> {
        let value = r.expect(tlv::NAME, "name")?;
        let mut inner = Reader::new(value);
        let mut components = Vec::new();
        while !inner.is_empty() {
            components.push(inner.expect(tlv::NAME_COMPONENT, "name component")?.to_vec());
        }
        Name::new(components)
    }
}

impl FromStr for Name {
    type Err = WireError;

    /// Parses `/a/b/c`. Empty segments are skipped; `%XX` escapes are decoded.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut components = Vec::new();
        for seg in s.split('/').filter(|seg| !seg.is_empty()) {
            let bytes = seg.as_bytes();
            let mut comp = Vec::with_capacity(bytes.len());
            let mut i = 0;
            while i < bytes.len() {
                if bytes[i] == b'%' && i + 2 < bytes.len() {
                    let hex = std::str::from_utf8(&bytes[i + 1..i + 3]).ok();
                    match hex.and_then(|h| u8::from_str_radix(h, 16).ok()) {
                        Some(b) => {
                            comp.push(b);
                            i += 3;
                            continue;
                        }
                        None => return Err(violation("name", format!("bad escape in {seg:?}"))),
                    }
                }
                comp.push(bytes[i]);
                i += 1;
            }
            components.push(comp);
        }
        Name::new(components)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.components {
            f.write_str("/")?;
            for &b in c {
                if b.is_ascii_alphanumeric() || b"-._~".contains(&b) {
                    write!(f, "{}", b as char)?;
                } else {
                    write!(f, "%{b:02X}")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Name({self})")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interest {
    pub name: Name,
    pub nonce: [u8; 8],
    /// Smallest MTU seen so far on the reverse path.
    pub mu_mtu: Option<u32>,
}

impl Interest {
    pub fn new(name: Name, nonce: [u8; 8]) -> Self {
        Interest { name, nonce, mu_mtu: None }
    }

    pub fn validate(&self) -> Result<(), WireError> {
        match self.mu_mtu {
            Some(m) if m < MIN_VIABLE_MTU => {
                Err(violation("mu_mtu", format!("{m} is below the minimum viable MTU {MIN_VIABLE_MTU}")))
            }
            _ => Ok(()),
        }
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.name.encoded_len() + HEADER_LEN + 8 + self.mu_mtu.map_or(0, |_| HEADER_LEN + 4)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::with_capacity(self.encoded_len());
        w.nested(tlv::INTEREST, |w| {
            self.name.write(w);
            w.put(tlv::NONCE, &self.nonce);
            if let Some(m) = self.mu_mtu {
                w.put(tlv::MU_MTU, &m.to_be_bytes());
            }
        });
        w.into_bytes()
    }

    fn read_value(value: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(value);
        let name = Name::read(&mut r)?;
        let nonce = r.expect_fixed::<8>(tlv::NONCE, "nonce")?;
        let mu_mtu = match r.optional(tlv::MU_MTU, "mu_mtu")? {
            Some(v) => Some(u32::from_be_bytes(v.try_into().map_err(|_| violation("mu_mtu", "expected 4 bytes"))?)),
            None => None,
        };
        r.finish("interest")?;
        let interest = Interest { name, nonce, mu_mtu };
        interest.validate()?;
        Ok(interest)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterestFragment {
    pub reassembly_id: [u8; 8],
    pub seq: u16,
    pub count: u16,
    pub payload: Vec<u8>,
}

impl InterestFragment {
    /// Encoded size of everything but the payload bytes.
    pub const HEADER_LEN: usize = HEADER_LEN + (HEADER_LEN + 8) + 2 * (HEADER_LEN + 2) + HEADER_LEN;

    pub fn validate(&self) -> Result<(), WireError> {
        if self.count == 0 {
            return Err(violation("count", "must be at least 1"));
        }
        if self.seq >= self.count {
            return Err(violation("seq", format!("{} not below count {}", self.seq, self.count)));
        }
        if self.payload.is_empty() {
            return Err(violation("payload", "empty interest fragment"));
        }
        Ok(())
    }

    pub fn encoded_len(&self) -> usize {
        Self::HEADER_LEN + self.payload.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::with_capacity(self.encoded_len());
        w.nested(tlv::INTEREST_FRAGMENT, |w| {
            w.put(tlv::REASSEMBLY_ID, &self.reassembly_id);
            w.put(tlv::SEQ, &self.seq.to_be_bytes());
            w.put(tlv::COUNT, &self.count.to_be_bytes());
            w.put(tlv::PAYLOAD, &self.payload);
        });
        w.into_bytes()
    }

    fn read_value(value: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(value);
        let reassembly_id = r.expect_fixed::<8>(tlv::REASSEMBLY_ID, "reassembly_id")?;
        let seq = u16::from_be_bytes(r.expect_fixed::<2>(tlv::SEQ, "seq")?);
        let count = u16::from_be_bytes(r.expect_fixed::<2>(tlv::COUNT, "count")?);
        let payload = r.expect(tlv::PAYLOAD, "payload")?.to_vec();
        r.finish("interest fragment")?;
        let frag = InterestFragment { reassembly_id, seq, count, payload };
        frag.validate()?;
        Ok(frag)
    }
}

fn key_locator_len(kl: &KeyLocator) -> usize {
    HEADER_LEN
        + match kl {
            KeyLocator::Key(k) => HEADER_LEN + 1 + k.bytes().len(),
            KeyLocator::KeyName(n) => HEADER_LEN + n.encoded_len(),
        }
}

fn write_key_locator(w: &mut Writer, kl: &KeyLocator) {
    w.nested(tlv::KEY_LOCATOR, |w| match kl {
        KeyLocator::Key(k) => w.put(tlv::KEY_BYTES, &k.to_file_bytes()),
        KeyLocator::KeyName(n) => w.nested(tlv::KEY_NAME, |w| n.write(w)),
    });
}

fn read_key_locator(r: &mut Reader<'_>) -> Result<KeyLocator, WireError> {
    let value = r.expect(tlv::KEY_LOCATOR, "key_locator")?;
    let mut inner = Reader::new(value);
    let kl = match inner.peek_type() {
        Some(tlv::KEY_BYTES) => {
            let bytes = inner.expect(tlv::KEY_BYTES, "key_locator key")?;
            let key = PublicKey::from_file_bytes(bytes).map_err(|e| violation("key_locator key", e.to_string()))?;
            KeyLocator::Key(key)
        }
        Some(tlv::KEY_NAME) => {
            let v = inner.expect(tlv::KEY_NAME, "key_locator name")?;
            let mut nr = Reader::new(v);
            let name = Name::read(&mut nr)?;
            nr.finish("key_locator name")?;
            KeyLocator::KeyName(name)
        }
        Some(t) => return Err(violation("key_locator", format!("unexpected type 0x{t:02x}"))),
        None => return Err(WireError::Truncated { field: "key_locator" }),
    };
    inner.finish("key_locator")?;
    Ok(kl)
}

fn signature_len(sig: &Signature) -> usize {
    HEADER_LEN + (HEADER_LEN + 1) + HEADER_LEN + sig.bytes().len()
}

fn write_signature(w: &mut Writer, sig: &Signature) {
    w.nested(tlv::SIGNATURE, |w| {
        w.put(tlv::SIGNATURE_SCHEME, &[sig.scheme().as_u8()]);
        w.put(tlv::SIGNATURE_BITS, sig.bytes());
    });
}

fn read_signature(r: &mut Reader<'_>) -> Result<Signature, WireError> {
    let value = r.expect(tlv::SIGNATURE, "signature")?;
    let mut inner = Reader::new(value);
    let [id] = inner.expect_fixed::<1>(tlv::SIGNATURE_SCHEME, "signature scheme")?;
    let scheme = SchemeId::from_u8(id).map_err(|e| violation("signature scheme", e.to_string()))?;
    let bits = inner.expect(tlv::SIGNATURE_BITS, "signature bits")?;
    inner.finish("signature")?;
    Signature::new(scheme, bits.to_vec()).map_err(|e| violation("signature bits", e.to_string()))
}

/// A named, signed unit of content.
///
/// The signature covers the SHA-256 digest of the signable region: the
/// canonical encoding of name, key locator and payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentObject {
    name: Name,
    key_locator: KeyLocator,
    payload: Vec<u8>,
    signature: Signature,
    digest: Digest,
}

impl ContentObject {
    pub fn sign(name: Name, key_locator: KeyLocator, payload: Vec<u8>, keypair: &KeyPair) -> Self {
        let region = signable_region(&name, &key_locator, &payload);
        let digest = sha256(&region);
        let signature = sign_digest(keypair, &digest);
        ContentObject { name, key_locator, payload, signature, digest }
    }

    /// Rebuilds an object from its parts; the digest is recomputed.
    pub fn from_parts(name: Name, key_locator: KeyLocator, payload: Vec<u8>, signature: Signature) -> Self {
        let digest = sha256(&signable_region(&name, &key_locator, &payload));
        ContentObject { name, key_locator, payload, signature, digest }
    }

    pub fn name(&self) -> &Name {
        &self.name
    }

    pub fn key_locator(&self) -> &KeyLocator {
        &self.key_locator
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn digest(&self) -> Digest {
        self.digest
    }

    pub fn signable_region(&self) -> Vec<u8> {
        signable_region(&self.name, &self.key_locator, &self.payload)
    }

    pub fn signable_len(&self) -> u64 {
        signable_len(&self.name, &self.key_locator, self.payload.len()) as u64
    }

    pub fn trailer(&self) -> Trailer {
        Trailer { key_locator: self.key_locator.clone(), signature: self.signature.clone() }
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.signable_len() as usize + signature_len(&self.signature)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::with_capacity(self.encoded_len());
        w.nested(tlv::CONTENT_OBJECT, |w| {
            write_region(w, &self.name, &self.key_locator, &self.payload);
            write_signature(w, &self.signature);
        });
        w.into_bytes()
    }

    fn read_value(value: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(value);
        let (name, key_locator, payload) = read_region(&mut r)?;
        let signature = read_signature(&mut r)?;
        r.finish("content object")?;
        Ok(ContentObject::from_parts(name, key_locator, payload, signature))
    }

    /// Parses a signable region back into its name, key locator and payload.
    pub fn parse_signable_region(region: &[u8]) -> Result<(Name, KeyLocator, Vec<u8>), WireError> {
        let mut r = Reader::new(region);
        let parts = read_region(&mut r)?;
        r.finish("signable region")?;
        Ok(parts)
    }
}

fn signable_len(name: &Name, kl: &KeyLocator, payload_len: usize) -> usize {
    name.encoded_len() + key_locator_len(kl) + HEADER_LEN + payload_len
}

fn signable_region(name: &Name, kl: &KeyLocator, payload: &[u8]) -> Vec<u8> {
    let mut w = Writer::with_capacity(signable_len(name, kl, payload.len()));
    write_region(&mut w, name, kl, payload);
    w.into_bytes()
}

fn write_region(w: &mut Writer, name: &Name, kl: &KeyLocator, payload: &[u8]) {
    name.write(w);
    write_key_locator(w, kl);
    w.put(tlv::PAYLOAD, payload);
}

fn read_region(r: &mut Reader<'_>) -> Result<(Name, KeyLocator, Vec<u8>), WireError> {
    let name = Name::read(r)?;
    let kl = read_key_locator(r)?;
    let payload = r.expect(tlv::PAYLOAD, "payload")?.to_vec();
    Ok((name, kl, payload))
}

/// Key locator and signature, carried only by the fragment holding the
/// final byte of the signable region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trailer {
    pub key_locator: KeyLocator,
    pub signature: Signature,
}

impl Trailer {
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + key_locator_len(&self.key_locator) + signature_len(&self.signature)
    }
}

/// A block-aligned slice of a content object's signable region together with
/// the hash state at its start offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentFragment {
    pub name: Name,
    /// Length of the full signable region.
    pub object_size: u64,
    /// Hash state after absorbing bytes `[0, payload_offset)`.
    pub internal_state: HashState,
    pub payload_offset: u64,
    pub content_digest: Digest,
    pub payload: Vec<u8>,
    pub trailer: Option<Trailer>,
}

/// Fixed part of a content fragment header, excluding name and trailer.
const FRAGMENT_FIXED_LEN: usize = HEADER_LEN // packet
    + HEADER_LEN + 8 // object size
    + HEADER_LEN + STATE_ENCODED_LEN
    + HEADER_LEN + 8 // offset
    + HEADER_LEN + 4 // payload size
    + HEADER_LEN + DIGEST_LEN
    + HEADER_LEN; // payload header

/// Encoded size of a content fragment minus its payload bytes.
pub fn header_size(name: &Name, trailer: Option<&Trailer>) -> usize {
    FRAGMENT_FIXED_LEN + name.encoded_len() + trailer.map_or(0, Trailer::encoded_len)
}

impl ContentFragment {
    pub fn payload_size(&self) -> u32 {
        self.payload.len() as u32
    }

    pub fn end_offset(&self) -> u64 {
        self.payload_offset + self.payload.len() as u64
    }

    /// Whether this fragment carries the final byte of the signable region.
    pub fn is_last(&self) -> bool {
        self.end_offset() == self.object_size
    }

    pub fn header_size(&self) -> usize {
        header_size(&self.name, self.trailer.as_ref())
    }

    pub fn encoded_len(&self) -> usize {
        self.header_size() + self.payload.len()
    }

    pub fn validate(&self) -> Result<(), WireError> {
        let v = self.payload_offset;
        let s = self.payload.len() as u64;
        if s == 0 {
            return Err(violation("payload_size", "empty fragment"));
        }
        if s > u32::MAX as u64 {
            return Err(violation("payload_size", "exceeds 32 bits"));
        }
        if !v.is_multiple_of(BLOCK_SIZE as u64) {
            return Err(violation("payload_offset", format!("{v} is not block aligned")));
        }
        let end = v.checked_add(s).ok_or_else(|| violation("payload_offset", "overflow"))?;
        if end > self.object_size {
            return Err(violation(
                "payload_offset",
                format!("fragment [{v}, {end}) exceeds object size {}", self.object_size),
            ));
        }
        if end != self.object_size && !s.is_multiple_of(BLOCK_SIZE as u64) {
            return Err(violation("payload_size", format!("{s} is not block aligned on a non-final fragment")));
        }
        if self.internal_state.bytes_processed() != v {
            return Err(violation(
                "internal_state",
                format!("state covers {} bytes but offset is {v}", self.internal_state.bytes_processed()),
            ));
        }
        if self.trailer.is_some() != (end == self.object_size) {
            return Err(violation("trailer", "present iff the fragment holds the final byte"));
        }
        Ok(())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::with_capacity(self.encoded_len());
        w.nested(tlv::CONTENT_FRAGMENT, |w| {
            self.name.write(w);
            w.put(tlv::OBJECT_SIZE, &self.object_size.to_be_bytes());
            w.put(tlv::INTERNAL_STATE, &self.internal_state.serialize());
            w.put(tlv::PAYLOAD_OFFSET, &self.payload_offset.to_be_bytes());
            w.put(tlv::PAYLOAD_SIZE, &self.payload_size().to_be_bytes());
            w.put(tlv::CONTENT_DIGEST, self.content_digest.as_bytes());
            w.put(tlv::PAYLOAD, &self.payload);
            if let Some(t) = &self.trailer {
                w.nested(tlv::TRAILER, |w| {
                    write_key_locator(w, &t.key_locator);
                    write_signature(w, &t.signature);
                });
            }
        });
        w.into_bytes()
    }

    fn read_value(value: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(value);
        let name = Name::read(&mut r)?;
        let object_size = u64::from_be_bytes(r.expect_fixed::<8>(tlv::OBJECT_SIZE, "object_size")?);
        let state_bytes = r.expect_fixed::<STATE_ENCODED_LEN>(tlv::INTERNAL_STATE, "internal_state")?;
        let internal_state =
            HashState::deserialize(&state_bytes).map_err(|e| violation("internal_state", e.to_string()))?;
        let payload_offset = u64::from_be_bytes(r.expect_fixed::<8>(tlv::PAYLOAD_OFFSET, "payload_offset")?);
        let payload_size = u32::from_be_bytes(r.expect_fixed::<4>(tlv::PAYLOAD_SIZE, "payload_size")?);
        let content_digest = Digest(r.expect_fixed::<DIGEST_LEN>(tlv::CONTENT_DIGEST, "content_digest")?);
        let payload = r.expect(tlv::PAYLOAD, "payload")?.to_vec();
        if payload.len() != payload_size as usize {
            return Err(violation(
                "payload_size",
                format!("declared {payload_size} but payload holds {} bytes", payload.len()),
            ));
        }
        let trailer = match r.optional(tlv::TRAILER, "trailer")? {
            Some(v) => {
                let mut tr = Reader::new(v);
                let key_locator = read_key_locator(&mut tr)?;
                let signature = read_signature(&mut tr)?;
                tr.finish("trailer")?;
                Some(Trailer { key_locator, signature })
            }
            None => None,
        };
        r.finish("content fragment")?;
        let cf =
            ContentFragment { name, object_size, internal_state, payload_offset, content_digest, payload, trailer };
        cf.validate()?;
        Ok(cf)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Packet {
    Interest(Interest),
    InterestFragment(InterestFragment),
    ContentObject(ContentObject),
    ContentFragment(ContentFragment),
}

impl Packet {
    pub fn encode(&self) -> Vec<u8> {
        match self {
            Packet::Interest(p) => p.encode(),
            Packet::InterestFragment(p) => p.encode(),
            Packet::ContentObject(p) => p.encode(),
            Packet::ContentFragment(p) => p.encode(),
        }
    }

    pub fn encoded_len(&self) -> usize {
        match self {
            Packet::Interest(p) => p.encoded_len(),
            Packet::InterestFragment(p) => p.encoded_len(),
            Packet::ContentObject(p) => p.encoded_len(),
            Packet::ContentFragment(p) => p.encoded_len(),
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Packet, WireError> {
        let typ = *bytes.first().ok_or(WireError::Truncated { field: "packet" })?;
        if !(tlv::INTEREST..=tlv::CONTENT_FRAGMENT).contains(&typ) {
            return Err(WireError::UnknownType(typ));
        }
        let mut r = Reader::new(bytes);
        let value = r.expect(typ, "packet")?;
        r.finish("packet")?;
        Ok(match typ {
            tlv::INTEREST => Packet::Interest(Interest::read_value(value)?),
            tlv::INTEREST_FRAGMENT => Packet::InterestFragment(InterestFragment::read_value(value)?),
            tlv::CONTENT_OBJECT => Packet::ContentObject(ContentObject::read_value(value)?),
            _ => Packet::ContentFragment(ContentFragment::read_value(value)?),
        })
    }
}

macro_rules! typed_decode {
    ($ty:ident, $variant:ident) => {
        impl $ty {
            pub fn decode(bytes: &[u8]) -> Result<$ty, WireError> {
                match Packet::decode(bytes)? {
                    Packet::$variant(p) => Ok(p),
                    _ => Err(violation("packet", concat!("expected ", stringify!($ty)))),
                }
            }
        }
    };
}

typed_decode!(Interest, Interest);
typed_decode!(InterestFragment, InterestFragment);
typed_decode!(ContentObject, ContentObject);
typed_decode!(ContentFragment, ContentFragment);
