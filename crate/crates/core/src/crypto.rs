//! Hash-and-sign signatures over content digests, plus a local key registry.
//!
//! Two schemes are shipped. [`SchemeId::Test`] is a keyed hash whose "public"
//! key is the shared secret itself; it is fast and only meant for tests and
//! simulations. [`SchemeId::Ed25519`] is a real asymmetric scheme.

use std::collections::BTreeMap;
use std::fmt;

use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use rand::RngCore;
use thiserror::Error;

use crate::hashstate::{sha256, Digest};
use crate::wire::Name;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("unsupported signature scheme {0}")]
    UnsupportedScheme(u8),
    #[error("bad key material: {0}")]
    BadKey(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum SchemeId {
    Test = 0,
    Ed25519 = 1,
}

impl SchemeId {
    pub fn from_u8(id: u8) -> Result<Self, CryptoError> {
        match id {
            0 => Ok(SchemeId::Test),
            1 => Ok(SchemeId::Ed25519),
            other => Err(CryptoError::UnsupportedScheme(other)),
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn signature_len(self) -> usize {
        match self {
            SchemeId::Test => 32,
            SchemeId::Ed25519 => 64,
        }
    }

    pub fn public_key_len(self) -> usize {
        32
    }

    pub fn private_key_len(self) -> usize {
        32
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PublicKey {
    scheme: SchemeId,
    bytes: Vec<u8>,
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({:?}, ", self.scheme)?;
        for b in &self.bytes {
            write!(f, "{b:02x}")?;
        }
        f.write_str(")")
    }
}

impl PublicKey {
    pub fn new(scheme: SchemeId, bytes: Vec<u8>) -> Result<Self, CryptoError> {
        if bytes.len() != scheme.public_key_len() {
            return Err(CryptoError::BadKey("public key length does not match scheme"));
        }
        if scheme == SchemeId::Ed25519 {
            let raw: [u8; 32] = bytes.as_slice().try_into().expect("length checked");
            VerifyingKey::from_bytes(&raw).map_err(|_| CryptoError::BadKey("not a valid ed25519 point"))?;
        }
        Ok(PublicKey { scheme, bytes })
    }

    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Key file layout: one scheme byte followed by the raw key.
    pub fn to_file_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(1 + self.bytes.len());
        out.push(self.scheme.as_u8());
        out.extend_from_slice(&self.bytes);
        out
    }

    pub fn from_file_bytes(data: &[u8]) -> Result<Self, CryptoError> {
        let (&id, rest) = data.split_first().ok_or(CryptoError::BadKey("empty key file"))?;
        PublicKey::new(SchemeId::from_u8(id)?, rest.to_vec())
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    scheme: SchemeId,
    bytes: Vec<u8>,
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({:?}, {} bytes)", self.scheme, self.bytes.len())
    }
}

impl Signature {
    pub fn new(scheme: SchemeId, bytes: Vec<u8>) -> Result<Self, CryptoError> {
        if bytes.len() != scheme.signature_len() {
            return Err(CryptoError::BadKey("signature length does not match scheme"));
        }
        Ok(Signature { scheme, bytes })
    }

    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }
}

#[derive(Clone)]
pub struct KeyPair {
    scheme: SchemeId,
    public: PublicKey,
    private: [u8; 32],
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair").field("public", &self.public).finish_non_exhaustive()
    }
}

impl KeyPair {
    pub fn generate<R: RngCore + ?Sized>(scheme: SchemeId, rng: &mut R) -> Self {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        Self::from_private(scheme, seed)
    }

    pub fn from_private(scheme: SchemeId, private: [u8; 32]) -> Self {
        let public_bytes = match scheme {
            SchemeId::Test => private.to_vec(),
            SchemeId::Ed25519 => SigningKey::from_bytes(&private).verifying_key().to_bytes().to_vec(),
        };
        KeyPair { scheme, public: PublicKey { scheme, bytes: public_bytes }, private }
    }

    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    pub fn to_file_bytes(&self) -> Vec<u8> {
        let mut out = vec![self.scheme.as_u8()];
        out.extend_from_slice(&self.private);
        out
    }

    pub fn from_file_bytes(data: &[u8]) -> Result<Self, CryptoError> {
        let (&id, rest) = data.split_first().ok_or(CryptoError::BadKey("empty key file"))?;
        let scheme = SchemeId::from_u8(id)?;
        let private: [u8; 32] = rest.try_into().map_err(|_| CryptoError::BadKey("private key must be 32 bytes"))?;
        Ok(Self::from_private(scheme, private))
    }
}

/// Signs a content digest. Both schemes are deterministic.
pub fn sign_digest(keypair: &KeyPair, digest: &Digest) -> Signature {
    let bytes = match keypair.scheme {
        SchemeId::Test => test_scheme_tag(&keypair.private, digest).to_vec(),
        SchemeId::Ed25519 => SigningKey::from_bytes(&keypair.private).sign(digest.as_bytes()).to_bytes().to_vec(),
    };
    Signature { scheme: keypair.scheme, bytes }
}

/// Returns whether `signature` is valid for `digest` under `key`.
///
/// A signature produced under a different scheme than the key's is simply
/// invalid.
pub fn verify_digest(key: &PublicKey, digest: &Digest, signature: &Signature) -> bool {
    if key.scheme != signature.scheme {
        return false;
    }
    match key.scheme {
        SchemeId::Test => {
            let secret: [u8; 32] = key.bytes.as_slice().try_into().expect("validated length");
            test_scheme_tag(&secret, digest).as_slice() == signature.bytes.as_slice()
        }
        SchemeId::Ed25519 => {
            let raw: [u8; 32] = key.bytes.as_slice().try_into().expect("validated length");
            let sig: [u8; 64] = signature.bytes.as_slice().try_into().expect("validated length");
            match VerifyingKey::from_bytes(&raw) {
                Ok(vk) => vk.verify(digest.as_bytes(), &ed25519_dalek::Signature::from_bytes(&sig)).is_ok(),
                Err(_) => false,
            }
        }
    }
}

fn test_scheme_tag(secret: &[u8; 32], digest: &Digest) -> [u8; 32] {
    let mut buf = [0u8; 64];
    buf[..32].copy_from_slice(secret);
    buf[32..].copy_from_slice(digest.as_bytes());
    sha256(&buf).0
}

/// Where a verifier finds the key for a content object's signature.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum KeyLocator {
    Key(PublicKey),
    KeyName(Name),
}

/// Locally configured keys, looked up by name. Nothing is ever fetched.
#[derive(Debug, Clone, Default)]
pub struct KeyRegistry {
    keys: BTreeMap<Name, PublicKey>,
}

impl KeyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: Name, key: PublicKey) {
        self.keys.insert(name, key);
    }

    pub fn get(&self, name: &Name) -> Option<&PublicKey> {
        self.keys.get(name)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn resolve(&self, locator: &KeyLocator) -> Option<PublicKey> {
        match locator {
            KeyLocator::Key(key) => Some(key.clone()),
            KeyLocator::KeyName(name) => self.keys.get(name).cloned(),
        }
    }
}
