//! Resumable SHA-256.
//!
//! A [`HashState`] is the compression-function chaining value after a
//! block-aligned prefix of the message has been absorbed, together with the
//! length of that prefix. It can be shipped inside a fragment, resumed by any
//! node, and finalized once the total message length is known, so the digest
//! of a message can be computed from pieces that arrive in any order.

use std::fmt;

use thiserror::Error;

/// SHA-256 block size in bytes.
pub const BLOCK_SIZE: usize = 64;

/// Size of an encoded [`HashState`]: eight state words plus the byte count.
pub const STATE_ENCODED_LEN: usize = 40;

/// Size of a SHA-256 digest.
pub const DIGEST_LEN: usize = 32;

const IV: [u32; 8] = [0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19];

const K: [u32; 64] = [
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5, 0xd807aa98,
    0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
    0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8,
    0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
    0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819,
    0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
    0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
    0xc67178f2,
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HashStateError {
    #[error("input of {0} bytes is not a positive multiple of the 64-byte block size")]
    MisalignedInput(usize),
    #[error("absorbed {processed} bytes plus {tail} tail bytes does not equal declared length {total}")]
    LengthMismatch { processed: u64, tail: usize, total: u64 },
    #[error("bad hash state encoding: {0}")]
    BadStateEncoding(&'static str),
}

/// A 32-byte SHA-256 digest.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u8; DIGEST_LEN]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl From<[u8; DIGEST_LEN]> for Digest {
    fn from(bytes: [u8; DIGEST_LEN]) -> Self {
        Digest(bytes)
    }
}

/// SHA-256 chaining value after `bytes_processed` bytes.
///
/// `bytes_processed` is always a multiple of [`BLOCK_SIZE`].
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashState {
    words: [u32; 8],
    bytes_processed: u64,
}

impl Default for HashState {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for HashState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HashState(v={}, ", self.bytes_processed)?;
        for w in &self.words {
            write!(f, "{w:08x}")?;
        }
        f.write_str(")")
    }
}

impl HashState {
    /// The initialization vector: nothing absorbed yet.
    pub const fn new() -> Self {
        HashState { words: IV, bytes_processed: 0 }
    }

    pub fn words(&self) -> &[u32; 8] {
        &self.words
    }

    pub fn bytes_processed(&self) -> u64 {
        self.bytes_processed
    }

    pub fn is_initial(&self) -> bool {
        *self == Self::new()
    }

    /// Absorbs `data`, which must be a positive whole number of blocks.
    pub fn compress(&self, data: &[u8]) -> Result<HashState, HashStateError> {
        if data.is_empty() || !data.len().is_multiple_of(BLOCK_SIZE) {
            return Err(HashStateError::MisalignedInput(data.len()));
        }
        Ok(self.absorb_blocks(data))
    }

    /// Absorbs the block-aligned prefix of `data` and ignores any remainder.
    /// An input shorter than one block leaves the state unchanged.
    pub fn compress_prefix(&self, data: &[u8]) -> HashState {
        let aligned = data.len() - data.len() % BLOCK_SIZE;
        self.absorb_blocks(&data[..aligned])
    }

    fn absorb_blocks(&self, data: &[u8]) -> HashState {
        let mut words = self.words;
        for block in data.chunks_exact(BLOCK_SIZE) {
            compress_block(&mut words, block);
        }
        HashState { words, bytes_processed: self.bytes_processed + data.len() as u64 }
    }

    /// Completes the hash of a `total_len`-byte message whose first
    /// `bytes_processed` bytes are already absorbed and whose remaining bytes
    /// are `tail`. Standard SHA-256 length padding is applied.
    pub fn finalize(&self, tail: &[u8], total_len: u64) -> Result<Digest, HashStateError> {
        if self.bytes_processed.checked_add(tail.len() as u64) != Some(total_len) {
            return Err(HashStateError::LengthMismatch {
                processed: self.bytes_processed,
                tail: tail.len(),
                total: total_len,
            });
        }
        let mut words = self.words;
        let full = tail.len() - tail.len() % BLOCK_SIZE;
        for block in tail[..full].chunks_exact(BLOCK_SIZE) {
            compress_block(&mut words, block);
        }
        let rest = &tail[full..];
        let mut pad = [0u8; 2 * BLOCK_SIZE];
        pad[..rest.len()].copy_from_slice(rest);
        pad[rest.len()] = 0x80;
        let pad_len = if rest.len() < BLOCK_SIZE - 8 { BLOCK_SIZE } else { 2 * BLOCK_SIZE };
        let bit_len = total_len.wrapping_mul(8);
        pad[pad_len - 8..pad_len].copy_from_slice(&bit_len.to_be_bytes());
        for block in pad[..pad_len].chunks_exact(BLOCK_SIZE) {
            compress_block(&mut words, block);
        }
        let mut out = [0u8; DIGEST_LEN];
        for (chunk, w) in out.chunks_exact_mut(4).zip(words.iter()) {
            chunk.copy_from_slice(&w.to_be_bytes());
        }
        Ok(Digest(out))
    }

    /// Big-endian encoding: eight state words, then the 64-bit byte count.
    pub fn serialize(&self) -> [u8; STATE_ENCODED_LEN] {
        let mut out = [0u8; STATE_ENCODED_LEN];
        for (chunk, w) in out[..32].chunks_exact_mut(4).zip(self.words.iter()) {
            chunk.copy_from_slice(&w.to_be_bytes());
        }
        out[32..].copy_from_slice(&self.bytes_processed.to_be_bytes());
        out
    }

    pub fn deserialize(bytes: &[u8]) -> Result<HashState, HashStateError> {
        if bytes.len() != STATE_ENCODED_LEN {
            return Err(HashStateError::BadStateEncoding("expected exactly 40 bytes"));
        }
        let mut words = [0u32; 8];
        for (w, chunk) in words.iter_mut().zip(bytes[..32].chunks_exact(4)) {
            *w = u32::from_be_bytes(chunk.try_into().expect("4-byte chunk"));
        }
        let bytes_processed = u64::from_be_bytes(bytes[32..].try_into().expect("8-byte count"));
        if bytes_processed % BLOCK_SIZE as u64 != 0 {
            return Err(HashStateError::BadStateEncoding("byte count is not block aligned"));
        }
        Ok(HashState { words, bytes_processed })
    }
}

/// One-shot SHA-256 built from the resumable primitives.
pub fn sha256(data: &[u8]) -> Digest {
    HashState::new().finalize(data, data.len() as u64).expect("length matches by construction")
}

fn compress_block(state: &mut [u32; 8], block: &[u8]) {
    let mut w = [0u32; 64];
    for (i, chunk) in block.chunks_exact(4).enumerate() {
        w[i] = u32::from_be_bytes(chunk.try_into().expect("4-byte chunk"));
    }
    for i in 16..64 {
        let s0 = w[i - 15].rotate_right(7) ^ w[i - 15].rotate_right(18) ^ (w[i - 15] >> 3);
        let s1 = w[i - 2].rotate_right(17) ^ w[i - 2].rotate_right(19) ^ (w[i - 2] >> 10);
        w[i] = w[i - 16].wrapping_add(s0).wrapping_add(w[i - 7]).wrapping_add(s1);
    }

    let [mut a, mut b, mut c, mut d, mut e, mut f, mut g, mut h] = *state;
    for i in 0..64 {
        let s1 = e.rotate_right(6) ^ e.rotate_right(11) ^ e.rotate_right(25);
        let ch = (e & f) ^ (!e & g);
        let t1 = h.wrapping_add(s1).wrapping_add(ch).wrapping_add(K[i]).wrapping_add(w[i]);
        let s0 = a.rotate_right(2) ^ a.rotate_right(13) ^ a.rotate_right(22);
        let maj = (a & b) ^ (a & c) ^ (b & c);
        let t2 = s0.wrapping_add(maj);
        h = g;
        g = f;
        f = e;
        e = d.wrapping_add(t1);
        d = c;
        c = b;
        b = a;
        a = t1.wrapping_add(t2);
    }

    for (s, v) in state.iter_mut().zip([a, b, c, d, e, f, g, h]) {
        *s = s.wrapping_add(v);
    }
}
