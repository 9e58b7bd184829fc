//! Interest fragmentation and hop-by-hop reassembly.
//!
//! A router cannot look up a partial interest in its PIT, so fragmented
//! interests are reassembled at every hop and fragmented again if the next
//! link needs it.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::time::SimTime;
use crate::wire::{Interest, InterestFragment, Packet, WireError};

use super::FaceId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterestFragmentError {
    #[error("MtuTooSmall: MTU {0} cannot carry an interest fragment")]
    MtuTooSmall(usize),
    #[error("interest needs more than {} fragments", u16::MAX)]
    TooManyFragments,
    #[error("Incomplete: {received} of {count} fragments")]
    Incomplete { received: usize, count: usize },
    #[error("fragments disagree: {0}")]
    Inconsistent(&'static str),
    #[error("reassembled interest is malformed: {0}")]
    Malformed(WireError),
}

/// Splits an encoded interest into fragments of at most `mtu` bytes each.
pub fn fragment_interest(
    interest: &Interest,
    mtu: usize,
    reassembly_id: [u8; 8],
) -> Result<Vec<InterestFragment>, InterestFragmentError> {
    if mtu <= InterestFragment::HEADER_LEN {
        return Err(InterestFragmentError::MtuTooSmall(mtu));
    }
    let bytes = interest.encode();
    let chunk = mtu - InterestFragment::HEADER_LEN;
    let count = bytes.len().div_ceil(chunk);
    let count = u16::try_from(count).map_err(|_| InterestFragmentError::TooManyFragments)?;
    Ok(bytes
        .chunks(chunk)
        .enumerate()
        .map(|(seq, part)| InterestFragment { reassembly_id, seq: seq as u16, count, payload: part.to_vec() })
        .collect())
}

/// The interest itself when it fits `mtu`, otherwise its fragments.
pub fn packetize_interest(
    interest: &Interest,
    mtu: usize,
    reassembly_id: [u8; 8],
) -> Result<Vec<Packet>, InterestFragmentError> {
    if interest.encoded_len() <= mtu {
        return Ok(vec![Packet::Interest(interest.clone())]);
    }
    Ok(fragment_interest(interest, mtu, reassembly_id)?.into_iter().map(Packet::InterestFragment).collect())
}

/// Rebuilds an interest from all of its fragments, in any order.
pub fn reassemble_interest(fragments: &[InterestFragment]) -> Result<Interest, InterestFragmentError> {
    let first = fragments.first().ok_or(InterestFragmentError::Incomplete { received: 0, count: 0 })?;
    let count = first.count as usize;
    let mut parts: BTreeMap<u16, &[u8]> = BTreeMap::new();
    for f in fragments {
        if f.reassembly_id != first.reassembly_id {
            return Err(InterestFragmentError::Inconsistent("reassembly id"));
        }
        if f.count != first.count {
            return Err(InterestFragmentError::Inconsistent("count"));
        }
        if let Some(prev) = parts.insert(f.seq, &f.payload) {
            if prev != f.payload.as_slice() {
                return Err(InterestFragmentError::Inconsistent("payload"));
            }
        }
    }
    if parts.len() != count {
        return Err(InterestFragmentError::Incomplete { received: parts.len(), count });
    }
    let bytes: Vec<u8> = parts.values().flat_map(|p| p.iter().copied()).collect();
    Interest::decode(&bytes).map_err(InterestFragmentError::Malformed)
}

#[derive(Debug, Clone)]
struct Pending {
    created_at: SimTime,
    fragments: Vec<InterestFragment>,
}

/// Per-node buffers of interest fragments, keyed by arrival face and
/// reassembly id.
#[derive(Debug, Clone, Default)]
pub struct InterestReassembly {
    pending: BTreeMap<(FaceId, [u8; 8]), Pending>,
}

impl InterestReassembly {
    /// Buffers `frag`; returns the interest once every fragment is present.
    pub fn accept(
        &mut self,
        frag: InterestFragment,
        face: FaceId,
        now: SimTime,
    ) -> Option<Result<Interest, InterestFragmentError>> {
        let key = (face, frag.reassembly_id);
        let entry = self.pending.entry(key).or_insert_with(|| Pending { created_at: now, fragments: Vec::new() });
        if entry.fragments.iter().any(|f| f.seq == frag.seq && f.payload == frag.payload) {
            return None;
        }
        let count = frag.count as usize;
        entry.fragments.push(frag);
        let distinct = {
            let mut seqs: Vec<u16> = entry.fragments.iter().map(|f| f.seq).collect();
            seqs.sort_unstable();
            seqs.dedup();
            seqs.len()
        };
        if distinct < count {
            return None;
        }
        let done = self.pending.remove(&key).expect("present");
        Some(reassemble_interest(&done.fragments))
    }

    /// Drops buffers created at or before `now - timeout`.
    pub fn expire(&mut self, now: SimTime, timeout: crate::time::SimDuration) -> usize {
        let before = self.pending.len();
        self.pending.retain(|_, p| p.created_at + timeout > now);
        before - self.pending.len()
    }

    pub fn next_expiry(&self, timeout: crate::time::SimDuration) -> Option<SimTime> {
        self.pending.values().map(|p| p.created_at + timeout).min()
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::SimDuration;
    use crate::wire::Name;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// An interest whose encoding is exactly `len` bytes.
    fn interest_of_len(len: usize) -> Interest {
        let base = Interest::new("/x".parse().unwrap(), [7; 8]).encoded_len();
        let comp_len = len - base;
        let name = Name::new(vec![b"x".to_vec(), vec![b'y'; comp_len - 5]]).unwrap();
        let i = Interest::new(name, [7; 8]);
        assert_eq!(i.encoded_len(), len);
        i
    }

    #[test]
    fn three_thousand_bytes_at_1500() {
        let i = interest_of_len(3000);
        let frags = fragment_interest(&i, 1500, [1; 8]).unwrap();
        let per = 1500 - InterestFragment::HEADER_LEN;
        assert_eq!(frags.len(), 3000usize.div_ceil(per));
        assert_eq!(frags.len(), 3);
        assert!(frags.iter().all(|f| f.encoded_len() <= 1500));
        let mut shuffled = frags.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(reassemble_interest(&shuffled).unwrap(), i);
    }

    #[test]
    fn fitting_interest_passes_through() {
        let i = interest_of_len(200);
        assert_eq!(packetize_interest(&i, 1500, [0; 8]).unwrap(), vec![Packet::Interest(i)]);
    }

    #[test]
    fn tiny_mtu_rejected() {
        let i = interest_of_len(200);
        assert_eq!(
            fragment_interest(&i, InterestFragment::HEADER_LEN, [0; 8]),
            Err(InterestFragmentError::MtuTooSmall(InterestFragment::HEADER_LEN))
        );
    }

    #[test]
    fn missing_middle_never_completes() {
        let i = interest_of_len(3000);
        let frags = fragment_interest(&i, 1500, [2; 8]).unwrap();
        let mut r = InterestReassembly::default();
        assert!(r.accept(frags[0].clone(), 1, SimTime(0)).is_none());
        assert!(r.accept(frags[2].clone(), 1, SimTime(1)).is_none());
        assert!(matches!(
            reassemble_interest(&[frags[0].clone(), frags[2].clone()]),
            Err(InterestFragmentError::Incomplete { received: 2, count: 3 })
        ));
        assert_eq!(r.expire(SimTime(100), SimDuration(100)), 1);
        assert!(r.is_empty());
    }

    #[test]
    fn buffers_complete_out_of_order() {
        let i = interest_of_len(5000);
        let frags = fragment_interest(&i, 1000, [3; 8]).unwrap();
        let mut r = InterestReassembly::default();
        let mut out = None;
        for f in frags.iter().rev() {
            out = r.accept(f.clone(), 4, SimTime(0));
        }
        assert_eq!(out.unwrap().unwrap(), i);
        assert!(r.is_empty());
    }

    #[test]
    fn same_id_on_different_faces_kept_apart() {
        let i = interest_of_len(3000);
        let frags = fragment_interest(&i, 1500, [5; 8]).unwrap();
        let mut r = InterestReassembly::default();
        r.accept(frags[0].clone(), 1, SimTime(0));
        r.accept(frags[1].clone(), 2, SimTime(0));
        assert_eq!(r.len(), 2);
    }
}
