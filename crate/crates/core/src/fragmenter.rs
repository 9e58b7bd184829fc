//! Splitting signed content into chained, block-aligned fragments.
//!
//! A fragment starting at offset `v` carries `IS_v`, the hash state after the
//! first `v` bytes of the signable region. The next fragment's state is the
//! previous one advanced over the previous payload, so any receiver can check
//! neighbours against each other without seeing the whole object.
//!
//! Cuts are greedy: every fragment but the last carries the largest
//! block-aligned payload its MTU allows. The last fragment also carries the
//! signature trailer, so its payload budget is smaller.

use thiserror::Error;

use crate::hashstate::{HashState, BLOCK_SIZE};
use crate::wire::{header_size, ContentFragment, ContentObject, Name, Trailer};

const BLOCK: u64 = BLOCK_SIZE as u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FragmentError {
    #[error("MtuTooSmall: MTU {mtu} cannot carry a {header}-byte header plus one {BLOCK_SIZE}-byte block")]
    MtuTooSmall { mtu: usize, header: usize },
    #[error("invalid region: {0}")]
    InvalidRegion(String),
}

/// One planned fragment: `size` bytes starting at `offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cut {
    pub offset: u64,
    pub size: u64,
}

impl Cut {
    pub fn end(&self) -> u64 {
        self.offset + self.size
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FragmentPlan {
    pub cuts: Vec<Cut>,
}

impl FragmentPlan {
    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }
}

fn floor_block(n: u64) -> u64 {
    n / BLOCK * BLOCK
}

/// Plans cuts of `[region_start, region_start + region_len)` within an object
/// of `total` bytes, giving every piece the same payload budget `ao_mtu`.
pub fn plan_cuts(total: u64, region_start: u64, region_len: u64, ao_mtu: u64) -> Result<FragmentPlan, FragmentError> {
    if ao_mtu < BLOCK {
        return Err(FragmentError::MtuTooSmall { mtu: ao_mtu as usize, header: 0 });
    }
    plan_region(total, region_start, region_len, ao_mtu, ao_mtu)
}

/// Like [`plan_cuts`], but a piece ending at `total` gets `last_budget`.
fn plan_region(
    total: u64,
    region_start: u64,
    region_len: u64,
    budget: u64,
    last_budget: u64,
) -> Result<FragmentPlan, FragmentError> {
    let region_end = region_start
        .checked_add(region_len)
        .ok_or_else(|| FragmentError::InvalidRegion("region end overflows".into()))?;
    if !region_start.is_multiple_of(BLOCK) {
        return Err(FragmentError::InvalidRegion(format!("start {region_start} is not block aligned")));
    }
    if region_len == 0 || region_end > total {
        return Err(FragmentError::InvalidRegion(format!(
            "[{region_start}, {region_end}) is empty or exceeds {total}"
        )));
    }
    if region_end != total && !region_len.is_multiple_of(BLOCK) {
        return Err(FragmentError::InvalidRegion(format!("interior region length {region_len} is not block aligned")));
    }
    let step = floor_block(budget);
    // Only the piece holding the final byte may be sub-block sized.
    let final_budget = if region_end == total { last_budget } else { floor_block(last_budget) };
    debug_assert!(step >= BLOCK && final_budget >= BLOCK);

    let mut cuts = Vec::new();
    let mut pos = region_start;
    while region_end - pos > final_budget {
        // A non-final piece must leave at least one byte behind it.
        let size = step.min(floor_block(region_end - pos - 1));
        cuts.push(Cut { offset: pos, size });
        pos += size;
    }
    cuts.push(Cut { offset: pos, size: region_end - pos });
    Ok(FragmentPlan { cuts })
}

/// Payload budgets for a fragment of `name` under `o_mtu`: (interior, final).
fn budgets(name: &Name, trailer: Option<&Trailer>, o_mtu: usize) -> Result<(u64, u64), FragmentError> {
    let hs = header_size(name, None);
    let hs_last = header_size(name, trailer);
    let min = hs.max(hs_last) + BLOCK_SIZE;
    if o_mtu < min {
        return Err(FragmentError::MtuTooSmall { mtu: o_mtu, header: hs.max(hs_last) });
    }
    Ok(((o_mtu - hs) as u64, (o_mtu - hs_last) as u64))
}

/// Cuts `region` (bytes `[start, start + region.len())` of the object) into
/// fragments whose first state is `state`.
fn emit(
    template: &ContentFragment,
    state: HashState,
    start: u64,
    region: &[u8],
    trailer: Option<Trailer>,
    o_mtu: usize,
) -> Result<Vec<ContentFragment>, FragmentError> {
    let (budget, last_budget) = budgets(&template.name, trailer.as_ref(), o_mtu)?;
    let plan = plan_region(template.object_size, start, region.len() as u64, budget, last_budget)?;
    let mut state = state;
    let mut out = Vec::with_capacity(plan.len());
    let n = plan.len();
    for (i, cut) in plan.cuts.into_iter().enumerate() {
        let lo = (cut.offset - start) as usize;
        let payload = region[lo..lo + cut.size as usize].to_vec();
        let next = if i + 1 < n { Some(state.compress_prefix(&payload)) } else { None };
        out.push(ContentFragment {
            name: template.name.clone(),
            object_size: template.object_size,
            internal_state: state,
            payload_offset: cut.offset,
            content_digest: template.content_digest,
            payload,
            trailer: if i + 1 == n { trailer.clone() } else { None },
        });
        if let Some(s) = next {
            state = s;
        }
    }
    Ok(out)
}

/// Fragments a signed object so every fragment encodes to at most `o_mtu`
/// bytes. The first fragment carries the initialization vector and the last
/// carries the signature trailer.
pub fn fragment_content(co: &ContentObject, o_mtu: usize) -> Result<Vec<ContentFragment>, FragmentError> {
    let region = co.signable_region();
    let template = ContentFragment {
        name: co.name().clone(),
        object_size: region.len() as u64,
        internal_state: HashState::new(),
        payload_offset: 0,
        content_digest: co.digest(),
        payload: Vec::new(),
        trailer: None,
    };
    emit(&template, HashState::new(), 0, &region, Some(co.trailer()), o_mtu)
}

/// Splits an existing fragment further. The first piece keeps the original
/// state; each later piece's state is its predecessor's advanced over the
/// predecessor's payload. A fragment that already fits is returned as is.
pub fn refragment(cf: &ContentFragment, o_mtu: usize) -> Result<Vec<ContentFragment>, FragmentError> {
    if cf.encoded_len() <= o_mtu {
        return Ok(vec![cf.clone()]);
    }
    emit(cf, cf.internal_state, cf.payload_offset, &cf.payload, cf.trailer.clone(), o_mtu)
}

/// Smallest MTU at which `name`'s content can be fragmented at all.
pub fn min_mtu(name: &Name, trailer: &Trailer) -> usize {
    header_size(name, Some(trailer)) + BLOCK_SIZE
}
