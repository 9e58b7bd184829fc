//! Closed-form latency and overhead models.
//!
//! The latency model assumes a linear path where every link interleaves the
//! fragments of `F` flows round-robin, so consecutive fragments of one object
//! leave a link `F` fragment-times apart. With hop-by-hop reassembly each hop
//! waits for the whole object before sending it on; with cut-through the
//! fragments pipeline and only the slowest link's spread is paid once.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("MtuTooSmall: MTU {mtu} does not exceed the per-segment overhead {overhead}")]
    MtuTooSmall { mtu: u64, overhead: u64 },
}

/// Inputs to [`latency_model`]. Times are in seconds, sizes in bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyParams {
    /// Per-link propagation latency, one entry per hop.
    pub latencies: Vec<f64>,
    pub bandwidth_bps: f64,
    /// Encoded size of each fragment on the wire.
    pub fragment_bytes: f64,
    /// Fragments per object.
    pub k: u32,
    /// Flows sharing each link, one entry per hop.
    pub flows: Vec<u32>,
}

impl LatencyParams {
    /// `hops` identical links.
    pub fn uniform(hops: usize, latency: f64, bandwidth_bps: f64, fragment_bytes: f64, k: u32, flows: u32) -> Self {
        LatencyParams { latencies: vec![latency; hops], bandwidth_bps, fragment_bytes, k, flows: vec![flows; hops] }
    }

    pub fn hops(&self) -> usize {
        self.latencies.len()
    }

    fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidParams(m.to_string()));
        if self.latencies.is_empty() {
            return bad("at least one hop");
        }
        if self.flows.len() != self.latencies.len() {
            return bad("one flow count per hop");
        }
        if self.latencies.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return bad("latencies must be non-negative");
        }
        if !(self.bandwidth_bps > 0.0 && self.bandwidth_bps.is_finite()) {
            return bad("bandwidth must be positive");
        }
        if !(self.fragment_bytes > 0.0 && self.fragment_bytes.is_finite()) {
            return bad("fragment size must be positive");
        }
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.flows.contains(&0) {
            return bad("flow counts must be at least 1");
        }
        Ok(())
    }
}

/// Outputs of [`latency_model`], in seconds (slowdown in percent).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyReport {
    /// Time between consecutive fragments of one object on the busiest link.
    pub inter_fragment_gap: f64,
    /// From the start of the first fragment to the end of the last, busiest link.
    pub first_to_last_gap: f64,
    pub e2e_reassembly: f64,
    pub e2e_cut_through: f64,
    pub slowdown_pct: f64,
}

/// Serialization time of one fragment.
pub fn fragment_time(fragment_bytes: f64, bandwidth_bps: f64) -> f64 {
    fragment_bytes * 8.0 / bandwidth_bps
}

pub fn latency_model(p: &LatencyParams) -> Result<LatencyReport, ModelError> {
    p.validate()?;
    let tf = fragment_time(p.fragment_bytes, p.bandwidth_bps);
    let k = p.k as f64;
    let spread = |f: u32| (k - 1.0) * f as f64 * tf + tf;
    let total_latency: f64 = p.latencies.iter().sum();
    let reassembly = total_latency + p.flows.iter().map(|&f| spread(f)).sum::<f64>();
    let max_flows = *p.flows.iter().max().expect("validated non-empty");
    let cut_through = total_latency + spread(max_flows);
    Ok(LatencyReport {
        inter_fragment_gap: max_flows as f64 * tf,
        first_to_last_gap: spread(max_flows),
        e2e_reassembly: reassembly,
        e2e_cut_through: cut_through,
        slowdown_pct: 100.0 * reassembly / cut_through,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub object_bytes: u64,
    pub k: u32,
    pub fragment_bytes: f64,
    pub e2e_reassembly: f64,
    pub e2e_cut_through: f64,
    pub ratio: f64,
}

/// Evaluates the model over fragment counts `ks` for each object size.
/// Each fragment carries `ceil(object / k)` payload bytes plus `header_bytes`.
pub fn latency_curve(
    latencies: &[f64],
    bandwidth_bps: f64,
    flows: &[u32],
    object_sizes: &[u64],
    ks: impl IntoIterator<Item = u32> + Clone,
    header_bytes: u64,
) -> Result<Vec<CurveRow>, ModelError> {
    let mut rows = Vec::new();
    for &object in object_sizes {
        for k in ks.clone() {
            if k == 0 {
                return Err(ModelError::InvalidParams("k must be at least 1".into()));
            }
            let fragment_bytes = (object.div_ceil(k as u64) + header_bytes) as f64;
            let r = latency_model(&LatencyParams {
                latencies: latencies.to_vec(),
                bandwidth_bps,
                fragment_bytes,
                k,
                flows: flows.to_vec(),
            })?;
            rows.push(CurveRow {
                object_bytes: object,
                k,
                fragment_bytes,
                e2e_reassembly: r.e2e_reassembly,
                e2e_cut_through: r.e2e_cut_through,
                ratio: r.e2e_reassembly / r.e2e_cut_through,
            });
        }
    }
    Ok(rows)
}

/// Parameters of producer-side segmentation into independently signed pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverheadParams {
    pub object_bytes: u64,
    pub mtu: u64,
    pub sig_bytes: u64,
    pub key_locator_bytes: u64,
    pub fixed_header_bytes: u64,
}

impl OverheadParams {
    pub fn per_segment_overhead(&self) -> u64 {
        self.sig_bytes + self.key_locator_bytes + self.fixed_header_bytes
    }

    pub fn segments(&self) -> Result<u64, ModelError> {
        let overhead = self.per_segment_overhead();
        if self.mtu <= overhead {
            return Err(ModelError::MtuTooSmall { mtu: self.mtu, overhead });
        }
        Ok(self.object_bytes.div_ceil(self.mtu - overhead))
    }
}

/// Fraction of transmitted bytes that are not object data, with each
/// segment occupying one full MTU.
pub fn segmentation_overhead(p: &OverheadParams) -> Result<f64, ModelError> {
    let segments = p.segments()?;
    if segments == 0 {
        return Ok(0.0);
    }
    Ok(1.0 - p.object_bytes as f64 / (segments * p.mtu) as f64)
}
