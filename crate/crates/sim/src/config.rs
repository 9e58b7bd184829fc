//! Line-oriented scenario files.
//!
//! ```text
//! # comment
//! [node c]
//! mode = cut_through
//! route = /p r
//!
//! [link c r]
//! latency = 10ms
//! bandwidth = 100Mb/s
//! mtu = 1500
//!
//! [workload]
//! interest = 0ms c /p/obj
//! ```
//!
//! The full format is described in `docs/config-format.md`.

use figoa_core::forwarder::Mode;
use figoa_core::time::{SimDuration, SimTime};
use figoa_core::wire::Name;

use crate::topology::{LinkSpec, NodeSpec, Scenario, WorkItem};
use crate::SimError;

fn err(line: usize, msg: impl Into<String>) -> SimError {
    SimError::Config { line, msg: msg.into() }
}

/// Parses `10ms`, `250us`, `4s`, `1.5ms`, `0`.
pub fn parse_duration(s: &str) -> Result<SimDuration, String> {
    let s = s.trim();
    let split = s.find(|c: char| c.is_ascii_alphabetic()).unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let value: f64 = num.trim().parse().map_err(|_| format!("bad duration {s:?}"))?;
    let scale = match unit.trim() {
        "ns" => 1e-9,
        "us" => 1e-6,
        "ms" => 1e-3,
        "s" | "" => 1.0,
        u => return Err(format!("unknown time unit {u:?}")),
    };
    if !(value.is_finite() && value >= 0.0) {
        return Err(format!("duration must be non-negative: {s:?}"));
    }
    Ok(SimDuration::from_secs_f64(value * scale))
}

/// Parses `100Mb/s`, `1Gbps`, `56kb/s` or a plain number of bits per second.
pub fn parse_bandwidth(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let split = s.find(|c: char| c.is_ascii_alphabetic()).unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let value: f64 = num.trim().parse().map_err(|_| format!("bad bandwidth {s:?}"))?;
    let unit = unit.trim().trim_end_matches("/s").trim_end_matches("ps");
    let scale = match unit {
        "" | "b" => 1.0,
        "k" | "kb" | "K" | "Kb" => 1e3,
        "M" | "Mb" => 1e6,
        "G" | "Gb" => 1e9,
        u => return Err(format!("unknown bandwidth unit {u:?}")),
    };
    let bps = (value * scale).round();
    if !(bps >= 1.0 && bps.is_finite()) {
        return Err(format!("bandwidth must be positive: {s:?}"));
    }
    Ok(bps as u64)
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected true or false, found {s:?}")),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("bad {what} {s:?}"))
}

fn parse_name(s: &str) -> Result<Name, String> {
    s.parse().map_err(|e| format!("bad name {s:?}: {e}"))
}

enum Section {
    None,
    Node(usize),
    Link(usize),
    Workload,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, SimError> {
    let mut sc = Scenario::default();
    let mut section = Section::None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let header = header.strip_suffix(']').ok_or_else(|| err(line_no, "unterminated section header"))?;
            let words: Vec<&str> = header.split_whitespace().collect();
            section = match words.as_slice() {
                ["node", id] => {
                    if sc.topology.node_index(id).is_some() {
                        return Err(err(line_no, format!("duplicate node {id}")));
                    }
                    sc.topology.nodes.push(NodeSpec::new(*id));
                    Section::Node(sc.topology.nodes.len() - 1)
                }
                ["link", a, b] => {
                    sc.topology.links.push(LinkSpec::new(*a, *b));
                    Section::Link(sc.topology.links.len() - 1)
                }
                ["workload"] => Section::Workload,
                _ => return Err(err(line_no, format!("unknown section [{header}]"))),
            };
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| err(line_no, "expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        let res: Result<(), String> = match &section {
            Section::None => Err("setting outside of a section".into()),
            Section::Node(i) => node_setting(&mut sc.topology.nodes[*i], key, value),
            Section::Link(i) => link_setting(&mut sc.topology.links[*i], key, value),
            Section::Workload => workload_setting(&mut sc.workload, key, value),
        };
        res.map_err(|m| err(line_no, m))?;
    }
    sc.validate()?;
    Ok(sc)
}

fn node_setting(n: &mut NodeSpec, key: &str, value: &str) -> Result<(), String> {
    match key {
        "role" => match value {
            "consumer" | "router" | "producer" => {}
            _ => return Err(format!("unknown role {value:?}")),
        },
        "mode" => n.mode = value.parse::<Mode>()?,
        "verify_signatures" => n.verify_signatures = parse_bool(value)?,
        "cs_capacity" => n.cs_capacity = parse_num(value, "capacity")?,
        "buffer_timeout" => n.buffer_timeout = parse_duration(value)?,
        "pit_lifetime" => n.pit_lifetime = parse_duration(value)?,
        "processing_delay" => n.processing_delay = parse_duration(value)?,
        "route" => {
            let mut parts = value.split_whitespace();
            let (Some(prefix), Some(hop), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err("route needs <prefix> <next-hop>".into());
            };
            n.routes.push((parse_name(prefix)?, hop.to_string()));
        }
        "content" => {
            let mut parts = value.split_whitespace();
            let (Some(name), Some(size), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err("content needs <name> <bytes>".into());
            };
            n.contents.push((parse_name(name)?, parse_num(size, "size")?));
        }
        _ => return Err(format!("unknown node setting {key:?}")),
    }
    Ok(())
}

fn link_setting(l: &mut LinkSpec, key: &str, value: &str) -> Result<(), String> {
    match key {
        "latency" => l.latency = parse_duration(value)?,
        "bandwidth" => l.bandwidth_bps = parse_bandwidth(value)?,
        "mtu" => {
            let m = parse_num(value, "MTU")?;
            l.mtu_ab = m;
            l.mtu_ba = m;
        }
        "mtu_ab" => l.mtu_ab = parse_num(value, "MTU")?,
        "mtu_ba" => l.mtu_ba = parse_num(value, "MTU")?,
        "flows" => l.flows = parse_num(value, "flow count")?,
        "reorder" => l.reorder = parse_duration(value)?,
        "corrupt" => l.corrupt = parse_num(value, "probability")?,
        _ => return Err(format!("unknown link setting {key:?}")),
    }
    Ok(())
}

fn workload_setting(w: &mut Vec<WorkItem>, key: &str, value: &str) -> Result<(), String> {
    if key != "interest" {
        return Err(format!("unknown workload setting {key:?}"));
    }
    let mut parts = value.split_whitespace();
    let (Some(at), Some(node), Some(name), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
        return Err("interest needs <time> <node> <name>".into());
    };
    w.push(WorkItem { at: SimTime::ZERO + parse_duration(at)?, node: node.to_string(), name: parse_name(name)? });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations() {
        assert_eq!(parse_duration("10ms").unwrap(), SimDuration::from_millis(10));
        assert_eq!(parse_duration("1.5ms").unwrap(), SimDuration::from_micros(1500));
        assert_eq!(parse_duration("4s").unwrap(), SimDuration::from_secs(4));
        assert_eq!(parse_duration("250 us").unwrap(), SimDuration::from_micros(250));
        assert_eq!(parse_duration("0").unwrap(), SimDuration::ZERO);
        assert!(parse_duration("-1ms").is_err());
        assert!(parse_duration("3h").is_err());
    }

    #[test]
    fn bandwidths() {
        assert_eq!(parse_bandwidth("100Mb/s").unwrap(), 100_000_000);
        assert_eq!(parse_bandwidth("1Gbps").unwrap(), 1_000_000_000);
        assert_eq!(parse_bandwidth("56kb/s").unwrap(), 56_000);
        assert_eq!(parse_bandwidth("9600").unwrap(), 9600);
        assert!(parse_bandwidth("0").is_err());
        assert!(parse_bandwidth("5 furlongs").is_err());
    }

    const SAMPLE: &str = "
        # three nodes
        [node c]
        role = consumer
        route = /p r
        [node r]
        mode = hop_by_hop_reassembly
        route = /p p
        [node p]
        content = /p/obj 1024   # bytes
        [link c r]
        latency = 5ms
        mtu_ab = 1200
        mtu_ba = 900
        flows = 3
        [link r p]
        bandwidth = 1Gb/s
        [workload]
        interest = 1ms c /p/obj
    ";

    #[test]
    fn parses_sample() {
        let sc = parse_scenario(SAMPLE).unwrap();
        assert_eq!(sc.topology.nodes.len(), 3);
        assert_eq!(sc.topology.nodes[1].mode, Mode::HopByHopReassembly);
        assert_eq!(sc.topology.nodes[2].contents, vec![("/p/obj".parse().unwrap(), 1024)]);
        let l = &sc.topology.links[0];
        assert_eq!((l.mtu_ab, l.mtu_ba, l.flows), (1200, 900, 3));
        assert_eq!(l.latency, SimDuration::from_millis(5));
        assert_eq!(sc.topology.links[1].bandwidth_bps, 1_000_000_000);
        assert_eq!(sc.workload[0].at, SimTime(1_000_000));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "[node a]\nbogus = 1\n";
        assert_eq!(
            parse_scenario(text),
            Err(SimError::Config { line: 2, msg: "unknown node setting \"bogus\"".into() })
        );
        let text = "[node a]\n[link a b]\n";
        assert!(matches!(parse_scenario(text), Err(SimError::InvalidTopology(_))));
        assert!(matches!(parse_scenario("mode = x\n"), Err(SimError::Config { line: 1, .. })));
        assert!(matches!(parse_scenario("[node a\n"), Err(SimError::Config { line: 1, .. })));
    }
}
