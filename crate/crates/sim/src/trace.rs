//! Timestamped event log of a simulation run.

use std::fmt::Write as _;
use std::io;

use figoa_core::forwarder::FaceId;
use figoa_core::time::SimTime;

pub const CSV_HEADER: &str = "time,node,kind,name,offset,size,face";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub time: SimTime,
    pub node: String,
    pub kind: &'static str,
    pub name: Option<String>,
    pub offset: Option<u64>,
    pub size: Option<u64>,
    pub face: Option<FaceId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimTrace {
    pub events: Vec<TraceEvent>,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// Quotes a CSV field if it needs it.
fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl SimTrace {
    pub fn push(&mut self, e: TraceEvent) {
        debug_assert!(self.events.last().is_none_or(|l| l.time <= e.time), "trace time went backwards");
        self.events.push(e);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a TraceEvent> + 'a {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// CSV with times in microseconds, two decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.events.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for e in &self.events {
            let _ = writeln!(
                out,
                "{:.2},{},{},{},{},{},{}",
                e.time.as_nanos() as f64 / 1e3,
                field(&e.node),
                e.kind,
                field(&opt(&e.name)),
                opt(&e.offset),
                opt(&e.size),
                opt(&e.face),
            );
        }
        out
    }

    pub fn write_csv(&self, mut w: impl io::Write) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = SimTrace::default();
        t.push(TraceEvent {
            time: SimTime(1_234_567),
            node: "r1".into(),
            kind: "forward",
            name: Some("/a/b".into()),
            offset: Some(1152),
            size: Some(1152),
            face: Some(2),
        });
        t.push(TraceEvent {
            time: SimTime(2_000_000),
            node: "a,b".into(),
            kind: "drop",
            name: None,
            offset: None,
            size: None,
            face: None,
        });
        assert_eq!(
            t.to_csv(),
            "time,node,kind,name,offset,size,face\n1234.57,r1,forward,/a/b,1152,1152,2\n2000.00,\"a,b\",drop,,,,\n"
        );
    }
}
