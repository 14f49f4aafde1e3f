//! Event traces: one line per transmission, relay activation or delivery.
//!
//! Line format (CSV, header included by [`to_lines`]):
//! `time,node,kind,origin,seq,field,bytes` where `field` is the TTL or MRD
//! carried (empty when not applicable) and `bytes` is non-zero only for
//! transmissions.

use std::fmt::{self, Write as _};
use std::hash::{Hash, Hasher};

use rustc_hash::FxHasher;

use crate::model::{NodeId, SimTime};
use crate::protocol::MsgId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceKind {
    TxDiscovery,
    TxAck,
    TxData,
    Relay,
    Deliver,
}

impl TraceKind {
    pub fn is_transmission(self) -> bool {
        matches!(self, TraceKind::TxDiscovery | TraceKind::TxAck | TraceKind::TxData)
    }

    pub fn name(self) -> &'static str {
        match self {
            TraceKind::TxDiscovery => "tx_discovery",
            TraceKind::TxAck => "tx_ack",
            TraceKind::TxData => "tx_data",
            TraceKind::Relay => "relay",
            TraceKind::Deliver => "deliver",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub time: SimTime,
    pub node: NodeId,
    pub kind: TraceKind,
    pub msg_id: Option<MsgId>,
    pub field: Option<u32>,
    pub bytes: u32,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (origin, seq) = match self.msg_id {
            Some(m) => (m.origin.0.to_string(), m.seq.to_string()),
            None => (String::new(), String::new()),
        };
        let field = self.field.map(|v| v.to_string()).unwrap_or_default();
        write!(
            f,
            "{},{},{},{},{},{},{}",
            self.time,
            self.node.0,
            self.kind.name(),
            origin,
            seq,
            field,
            self.bytes
        )
    }
}

pub const TRACE_HEADER: &str = "time,node,kind,origin,seq,field,bytes";

pub fn to_lines(records: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 40);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{r}");
    }
    out
}

/// Collects records, always folding them into a running hash and keeping
/// them only when asked to.
pub(crate) struct TraceSink {
    keep: bool,
    records: Vec<TraceRecord>,
    hasher: FxHasher,
    count: u64,
}

impl TraceSink {
    pub fn new(keep: bool) -> Self {
        TraceSink {
            keep,
            records: Vec::new(),
            hasher: FxHasher::default(),
            count: 0,
        }
    }

    pub fn push(&mut self, record: TraceRecord) {
        record.hash(&mut self.hasher);
        self.count += 1;
        if self.keep {
            self.records.push(record);
        }
    }

    pub fn finish(self) -> (Vec<TraceRecord>, u64, u64) {
        (self.records, self.hasher.finish(), self.count)
    }
}
