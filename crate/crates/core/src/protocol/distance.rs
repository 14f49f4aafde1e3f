use rustc_hash::FxHashMap;

use crate::model::NodeId;
use crate::protocol::packet::MsgId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Entry {
    seq: u32,
    hops: u32,
}

/// Hop distances to other users, learned from the `(origin, hop counter)`
/// tag on every packet heard.
///
/// Within one message the smallest distance heard wins. A newer message
/// from the same origin replaces whatever an older one taught, so the table
/// follows topology changes. Entries never expire.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DistanceTable {
    entries: FxHashMap<NodeId, Entry>,
}

impl DistanceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, msg_id: MsgId, hop_counter: u32) {
        let hops = hop_counter + 1;
        let fresh = Entry { seq: msg_id.seq, hops };
        self.entries
            .entry(msg_id.origin)
            .and_modify(|e| {
                if msg_id.seq == e.seq {
                    e.hops = e.hops.min(hops);
                } else if msg_id.seq > e.seq {
                    *e = fresh;
                }
            })
            .or_insert(fresh);
    }

    pub fn get(&self, origin: NodeId) -> Option<u32> {
        self.entries.get(&origin).map(|e| e.hops)
    }

    /// Overrides the entry for `origin`. Intended for tests and tools that
    /// need a converged table without running traffic.
    pub fn set(&mut self, origin: NodeId, hops: u32) {
        debug_assert!(hops >= 1);
        let seq = self.entries.get(&origin).map_or(0, |e| e.seq);
        self.entries.insert(origin, Entry { seq, hops });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
