//! TTL-scoped flooding with duplicate detection, and the oracle that picks
//! the smallest TTL reaching every group member.

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::graph::UnitDiskGraph;
use crate::model::{GroupId, NodeId, Position};
use crate::protocol::packet::{Body, DataFields, DestPair, MsgId, Packet};
use crate::protocol::{Action, HandlerCtx};

#[derive(Debug, Clone)]
pub struct SmfNode {
    id: NodeId,
    member: bool,
    forward_jitter_max: f64,
    dup_cache: FxHashSet<MsgId>,
    next_seq: u32,
}

impl SmfNode {
    pub fn new(id: NodeId, member: bool, forward_jitter_max: f64) -> Self {
        SmfNode {
            id,
            member,
            forward_jitter_max,
            dup_cache: FxHashSet::default(),
            next_seq: 0,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn is_member(&self) -> bool {
        self.member
    }

    /// Starts a flood. `hops` is the number of hops the flood should span;
    /// the packet leaves with `hops - 1` remaining. Empty `dests` means the
    /// whole group.
    pub fn originate(
        &mut self,
        group: GroupId,
        dests: &[NodeId],
        payload_bytes: u32,
        hops: u32,
    ) -> (MsgId, Vec<Action>) {
        let msg_id = MsgId {
            origin: self.id,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        self.dup_cache.insert(msg_id);
        let ttl = hops.saturating_sub(1).min(u32::from(u8::MAX)) as u8;
        let packet = Packet {
            group,
            msg_id,
            sender: self.id,
            hop_counter: 0,
            epoch: 0,
            body: Body::Data(DataFields {
                destinations: dests
                    .iter()
                    .filter(|&&d| d != self.id)
                    .map(|&dest| DestPair { dest, mrd: 0 })
                    .collect(),
                payload_bytes,
                smf_ttl: Some(ttl),
            }),
        };
        (msg_id, vec![Action::Transmit { packet, delay: 0.0 }])
    }

    /// Every user takes part: first copy is delivered if addressed here and
    /// rebroadcast while TTL remains.
    pub fn smf_forward(&mut self, pkt: &Packet, ctx: &mut HandlerCtx<'_>) -> Vec<Action> {
        let Body::Data(data) = &pkt.body else {
            return Vec::new();
        };
        let Some(ttl) = data.smf_ttl else {
            return Vec::new();
        };
        if !self.dup_cache.insert(pkt.msg_id) {
            return Vec::new();
        }
        let mut actions = Vec::new();
        let addressed = if data.destinations.is_empty() {
            self.member
        } else {
            data.destinations.iter().any(|p| p.dest == self.id)
        };
        if addressed {
            actions.push(Action::Deliver { msg_id: pkt.msg_id });
        }
        if ttl > 0 {
            let mut packet = pkt.relayed_by(self.id);
            if let Body::Data(d) = &mut packet.body {
                d.smf_ttl = Some(ttl - 1);
            }
            actions.push(Action::Transmit {
                packet,
                delay: ctx.jitter(self.forward_jitter_max),
            });
        }
        actions
    }
}

/// Result of [`min_ttl_oracle`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TtlOracle {
    pub hops: u32,
    /// False when some member pair has no path; `hops` then covers only the
    /// reachable pairs.
    pub connected: bool,
}

/// Largest hop distance from `origin` to a reachable member of `group`:
/// the smallest scope under which a flood from `origin` reaches every
/// member it can reach at all.
pub fn originator_ttl(graph: &UnitDiskGraph, origin: NodeId, group: &[NodeId]) -> u32 {
    let dist = graph.bfs(origin.index());
    group.iter().filter_map(|m| dist[m.index()]).max().unwrap_or(0)
}

/// Smallest flood scope, in hops, under which every member's flood reaches
/// every other member on the loss-free unit-disk graph: the largest hop
/// distance between any two members.
pub fn min_ttl_oracle(positions: &[Position], tx_radius: f64, group: &[NodeId]) -> Result<TtlOracle> {
    if group.is_empty() {
        return Err(Error::Config("minimum TTL needs at least one group member".into()));
    }
    let graph = UnitDiskGraph::new(positions, tx_radius);
    let mut hops = 0;
    let mut connected = true;
    for &s in group {
        let dist = graph.bfs(s.index());
        for &m in group {
            match dist[m.index()] {
                Some(d) => hops = hops.max(d),
                None => connected = false,
            }
        }
    }
    Ok(TtlOracle { hops, connected })
}
