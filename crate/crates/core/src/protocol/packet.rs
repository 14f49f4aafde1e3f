//! Wire messages and their byte accounting.
//!
//! Nothing here is serialized; the sizes exist so over-the-air totals can be
//! compared across protocols.

use serde::{Deserialize, Serialize};

use crate::model::{GroupId, NodeId};

pub const DISCOVERY_BYTES: u32 = 14;
pub const ACK_BYTES: u32 = 20;
pub const DATA_HEADER_BYTES: u32 = 4;
pub const DEST_PAIR_BYTES: u32 = 3;
pub const SMF_TTL_BYTES: u32 = 2;

/// Identifies an original message across all its retransmissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MsgId {
    pub origin: NodeId,
    pub seq: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscoveryFields {
    /// Hops remaining after this transmission.
    pub ttl: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AckFields {
    pub obligate: NodeId,
    /// Probability with which a non-obligate hearer self-selects.
    pub acp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DestPair {
    pub dest: NodeId,
    /// Maximum retransmit distance.
    pub mrd: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataFields {
    /// Empty means one-to-all.
    pub destinations: Vec<DestPair>,
    pub payload_bytes: u32,
    /// Remaining flood hops; only the flooding baseline sets this.
    pub smf_ttl: Option<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Discovery(DiscoveryFields),
    Ack(AckFields),
    Data(DataFields),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PacketKind {
    Discovery,
    Ack,
    Data,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub group: GroupId,
    pub msg_id: MsgId,
    /// The node that put this copy on the air.
    pub sender: NodeId,
    /// Hops travelled before this transmission; 0 at the originator.
    pub hop_counter: u32,
    pub epoch: u32,
    pub body: Body,
}

impl Packet {
    pub fn origin(&self) -> NodeId {
        self.msg_id.origin
    }

    pub fn kind(&self) -> PacketKind {
        match self.body {
            Body::Discovery(_) => PacketKind::Discovery,
            Body::Ack(_) => PacketKind::Ack,
            Body::Data(_) => PacketKind::Data,
        }
    }

    pub fn is_control(&self) -> bool {
        !matches!(self.body, Body::Data(_))
    }

    /// Size on the air.
    pub fn wire_bytes(&self) -> u32 {
        match &self.body {
            Body::Discovery(_) => DISCOVERY_BYTES,
            Body::Ack(_) => ACK_BYTES,
            Body::Data(d) => match d.smf_ttl {
                Some(_) => d.payload_bytes + DATA_HEADER_BYTES + SMF_TTL_BYTES,
                None => {
                    d.payload_bytes
                        + DATA_HEADER_BYTES
                        + DEST_PAIR_BYTES * d.destinations.len() as u32
                }
            },
        }
    }

    /// The copy `by` puts on the air when relaying this one.
    pub fn relayed_by(&self, by: NodeId) -> Packet {
        Packet {
            sender: by,
            hop_counter: self.hop_counter + 1,
            ..self.clone()
        }
    }

    /// TTL for discovery, MRD of the first pair for targeted data, flood
    /// TTL for baseline data. Used in traces.
    pub fn scope_field(&self) -> Option<u32> {
        match &self.body {
            Body::Discovery(d) => Some(u32::from(d.ttl)),
            Body::Ack(_) => None,
            Body::Data(d) => d
                .smf_ttl
                .map(u32::from)
                .or_else(|| d.destinations.first().map(|p| p.mrd)),
        }
    }
}
