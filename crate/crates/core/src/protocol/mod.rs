//! Per-node protocol logic.
//!
//! Handlers are plain state transitions: they take a node's state, the
//! packet heard, the current time and the node's own random stream, and
//! return the [`Action`]s the event loop should carry out.

mod distance;
pub mod gcn;
pub mod packet;
pub mod smf;

pub use distance::DistanceTable;
pub use gcn::{acceptance_probability, GcnNode, GcnParams, GroupState, Round};
pub use packet::{
    AckFields, Body, DataFields, DestPair, DiscoveryFields, MsgId, Packet, PacketKind,
};
pub use smf::{min_ttl_oracle, originator_ttl, SmfNode, TtlOracle};

use crate::model::{GroupId, SimTime};
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Put `packet` on the air after `delay` seconds.
    Transmit { packet: Packet, delay: f64 },
    BecomeRelay { group: GroupId },
    /// Fire this node's discovery acknowledgment after `delay` seconds.
    SendAck { group: GroupId, epoch: u32, delay: f64 },
    /// First reception of a message this node was meant to get.
    Deliver { msg_id: MsgId },
}

pub struct HandlerCtx<'a> {
    pub now: SimTime,
    pub rng: &'a mut SimRng,
}

impl<'a> HandlerCtx<'a> {
    pub fn new(now: SimTime, rng: &'a mut SimRng) -> Self {
        HandlerCtx { now, rng }
    }

    /// Retransmission delay, uniform in `(0, max]`.
    pub(crate) fn jitter(&mut self, max: f64) -> f64 {
        if max <= 0.0 {
            0.0
        } else {
            self.rng.uniform_open_closed(0.0, max)
        }
    }
}
