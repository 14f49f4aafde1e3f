//! Group-centric networking node: discovery regeneration, ACK-driven relay
//! election with tunable resiliency, and gradient-based targeted flooding.

use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::FxHashMap;

use crate::error::ProtocolError;
use crate::model::{GroupId, NodeId, SimTime};
use crate::protocol::distance::DistanceTable;
use crate::protocol::packet::{
    AckFields, Body, DataFields, DestPair, DiscoveryFields, MsgId, Packet,
};
use crate::protocol::{Action, HandlerCtx};

/// Knobs shared by every GCN node in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    pub source_ttl: u8,
    /// Desired number of data relays around each user (R).
    pub desired_relays: u32,
    pub ack_delay_max: f64,
    pub neighbor_count_window: f64,
    pub forward_jitter_max: f64,
}

impl Default for GcnParams {
    fn default() -> Self {
        GcnParams {
            source_ttl: 2,
            desired_relays: 1,
            ack_delay_max: 0.1,
            neighbor_count_window: 0.05,
            forward_jitter_max: 0.001,
        }
    }
}

impl GcnParams {
    fn ack_delay(&self, ctx: &mut HandlerCtx<'_>) -> f64 {
        let max = self.ack_delay_max;
        ctx.rng.uniform_open_closed(0.5 * max, max)
    }
}

/// Probability of accept: `(R - 1) / (N - 1)` clamped to `[0, 1]`, zero when
/// only one neighbour was counted.
pub fn acceptance_probability(desired_relays: u32, neighbors: u32) -> f64 {
    if desired_relays <= 1 || neighbors <= 1 {
        return 0.0;
    }
    let acp = f64::from(desired_relays - 1) / f64::from(neighbors - 1);
    acp.min(1.0)
}

/// Election state for one discovery epoch. Reset when a newer epoch's
/// discovery is first heard.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Round {
    pub is_relay: bool,
    /// First node this epoch's discovery was heard from.
    pub upstream: Option<NodeId>,
    pub first_heard: Option<SimTime>,
    /// Distinct discovery senders heard inside the counting window.
    pub neighbors: BTreeSet<NodeId>,
    /// Neighbour count as frozen when this node's ACK fired.
    pub frozen_count: Option<u32>,
    pub self_select_attempted: bool,
    pub ack_scheduled: bool,
    pub acked: bool,
    pub transmitted_discovery: bool,
    /// Highest TTL this node has put on the air for the epoch's discovery.
    pub forwarded_ttl: Option<u8>,
    pub initiator: bool,
}

impl Round {
    pub fn neighbor_count(&self) -> u32 {
        self.frozen_count
            .unwrap_or_else(|| self.neighbors.len() as u32)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Seen {
    delivered: bool,
    forwarded: bool,
}

/// Everything a node keeps for one group.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupState {
    pub member: bool,
    /// Latest discovery epoch heard; 0 before any.
    pub epoch: u32,
    pub round: Round,
    pub distances: DistanceTable,
    dup_cache: FxHashMap<MsgId, Seen>,
}

impl GroupState {
    pub fn seen(&self, msg_id: &MsgId) -> bool {
        self.dup_cache.contains_key(msg_id)
    }

    pub fn forwarded(&self, msg_id: &MsgId) -> bool {
        self.dup_cache.get(msg_id).is_some_and(|s| s.forwarded)
    }

    /// Whether this node retransmits group data: members always do, other
    /// users only once elected.
    pub fn forwards_data(&self) -> bool {
        self.member || self.round.is_relay
    }

    fn enter_epoch(&mut self, epoch: u32) {
        self.epoch = epoch;
        self.round = Round::default();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnNode {
    id: NodeId,
    params: GcnParams,
    groups: BTreeMap<GroupId, GroupState>,
    next_seq: u32,
}

impl GcnNode {
    pub fn new(id: NodeId, params: GcnParams) -> Self {
        GcnNode {
            id,
            params,
            groups: BTreeMap::new(),
            next_seq: 0,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn params(&self) -> &GcnParams {
        &self.params
    }

    pub fn join(&mut self, group: GroupId) {
        self.groups.entry(group).or_default().member = true;
    }

    pub fn group(&self, group: GroupId) -> Option<&GroupState> {
        self.groups.get(&group)
    }

    pub fn group_mut(&mut self, group: GroupId) -> &mut GroupState {
        self.groups.entry(group).or_default()
    }

    pub fn is_member(&self, group: GroupId) -> bool {
        self.group(group).is_some_and(|g| g.member)
    }

    pub fn is_relay(&self, group: GroupId) -> bool {
        self.group(group).is_some_and(|g| g.round.is_relay)
    }

    pub fn distance_to(&self, group: GroupId, dest: NodeId) -> Option<u32> {
        self.group(group).and_then(|g| g.distances.get(dest))
    }

    fn fresh_msg_id(&mut self) -> MsgId {
        let id = MsgId {
            origin: self.id,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        id
    }

    /// Starts discovery epoch `epoch` from this (member) node. A second
    /// initiation for an epoch already entered is a no-op.
    pub fn initiate_discovery(
        &mut self,
        group: GroupId,
        epoch: u32,
        ctx: &mut HandlerCtx<'_>,
    ) -> Result<Vec<Action>, ProtocolError> {
        let ttl = self.params.source_ttl;
        if ttl < 1 {
            return Err(ProtocolError::BadSourceTtl(ttl));
        }
        if !self.is_member(group) {
            return Err(ProtocolError::NotMember(self.id));
        }
        if epoch <= self.group_mut(group).epoch {
            return Ok(Vec::new());
        }
        let msg_id = self.fresh_msg_id();
        let me = self.id;
        let gs = self.group_mut(group);
        gs.enter_epoch(epoch);
        gs.round.initiator = true;
        gs.round.first_heard = Some(ctx.now);
        gs.round.transmitted_discovery = true;
        gs.round.forwarded_ttl = Some(ttl - 1);
        gs.dup_cache.insert(msg_id, Seen { delivered: true, forwarded: true });
        let packet = Packet {
            group,
            msg_id,
            sender: me,
            hop_counter: 0,
            epoch,
            body: Body::Discovery(DiscoveryFields { ttl: ttl - 1 }),
        };
        Ok(vec![Action::Transmit { packet, delay: 0.0 }])
    }

    /// Dispatches a heard packet to the matching handler.
    pub fn on_packet(&mut self, pkt: &Packet, ctx: &mut HandlerCtx<'_>) -> Vec<Action> {
        match pkt.body {
            Body::Discovery(_) => self.on_discovery(pkt, ctx),
            Body::Ack(_) => self.on_ack(pkt, ctx),
            Body::Data(_) => self.on_data(pkt, ctx),
        }
    }

    pub fn update_distance(&mut self, pkt: &Packet) {
        if pkt.origin() == self.id {
            return;
        }
        self.group_mut(pkt.group)
            .distances
            .observe(pkt.msg_id, pkt.hop_counter);
    }

    pub fn on_discovery(&mut self, pkt: &Packet, ctx: &mut HandlerCtx<'_>) -> Vec<Action> {
        let Body::Discovery(DiscoveryFields { ttl: heard_ttl }) = pkt.body else {
            return Vec::new();
        };
        self.update_distance(pkt);
        let me = self.id;
        let params = self.params.clone();
        let gs = self.group_mut(pkt.group);
        if pkt.epoch < gs.epoch {
            return Vec::new();
        }
        if pkt.epoch > gs.epoch {
            gs.enter_epoch(pkt.epoch);
        }
        gs.dup_cache.entry(pkt.msg_id).or_default();

        let round = &mut gs.round;
        let first = round.first_heard.is_none();
        if first {
            round.first_heard = Some(ctx.now);
            round.upstream = Some(pkt.sender);
        }
        if round.frozen_count.is_none() {
            let since = ctx.now.saturating_sub(round.first_heard.unwrap_or(ctx.now));
            if since.as_secs() <= params.neighbor_count_window {
                round.neighbors.insert(pkt.sender);
            }
        }

        let mut actions = Vec::new();
        let out_ttl = if gs.member {
            Some(params.source_ttl.saturating_sub(1))
        } else {
            heard_ttl.checked_sub(1)
        };
        let round = &mut gs.round;
        if let Some(out_ttl) = out_ttl {
            // Members regenerate once. Other users relay again only when a
            // copy arrives with more hops left than they already sent.
            let improves = match round.forwarded_ttl {
                None => true,
                Some(prev) => !gs.member && out_ttl > prev,
            };
            if improves {
                round.forwarded_ttl = Some(out_ttl);
                round.transmitted_discovery = true;
                let mut packet = pkt.relayed_by(me);
                packet.body = Body::Discovery(DiscoveryFields { ttl: out_ttl });
                let delay = ctx.jitter(params.forward_jitter_max);
                actions.push(Action::Transmit { packet, delay });
            }
        }
        if gs.member && first && !round.initiator && !round.ack_scheduled {
            round.ack_scheduled = true;
            actions.push(Action::SendAck {
                group: pkt.group,
                epoch: gs.epoch,
                delay: params.ack_delay(ctx),
            });
        }
        actions
    }

    /// Fields of the ACK this node would send now.
    pub fn compute_ack(&self, group: GroupId) -> Result<AckFields, ProtocolError> {
        let gs = self
            .group(group)
            .ok_or(ProtocolError::NoUpstream(self.id))?;
        let obligate = gs.round.upstream.ok_or(ProtocolError::NoUpstream(self.id))?;
        let n = gs.round.neighbor_count().max(1);
        Ok(AckFields {
            obligate,
            acp: acceptance_probability(self.params.desired_relays, n),
        })
    }

    /// The scheduled acknowledgment fires: freeze the neighbour count and
    /// put the ACK on the air. Stale or repeated firings do nothing.
    pub fn fire_ack(
        &mut self,
        group: GroupId,
        epoch: u32,
        _ctx: &mut HandlerCtx<'_>,
    ) -> Result<Vec<Action>, ProtocolError> {
        let Some(gs) = self.groups.get_mut(&group) else {
            return Ok(Vec::new());
        };
        if gs.epoch != epoch || gs.round.acked {
            return Ok(Vec::new());
        }
        gs.round.frozen_count = Some(gs.round.neighbors.len() as u32);
        let fields = self.compute_ack(group)?;
        let msg_id = self.fresh_msg_id();
        let gs = self.group_mut(group);
        gs.round.acked = true;
        gs.dup_cache.insert(msg_id, Seen { delivered: true, forwarded: true });
        let packet = Packet {
            group,
            msg_id,
            sender: self.id,
            hop_counter: 0,
            epoch,
            body: Body::Ack(fields),
        };
        Ok(vec![Action::Transmit { packet, delay: 0.0 }])
    }

    pub fn on_ack(&mut self, pkt: &Packet, ctx: &mut HandlerCtx<'_>) -> Vec<Action> {
        let Body::Ack(AckFields { obligate, acp }) = pkt.body else {
            return Vec::new();
        };
        self.update_distance(pkt);
        let me = self.id;
        let params = self.params.clone();
        let gs = self.group_mut(pkt.group);
        if pkt.epoch != gs.epoch || !gs.round.transmitted_discovery {
            return Vec::new();
        }
        let named = obligate == me;
        if gs.member {
            // Members already forward group data and have sent their own ACK.
            if named {
                gs.round.is_relay = true;
            }
            return Vec::new();
        }
        let round = &mut gs.round;
        if round.is_relay {
            return Vec::new();
        }
        let elected = if named {
            true
        } else if !round.self_select_attempted {
            round.self_select_attempted = true;
            ctx.rng.unit() < acp
        } else {
            false
        };
        if !elected {
            return Vec::new();
        }
        round.is_relay = true;
        let mut actions = vec![Action::BecomeRelay { group: pkt.group }];
        if !round.ack_scheduled {
            round.ack_scheduled = true;
            actions.push(Action::SendAck {
                group: pkt.group,
                epoch: gs.epoch,
                delay: params.ack_delay(ctx),
            });
        }
        actions
    }

    pub fn on_data(&mut self, pkt: &Packet, ctx: &mut HandlerCtx<'_>) -> Vec<Action> {
        let Body::Data(data) = &pkt.body else {
            return Vec::new();
        };
        self.update_distance(pkt);
        let me = self.id;
        let jitter_max = self.params.forward_jitter_max;
        let gs = self.group_mut(pkt.group);
        let eligible = gs.forwards_data();
        let member = gs.member;
        let distances = &gs.distances;
        let seen = gs.dup_cache.entry(pkt.msg_id).or_default();
        let mut actions = Vec::new();

        if data.destinations.is_empty() {
            if member && !seen.delivered {
                seen.delivered = true;
                actions.push(Action::Deliver { msg_id: pkt.msg_id });
            }
            if eligible && !seen.forwarded {
                seen.forwarded = true;
                let packet = pkt.relayed_by(me);
                actions.push(Action::Transmit {
                    packet,
                    delay: ctx.jitter(jitter_max),
                });
            }
            return actions;
        }

        if data.destinations.iter().any(|p| p.dest == me) && !seen.delivered {
            seen.delivered = true;
            actions.push(Action::Deliver { msg_id: pkt.msg_id });
        }
        if eligible && !seen.forwarded {
            let surviving: Vec<DestPair> = data
                .destinations
                .iter()
                .filter(|p| p.dest != me)
                .filter_map(|p| {
                    let d = distances.get(p.dest)?;
                    (p.mrd >= d).then_some(DestPair {
                        dest: p.dest,
                        mrd: d - 1,
                    })
                })
                .collect();
            if !surviving.is_empty() {
                seen.forwarded = true;
                let mut packet = pkt.relayed_by(me);
                packet.body = Body::Data(DataFields {
                    destinations: surviving,
                    ..data.clone()
                });
                actions.push(Action::Transmit {
                    packet,
                    delay: ctx.jitter(jitter_max),
                });
            }
        }
        actions
    }

    /// Originates a one-to-all data packet.
    pub fn send_data(&mut self, group: GroupId, payload_bytes: u32) -> (MsgId, Vec<Action>) {
        let msg_id = self.fresh_msg_id();
        let me = self.id;
        let gs = self.group_mut(group);
        gs.dup_cache.insert(msg_id, Seen { delivered: true, forwarded: true });
        let packet = Packet {
            group,
            msg_id,
            sender: me,
            hop_counter: 0,
            epoch: gs.epoch,
            body: Body::Data(DataFields {
                destinations: Vec::new(),
                payload_bytes,
                smf_ttl: None,
            }),
        };
        (msg_id, vec![Action::Transmit { packet, delay: 0.0 }])
    }

    /// Originates a targeted packet with one `(dest, Δ[dest] + mrd_offset)`
    /// pair per destination, clamped at zero.
    pub fn send_targeted(
        &mut self,
        group: GroupId,
        dests: &[NodeId],
        mrd_offset: i32,
        payload_bytes: u32,
    ) -> Result<(MsgId, Vec<Action>), ProtocolError> {
        let me = self.id;
        let mut pairs = Vec::with_capacity(dests.len());
        for &dest in dests.iter().filter(|&&d| d != me) {
            let d = self
                .distance_to(group, dest)
                .ok_or(ProtocolError::NoRoute { node: me, dest })?;
            let mrd = (i64::from(d) + i64::from(mrd_offset)).max(0) as u32;
            pairs.push(DestPair { dest, mrd });
        }
        let msg_id = self.fresh_msg_id();
        let gs = self.group_mut(group);
        gs.dup_cache.insert(msg_id, Seen { delivered: true, forwarded: true });
        if pairs.is_empty() {
            return Ok((msg_id, Vec::new()));
        }
        let packet = Packet {
            group,
            msg_id,
            sender: me,
            hop_counter: 0,
            epoch: gs.epoch,
            body: Body::Data(DataFields {
                destinations: pairs,
                payload_bytes,
                smf_ttl: None,
            }),
        };
        Ok((msg_id, vec![Action::Transmit { packet, delay: 0.0 }]))
    }
}
