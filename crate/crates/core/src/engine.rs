//! Deterministic discrete-event loop binding placement, mobility, the
//! channel and per-node protocol handlers into one run.
//!
//! Events are ordered by `(time, seq)` where `seq` is the insertion counter,
//! so equal-time events run in the order they were scheduled. A
//! transmission occupies the air for its serialization time at the
//! configured bit rate; receivers handle it, and it is recorded, when that
//! time ends. Propagation itself is instantaneous and there is no medium
//! contention.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use rustc_hash::FxHashMap;

use crate::analytics::connectivity::connectivity_sample;
use crate::analytics::metrics::{ByteCounts, FlowStats, MetricsReport, TxCounts};
use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::mobility::{advance, MotionState, TICK_SECS};
use crate::model::{GroupId, NodeId, Position, SimTime};
use crate::placement::World;
use crate::protocol::{
    min_ttl_oracle, originator_ttl, Action, Body, GcnNode, GcnParams, HandlerCtx, MsgId, Packet, PacketKind,
    SmfNode,
};
use crate::rng::{SimRng, Stream};
use crate::graph::UnitDiskGraph;
use crate::scenario::{Destinations, Flow, ProtocolKind, Scenario, Senders, SmfScope, TrafficPattern};
use crate::trace::{TraceKind, TraceRecord, TraceSink};

/// The one group every shipped scenario uses.
pub const GROUP: GroupId = GroupId(0);

const SAMPLE_PERIOD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    TransmitDue { node: NodeId, packet: Packet },
    AckDue { node: NodeId, epoch: u32 },
    MobilityTick,
    TrafficDue { flow: usize, sender: NodeId, first: f64, k: u64 },
    RediscoveryDue { epoch: u32 },
    MetricsSampleDue,
}

#[derive(Debug, Clone)]
pub struct Event {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Keep every trace record in the output (the hash is always computed).
    pub keep_trace: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub trace: Vec<TraceRecord>,
    pub trace_hash: u64,
    pub trace_len: u64,
    /// Members that heard the first discovery epoch, source included.
    /// Empty under the flooding baseline.
    pub discovered: BTreeSet<NodeId>,
}

/// Sends at `first + k * period` strictly before `stop`.
fn send_count(first: f64, period: f64, stop: f64) -> u64 {
    if first >= stop {
        return 0;
    }
    let mut k = ((stop - first) / period).ceil() as u64;
    while k > 0 && first + (k - 1) as f64 * period >= stop {
        k -= 1;
    }
    while first + k as f64 * period < stop {
        k += 1;
    }
    k
}

enum Nodes {
    Gcn(Vec<GcnNode>),
    Smf(Vec<SmfNode>),
}

struct FlowPlan {
    flow: Flow,
    counted: bool,
}

struct MessageRecord {
    flow: usize,
    expected: BTreeSet<NodeId>,
    delivered: BTreeSet<NodeId>,
}

/// Runs one seed of `scenario`.
pub fn run(scenario: &Scenario, seed: u64) -> Result<RunOutput> {
    run_with(scenario, seed, RunOptions::default())
}

pub fn run_with(scenario: &Scenario, seed: u64, options: RunOptions) -> Result<RunOutput> {
    scenario.validated()?;
    let world = World::build(scenario, seed)?;
    Engine::new(scenario, seed, world, options)?.execute()
}

struct Engine<'s> {
    scenario: &'s Scenario,
    seed: u64,
    channel: &'s ChannelSpec,
    now: SimTime,
    end: SimTime,
    seq: u64,
    queue: BinaryHeap<Reverse<Event>>,
    positions: Vec<Position>,
    motion: Vec<MotionState>,
    mobility_rngs: Vec<SimRng>,
    proto_rngs: Vec<SimRng>,
    channel_rng: SimRng,
    nodes: Nodes,
    member: Vec<bool>,
    members: Vec<NodeId>,
    source: NodeId,
    epoch: u32,
    /// Flood scope per originator (indexed by node; only members send).
    smf_scopes: Vec<u32>,
    /// Widest scope any message has used so far.
    smf_hops: u32,
    flows: Vec<FlowPlan>,
    flow_stats: Vec<FlowStats>,
    messages: FxHashMap<MsgId, MessageRecord>,
    sends_planned: u64,
    sends_done: u64,
    bytes: ByteCounts,
    tx: TxCounts,
    trace: TraceSink,
    connectivity: Vec<(f64, f64)>,
    relays_per_epoch: Vec<u32>,
    discovered: BTreeSet<NodeId>,
    events: u64,
}

impl<'s> Engine<'s> {
    fn new(scenario: &'s Scenario, seed: u64, world: World, options: RunOptions) -> Result<Self> {
        let n = world.positions.len();
        let ids = (0..n as u32).map(NodeId);
        let mobility_rngs: Vec<SimRng> = ids
            .clone()
            .map(|id| SimRng::new(seed, Stream::Mobility(id)))
            .collect();
        let proto_rngs: Vec<SimRng> = ids
            .clone()
            .map(|id| SimRng::new(seed, Stream::Protocol(id)))
            .collect();
        let members = world.members();
        let timing = &scenario.timing;
        let nodes = match scenario.protocol {
            ProtocolKind::Gcn => {
                let params = GcnParams {
                    source_ttl: scenario.source_ttl,
                    desired_relays: scenario.desired_relays,
                    ack_delay_max: timing.ack_delay_max,
                    neighbor_count_window: timing.neighbor_count_window,
                    forward_jitter_max: timing.forward_jitter_max,
                };
                Nodes::Gcn(
                    ids.clone()
                        .map(|id| {
                            let mut node = GcnNode::new(id, params.clone());
                            if world.member[id.index()] {
                                node.join(GROUP);
                            }
                            node
                        })
                        .collect(),
                )
            }
            ProtocolKind::Smf => Nodes::Smf(
                ids.clone()
                    .map(|id| SmfNode::new(id, world.member[id.index()], timing.forward_jitter_max))
                    .collect(),
            ),
        };

        let mut engine = Engine {
            scenario,
            seed,
            channel: &scenario.channel,
            now: SimTime::ZERO,
            end: SimTime::from_secs(scenario.duration),
            seq: 0,
            queue: BinaryHeap::new(),
            motion: Vec::new(),
            mobility_rngs,
            proto_rngs,
            channel_rng: SimRng::new(seed, Stream::Channel),
            nodes,
            member: world.member,
            members,
            source: world.source,
            epoch: 0,
            smf_scopes: Vec::new(),
            smf_hops: 0,
            flows: Vec::new(),
            flow_stats: Vec::new(),
            messages: FxHashMap::default(),
            sends_planned: 0,
            sends_done: 0,
            bytes: ByteCounts::default(),
            tx: TxCounts::default(),
            trace: TraceSink::new(options.keep_trace),
            connectivity: Vec::new(),
            relays_per_epoch: Vec::new(),
            discovered: BTreeSet::new(),
            events: 0,
            positions: world.positions,
        };
        engine.setup()?;
        Ok(engine)
    }

    fn schedule(&mut self, delay: f64, kind: EventKind) {
        self.schedule_at(self.now + SimTime::from_secs(delay.max(0.0)), kind);
    }

    fn schedule_at(&mut self, time: SimTime, kind: EventKind) {
        if time > self.end {
            return;
        }
        let seq = self.seq;
        self.seq += 1;
        self.queue.push(Reverse(Event { time, seq, kind }));
    }

    fn setup(&mut self) -> Result<()> {
        let scenario = self.scenario;
        let bounds: Vec<f64> = self
            .positions
            .iter()
            .map(|p| {
                if p.norm() <= scenario.region_radius {
                    scenario.region_radius
                } else {
                    scenario.placement_radius()
                }
            })
            .collect();
        self.motion = self
            .positions
            .iter()
            .zip(bounds)
            .zip(self.mobility_rngs.iter_mut())
            .map(|((&p, bound), rng)| MotionState::new(p, bound, &scenario.mobility, 0.0, rng))
            .collect();
        if !scenario.mobility.is_static() {
            self.schedule(TICK_SECS, EventKind::MobilityTick);
        }

        match scenario.protocol {
            ProtocolKind::Gcn => {
                self.schedule_at(SimTime::ZERO, EventKind::RediscoveryDue { epoch: 1 });
            }
            ProtocolKind::Smf => {
                self.smf_scopes = self.current_scopes()?;
            }
        }

        let mut plans: Vec<FlowPlan> = scenario
            .traffic
            .flows
            .iter()
            .map(|f| FlowPlan {
                flow: f.clone(),
                counted: true,
            })
            .collect();
        if let Some(period) = scenario.timing.distance_refresh_period {
            plans.push(FlowPlan {
                flow: Flow {
                    pattern: TrafficPattern::OneToAll,
                    senders: Senders::Source,
                    dests: Destinations::All,
                    rate: 1.0 / period,
                    payload_bytes: scenario
                        .timing
                        .refresh_bytes
                        .saturating_sub(crate::protocol::packet::DATA_HEADER_BYTES),
                    start: period.min(scenario.duration),
                    stop: scenario.duration,
                },
                counted: false,
            });
        }
        let mut traffic_rng = SimRng::new(self.seed, Stream::Traffic);
        for (i, plan) in plans.iter().enumerate() {
            for sender in self.senders_of(&plan.flow) {
                let period = 1.0 / plan.flow.rate;
                let first = plan.flow.start + traffic_rng.unit() * period;
                let count = send_count(first, period, plan.flow.stop.min(scenario.duration));
                self.sends_planned += count;
                if count > 0 {
                    let kind = EventKind::TrafficDue { flow: i, sender, first, k: 0 };
                    self.schedule_at(SimTime::from_secs(first), kind);
                }
            }
        }
        self.flow_stats = plans
            .iter()
            .map(|p| FlowStats::new(p.flow.pattern, p.counted))
            .collect();
        self.flows = plans;

        self.schedule(SAMPLE_PERIOD, EventKind::MetricsSampleDue);
        Ok(())
    }

    fn senders_of(&self, flow: &Flow) -> Vec<NodeId> {
        let base = match flow.senders {
            Senders::Source => vec![self.source],
            Senders::AllMembers => self.members.clone(),
        };
        base.into_iter()
            .filter(|&s| !self.dests_of(flow, s).is_empty() || flow.dests == Destinations::All)
            .collect()
    }

    /// Explicit destinations of a flow for one sender; empty for one-to-all.
    fn dests_of(&self, flow: &Flow, sender: NodeId) -> Vec<NodeId> {
        match &flow.dests {
            Destinations::All => Vec::new(),
            Destinations::Source => [self.source].into_iter().filter(|&d| d != sender).collect(),
            Destinations::Explicit(ids) => ids.iter().copied().filter(|&d| d != sender).collect(),
        }
    }

    /// Scope each node would give a message it originates right now.
    fn current_scopes(&self) -> Result<Vec<u32>> {
        let n = self.positions.len();
        match self.scenario.smf_scope {
            SmfScope::GroupDiameter => {
                let oracle = min_ttl_oracle(&self.positions, self.channel.tx_radius, &self.members)?;
                Ok(vec![oracle.hops; n])
            }
            SmfScope::Originator => {
                let graph = UnitDiskGraph::new(&self.positions, self.channel.tx_radius);
                let mut scopes = vec![0; n];
                for &m in &self.members {
                    scopes[m.index()] = originator_ttl(&graph, m, &self.members);
                }
                Ok(scopes)
            }
        }
    }

    fn execute(mut self) -> Result<RunOutput> {
        while let Some(Reverse(event)) = self.queue.pop() {
            debug_assert!(event.time >= self.now, "clock went backwards");
            self.now = event.time;
            self.events += 1;
            self.handle(event.kind)?;
        }
        if self.sends_done < self.sends_planned {
            return Err(Error::Deadlock {
                time: self.now.as_secs(),
                pending: (self.sends_planned - self.sends_done) as usize,
            });
        }
        Ok(self.finish())
    }

    fn handle(&mut self, kind: EventKind) -> Result<()> {
        match kind {
            EventKind::TransmitDue { node, packet } => self.transmit(node, packet),
            EventKind::AckDue { node, epoch } => {
                let actions = match &mut self.nodes {
                    Nodes::Gcn(nodes) => {
                        let mut ctx = HandlerCtx::new(self.now, &mut self.proto_rngs[node.index()]);
                        nodes[node.index()].fire_ack(GROUP, epoch, &mut ctx)?
                    }
                    Nodes::Smf(_) => Vec::new(),
                };
                self.apply(node, actions);
                Ok(())
            }
            EventKind::MobilityTick => {
                let start = self.now.as_secs() - TICK_SECS;
                let spec = &self.scenario.mobility;
                for (i, state) in self.motion.iter_mut().enumerate() {
                    *state = advance(spec, state, start, TICK_SECS, &mut self.mobility_rngs[i]);
                    self.positions[i] = state.position;
                }
                self.schedule(TICK_SECS, EventKind::MobilityTick);
                Ok(())
            }
            EventKind::TrafficDue { flow, sender, first, k } => self.originate(flow, sender, first, k),
            EventKind::RediscoveryDue { epoch } => self.rediscover(epoch),
            EventKind::MetricsSampleDue => {
                self.sample()?;
                self.schedule(SAMPLE_PERIOD, EventKind::MetricsSampleDue);
                Ok(())
            }
        }
    }

    fn rediscover(&mut self, epoch: u32) -> Result<()> {
        if epoch > 1 {
            let relays = self.relay_count();
            self.relays_per_epoch.push(relays);
        }
        self.epoch = epoch;
        let source = self.source;
        let actions = match &mut self.nodes {
            Nodes::Gcn(nodes) => {
                let mut ctx = HandlerCtx::new(self.now, &mut self.proto_rngs[source.index()]);
                nodes[source.index()].initiate_discovery(GROUP, epoch, &mut ctx)?
            }
            Nodes::Smf(_) => Vec::new(),
        };
        if epoch == 1 {
            self.discovered.insert(source);
        }
        self.apply(source, actions);
        if let Some(period) = self.scenario.timing.rediscovery_period {
            let next = self.now + SimTime::from_secs(period);
            if next < self.end {
                self.schedule_at(next, EventKind::RediscoveryDue { epoch: epoch + 1 });
            }
        }
        Ok(())
    }

    fn relay_count(&self) -> u32 {
        match &self.nodes {
            Nodes::Gcn(nodes) => nodes
                .iter()
                .filter(|n| !n.is_member(GROUP) && n.is_relay(GROUP))
                .count() as u32,
            Nodes::Smf(_) => 0,
        }
    }

    fn active_set(&self) -> Vec<bool> {
        match &self.nodes {
            Nodes::Gcn(nodes) => nodes
                .iter()
                .map(|n| n.group(GROUP).is_some_and(|g| g.forwards_data()))
                .collect(),
            Nodes::Smf(nodes) => vec![true; nodes.len()],
        }
    }

    fn sample(&mut self) -> Result<()> {
        let active = self.active_set();
        let frac = connectivity_sample(
            &self.positions,
            self.channel.tx_radius,
            &active,
            &self.members,
            self.source,
        );
        self.connectivity.push((self.now.as_secs(), frac));
        if matches!(self.nodes, Nodes::Smf(_)) && !self.scenario.mobility.is_static() {
            let fresh = self.current_scopes()?;
            for (kept, new) in self.smf_scopes.iter_mut().zip(fresh) {
                *kept = (*kept).max(new);
            }
        }
        Ok(())
    }

    fn originate(&mut self, flow_idx: usize, sender: NodeId, first: f64, k: u64) -> Result<()> {
        self.sends_done += 1;
        let flow = self.flows[flow_idx].flow.clone();
        let period = 1.0 / flow.rate;
        if k + 1 < send_count(first, period, flow.stop.min(self.scenario.duration)) {
            let at = SimTime::from_secs(first + (k + 1) as f64 * period);
            let kind = EventKind::TrafficDue { flow: flow_idx, sender, first, k: k + 1 };
            self.schedule_at(at, kind);
        }

        let dests = self.dests_of(&flow, sender);
        let expected: BTreeSet<NodeId> = match flow.pattern {
            TrafficPattern::OneToAll => self.members.iter().copied().filter(|&m| m != sender).collect(),
            TrafficPattern::Targeted => dests.iter().copied().collect(),
        };
        let stats = &mut self.flow_stats[flow_idx];
        stats.sent += 1;
        stats.expected += expected.len() as u64;

        let smf_hops = self.smf_scopes.get(sender.index()).copied().unwrap_or(0);
        if matches!(self.nodes, Nodes::Smf(_)) {
            self.smf_hops = self.smf_hops.max(smf_hops);
        }
        let mrd_offset = self.scenario.mrd_offset;
        let outcome = match &mut self.nodes {
            Nodes::Gcn(nodes) => {
                let node = &mut nodes[sender.index()];
                match flow.pattern {
                    TrafficPattern::OneToAll => Some(node.send_data(GROUP, flow.payload_bytes)),
                    TrafficPattern::Targeted => {
                        match node.send_targeted(GROUP, &dests, mrd_offset, flow.payload_bytes) {
                            Ok(sent) => Some(sent),
                            Err(crate::error::ProtocolError::NoRoute { .. }) => None,
                            Err(e) => return Err(e.into()),
                        }
                    }
                }
            }
            Nodes::Smf(nodes) => {
                Some(nodes[sender.index()].originate(GROUP, &dests, flow.payload_bytes, smf_hops))
            }
        };
        match outcome {
            Some((msg_id, actions)) => {
                self.messages.insert(
                    msg_id,
                    MessageRecord {
                        flow: flow_idx,
                        expected,
                        delivered: BTreeSet::new(),
                    },
                );
                self.apply(sender, actions);
            }
            None => self.flow_stats[flow_idx].no_route += 1,
        }
        Ok(())
    }

    fn transmit(&mut self, sender: NodeId, packet: Packet) -> Result<()> {
        let bytes = packet.wire_bytes();
        self.bytes.add(bytes, packet.is_control());
        let kind = match packet.kind() {
            PacketKind::Discovery => {
                self.tx.discovery += 1;
                TraceKind::TxDiscovery
            }
            PacketKind::Ack => {
                self.tx.ack += 1;
                TraceKind::TxAck
            }
            PacketKind::Data => {
                self.tx.data += 1;
                TraceKind::TxData
            }
        };
        self.trace.push(TraceRecord {
            time: self.now,
            node: sender,
            kind,
            msg_id: Some(packet.msg_id),
            field: packet.scope_field(),
            bytes,
        });

        let receivers =
            self.channel
                .sample_receivers(sender.index(), &self.positions, &mut self.channel_rng);
        let first_epoch_discovery =
            matches!(packet.body, Body::Discovery(_)) && packet.epoch == 1;
        for rx in receivers {
            if first_epoch_discovery && self.member[rx.index()] {
                self.discovered.insert(rx);
            }
            let actions = {
                let mut ctx = HandlerCtx::new(self.now, &mut self.proto_rngs[rx.index()]);
                match &mut self.nodes {
                    Nodes::Gcn(nodes) => nodes[rx.index()].on_packet(&packet, &mut ctx),
                    Nodes::Smf(nodes) => nodes[rx.index()].smf_forward(&packet, &mut ctx),
                }
            };
            self.apply(rx, actions);
        }
        Ok(())
    }

    fn airtime(&self, packet: &Packet) -> f64 {
        let rate = self.scenario.timing.bitrate_bps;
        if rate > 0.0 {
            f64::from(packet.wire_bytes()) * 8.0 / rate
        } else {
            0.0
        }
    }

    fn apply(&mut self, node: NodeId, actions: Vec<Action>) {
        for action in actions {
            match action {
                Action::Transmit { packet, delay } => {
                    let airtime = self.airtime(&packet);
                    self.schedule(delay + airtime, EventKind::TransmitDue { node, packet });
                }
                Action::SendAck { epoch, delay, .. } => {
                    self.schedule(delay, EventKind::AckDue { node, epoch });
                }
                Action::BecomeRelay { .. } => {
                    self.trace.push(TraceRecord {
                        time: self.now,
                        node,
                        kind: TraceKind::Relay,
                        msg_id: None,
                        field: None,
                        bytes: 0,
                    });
                }
                Action::Deliver { msg_id } => {
                    if let Some(rec) = self.messages.get_mut(&msg_id) {
                        if rec.expected.contains(&node) && rec.delivered.insert(node) {
                            self.flow_stats[rec.flow].delivered += 1;
                        }
                    }
                    self.trace.push(TraceRecord {
                        time: self.now,
                        node,
                        kind: TraceKind::Deliver,
                        msg_id: Some(msg_id),
                        field: None,
                        bytes: 0,
                    });
                }
            }
        }
    }

    fn finish(mut self) -> RunOutput {
        let gcn = matches!(self.nodes, Nodes::Gcn(_));
        if gcn {
            let relays = self.relay_count();
            self.relays_per_epoch.push(relays);
        }
        let (delivered, expected) = self
            .flow_stats
            .iter()
            .filter(|f| f.counted)
            .fold((0u64, 0u64), |(d, e), f| (d + f.delivered, e + f.expected));
        let members = self.members.len() as u32;
        let discovered_fraction = gcn.then(|| {
            let hit = self.members.iter().filter(|m| self.discovered.contains(m)).count();
            hit as f64 / f64::from(members)
        });
        let report = MetricsReport {
            seed: self.seed,
            protocol: self.scenario.protocol,
            source: self.source,
            members,
            flows: self.flow_stats,
            delivery_rate: (expected > 0).then(|| delivered as f64 / expected as f64),
            bytes: self.bytes,
            transmissions: self.tx,
            connectivity_series: self.connectivity,
            relays_active: self.relays_per_epoch,
            discovered_fraction,
            smf_hops: (!gcn).then(|| {
                if self.smf_hops > 0 {
                    self.smf_hops
                } else {
                    self.smf_scopes.iter().copied().max().unwrap_or(0)
                }
            }),
            events: self.events,
        };
        let discovered = if gcn {
            self.members.iter().copied().filter(|m| self.discovered.contains(m)).collect()
        } else {
            BTreeSet::new()
        };
        let (trace, trace_hash, trace_len) = self.trace.finish();
        RunOutput {
            report,
            trace,
            trace_hash,
            trace_len,
            discovered,
        }
    }
}
