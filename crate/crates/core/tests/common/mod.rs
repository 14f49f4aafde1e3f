//! Oracles and property checks shared by the integration test targets.
//!
//! Everything here is written against the public API only and recomputes
//! expected behaviour from first principles (brute-force graphs, fixpoint
//! label propagation), so it does not share code paths with the engine.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gcnsim::batch::{self, BatchOptions};
use gcnsim::protocol::{
    acceptance_probability, Action, AckFields, Body, DiscoveryFields, GcnNode, GcnParams, MsgId,
    Packet, SmfNode,
};
use gcnsim::rng::{SimRng, Stream};
use gcnsim::trace::TraceKind;
use gcnsim::{presets, GroupId, MetricsReport, NodeId, Position, ProtocolKind, RunOptions, Scenario, SimTime, World};

pub const G: GroupId = GroupId(0);

pub fn options() -> BatchOptions {
    BatchOptions {
        run: RunOptions::default(),
        workers: batch::workers_from_env().expect("worker count"),
    }
}

pub fn run_reports(scenario: &Scenario, seeds: &[u64]) -> Vec<MetricsReport> {
    batch::reports(&batch::run_seeds(scenario, seeds, options()).expect("batch run"))
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    assert!(!v.is_empty());
    v.iter().sum::<f64>() / v.len() as f64
}

/// `scenario` cut to `duration` seconds, flows included.
pub fn shortened(scenario: &Scenario, duration: f64) -> Scenario {
    let mut s = scenario.clone();
    s.duration = s.duration.min(duration);
    for f in &mut s.traffic.flows {
        f.stop = f.stop.min(s.duration);
    }
    s
}

pub fn seeds(n: u64) -> Vec<u64> {
    (0..n).collect()
}

/// Adjacency by brute-force pairwise distance.
pub fn adjacency(positions: &[Position], radius: f64) -> Vec<Vec<usize>> {
    let n = positions.len();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && positions[i].distance(&positions[j]) <= radius)
                .collect()
        })
        .collect()
}

pub fn bfs(adj: &[Vec<usize>], src: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; adj.len()];
    dist[src] = Some(0);
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        let d = dist[u].unwrap();
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(d + 1);
                q.push_back(v);
            }
        }
    }
    dist
}

/// All-pairs hop distances by Floyd–Warshall; `u32::MAX` when unreachable.
pub fn floyd_warshall(adj: &[Vec<usize>]) -> Vec<Vec<u32>> {
    let n = adj.len();
    let inf = u32::MAX;
    let mut d = vec![vec![inf; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for &j in &adj[i] {
            d[i][j] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k] == inf {
                continue;
            }
            for j in 0..n {
                if d[k][j] != inf && d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Outcome of one loss-free discovery, by relaxation to a fixpoint.
pub struct Reach {
    /// TTL each transmitting node puts on the air.
    pub label: Vec<Option<u8>>,
    /// Members that hear at least one transmission, source included.
    pub discovered: BTreeSet<NodeId>,
}

/// Repeatedly offers every transmitter's label to its neighbours until no
/// label improves. Members always offer `T - 1`; other users offer one less
/// than the best label they heard.
pub fn reach_fixpoint(world: &World, tx_radius: f64, source_ttl: u8) -> Reach {
    let adj = adjacency(&world.positions, tx_radius);
    let n = adj.len();
    let top = source_ttl - 1;
    let mut label: Vec<Option<u8>> = vec![None; n];
    label[world.source.index()] = Some(top);
    loop {
        let mut changed = false;
        for u in 0..n {
            let Some(lu) = label[u] else { continue };
            for &v in &adj[u] {
                let offer = if world.member[v] { Some(top) } else { lu.checked_sub(1) };
                if let Some(o) = offer {
                    if label[v].map_or(true, |cur| o > cur) {
                        label[v] = Some(o);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut discovered = BTreeSet::from([world.source]);
    for v in 0..n {
        if world.member[v] && adj[v].iter().any(|&u| label[u].is_some()) {
            discovered.insert(NodeId(v as u32));
        }
    }
    Reach { label, discovered }
}

/// Transmitting nodes stay within `T - 1` hops of some member, and the
/// engine's transmitters and discovered members match the fixpoint oracle
/// exactly on every seed.
pub fn check_ttl_confinement_and_agreement(seed_count: u64) -> Result<String, String> {
    let mut runs = 0;
    for pg in [0.05, 0.10, 0.25] {
        for ttl in 1..=4u8 {
            let scenario = presets::reach(pg, ttl);
            for seed in 0..seed_count {
                let out = gcnsim::run_with(&scenario, seed, RunOptions { keep_trace: true })
                    .map_err(|e| e.to_string())?;
                let world = World::build(&scenario, seed).map_err(|e| e.to_string())?;
                let oracle = reach_fixpoint(&world, scenario.tx_radius(), ttl);
                let transmitters: BTreeSet<usize> = out
                    .trace
                    .iter()
                    .filter(|r| r.kind == TraceKind::TxDiscovery)
                    .map(|r| r.node.index())
                    .collect();
                let expected: BTreeSet<usize> =
                    (0..world.positions.len()).filter(|&v| oracle.label[v].is_some()).collect();
                if transmitters != expected {
                    return Err(format!(
                        "P_g {pg} T {ttl} seed {seed}: engine transmitters {transmitters:?} vs oracle {expected:?}"
                    ));
                }
                let adj = adjacency(&world.positions, scenario.tx_radius());
                let members: Vec<usize> = (0..adj.len()).filter(|&v| world.member[v]).collect();
                let nearest: Vec<u32> = {
                    let per_member: Vec<Vec<Option<u32>>> = members.iter().map(|&m| bfs(&adj, m)).collect();
                    (0..adj.len())
                        .map(|v| per_member.iter().filter_map(|d| d[v]).min().unwrap_or(u32::MAX))
                        .collect()
                };
                if let Some(&v) = transmitters.iter().find(|&&v| nearest[v] > u32::from(ttl) - 1) {
                    return Err(format!(
                        "P_g {pg} T {ttl} seed {seed}: node {v} transmitted {} hops from the nearest member",
                        nearest[v]
                    ));
                }
                if out.discovered != oracle.discovered {
                    return Err(format!(
                        "P_g {pg} T {ttl} seed {seed}: engine discovered {:?} vs oracle {:?}",
                        out.discovered, oracle.discovered
                    ));
                }
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} runs, 0 mismatches"))
}

/// One random targeted-flooding instance.
pub struct CorridorCase {
    pub positions: Vec<Position>,
    pub radius: f64,
    pub member: Vec<bool>,
    pub relay: Vec<bool>,
    pub sender: usize,
    pub dest: usize,
    pub offset: i32,
    /// Hop distance to `dest` as each node believes it; `None` for unknown.
    pub delta: Vec<Option<u32>>,
}

impl CorridorCase {
    pub fn random(rng: &mut ChaCha8Rng) -> Option<CorridorCase> {
        let n = rng.gen_range(2..=30);
        let side = rng.gen_range(60.0..160.0);
        let positions: Vec<Position> = (0..n)
            .map(|_| Position::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
            .collect();
        let radius = 40.0;
        let member: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        let relay: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        let sender = rng.gen_range(0..n);
        let dest = rng.gen_range(0..n);
        if sender == dest {
            return None;
        }
        let adj = adjacency(&positions, radius);
        let mut delta = bfs(&adj, dest);
        delta[dest] = None;
        // Stale or noisy tables: some nodes believe a distance one off.
        for d in delta.iter_mut().flatten() {
            if rng.gen_bool(0.15) {
                *d += 1;
            }
        }
        delta[sender]?;
        let offset = rng.gen_range(-1..=1);
        Some(CorridorCase {
            positions,
            radius,
            member,
            relay,
            sender,
            dest,
            offset,
            delta,
        })
    }

    fn forwards(&self, v: usize) -> bool {
        self.member[v] || self.relay[v]
    }

    /// Every node that retransmits, plus whether `dest` hears a copy. The
    /// sender transmits with `Δ + offset`; any other eligible node (not the
    /// destination) retransmits once some retransmitter in range offered a
    /// value at least its own `Δ`, and then offers `Δ - 1`.
    pub fn oracle(&self) -> (BTreeSet<usize>, bool) {
        let adj = adjacency(&self.positions, self.radius);
        let start = (i64::from(self.delta[self.sender].unwrap()) + i64::from(self.offset)).max(0) as u32;
        let mut offer: BTreeMap<usize, u32> = BTreeMap::from([(self.sender, start)]);
        loop {
            let mut grew = false;
            for v in 0..adj.len() {
                if offer.contains_key(&v) || v == self.dest || !self.forwards(v) {
                    continue;
                }
                let Some(dv) = self.delta[v] else { continue };
                if adj[v].iter().any(|u| offer.get(u).is_some_and(|&m| m >= dv)) {
                    offer.insert(v, dv - 1);
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        let delivered = adj[self.dest].iter().any(|u| offer.contains_key(u));
        (offer.into_keys().collect(), delivered)
    }

    /// Runs the real node handlers over a loss-free queue of transmissions.
    pub fn simulate(&self, seed: u64) -> (BTreeSet<usize>, bool) {
        let adj = adjacency(&self.positions, self.radius);
        let mut nodes: Vec<GcnNode> = (0..adj.len())
            .map(|i| {
                let mut n = GcnNode::new(NodeId(i as u32), GcnParams::default());
                let gs = n.group_mut(G);
                gs.member = self.member[i];
                gs.round.is_relay = self.relay[i];
                if let Some(d) = self.delta[i] {
                    gs.distances.set(NodeId(self.dest as u32), d);
                }
                n
            })
            .collect();
        let dest = NodeId(self.dest as u32);
        let (_, first) = nodes[self.sender]
            .send_targeted(G, &[dest], self.offset, 100)
            .expect("sender has a distance");
        let mut queue: VecDeque<(usize, Packet)> = VecDeque::new();
        let mut transmitters = BTreeSet::new();
        let mut delivered = false;
        let push = |from: usize, actions: Vec<Action>, q: &mut VecDeque<(usize, Packet)>, del: &mut bool| {
            for a in actions {
                match a {
                    Action::Transmit { packet, .. } => q.push_back((from, packet)),
                    Action::Deliver { .. } if from == self.dest => *del = true,
                    _ => {}
                }
            }
        };
        push(self.sender, first, &mut queue, &mut delivered);
        let mut rng = SimRng::new(seed, Stream::Channel);
        while let Some((from, packet)) = queue.pop_front() {
            transmitters.insert(from);
            for &v in &adj[from] {
                let mut ctx = gcnsim::protocol::HandlerCtx::new(SimTime::ZERO, &mut rng);
                let actions = nodes[v].on_packet(&packet, &mut ctx);
                push(v, actions, &mut queue, &mut delivered);
            }
        }
        (transmitters, delivered)
    }
}

pub fn check_corridor_equivalence(instances: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    let mut delivered = 0;
    while done < instances {
        let Some(case) = CorridorCase::random(&mut rng) else { continue };
        let expected = case.oracle();
        let got = case.simulate(done as u64);
        if got != expected {
            return Err(format!(
                "instance {done}: {} nodes, sender {} dest {} offset {}: handlers {:?} vs oracle {:?}",
                case.positions.len(),
                case.sender,
                case.dest,
                case.offset,
                got,
                expected
            ));
        }
        delivered += usize::from(got.1);
        done += 1;
    }
    Ok(format!("{done} instances ({delivered} delivered), 0 mismatches"))
}

fn discovery_from(sender: u32, ttl: u8) -> Packet {
    Packet {
        group: G,
        msg_id: MsgId { origin: NodeId(sender), seq: 0 },
        sender: NodeId(sender),
        hop_counter: 0,
        epoch: 1,
        body: Body::Discovery(DiscoveryFields { ttl }),
    }
}

/// `N` eligible non-members hear one ACK naming node 1 as obligate. The
/// number that become relays has mean `R` and variance
/// `(N - 1) p (1 - p)` with `p = (R - 1) / (N - 1)`.
pub fn check_acp_relay_count(trials: u64) -> Result<String, String> {
    let mut lines = Vec::new();
    for (n, r) in [(4u32, 2u32), (10, 3), (20, 5), (30, 9)] {
        let p = acceptance_probability(r, n);
        let expected_p = f64::from(r - 1) / f64::from(n - 1);
        if (p - expected_p).abs() > 1e-12 {
            return Err(format!("ACP({r}, {n}) = {p}, expected {expected_p}"));
        }
        let mut total = 0u64;
        for trial in 0..trials {
            let ack = Packet {
                group: G,
                msg_id: MsgId { origin: NodeId(0), seq: 1 },
                sender: NodeId(0),
                hop_counter: 0,
                epoch: 1,
                body: Body::Ack(AckFields { obligate: NodeId(1), acp: p }),
            };
            for id in 1..=n {
                let mut node = GcnNode::new(NodeId(id), GcnParams::default());
                let mut rng = SimRng::new(trial, Stream::Protocol(NodeId(id)));
                let mut ctx = gcnsim::protocol::HandlerCtx::new(SimTime::ZERO, &mut rng);
                node.on_packet(&discovery_from(0, 1), &mut ctx);
                let actions = node.on_packet(&ack, &mut ctx);
                if actions.iter().any(|a| matches!(a, Action::BecomeRelay { .. })) {
                    total += 1;
                }
            }
        }
        let observed = total as f64 / trials as f64;
        let sigma = (f64::from(n - 1) * p * (1.0 - p) / trials as f64).sqrt();
        if (observed - f64::from(r)).abs() > 3.0 * sigma {
            return Err(format!(
                "N {n} R {r}: mean relays {observed:.4}, expected {r} within 3 sigma = {:.4}",
                3.0 * sigma
            ));
        }
        lines.push(format!("N{n}/R{r}: {observed:.3}"));
    }
    Ok(lines.join(", "))
}

/// Data is sent at most once per node per message under both protocols.
/// Discovery copies of one message leave a node at most `T` times, each
/// with a different TTL (a relay is only rescheduled for a larger one, but
/// jitter can reorder the two on air), and members send each at most once.
pub fn check_dup_cache_bound(seed_count: u64) -> Result<String, String> {
    let scenarios = [
        presets::resiliency(false, 0.25, 3, ProtocolKind::Gcn),
        presets::resiliency(true, 0.0, 5, ProtocolKind::Smf),
        presets::targeted(true, 0.25, 1),
        presets::bytes(ProtocolKind::Gcn),
        presets::bytes(ProtocolKind::Smf),
    ];
    let mut checked = 0u64;
    for (i, scenario) in scenarios.iter().enumerate() {
        let s = shortened(scenario, 20.0);
        for seed in 0..seed_count {
            let out = gcnsim::run_with(&s, seed, RunOptions { keep_trace: true }).map_err(|e| e.to_string())?;
            let world = World::build(&s, seed).map_err(|e| e.to_string())?;
            let mut data: BTreeMap<(NodeId, MsgId), u32> = BTreeMap::new();
            let mut disc: BTreeMap<(NodeId, MsgId), Vec<u32>> = BTreeMap::new();
            for r in &out.trace {
                match r.kind {
                    TraceKind::TxData => *data.entry((r.node, r.msg_id.unwrap())).or_default() += 1,
                    TraceKind::TxDiscovery => disc.entry((r.node, r.msg_id.unwrap())).or_default().push(r.field.unwrap()),
                    _ => {}
                }
            }
            if let Some(((node, msg), c)) = data.iter().find(|(_, &c)| c > 1) {
                return Err(format!("scenario {i} seed {seed}: node {node:?} sent {msg:?} {c} times"));
            }
            for ((node, msg), ttls) in &disc {
                let too_many = ttls.len() > usize::from(s.source_ttl);
                let distinct: BTreeSet<&u32> = ttls.iter().collect();
                let not_rising = distinct.len() != ttls.len();
                let member_repeat = world.member[node.index()] && ttls.len() > 1;
                if too_many || not_rising || member_repeat {
                    return Err(format!("scenario {i} seed {seed}: node {node:?} sent discovery {msg:?} with TTLs {ttls:?}"));
                }
            }
            checked += data.len() as u64 + disc.len() as u64;
        }
    }
    Ok(format!("{checked} (node, message) pairs within bounds"))
}

/// Reruns and different worker counts give identical traces and reports.
pub fn check_determinism() -> Result<String, String> {
    let scenarios = [
        presets::resiliency(true, 0.25, 3, ProtocolKind::Gcn),
        presets::targeted(true, 0.5, 1),
        presets::resiliency(true, 0.25, 1, ProtocolKind::Smf),
    ];
    let seeds = [0u64, 7, 42];
    for s in &scenarios {
        let short = shortened(s, 15.0);
        let a = batch::run_seeds(&short, &seeds, BatchOptions { workers: Some(1), ..Default::default() })
            .map_err(|e| e.to_string())?;
        let b = batch::run_seeds(&short, &seeds, BatchOptions { workers: Some(3), ..Default::default() })
            .map_err(|e| e.to_string())?;
        for (x, y) in a.iter().zip(&b) {
            if x.trace_hash != y.trace_hash || x.trace_len != y.trace_len || x.report != y.report {
                return Err(format!("seed {} differs between runs", x.report.seed));
            }
        }
        let c = gcnsim::run(&short, 1).map_err(|e| e.to_string())?;
        if c.trace_hash == a[0].trace_hash {
            return Err("different seeds produced the same trace".into());
        }
    }
    Ok(format!("{} scenarios x {} seeds identical across reruns and worker counts", scenarios.len(), seeds.len()))
}

/// Drives an SMF flood through the node handlers on a loss-free graph and
/// returns who transmitted (with counts) and which members delivered.
pub fn smf_flood(
    positions: &[Position],
    radius: f64,
    member: &[bool],
    origin: usize,
    hops: u32,
) -> (BTreeMap<usize, u32>, BTreeSet<usize>) {
    let adj = adjacency(positions, radius);
    let mut nodes: Vec<SmfNode> = (0..adj.len()).map(|i| SmfNode::new(NodeId(i as u32), member[i], 0.001)).collect();
    let (_, first) = nodes[origin].originate(G, &[], 100, hops);
    let mut queue: VecDeque<(usize, Packet)> = VecDeque::new();
    for a in first {
        if let Action::Transmit { packet, .. } = a {
            queue.push_back((origin, packet));
        }
    }
    let mut sent: BTreeMap<usize, u32> = BTreeMap::new();
    let mut delivered = BTreeSet::from([origin]);
    let mut rng = SimRng::new(0, Stream::Channel);
    while let Some((from, packet)) = queue.pop_front() {
        *sent.entry(from).or_default() += 1;
        for &v in &adj[from] {
            let mut ctx = gcnsim::protocol::HandlerCtx::new(SimTime::ZERO, &mut rng);
            for a in nodes[v].smf_forward(&packet, &mut ctx) {
                match a {
                    Action::Transmit { packet, .. } => queue.push_back((v, packet)),
                    Action::Deliver { .. } => {
                        delivered.insert(v);
                    }
                    _ => {}
                }
            }
        }
    }
    (sent, delivered)
}
