//! Ready-made scenarios for the published experiments, each with the
//! values it is expected to reproduce.
//!
//! Builders take the knobs an experiment varies; [`all`] lists the named
//! presets at their reference setting. Where an experiment leaves the
//! source TTL open, the builder uses the smallest TTL whose loss-free
//! discovery reaches at least 99% of members in that layout.

use serde::{Deserialize, Serialize};

use crate::analytics::Summary;
use crate::channel::{ChannelSpec, PerCurve};
use crate::mobility::MobilitySpec;
use crate::scenario::{
    Destinations, Flow, ProtocolKind, Scenario, Senders, SmfScope, TimingParams, TrafficPattern,
    TrafficSpec,
};

pub const SEEDS: u64 = 50;
const FLOW_START: f64 = 1.0;

fn seeds() -> Vec<u64> {
    (0..SEEDS).collect()
}

fn base(users: u32, group_prob: f64, source_ttl: u8, channel: ChannelSpec) -> Scenario {
    Scenario {
        region_radius: 100.0,
        outer_radius: None,
        num_users: users,
        group_prob,
        source_ttl,
        desired_relays: 1,
        mrd_offset: 0,
        channel,
        mobility: MobilitySpec::stationary(),
        traffic: TrafficSpec::default(),
        duration: 5.0,
        seeds: seeds(),
        protocol: ProtocolKind::Gcn,
        smf_scope: SmfScope::GroupDiameter,
        timing: TimingParams::default(),
    }
}

fn flow(pattern: TrafficPattern, senders: Senders, dests: Destinations, count: f64) -> Flow {
    Flow {
        pattern,
        senders,
        dests,
        rate: 1.0,
        payload_bytes: 1400,
        start: FLOW_START,
        stop: FLOW_START + count,
    }
}

fn mobility(mobile: bool, pause_max: f64) -> MobilitySpec {
    if mobile {
        MobilitySpec::random_waypoint((0.0, 5.0), (0.0, pause_max))
    } else {
        MobilitySpec::stationary()
    }
}

/// Single loss-free discovery over 100 users; no data.
pub fn reach(group_prob: f64, source_ttl: u8) -> Scenario {
    base(100, group_prob, source_ttl, ChannelSpec::lossless(40.0))
}

/// 400 users over a 200 m disk with members confined to the inner 100 m;
/// the source sends ten 1400-byte packets to the group. The baseline gives
/// each packet the smallest scope that reaches every member from the
/// source.
pub fn bytes(protocol: ProtocolKind) -> Scenario {
    let mut s = base(400, 0.10, 4, ChannelSpec::lossless(40.0));
    s.outer_radius = Some(200.0);
    s.protocol = protocol;
    s.smf_scope = SmfScope::Originator;
    s.traffic.flows = vec![flow(TrafficPattern::OneToAll, Senders::Source, Destinations::All, 10.0)];
    s.duration = FLOW_START + 11.0;
    s
}

/// 1000 s of random-waypoint motion with or without a fresh discovery
/// every 100 s.
pub fn connectivity(rediscover: bool) -> Scenario {
    let mut s = base(100, 0.25, 2, ChannelSpec::lossless(40.0));
    s.desired_relays = 2;
    s.mobility = mobility(true, 2.0);
    s.duration = 1000.0;
    s.timing.rediscovery_period = rediscover.then_some(100.0);
    s
}

/// Every member sends to the whole group once a second for 100 s over a
/// flat-loss channel.
pub fn resiliency(mobile: bool, per: f64, desired_relays: u32, protocol: ProtocolKind) -> Scenario {
    let mut s = base(100, 0.25, 2, ChannelSpec::flat(40.0, per));
    s.desired_relays = desired_relays;
    s.protocol = protocol;
    s.mobility = mobility(mobile, 2.0);
    s.traffic.flows = vec![flow(TrafficPattern::OneToAll, Senders::AllMembers, Destinations::All, 100.0)];
    s.duration = FLOW_START + 101.0;
    s
}

/// Every member sends one-to-one to the source for 100 s while the source
/// refreshes distances every 2 s. `mrd_offset` is -1, 0 or +1.
pub fn targeted(mobile: bool, per: f64, mrd_offset: i32) -> Scenario {
    let mut s = base(100, 0.25, 2, ChannelSpec::flat(40.0, per));
    s.desired_relays = 5;
    s.mrd_offset = mrd_offset;
    s.mobility = mobility(mobile, 2.0);
    s.traffic.flows = vec![flow(TrafficPattern::Targeted, Senders::AllMembers, Destinations::Source, 100.0)];
    s.timing.distance_refresh_period = Some(2.0);
    s.duration = FLOW_START + 101.0;
    s
}

/// One cell of the scaling matrix: the source sends to the group and every
/// member answers the source, under the distance curve scaled by `loss`.
pub fn matrix_cell(users: u32, group_prob: f64, mobile: bool, loss: f64, desired_relays: u32) -> Scenario {
    let channel = ChannelSpec {
        tx_radius: 60.0,
        curve: PerCurve::synthetic(),
        base_loss: loss,
    };
    let source_ttl = if group_prob < 0.2 { 3 } else { 2 };
    let mut s = base(users, group_prob, source_ttl, channel);
    s.desired_relays = desired_relays;
    s.mrd_offset = 1;
    s.mobility = mobility(mobile, 0.0);
    s.traffic.flows = vec![
        flow(TrafficPattern::OneToAll, Senders::Source, Destinations::All, 100.0),
        flow(TrafficPattern::Targeted, Senders::AllMembers, Destinations::Source, 100.0),
    ];
    s.duration = FLOW_START + 101.0;
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `|mean - value| <= tol`.
    Within { value: f64, tol: f64 },
    /// `|mean - value| <= frac * value`.
    Relative { value: f64, frac: f64 },
    AtLeast { value: f64 },
    AtMost { value: f64 },
}

impl Check {
    pub fn passes(&self, mean: f64) -> bool {
        match *self {
            Check::Within { value, tol } => (mean - value).abs() <= tol,
            Check::Relative { value, frac } => (mean - value).abs() <= frac * value.abs(),
            Check::AtLeast { value } => mean >= value,
            Check::AtMost { value } => mean <= value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub metric: String,
    pub check: Check,
    /// Where the number comes from.
    pub note: String,
}

impl Expectation {
    fn new(metric: &str, check: Check, note: &str) -> Self {
        Expectation {
            metric: metric.into(),
            check,
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub scenario: Scenario,
    pub expected: Vec<Expectation>,
}

/// Outcome of one expectation against a summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub metric: String,
    pub mean: Option<f64>,
    pub check: Check,
    pub passed: bool,
}

impl Preset {
    pub fn evaluate(&self, summary: &Summary) -> Vec<CheckResult> {
        self.expected
            .iter()
            .map(|e| {
                let mean = summary.get(&e.metric).map(|s| s.mean);
                CheckResult {
                    metric: e.metric.clone(),
                    mean,
                    check: e.check,
                    passed: mean.is_some_and(|m| e.check.passes(m)),
                }
            })
            .collect()
    }
}

fn preset(name: &str, description: &str, scenario: Scenario, expected: Vec<Expectation>) -> Preset {
    Preset {
        name: name.into(),
        description: description.into(),
        scenario,
        expected,
    }
}

pub fn all() -> Vec<Preset> {
    vec![
        preset(
            "fig3_reach",
            "discovery reach, P_g 0.05, source TTL 3",
            reach(0.05, 3),
            vec![Expectation::new(
                "discovered_fraction",
                Check::Within { value: 0.986, tol: 0.03 },
                "published simulation mean for TTL 3",
            )],
        ),
        preset(
            "fig4_bytes",
            "over-the-air bytes for ten 1400 B packets, GCN",
            bytes(ProtocolKind::Gcn),
            vec![
                Expectation::new(
                    "bytes_total",
                    Check::Relative { value: 220_000.0, frac: 0.4 },
                    "published GCN total",
                ),
                Expectation::new(
                    "bytes_control",
                    Check::Relative { value: 6_500.0, frac: 0.5 },
                    "published GCN control bytes",
                ),
            ],
        ),
        preset(
            "fig6_connectivity",
            "group connectivity under motion with rediscovery every 100 s",
            connectivity(true),
            vec![Expectation::new(
                "connectivity_mean",
                Check::AtLeast { value: 0.97 },
                "published near-full connectivity with periodic discovery",
            )],
        ),
        preset(
            "fig78_resiliency",
            "one-to-all from every member, static, R 1, no loss",
            resiliency(false, 0.0, 1, ProtocolKind::Gcn),
            vec![Expectation::new(
                "delivery_rate",
                Check::Within { value: 1.0, tol: 0.07 },
                "published loss-free delivery at R 1",
            )],
        ),
        preset(
            "fig1011_targeted",
            "members to source, static, medium MRD, 25% loss",
            targeted(false, 0.25, 0),
            vec![Expectation::new(
                "delivery_rate",
                Check::Within { value: 0.99, tol: 0.03 },
                "published medium-resiliency delivery at 25% loss",
            )],
        ),
        preset(
            "sec3_matrix",
            "scaling matrix cell: 100 users, P_g 0.25, static, curve 0%, R 9",
            matrix_cell(100, 0.25, false, 0.0, 9),
            vec![Expectation::new(
                "delivery_rate",
                Check::AtLeast { value: 0.95 },
                "high resiliency stays above 95% on a static network",
            )],
        ),
    ]
}

pub fn find(name: &str) -> Option<Preset> {
    all().into_iter().find(|p| p.name == name)
}
