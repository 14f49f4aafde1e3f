//! Experiment description and validation.
//!
//! Scenario files are JSON objects whose keys mirror [`Scenario`] one to
//! one. Unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSpec;
use crate::error::{Error, Result, Violation};
use crate::mobility::MobilitySpec;
use crate::model::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    #[default]
    Gcn,
    Smf,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Gcn => "gcn",
            ProtocolKind::Smf => "smf",
        }
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gcn" => Ok(ProtocolKind::Gcn),
            "smf" => Ok(ProtocolKind::Smf),
            other => Err(Error::Config(format!("unknown protocol {other:?}"))),
        }
    }
}

/// How the baseline picks a message's flood scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SmfScope {
    /// One scope for every message: the largest hop distance between any
    /// two members, so every member's flood reaches every other member.
    #[default]
    GroupDiameter,
    /// Each message gets its originator's largest hop distance to a member.
    Originator,
}

/// Protocol delays, all in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingParams {
    pub ack_delay_max: f64,
    pub neighbor_count_window: f64,
    pub forward_jitter_max: f64,
    pub rediscovery_period: Option<f64>,
    /// When set, the source sends a header-only one-to-all packet on this
    /// period so distance tables keep tracking it.
    pub distance_refresh_period: Option<f64>,
    /// Wire size of a refresh packet.
    pub refresh_bytes: u32,
    /// Link rate used to charge each transmission `bytes * 8 / rate`
    /// seconds of airtime before it is heard. Zero makes every
    /// transmission instantaneous.
    pub bitrate_bps: f64,
}

impl Default for TimingParams {
    fn default() -> Self {
        TimingParams {
            ack_delay_max: 0.1,
            neighbor_count_window: 0.05,
            forward_jitter_max: 0.001,
            rediscovery_period: None,
            distance_refresh_period: None,
            refresh_bytes: 20,
            bitrate_bps: 250_000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficPattern {
    OneToAll,
    Targeted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Senders {
    Source,
    AllMembers,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Destinations {
    All,
    Source,
    Explicit(Vec<NodeId>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flow {
    pub pattern: TrafficPattern,
    pub senders: Senders,
    pub dests: Destinations,
    /// Packets per second per sender.
    pub rate: f64,
    pub payload_bytes: u32,
    pub start: f64,
    pub stop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TrafficSpec {
    #[serde(default)]
    pub flows: Vec<Flow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Radius of the disk group members live in, meters.
    pub region_radius: f64,
    /// When present, users are spread over this larger disk but only those
    /// inside `region_radius` may be group members.
    #[serde(default)]
    pub outer_radius: Option<f64>,
    pub num_users: u32,
    pub group_prob: f64,
    pub source_ttl: u8,
    pub desired_relays: u32,
    /// MRD offset for targeted traffic: -1 low, 0 medium, +1 high.
    #[serde(default)]
    pub mrd_offset: i32,
    pub channel: ChannelSpec,
    #[serde(default)]
    pub mobility: MobilitySpec,
    #[serde(default)]
    pub traffic: TrafficSpec,
    pub duration: f64,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub protocol: ProtocolKind,
    #[serde(default)]
    pub smf_scope: SmfScope,
    #[serde(default)]
    pub timing: TimingParams,
}

impl Scenario {
    pub fn tx_radius(&self) -> f64 {
        self.channel.tx_radius
    }

    /// Radius of the disk users are placed in.
    pub fn placement_radius(&self) -> f64 {
        self.outer_radius.unwrap_or(self.region_radius)
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Scenario> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Reads a scenario file and loads any referenced curve file relative
    /// to it.
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut scenario = Scenario::from_json(&text, path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        scenario.channel.resolve(base)?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Returns the violations, or an error carrying them.
    pub fn validated(&self) -> Result<()> {
        let v = validate_scenario(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(v))
        }
    }

    /// Sets a scalar field by its JSON name, e.g. `"source_ttl"` or
    /// `"channel.base_loss"`.
    pub fn set_param(&mut self, name: &str, value: &str) -> Result<()> {
        let mut json = serde_json::to_value(&*self).expect("scenario serializes");
        let mut slot = &mut json;
        for part in name.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(part))
                .ok_or_else(|| Error::Config(format!("unknown parameter {name:?}")))?;
        }
        let parsed: serde_json::Value = serde_json::from_str(value)
            .unwrap_or_else(|_| serde_json::Value::String(value.to_string()));
        *slot = parsed;
        *self = serde_json::from_value(json)
            .map_err(|e| Error::Config(format!("cannot set {name} = {value}: {e}")))?;
        Ok(())
    }
}

/// Checks every scenario invariant and names the offending field of each
/// failure. Never aborts; an empty list means the scenario is valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(s.region_radius.is_finite() && s.region_radius > 0.0) {
        out.push(Violation::new("region_radius", "must be positive"));
    }
    if let Some(outer) = s.outer_radius {
        if !(outer.is_finite() && outer >= s.region_radius) {
            out.push(Violation::new("outer_radius", "must be at least region_radius"));
        }
    }
    if s.num_users < 1 {
        out.push(Violation::new("num_users", "need at least one user"));
    }
    if !(0.0..=1.0).contains(&s.group_prob) {
        out.push(Violation::new("group_prob", format!("{} outside [0, 1]", s.group_prob)));
    } else if s.group_prob == 0.0 {
        out.push(Violation::new("group_prob", "zero probability can never yield a group member"));
    }
    if s.source_ttl < 1 {
        out.push(Violation::new("source_ttl", "must be at least 1"));
    }
    if s.desired_relays < 1 {
        out.push(Violation::new("desired_relays", "must be at least 1"));
    }
    if !(-1..=1).contains(&s.mrd_offset) {
        out.push(Violation::new("mrd_offset", "must be -1, 0 or +1"));
    }
    if !(s.duration.is_finite() && s.duration > 0.0) {
        out.push(Violation::new("duration", "must be positive"));
    }
    if s.seeds.is_empty() {
        out.push(Violation::new("seeds", "need at least one seed"));
    }
    s.channel.violations(&mut out);
    s.mobility.violations(&mut out);

    let t = &s.timing;
    for (name, v) in [
        ("timing.ack_delay_max", Some(t.ack_delay_max)),
        ("timing.neighbor_count_window", Some(t.neighbor_count_window)),
        ("timing.forward_jitter_max", Some(t.forward_jitter_max)),
        ("timing.bitrate_bps", Some(t.bitrate_bps)),
        ("timing.rediscovery_period", t.rediscovery_period),
        ("timing.distance_refresh_period", t.distance_refresh_period),
    ] {
        if let Some(v) = v {
            if !(v.is_finite() && v >= 0.0) {
                out.push(Violation::new(name, "must be non-negative"));
            }
        }
    }
    for name_period in [("timing.rediscovery_period", t.rediscovery_period), ("timing.distance_refresh_period", t.distance_refresh_period)] {
        if name_period.1 == Some(0.0) {
            out.push(Violation::new(name_period.0, "period must be positive"));
        }
    }

    for (i, f) in s.traffic.flows.iter().enumerate() {
        if !(f.rate.is_finite() && f.rate > 0.0) {
            out.push(Violation::new(format!("traffic.flows[{i}].rate"), "must be positive"));
        }
        if !(f.start >= 0.0 && f.start < f.stop && f.stop <= s.duration) {
            out.push(Violation::new(
                format!("traffic.flows[{i}].stop"),
                "need 0 <= start < stop <= duration",
            ));
        }
        if let Destinations::Explicit(ids) = &f.dests {
            if let Some(bad) = ids.iter().find(|id| id.0 >= s.num_users) {
                out.push(Violation::new(
                    format!("traffic.flows[{i}].dests"),
                    format!("{bad} is not a user"),
                ));
            }
        }
        if f.pattern == TrafficPattern::OneToAll && f.dests != Destinations::All {
            out.push(Violation::new(
                format!("traffic.flows[{i}].dests"),
                "one_to_all flows must target all",
            ));
        }
        if f.pattern == TrafficPattern::Targeted && f.dests == Destinations::All {
            out.push(Violation::new(
                format!("traffic.flows[{i}].dests"),
                "targeted flows need explicit destinations or the source",
            ));
        }
    }
    out
}
