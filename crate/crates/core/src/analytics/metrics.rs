//! Per-run metrics, cross-seed aggregation, and CSV/JSON export.
//!
//! Per-seed CSV columns: `seed,metric,value`. Summary JSON maps each metric
//! name to `{n, mean, std, ci_low, ci_high}`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::NodeId;
use crate::scenario::{ProtocolKind, TrafficPattern};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByteCounts {
    pub control: u64,
    pub data: u64,
    pub total: u64,
}

impl ByteCounts {
    pub fn add(&mut self, bytes: u32, control: bool) {
        if control {
            self.control += u64::from(bytes);
        } else {
            self.data += u64::from(bytes);
        }
        self.total = self.control + self.data;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxCounts {
    pub discovery: u64,
    pub ack: u64,
    pub data: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowStats {
    pub pattern: TrafficPattern,
    /// Whether this flow counts toward the aggregate delivery rate.
    pub counted: bool,
    pub sent: u64,
    pub expected: u64,
    pub delivered: u64,
    /// Targeted sends abandoned because the sender had no distance.
    pub no_route: u64,
}

impl FlowStats {
    pub fn new(pattern: TrafficPattern, counted: bool) -> Self {
        FlowStats {
            pattern,
            counted,
            sent: 0,
            expected: 0,
            delivered: 0,
            no_route: 0,
        }
    }

    pub fn delivery_rate(&self) -> Option<f64> {
        (self.expected > 0).then(|| self.delivered as f64 / self.expected as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub protocol: ProtocolKind,
    pub source: NodeId,
    pub members: u32,
    pub flows: Vec<FlowStats>,
    /// Delivered over expected, pooled across counted flows.
    pub delivery_rate: Option<f64>,
    pub bytes: ByteCounts,
    pub transmissions: TxCounts,
    /// `(time_s, fraction of members reachable from the source)`.
    pub connectivity_series: Vec<(f64, f64)>,
    /// Non-member relays active at the end of each discovery epoch.
    pub relays_active: Vec<u32>,
    /// Members that heard the first discovery epoch.
    pub discovered_fraction: Option<f64>,
    /// Flood scope used by the baseline, in hops.
    pub smf_hops: Option<u32>,
    pub events: u64,
}

impl MetricsReport {
    pub fn connectivity_mean(&self) -> Option<f64> {
        mean(self.connectivity_series.iter().map(|s| s.1))
    }

    /// Named scalar metrics, in a fixed order.
    pub fn scalars(&self) -> Vec<(&'static str, f64)> {
        let mut out = Vec::new();
        if let Some(d) = self.delivery_rate {
            out.push(("delivery_rate", d));
        }
        out.push(("bytes_control", self.bytes.control as f64));
        out.push(("bytes_data", self.bytes.data as f64));
        out.push(("bytes_total", self.bytes.total as f64));
        out.push(("tx_discovery", self.transmissions.discovery as f64));
        out.push(("tx_ack", self.transmissions.ack as f64));
        out.push(("tx_data", self.transmissions.data as f64));
        if let Some(d) = self.discovered_fraction {
            out.push(("discovered_fraction", d));
        }
        if let Some(c) = self.connectivity_mean() {
            out.push(("connectivity_mean", c));
        }
        if let Some(r) = mean(self.relays_active.iter().map(|&r| f64::from(r))) {
            out.push(("relays_active_mean", r));
        }
        if let Some(h) = self.smf_hops {
            out.push(("smf_hops", f64::from(h)));
        }
        out.push(("members", f64::from(self.members)));
        out
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| v)
    }
}

fn mean(it: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Mean, sample standard deviation and a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SummaryStat {
    pub fn from_values(values: &[f64]) -> Option<SummaryStat> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let half = 1.96 * std / (n as f64).sqrt();
        Some(SummaryStat {
            n,
            mean,
            std,
            ci_low: mean - half,
            ci_high: mean + half,
        })
    }
}

pub type Summary = BTreeMap<String, SummaryStat>;

/// Summarises every scalar metric across reports.
pub fn aggregate(reports: &[MetricsReport]) -> Summary {
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in reports {
        for (name, v) in r.scalars() {
            columns.entry(name.to_string()).or_default().push(v);
        }
    }
    columns
        .into_iter()
        .filter_map(|(k, v)| SummaryStat::from_values(&v).map(|s| (k, s)))
        .collect()
}

pub fn reports_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from("seed,metric,value\n");
    for r in reports {
        for (name, v) in r.scalars() {
            let _ = writeln!(out, "{},{},{}", r.seed, name, v);
        }
    }
    out
}

pub fn connectivity_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from("seed,time,connected_fraction\n");
    for r in reports {
        for (t, f) in &r.connectivity_series {
            let _ = writeln!(out, "{},{},{}", r.seed, t, f);
        }
    }
    out
}

pub fn summary_json(summary: &Summary) -> String {
    serde_json::to_string_pretty(summary).expect("summary serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(seed: u64, delivery: f64) -> MetricsReport {
        MetricsReport {
            seed,
            protocol: ProtocolKind::Gcn,
            source: NodeId(0),
            members: 4,
            flows: Vec::new(),
            delivery_rate: Some(delivery),
            bytes: ByteCounts { control: 10, data: 90, total: 100 },
            transmissions: TxCounts::default(),
            connectivity_series: vec![(1.0, 1.0), (2.0, 0.5)],
            relays_active: vec![3],
            discovered_fraction: Some(1.0),
            smf_hops: None,
            events: 0,
        }
    }

    #[test]
    fn single_report_has_degenerate_interval() {
        let s = aggregate(&[report(1, 0.8)]);
        let d = s["delivery_rate"];
        assert_eq!(d.mean, 0.8);
        assert_eq!(d.std, 0.0);
        assert_eq!((d.ci_low, d.ci_high), (0.8, 0.8));
    }

    #[test]
    fn identical_reports_zero_width() {
        let reports: Vec<_> = (0..50).map(|s| report(s, 0.9)).collect();
        let d = aggregate(&reports)["delivery_rate"];
        assert_eq!(d.n, 50);
        assert!((d.ci_high - d.ci_low).abs() < 1e-12);
    }

    #[test]
    fn textbook_mean_and_deviation() {
        let values: Vec<f64> = (0..50).map(|i| if i < 25 { 0.0 } else { 1.0 }).collect();
        let s = SummaryStat::from_values(&values).unwrap();
        assert_eq!(s.mean, 0.5);
        // sum of squares 50 * 0.25 = 12.5 over n - 1 = 49
        let sd = (12.5f64 / 49.0).sqrt();
        assert!((s.std - sd).abs() < 1e-12);
        let half = 1.96 * sd / 50f64.sqrt();
        assert!((s.ci_high - 0.5 - half).abs() < 1e-12);
    }

    #[test]
    fn byte_totals_add_up() {
        let mut b = ByteCounts::default();
        b.add(14, true);
        b.add(1407, false);
        b.add(20, true);
        assert_eq!(b, ByteCounts { control: 34, data: 1407, total: 1441 });
    }

    #[test]
    fn csv_header_is_stable() {
        let csv = reports_csv(&[report(7, 0.5)]);
        assert!(csv.starts_with("seed,metric,value\n7,delivery_rate,0.5\n"));
        assert!(csv.contains("7,connectivity_mean,0.75\n"));
    }
}
