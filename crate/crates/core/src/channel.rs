//! Broadcast delivery model: a hard transmit radius plus a
//! distance-dependent packet error rate, optionally scaled by a flat
//! interference loss.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::model::{NodeId, Position};
use crate::rng::SimRng;

/// Packet error rate as a function of distance, before baseline scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PerCurve {
    /// The same error rate at every in-range distance.
    Flat(f64),
    /// `(distance_m, per)` points, strictly increasing in distance,
    /// linearly interpolated and held constant past either end.
    Table(Vec<(f64, f64)>),
    /// Two-column curve file; resolved into a `Table` when the scenario is
    /// loaded.
    File(PathBuf),
}

impl PerCurve {
    /// Smooth synthetic curve: error-free up to 20 m, rising along a
    /// logistic shoulder to certain loss at 60 m, tabulated every 5 m.
    pub fn synthetic() -> PerCurve {
        const NEAR: f64 = 20.0;
        const FAR: f64 = 60.0;
        const MID: f64 = 40.0;
        const SCALE: f64 = 5.0;
        let logistic = |d: f64| 1.0 / (1.0 + (-(d - MID) / SCALE).exp());
        let lo = logistic(NEAR);
        let hi = logistic(FAR);
        let mut points = vec![(0.0, 0.0)];
        let mut d = NEAR;
        while d <= FAR + 1e-9 {
            let per = ((logistic(d) - lo) / (hi - lo)).clamp(0.0, 1.0);
            points.push((d, per));
            d += 5.0;
        }
        PerCurve::Table(points)
    }

    fn value(&self, d: f64) -> f64 {
        match self {
            PerCurve::Flat(p) => *p,
            PerCurve::Table(points) => interpolate(points, d),
            PerCurve::File(path) => panic!("curve file {} was never resolved", path.display()),
        }
    }

    fn violations(&self, out: &mut Vec<Violation>) {
        match self {
            PerCurve::Flat(p) => {
                if !(0.0..=1.0).contains(p) {
                    out.push(Violation::new("channel.curve", format!("flat per {p} outside [0, 1]")));
                }
            }
            PerCurve::Table(points) => {
                if let Err(msg) = check_table(points) {
                    out.push(Violation::new("channel.curve", msg));
                }
            }
            PerCurve::File(path) => out.push(Violation::new(
                "channel.curve",
                format!("curve file {} not loaded", path.display()),
            )),
        }
    }
}

fn interpolate(points: &[(f64, f64)], d: f64) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    if d <= first.0 {
        return first.1;
    }
    for w in points.windows(2) {
        let (d0, p0) = w[0];
        let (d1, p1) = w[1];
        if d <= d1 {
            return p0 + (p1 - p0) * (d - d0) / (d1 - d0);
        }
    }
    points[points.len() - 1].1
}

fn check_table(points: &[(f64, f64)]) -> std::result::Result<(), String> {
    if points.is_empty() {
        return Err("curve table is empty".into());
    }
    for (i, &(d, p)) in points.iter().enumerate() {
        if !d.is_finite() || d < 0.0 {
            return Err(format!("point {i}: distance {d} must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("point {i}: per {p} outside [0, 1]"));
        }
        if i > 0 {
            let (pd, pp) = points[i - 1];
            if d <= pd {
                return Err(format!("point {i}: distances must be strictly increasing"));
            }
            if p < pp {
                return Err(format!("point {i}: per must be non-decreasing in distance"));
            }
        }
    }
    Ok(())
}

/// Parses the two-column `distance_m per` curve format. Columns may be
/// separated by whitespace or a comma; `#` starts a comment.
pub fn parse_curve(text: &str, path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut points = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |column: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            column,
            message,
        };
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(err(1, format!("expected 2 columns, found {}", fields.len())));
        }
        let d: f64 = fields[0]
            .parse()
            .map_err(|e| err(1, format!("bad distance {:?}: {e}", fields[0])))?;
        let p: f64 = fields[1]
            .parse()
            .map_err(|e| err(2, format!("bad per {:?}: {e}", fields[1])))?;
        if let Some(&(prev, _)) = points.last() {
            if d <= prev {
                return Err(err(1, format!("distance {d} does not increase past {prev}")));
            }
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(err(2, format!("per {p} outside [0, 1]")));
        }
        points.push((d, p));
    }
    if points.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            column: 0,
            message: "curve file has no points".into(),
        });
    }
    Ok(points)
}

pub fn load_curve(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_curve(&text, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    /// Hard transmit radius in meters; nothing is heard beyond it.
    pub tx_radius: f64,
    pub curve: PerCurve,
    /// Flat interference loss applied multiplicatively to the success rate.
    #[serde(default)]
    pub base_loss: f64,
}

impl ChannelSpec {
    pub fn flat(tx_radius: f64, per: f64) -> Self {
        ChannelSpec {
            tx_radius,
            curve: PerCurve::Flat(0.0),
            base_loss: per,
        }
    }

    pub fn lossless(tx_radius: f64) -> Self {
        Self::flat(tx_radius, 0.0)
    }

    pub fn in_range(&self, d: f64) -> bool {
        d <= self.tx_radius
    }

    /// Error rate at distance `d`, with the success rate scaled by
    /// `1 - base_loss`.
    pub fn per_at(&self, d: f64) -> f64 {
        debug_assert!(d >= 0.0);
        if !self.in_range(d) {
            return 1.0;
        }
        let success = (1.0 - self.base_loss) * (1.0 - self.curve.value(d));
        (1.0 - success).clamp(0.0, 1.0)
    }

    /// Replaces a `File` curve with the table it points at. Relative paths
    /// resolve against `base`.
    pub fn resolve(&mut self, base: &Path) -> Result<()> {
        if let PerCurve::File(path) = &self.curve {
            let full = if path.is_relative() {
                base.join(path)
            } else {
                path.clone()
            };
            self.curve = PerCurve::Table(load_curve(&full)?);
        }
        Ok(())
    }

    pub(crate) fn violations(&self, out: &mut Vec<Violation>) {
        if !(self.tx_radius.is_finite() && self.tx_radius > 0.0) {
            out.push(Violation::new("channel.tx_radius", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.base_loss) {
            out.push(Violation::new("channel.base_loss", "must lie in [0, 1]"));
        }
        self.curve.violations(out);
    }

    /// Samples one broadcast from `sender` and returns the receivers that
    /// decoded it, in id order. One Bernoulli draw is consumed per in-range
    /// receiver, visited in id order.
    pub fn broadcast(
        &self,
        sender: &Position,
        receivers: &[(NodeId, Position)],
        rng: &mut SimRng,
    ) -> Vec<NodeId> {
        let mut ordered: Vec<&(NodeId, Position)> = receivers.iter().collect();
        ordered.sort_by_key(|(id, _)| *id);
        ordered
            .into_iter()
            .filter_map(|(id, pos)| {
                let d = sender.distance(pos);
                if !self.in_range(d) {
                    return None;
                }
                let per = self.per_at(d);
                (rng.unit() >= per).then_some(*id)
            })
            .collect()
    }

    /// Same draw sequence as [`ChannelSpec::broadcast`] over every other
    /// node, with ids taken from slice indices.
    pub(crate) fn sample_receivers(
        &self,
        sender: usize,
        positions: &[Position],
        rng: &mut SimRng,
    ) -> Vec<NodeId> {
        let from = positions[sender];
        let mut out = Vec::with_capacity(32);
        for (i, pos) in positions.iter().enumerate() {
            let d = from.distance(pos);
            if i == sender || !self.in_range(d) {
                continue;
            }
            if rng.unit() >= self.per_at(d) {
                out.push(NodeId(i as u32));
            }
        }
        out
    }
}
