//! Node motion: static placement or random waypoint inside a disk.

use serde::{Deserialize, Serialize};

use crate::error::Violation;
use crate::model::Position;
use crate::placement::uniform_in_disk;
use crate::rng::SimRng;

/// Position updates happen on this fixed cadence.
pub const TICK_SECS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MobilityKind {
    #[default]
    Static,
    RandomWaypoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MobilitySpec {
    pub kind: MobilityKind,
    #[serde(default)]
    pub speed_min: f64,
    #[serde(default)]
    pub speed_max: f64,
    #[serde(default)]
    pub pause_min: f64,
    #[serde(default)]
    pub pause_max: f64,
}

impl MobilitySpec {
    pub fn stationary() -> Self {
        MobilitySpec::default()
    }

    pub fn random_waypoint(speed: (f64, f64), pause: (f64, f64)) -> Self {
        MobilitySpec {
            kind: MobilityKind::RandomWaypoint,
            speed_min: speed.0,
            speed_max: speed.1,
            pause_min: pause.0,
            pause_max: pause.1,
        }
    }

    pub fn is_static(&self) -> bool {
        self.kind == MobilityKind::Static
    }

    pub(crate) fn violations(&self, out: &mut Vec<Violation>) {
        if !(self.speed_min >= 0.0 && self.speed_min <= self.speed_max) {
            out.push(Violation::new(
                "mobility.speed_min",
                "need 0 <= speed_min <= speed_max",
            ));
        }
        if !(self.pause_min >= 0.0 && self.pause_min <= self.pause_max) {
            out.push(Violation::new(
                "mobility.pause_min",
                "need 0 <= pause_min <= pause_max",
            ));
        }
    }
}

/// Where a node is and where it is heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionState {
    pub position: Position,
    pub waypoint: Position,
    pub speed: f64,
    /// Absolute time (seconds) until which the node rests at `position`.
    pub pause_until: f64,
    /// Radius of the disk the node moves in.
    pub bound: f64,
}

impl MotionState {
    /// A node at `position` that starts its first leg at `now`.
    pub fn new(position: Position, bound: f64, spec: &MobilitySpec, now: f64, rng: &mut SimRng) -> Self {
        let mut state = MotionState {
            position,
            waypoint: position,
            speed: 0.0,
            pause_until: now,
            bound,
        };
        if !spec.is_static() {
            state.begin_leg(spec, rng);
        }
        state
    }

    fn begin_leg(&mut self, spec: &MobilitySpec, rng: &mut SimRng) {
        self.waypoint = uniform_in_disk(self.bound, rng);
        self.speed = rng.uniform(spec.speed_min, spec.speed_max);
    }

    fn contain(&mut self) {
        let r = self.position.norm();
        if r > self.bound {
            let k = self.bound / r;
            self.position = Position::new(self.position.x * k, self.position.y * k);
        }
    }
}

/// Moves `state` forward from `now` by `dt` seconds.
pub fn advance(spec: &MobilitySpec, state: &MotionState, now: f64, dt: f64, rng: &mut SimRng) -> MotionState {
    debug_assert!(dt > 0.0);
    let mut s = *state;
    if spec.is_static() {
        return s;
    }
    let end = now + dt;
    let mut t = now;
    // Each pass consumes a pause or a leg; the cap only guards against
    // pathological zero-length legs with zero pause.
    for _ in 0..10_000 {
        if s.pause_until > t {
            if s.pause_until >= end {
                break;
            }
            t = s.pause_until;
            s.begin_leg(spec, rng);
        }
        if s.speed <= 0.0 {
            break;
        }
        let remaining = s.position.distance(&s.waypoint);
        let needed = remaining / s.speed;
        if t + needed > end {
            let step = (end - t) * s.speed;
            let k = step / remaining;
            s.position = Position::new(
                s.position.x + (s.waypoint.x - s.position.x) * k,
                s.position.y + (s.waypoint.y - s.position.y) * k,
            );
            break;
        }
        t += needed;
        s.position = s.waypoint;
        let pause = rng.uniform(spec.pause_min, spec.pause_max);
        s.pause_until = t + pause;
        if pause <= 0.0 {
            s.begin_leg(spec, rng);
        }
    }
    s.contain();
    s
}
