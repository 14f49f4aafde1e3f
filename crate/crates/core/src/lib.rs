//! Deterministic discrete-event simulator for group-centric wireless
//! networking, with a scoped-flooding baseline.
//!
//! A [`Scenario`] describes users, the group, the channel, motion and
//! traffic. [`run`] executes one seed and returns a [`MetricsReport`]; the
//! [`batch`] module runs seed sets, protocol comparisons and sweeps.

pub mod analytics;
pub mod batch;
pub mod channel;
pub mod engine;
pub mod error;
pub mod graph;
pub mod mobility;
pub mod model;
pub mod placement;
pub mod presets;
pub mod protocol;
pub mod rng;
pub mod scenario;
pub mod trace;

pub use analytics::MetricsReport;
pub use engine::{run, run_with, RunOptions, RunOutput, GROUP};
pub use error::{Error, ProtocolError, Result};
pub use model::{GroupId, NodeId, Position, SimTime};
pub use placement::World;
pub use scenario::{ProtocolKind, Scenario, SmfScope};
