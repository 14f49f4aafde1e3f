//! Uniform node placement and group membership draws.

use crate::error::{Error, Result};
use crate::model::{NodeId, Position};
use crate::rng::{SimRng, Stream};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacedNode {
    pub id: NodeId,
    pub position: Position,
    pub member: bool,
}

/// Point drawn uniformly over the disk of `radius` centred at the origin.
pub fn uniform_in_disk(radius: f64, rng: &mut SimRng) -> Position {
    let u = rng.unit();
    let theta = 2.0 * std::f64::consts::PI * rng.unit();
    disk_point(radius, u, theta)
}

/// Maps a radial fraction `u` in `[0, 1)` and an angle to an area-uniform
/// point: `r = radius * sqrt(u)`.
pub fn disk_point(radius: f64, u: f64, theta: f64) -> Position {
    let r = radius * u.sqrt();
    Position::new(r * theta.cos(), r * theta.sin())
}

/// Places `num_users` nodes and draws group membership.
///
/// Nodes land uniformly in the placement disk (the outer disk when one is
/// configured). Only nodes inside `region_radius` can be members, each
/// independently with `group_prob`. If no member is drawn the membership
/// flags alone are redrawn; positions are kept.
pub fn place_nodes(scenario: &Scenario, rng: &mut SimRng) -> Result<Vec<PlacedNode>> {
    if scenario.num_users == 0 {
        return Err(Error::Config("cannot place zero nodes".into()));
    }
    let radius = scenario.placement_radius();
    let positions: Vec<Position> = (0..scenario.num_users)
        .map(|_| uniform_in_disk(radius, rng))
        .collect();
    let eligible: Vec<bool> = positions
        .iter()
        .map(|p| p.norm() <= scenario.region_radius)
        .collect();
    if !eligible.iter().any(|&e| e) {
        return Err(Error::Config(
            "no user landed inside the group region".into(),
        ));
    }
    if scenario.group_prob <= 0.0 {
        return Err(Error::Config("group_prob must be positive".into()));
    }
    let members = loop {
        let draw: Vec<bool> = eligible
            .iter()
            .map(|&e| {
                let hit = rng.bernoulli(scenario.group_prob);
                e && hit
            })
            .collect();
        if draw.iter().any(|&m| m) {
            break draw;
        }
    };
    Ok(positions
        .into_iter()
        .zip(members)
        .enumerate()
        .map(|(i, (position, member))| PlacedNode {
            id: NodeId(i as u32),
            position,
            member,
        })
        .collect())
}

/// Initial state of a run's world: where everyone is, who belongs to the
/// group, and who the source is. Depends only on the scenario and seed.
#[derive(Debug, Clone)]
pub struct World {
    pub positions: Vec<Position>,
    pub member: Vec<bool>,
    pub source: NodeId,
}

impl World {
    pub fn build(scenario: &Scenario, seed: u64) -> Result<World> {
        let mut rng = SimRng::new(seed, Stream::Placement);
        let placed = place_nodes(scenario, &mut rng)?;
        let members: Vec<NodeId> = placed.iter().filter(|n| n.member).map(|n| n.id).collect();
        let source = members[rng.index(members.len())];
        Ok(World {
            positions: placed.iter().map(|n| n.position).collect(),
            member: placed.iter().map(|n| n.member).collect(),
            source,
        })
    }

    pub fn members(&self) -> Vec<NodeId> {
        self.member
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| NodeId(i as u32))
            .collect()
    }
}
