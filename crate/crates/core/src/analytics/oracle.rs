//! Discovery reach computed straight from the graph, with no event loop.
//!
//! Every node that transmits carries a label: the TTL it puts on the air.
//! The source starts at `T - 1`. A member hearing anything transmits with
//! `T - 1`; any other user hearing label `h >= 1` transmits with `h - 1`.
//! Labels are settled largest first, so each node ends with the best label
//! any ordering of receptions could give it.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use crate::error::Result;
use crate::graph::UnitDiskGraph;
use crate::model::NodeId;
use crate::placement::World;
use crate::scenario::Scenario;

/// Members reached by one loss-free discovery in `world`, source included.
pub fn discovered_set(world: &World, tx_radius: f64, source_ttl: u8) -> BTreeSet<NodeId> {
    let n = world.positions.len();
    let graph = UnitDiskGraph::new(&world.positions, tx_radius);
    let top = source_ttl.saturating_sub(1);
    let mut label: Vec<Option<u8>> = vec![None; n];
    let mut heard = vec![false; n];
    let mut queue = BinaryHeap::new();
    let src = world.source.index();
    heard[src] = true;
    label[src] = Some(top);
    queue.push((top, Reverse(src)));

    while let Some((level, Reverse(u))) = queue.pop() {
        if label[u] != Some(level) {
            continue;
        }
        for &v in graph.neighbors(u) {
            heard[v] = true;
            let offered = if world.member[v] {
                Some(top)
            } else {
                level.checked_sub(1)
            };
            if let Some(l) = offered {
                if label[v].map_or(true, |cur| l > cur) {
                    label[v] = Some(l);
                    queue.push((l, Reverse(v)));
                }
            }
        }
    }
    (0..n)
        .filter(|&i| heard[i] && world.member[i])
        .map(|i| NodeId(i as u32))
        .collect()
}

/// Discovered fraction for one seed of `scenario`.
pub fn oracle_fraction(scenario: &Scenario, seed: u64) -> Result<f64> {
    let world = World::build(scenario, seed)?;
    let found = discovered_set(&world, scenario.tx_radius(), scenario.source_ttl);
    let members = world.member.iter().filter(|&&m| m).count();
    Ok(found.len() as f64 / members as f64)
}

/// Mean discovered fraction over seeds `0..trials`.
pub fn mc_discovery_oracle(scenario: &Scenario, trials: u64) -> Result<f64> {
    let mut sum = 0.0;
    for seed in 0..trials {
        sum += oracle_fraction(scenario, seed)?;
    }
    Ok(sum / trials.max(1) as f64)
}
