use std::collections::VecDeque;

use crate::model::{NodeId, Position};

/// Fraction of group members (other than `source`) with a path from
/// `source` through active users, where two users are linked when within
/// `tx_radius`. Inactive members can still terminate a path but do not
/// extend one unless `active` says so. Returns 1 when the source is the
/// only member.
pub fn connectivity_sample(
    positions: &[Position],
    tx_radius: f64,
    active: &[bool],
    members: &[NodeId],
    source: NodeId,
) -> f64 {
    let others: Vec<NodeId> = members.iter().copied().filter(|&m| m != source).collect();
    if others.is_empty() {
        return 1.0;
    }
    let n = positions.len();
    let mut reached = vec![false; n];
    let mut queue = VecDeque::new();
    reached[source.index()] = true;
    queue.push_back(source.index());
    while let Some(u) = queue.pop_front() {
        if u != source.index() && !active[u] {
            continue;
        }
        for v in 0..n {
            if !reached[v] && positions[u].distance(&positions[v]) <= tx_radius {
                reached[v] = true;
                queue.push_back(v);
            }
        }
    }
    let hit = others.iter().filter(|m| reached[m.index()]).count();
    hit as f64 / others.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_members_in_range_of_source() {
        let pos = [Position::new(0.0, 0.0), Position::new(10.0, 0.0), Position::new(0.0, -30.0)];
        let active = [true, true, true];
        let m = [NodeId(0), NodeId(1), NodeId(2)];
        assert_eq!(connectivity_sample(&pos, 40.0, &active, &m, NodeId(0)), 1.0);
    }

    #[test]
    fn isolated_member_is_not_reached() {
        let pos = [
            Position::new(0.0, 0.0),
            Position::new(30.0, 0.0),
            Position::new(60.0, 0.0),
            Position::new(200.0, 0.0),
        ];
        // 0 source, 1 relay, 2 member via relay, 3 member far away
        let active = [true, true, true, true];
        let m = [NodeId(0), NodeId(2), NodeId(3)];
        assert_eq!(connectivity_sample(&pos, 40.0, &active, &m, NodeId(0)), 0.5);
    }

    #[test]
    fn inactive_users_do_not_bridge() {
        let pos = [Position::new(0.0, 0.0), Position::new(30.0, 0.0), Position::new(60.0, 0.0)];
        let m = [NodeId(0), NodeId(2)];
        assert_eq!(connectivity_sample(&pos, 40.0, &[true, false, true], &m, NodeId(0)), 0.0);
        assert_eq!(connectivity_sample(&pos, 40.0, &[true, true, true], &m, NodeId(0)), 1.0);
    }
}
