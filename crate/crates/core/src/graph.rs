//! Unit-disk graphs and breadth-first hop distances.

use std::collections::VecDeque;

use crate::model::Position;

/// Undirected graph with an edge between every pair of points no farther
/// apart than `radius`.
#[derive(Debug, Clone)]
pub struct UnitDiskGraph {
    adj: Vec<Vec<usize>>,
}

impl UnitDiskGraph {
    pub fn new(positions: &[Position], radius: f64) -> Self {
        let n = positions.len();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if positions[i].distance(&positions[j]) <= radius {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        UnitDiskGraph { adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    /// Hop distance from `src` to every vertex; `None` when unreachable.
    pub fn bfs(&self, src: usize) -> Vec<Option<u32>> {
        self.bfs_within(src, |_| true)
    }

    /// BFS that only expands through vertices accepted by `pass`. The
    /// source always expands; rejected vertices are still reached (they can
    /// hear) but relay nothing.
    pub fn bfs_within(&self, src: usize, pass: impl Fn(usize) -> bool) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.adj.len()];
        let mut queue = VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            if u != src && !pass(u) {
                continue;
            }
            let du = dist[u].expect("queued vertices have a distance");
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}
