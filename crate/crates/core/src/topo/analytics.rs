use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{TopoError, Topology};
use crate::exec::Exec;

pub const UNREACHABLE: u32 = u32::MAX;

/// Hop distances from `src`; unreachable routers get `u32::MAX`.
pub fn bfs_distances(t: &Topology, src: usize) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; t.routers()];
    let mut queue = VecDeque::new();
    dist[src] = 0;
    queue.push_back(src);
    while let Some(v) = queue.pop_front() {
        for &n in t.neighbors(v) {
            if dist[n] == UNREACHABLE {
                dist[n] = dist[v] + 1;
                queue.push_back(n);
            }
        }
    }
    dist
}

pub fn all_pairs_distances(t: &Topology, exec: Exec) -> Vec<Vec<u32>> {
    exec.map_range(t.routers(), |s| bfs_distances(t, s))
}

pub fn diameter(t: &Topology) -> Result<usize, TopoError> {
    diameter_with(t, Exec::default())
}

pub fn diameter_with(t: &Topology, exec: Exec) -> Result<usize, TopoError> {
    let ecc = exec.map_range(t.routers(), |s| bfs_distances(t, s).into_iter().max().unwrap_or(0));
    match ecc.into_iter().max() {
        Some(UNREACHABLE) => Err(TopoError::Disconnected),
        Some(d) => Ok(d as usize),
        None => Ok(0),
    }
}

/// Length of the shortest cycle, or `None` for a forest.
pub fn girth(t: &Topology) -> Option<usize> {
    let shortest = Exec::default().map_range(t.routers(), |root| {
        let mut dist = vec![UNREACHABLE; t.routers()];
        let mut parent = vec![usize::MAX; t.routers()];
        let mut queue = VecDeque::new();
        let mut best = usize::MAX;
        dist[root] = 0;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            if 2 * dist[v] as usize + 1 >= best {
                break;
            }
            for &n in t.neighbors(v) {
                if dist[n] == UNREACHABLE {
                    dist[n] = dist[v] + 1;
                    parent[n] = v;
                    queue.push_back(n);
                } else if parent[v] != n {
                    best = best.min((dist[v] + dist[n] + 1) as usize);
                }
            }
        }
        best
    });
    shortest.into_iter().min().filter(|&g| g != usize::MAX)
}

/// Moore bound for diameter 2: `1 + k'^2`.
pub fn moore_bound(k_net: usize) -> usize {
    1 + k_net * k_net
}

/// Router count relative to the diameter-2 Moore bound, kept as a fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MooreRatio {
    pub routers: usize,
    pub bound: usize,
}

impl MooreRatio {
    pub fn value(&self) -> f64 {
        self.routers as f64 / self.bound as f64
    }
}

pub fn moore_ratio(t: &Topology) -> Result<MooreRatio, TopoError> {
    diameter(t)?;
    Ok(MooreRatio {
        routers: t.routers(),
        bound: moore_bound(t.network_radix()),
    })
}
