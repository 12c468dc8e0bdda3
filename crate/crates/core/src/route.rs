//! Static minimal routing, virtual-channel assignment and deadlock checks.
//!
//! Grid families (mesh, torus, partitioned FBF) route in dimension order:
//! columns first, then rows. Every other topology uses shortest paths with
//! the smallest-index neighbor as tie-break.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::topo::{all_pairs_distances, Topology, TopologyKind};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RouteError {
    #[error("topology is disconnected")]
    Disconnected,
    #[error("policy needs {required} virtual channels, {available} configured")]
    InsufficientVCs { required: usize, available: usize },
    #[error("malformed routing table: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteScheme {
    /// Shortest path, smallest neighbor index among equal candidates.
    MinimalLowestIndex,
    /// Resolve the column offset first, then the row offset.
    DimensionOrder,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoutingTable {
    routers: usize,
    scheme: RouteScheme,
    next_hop: Vec<u32>,
    path_len: Vec<u32>,
}

impl RoutingTable {
    pub fn routers(&self) -> usize {
        self.routers
    }

    pub fn scheme(&self) -> RouteScheme {
        self.scheme
    }

    /// Neighbor to forward to; `cur` itself when `cur == dst`.
    pub fn next_hop(&self, cur: usize, dst: usize) -> usize {
        self.next_hop[cur * self.routers + dst] as usize
    }

    pub fn path_len(&self, src: usize, dst: usize) -> usize {
        self.path_len[src * self.routers + dst] as usize
    }

    pub fn max_path_len(&self) -> usize {
        self.path_len.iter().copied().max().unwrap_or(0) as usize
    }

    /// Router sequence from `src` to `dst`, both included.
    pub fn path(&self, src: usize, dst: usize) -> Vec<usize> {
        let mut path = Vec::with_capacity(self.path_len(src, dst) + 1);
        let mut cur = src;
        path.push(cur);
        while cur != dst {
            cur = self.next_hop(cur, dst);
            path.push(cur);
        }
        path
    }

    pub fn to_json(&self) -> String {
        let n = self.routers;
        let file = RoutingFile {
            routers: n,
            scheme: self.scheme,
            next_hop: self.next_hop.chunks(n.max(1)).map(<[u32]>::to_vec).collect(),
            path_len: self.path_len.chunks(n.max(1)).map(<[u32]>::to_vec).collect(),
        };
        serde_json::to_string(&file).expect("table serializes")
    }

    /// Loads a table and checks it against `t`: every next hop must be a
    /// neighbor and every walk must reach its destination in `path_len` hops.
    pub fn from_json(s: &str, t: &Topology) -> Result<Self, RouteError> {
        let file: RoutingFile = serde_json::from_str(s).map_err(|e| RouteError::Malformed(e.to_string()))?;
        let n = file.routers;
        if n != t.routers() || file.next_hop.len() != n || file.path_len.len() != n {
            return Err(RouteError::Malformed("router count mismatch".into()));
        }
        if file.next_hop.iter().chain(&file.path_len).any(|row| row.len() != n) {
            return Err(RouteError::Malformed("ragged table".into()));
        }
        let table = Self {
            routers: n,
            scheme: file.scheme,
            next_hop: file.next_hop.concat(),
            path_len: file.path_len.concat(),
        };
        for s in 0..n {
            for d in 0..n {
                let (mut cur, mut hops) = (s, 0usize);
                while cur != d {
                    let nxt = table.next_hop(cur, d);
                    if nxt >= n || !t.is_adjacent(cur, nxt) || hops > n {
                        return Err(RouteError::Malformed(format!("bad route {s} -> {d}")));
                    }
                    cur = nxt;
                    hops += 1;
                }
                if hops != table.path_len(s, d) {
                    return Err(RouteError::Malformed(format!("path length mismatch {s} -> {d}")));
                }
            }
        }
        Ok(table)
    }
}

#[derive(Serialize, Deserialize)]
struct RoutingFile {
    routers: usize,
    scheme: RouteScheme,
    next_hop: Vec<Vec<u32>>,
    path_len: Vec<Vec<u32>>,
}

/// Tables with the default scheme for the topology family.
pub fn build_tables(t: &Topology, exec: Exec) -> Result<RoutingTable, RouteError> {
    match t.kind() {
        TopologyKind::Mesh { .. } | TopologyKind::Torus { .. } | TopologyKind::Pfbf { .. } => {
            build_dimension_order_tables(t, exec)
        }
        _ => build_minimal_tables(t, exec),
    }
}

pub fn build_minimal_tables(t: &Topology, exec: Exec) -> Result<RoutingTable, RouteError> {
    let n = t.routers();
    let dist = all_pairs_distances(t, exec);
    if dist.iter().flatten().any(|&d| d == u32::MAX) {
        return Err(RouteError::Disconnected);
    }
    let rows = exec.map_range(n, |s| {
        (0..n)
            .map(|d| {
                if s == d {
                    return s as u32;
                }
                // Neighbor lists are sorted, so the first match is the smallest.
                *t.neighbors(s)
                    .iter()
                    .find(|&&nb| dist[nb][d] + 1 == dist[s][d])
                    .expect("a closer neighbor exists on a shortest path") as u32
            })
            .collect::<Vec<u32>>()
    });
    Ok(RoutingTable {
        routers: n,
        scheme: RouteScheme::MinimalLowestIndex,
        next_hop: rows.concat(),
        path_len: dist.concat(),
    })
}

fn ring_step(from: usize, to: usize, len: usize, wrap: bool) -> usize {
    if from == to {
        return from;
    }
    if !wrap {
        return if to > from { from + 1 } else { from - 1 };
    }
    let fwd = (to + len - from) % len;
    if fwd <= len - fwd {
        (from + 1) % len
    } else {
        (from + len - 1) % len
    }
}

fn dor_next(kind: &TopologyKind, cur: usize, dst: usize) -> usize {
    if cur == dst {
        return cur;
    }
    let (_, cols) = kind.grid_dims().expect("grid family");
    let (r, c) = (cur / cols, cur % cols);
    let (rd, cd) = (dst / cols, dst % cols);
    match *kind {
        TopologyKind::Mesh { rows, .. } | TopologyKind::Torus { rows, .. } => {
            let wrap = matches!(kind, TopologyKind::Torus { .. });
            if c != cd {
                r * cols + ring_step(c, cd, cols, wrap)
            } else {
                ring_step(r, rd, rows, wrap) * cols + c
            }
        }
        TopologyKind::Pfbf { sub_rows, sub_cols, .. } => {
            let (pc, lc, pcd, lcd) = (c / sub_cols, c % sub_cols, cd / sub_cols, cd % sub_cols);
            let (pr, lr, prd, lrd) = (r / sub_rows, r % sub_rows, rd / sub_rows, rd % sub_rows);
            if lc != lcd {
                r * cols + pc * sub_cols + lcd
            } else if pc != pcd {
                let npc = if pcd > pc { pc + 1 } else { pc - 1 };
                r * cols + npc * sub_cols + lc
            } else if lr != lrd {
                (pr * sub_rows + lrd) * cols + c
            } else {
                let npr = if prd > pr { pr + 1 } else { pr - 1 };
                (npr * sub_rows + lr) * cols + c
            }
        }
        _ => unreachable!("dimension-order routing on a non-grid topology"),
    }
}

pub fn build_dimension_order_tables(t: &Topology, exec: Exec) -> Result<RoutingTable, RouteError> {
    let kind = t.kind();
    if !matches!(
        kind,
        TopologyKind::Mesh { .. } | TopologyKind::Torus { .. } | TopologyKind::Pfbf { .. }
    ) {
        return Err(RouteError::Malformed(format!("no dimension order for {}", t.name())));
    }
    let n = t.routers();
    let rows = exec.map_range(n, |s| {
        let mut next = Vec::with_capacity(n);
        let mut len = Vec::with_capacity(n);
        for d in 0..n {
            next.push(dor_next(kind, s, d) as u32);
            let (mut cur, mut hops) = (s, 0u32);
            while cur != d {
                let nxt = dor_next(kind, cur, d);
                debug_assert!(t.is_adjacent(cur, nxt));
                cur = nxt;
                hops += 1;
            }
            len.push(hops);
        }
        (next, len)
    });
    let (next_hop, path_len): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(RoutingTable {
        routers: n,
        scheme: RouteScheme::DimensionOrder,
        next_hop: next_hop.concat(),
        path_len: path_len.concat(),
    })
}

/// How a packet picks its virtual channel on each hop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VcPolicy {
    /// VC = hop number.
    HopIndexed { vcs: usize },
    /// Whole path on VC `packet_id mod vcs`.
    PacketClass { vcs: usize },
    /// VC 1 once the wraparound link of the current dimension has been
    /// used, VC 0 otherwise; resets when the dimension changes. With four or
    /// more VCs, packets are spread over `vcs / 2` such pairs by id.
    Dateline { vcs: usize },
    /// VC = number of partition boundaries already crossed, saturating.
    PartitionCrossing { vcs: usize },
}

impl VcPolicy {
    pub fn vcs(&self) -> usize {
        match *self {
            VcPolicy::HopIndexed { vcs }
            | VcPolicy::PacketClass { vcs }
            | VcPolicy::Dateline { vcs }
            | VcPolicy::PartitionCrossing { vcs } => vcs,
        }
    }

    /// Hop-indexed policy; fails when some path is longer than `vcs`.
    pub fn hop_indexed(tables: &RoutingTable, vcs: usize) -> Result<Self, RouteError> {
        let required = tables.max_path_len().max(1);
        if vcs < required {
            return Err(RouteError::InsufficientVCs {
                required,
                available: vcs,
            });
        }
        Ok(VcPolicy::HopIndexed { vcs })
    }

    /// Number of packet classes whose paths must be checked separately.
    pub fn classes(&self) -> usize {
        match *self {
            VcPolicy::PacketClass { vcs } => vcs,
            VcPolicy::Dateline { vcs } => (vcs / 2).max(1),
            _ => 1,
        }
    }

    /// VC offset between consecutive packet classes.
    pub fn class_stride(&self) -> usize {
        match *self {
            VcPolicy::Dateline { .. } => 2,
            _ => 1,
        }
    }

    /// VC for each hop of `path` (one entry per link traversed).
    pub fn vcs_for_path(&self, t: &Topology, path: &[usize], packet_id: u64) -> Vec<u8> {
        let hops = path.len().saturating_sub(1);
        match *self {
            VcPolicy::HopIndexed { vcs } => (0..hops).map(|h| h.min(vcs - 1) as u8).collect(),
            VcPolicy::PacketClass { vcs } => vec![(packet_id % vcs as u64) as u8; hops],
            VcPolicy::Dateline { vcs } => {
                let base = (packet_id % self.classes() as u64) as u8 * 2;
                let (rows, cols) = t.kind().grid_dims().expect("dateline needs a grid");
                let mut out = Vec::with_capacity(hops);
                let mut dim = None;
                let mut crossed = false;
                for w in path.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    let horizontal = a / cols == b / cols;
                    if dim != Some(horizontal) {
                        dim = Some(horizontal);
                        crossed = false;
                    }
                    let (x, y, len) = if horizontal {
                        (a % cols, b % cols, cols)
                    } else {
                        (a / cols, b / cols, rows)
                    };
                    if len > 2 && x.abs_diff(y) > 1 {
                        crossed = true;
                    }
                    out.push(base + if crossed { 1.min(vcs - 1) as u8 } else { 0 });
                }
                out
            }
            VcPolicy::PartitionCrossing { vcs } => {
                let partition = |r: usize| match *t.kind() {
                    TopologyKind::Pfbf {
                        partitions_x,
                        sub_rows,
                        sub_cols,
                        ..
                    } => {
                        let cols = partitions_x * sub_cols;
                        (r / cols / sub_rows, r % cols / sub_cols)
                    }
                    _ => (0, 0),
                };
                let mut crossings = 0usize;
                path.windows(2)
                    .map(|w| {
                        let vc = crossings.min(vcs - 1) as u8;
                        if partition(w[0]) != partition(w[1]) {
                            crossings += 1;
                        }
                        vc
                    })
                    .collect()
            }
        }
    }
}

/// Default deadlock-avoidance policy for the topology family.
pub fn assign_vcs(t: &Topology, tables: &RoutingTable, vcs: usize) -> Result<VcPolicy, RouteError> {
    if vcs == 0 {
        return Err(RouteError::InsufficientVCs {
            required: 1,
            available: 0,
        });
    }
    match t.kind() {
        TopologyKind::Mesh { .. } => Ok(VcPolicy::PacketClass { vcs }),
        TopologyKind::Torus { rows, cols } => {
            if *rows > 2 || *cols > 2 {
                if vcs < 2 {
                    return Err(RouteError::InsufficientVCs {
                        required: 2,
                        available: vcs,
                    });
                }
            }
            Ok(VcPolicy::Dateline { vcs })
        }
        TopologyKind::Pfbf { .. } => Ok(VcPolicy::PartitionCrossing { vcs }),
        _ => VcPolicy::hop_indexed(tables, vcs),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeadlockVerdict {
    pub acyclic: bool,
    /// Channels `(from, to, vc)` on one dependency cycle, if any.
    pub cycle: Option<Vec<(usize, usize, usize)>>,
    pub channels: usize,
    pub dependencies: usize,
}

/// Builds the channel dependency graph over `(directed link, vc)` pairs for
/// every routed path and searches it for a cycle.
pub fn check_deadlock_free(t: &Topology, tables: &RoutingTable, policy: &VcPolicy, exec: Exec) -> DeadlockVerdict {
    let n = t.routers();
    let vcs = policy.vcs();
    let mut offset = Vec::with_capacity(n + 1);
    offset.push(0usize);
    for r in 0..n {
        offset.push(offset[r] + t.degree(r));
    }
    let link_id = |a: usize, b: usize| offset[a] + t.port_to(a, b).expect("routed hop follows a link");
    let channel = |a: usize, b: usize, vc: u8| link_id(a, b) * vcs + vc as usize;

    let per_source = exec.map_range(n, |s| {
        let mut deps = Vec::new();
        for d in 0..n {
            let path = tables.path(s, d);
            for class in 0..policy.classes() {
                let vc = policy.vcs_for_path(t, &path, class as u64);
                for h in 1..vc.len() {
                    deps.push((
                        channel(path[h - 1], path[h], vc[h - 1]),
                        channel(path[h], path[h + 1], vc[h]),
                    ));
                }
            }
        }
        deps
    });
    let nodes = offset[n] * vcs;
    let unique: HashSet<(usize, usize)> = per_source.into_iter().flatten().collect();
    let mut adj = vec![Vec::new(); nodes];
    for &(a, b) in &unique {
        adj[a].push(b);
    }
    for l in &mut adj {
        l.sort_unstable();
    }

    let cycle = find_cycle(&adj).map(|ids| {
        let mut link_ends = Vec::with_capacity(offset[n]);
        for a in 0..n {
            for &b in t.neighbors(a) {
                link_ends.push((a, b));
            }
        }
        ids.into_iter()
            .map(|c| {
                let (a, b) = link_ends[c / vcs];
                (a, b, c % vcs)
            })
            .collect()
    });
    DeadlockVerdict {
        acyclic: cycle.is_none(),
        cycle,
        channels: nodes,
        dependencies: unique.len(),
    }
}

/// Iterative three-color DFS; returns the nodes of one cycle.
fn find_cycle(adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;
    let mut color = vec![WHITE; adj.len()];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for root in 0..adj.len() {
        if color[root] != WHITE {
            continue;
        }
        color[root] = GRAY;
        stack.push((root, 0));
        while let Some(top) = stack.last_mut() {
            let v = top.0;
            if let Some(&w) = adj[v].get(top.1) {
                top.1 += 1;
                match color[w] {
                    WHITE => {
                        color[w] = GRAY;
                        stack.push((w, 0));
                    }
                    GRAY => {
                        let start = stack.iter().position(|&(u, _)| u == w).expect("gray node on stack");
                        return Some(stack[start..].iter().map(|&(u, _)| u).collect());
                    }
                    _ => {}
                }
            } else {
                color[v] = BLACK;
                stack.pop();
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::{build_cmesh, build_fbf, build_pfbf, build_torus, slim_noc};

    #[test]
    fn neighbors_route_directly() {
        let t = slim_noc(5, 1).unwrap();
        let tab = build_tables(&t, Exec::Sequential).unwrap();
        for (a, b) in t.edges() {
            assert_eq!(tab.path_len(a, b), 1);
            assert_eq!(tab.next_hop(a, b), b);
        }
        assert_eq!(tab.max_path_len(), 2);
        assert_eq!(tab.path(3, 3), vec![3]);
    }

    #[test]
    fn lowest_index_tie_break() {
        // Square 0-1-3-2-0: both 1 and 2 lead from 0 to 3.
        let t = Topology::from_edges("sq", TopologyKind::Custom, 4, 1, [(0, 1), (1, 3), (3, 2), (2, 0)]).unwrap();
        let tab = build_tables(&t, Exec::Sequential).unwrap();
        assert_eq!(tab.next_hop(0, 3), 1);
        assert_eq!(tab.next_hop(3, 0), 1);
    }

    #[test]
    fn torus_corner_to_corner() {
        let t = build_torus(10, 5, 1).unwrap();
        let tab = build_tables(&t, Exec::Sequential).unwrap();
        assert_eq!(tab.path_len(0, 5 * 5 + 2), 5 + 2);
        assert_eq!(tab.path_len(0, 49), 2);
    }

    #[test]
    fn dateline_pairs_split_packets() {
        let t = build_torus(10, 5, 1).unwrap();
        let tab = build_tables(&t, Exec::Sequential).unwrap();
        let p = assign_vcs(&t, &tab, 4).unwrap();
        assert_eq!(p.classes(), 2);
        // 0 -> 4 takes the wraparound link 0 -> 4 directly.
        assert_eq!(tab.path(0, 4), vec![0, 4]);
        assert_eq!(p.vcs_for_path(&t, &tab.path(0, 4), 0), vec![1]);
        assert_eq!(p.vcs_for_path(&t, &tab.path(0, 4), 1), vec![3]);
        assert_eq!(p.vcs_for_path(&t, &tab.path(0, 2), 3), vec![2, 2]);
        assert!(check_deadlock_free(&t, &tab, &p, Exec::Sequential).acyclic);
        assert_eq!(assign_vcs(&t, &tab, 3).unwrap().classes(), 1);
    }

    #[test]
    fn dimension_order_goes_along_columns_first() {
        let t = build_cmesh(3, 3, 1).unwrap();
        let tab = build_tables(&t, Exec::Sequential).unwrap();
        assert_eq!(tab.path(0, 8), vec![0, 1, 2, 5, 8]);
        assert_eq!(tab.path(8, 0), vec![8, 7, 6, 3, 0]);
    }

    #[test]
    fn hop_policy_on_diameter_two() {
        let t = slim_noc(5, 1).unwrap();
        let tab = build_tables(&t, Exec::Sequential).unwrap();
        let p = assign_vcs(&t, &tab, 2).unwrap();
        assert_eq!(p, VcPolicy::HopIndexed { vcs: 2 });
        let path = tab.path(0, 49);
        assert_eq!(p.vcs_for_path(&t, &path, 0), vec![0, 1][..path.len() - 1].to_vec());
        assert_eq!(
            assign_vcs(&t, &tab, 1),
            Err(RouteError::InsufficientVCs { required: 2, available: 1 })
        );
        assert!(check_deadlock_free(&t, &tab, &p, Exec::Sequential).acyclic);
    }

    #[test]
    fn pfbf_needs_four_hop_classes() {
        let t = build_pfbf(2, 2, 4, 4, 3).unwrap();
        let tab = build_tables(&t, Exec::Sequential).unwrap();
        assert_eq!(
            VcPolicy::hop_indexed(&tab, 2),
            Err(RouteError::InsufficientVCs { required: 4, available: 2 })
        );
        let p = assign_vcs(&t, &tab, 2).unwrap();
        assert!(check_deadlock_free(&t, &tab, &p, Exec::Sequential).acyclic);
    }

    #[test]
    fn torus_without_dateline_deadlocks() {
        let t = build_torus(1, 6, 1).unwrap();
        let tab = build_tables(&t, Exec::Sequential).unwrap();
        let bad = check_deadlock_free(&t, &tab, &VcPolicy::PacketClass { vcs: 1 }, Exec::Sequential);
        assert!(!bad.acyclic);
        assert!(bad.cycle.unwrap().len() >= 3);
        let good = assign_vcs(&t, &tab, 2).unwrap();
        assert!(check_deadlock_free(&t, &tab, &good, Exec::Sequential).acyclic);
        assert!(assign_vcs(&t, &tab, 1).is_err());
    }

    #[test]
    fn mesh_xy_single_vc() {
        let t = build_cmesh(4, 4, 1).unwrap();
        let tab = build_tables(&t, Exec::Sequential).unwrap();
        let p = assign_vcs(&t, &tab, 1).unwrap();
        assert!(check_deadlock_free(&t, &tab, &p, Exec::Sequential).acyclic);
    }

    #[test]
    fn fbf_hop_policy() {
        let t = build_fbf(4, 4, 1).unwrap();
        let tab = build_tables(&t, Exec::Parallel).unwrap();
        let p = assign_vcs(&t, &tab, 2).unwrap();
        assert!(check_deadlock_free(&t, &tab, &p, Exec::Parallel).acyclic);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let t = build_torus(4, 3, 1).unwrap();
        let tab = build_tables(&t, Exec::Sequential).unwrap();
        let back = RoutingTable::from_json(&tab.to_json(), &t).unwrap();
        assert_eq!(back, tab);
        let other = build_cmesh(4, 3, 1).unwrap();
        assert!(RoutingTable::from_json(&tab.to_json(), &other).is_err());
    }

    #[test]
    fn disconnected_tables_fail() {
        let t = Topology::from_edges("split", TopologyKind::Custom, 3, 1, [(0, 1)]).unwrap();
        assert_eq!(build_tables(&t, Exec::Sequential), Err(RouteError::Disconnected));
    }
}
