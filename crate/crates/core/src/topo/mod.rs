//! Router graphs: Slim NoC plus the mesh, torus and flattened-butterfly
//! baselines, with graph analytics and JSON/DOT exchange formats.

mod analytics;
mod baselines;
mod slimnoc;

pub use analytics::{all_pairs_distances, bfs_distances, diameter, girth, moore_bound, moore_ratio, MooreRatio};
pub use baselines::{build_cmesh, build_fbf, build_pfbf, build_torus};
pub use slimnoc::{build_sn, feasible_sizes, feasible_splits, nearest_feasible, slim_noc, sn_params, SnConfig, MAX_SIZING_Q};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ff::FieldError;

#[derive(Debug, Error)]
pub enum TopoError {
    #[error("q = {0} is not a prime power")]
    InvalidQ(usize),
    #[error("q = {0} has no residue u in {{-1, 0, 1}} with q = 4w + u")]
    InvalidU(usize),
    #[error("concentration must be at least 1")]
    InvalidConcentration,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("construction produced an invalid graph: {0}")]
    ConstructionInvalid(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("malformed topology: {0}")]
    Malformed(String),
}

/// Which family a topology belongs to, with the parameters needed to
/// recover its geometry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TopologyKind {
    SlimNoc { q: usize },
    Torus { rows: usize, cols: usize },
    Mesh { rows: usize, cols: usize },
    Fbf { rows: usize, cols: usize },
    Pfbf {
        partitions_x: usize,
        partitions_y: usize,
        sub_rows: usize,
        sub_cols: usize,
    },
    Custom,
}

impl TopologyKind {
    /// Global `(rows, cols)` for grid-shaped families.
    pub fn grid_dims(&self) -> Option<(usize, usize)> {
        match *self {
            TopologyKind::Torus { rows, cols } | TopologyKind::Mesh { rows, cols } | TopologyKind::Fbf { rows, cols } => {
                Some((rows, cols))
            }
            TopologyKind::Pfbf {
                partitions_x,
                partitions_y,
                sub_rows,
                sub_cols,
            } => Some((partitions_y * sub_rows, partitions_x * sub_cols)),
            _ => None,
        }
    }
}

/// Slim NoC router label `[G|a,b]`: subgroup type, subgroup id (1-based)
/// and position within the subgroup (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RouterLabel {
    pub group_type: u8,
    pub subgroup: usize,
    pub position: usize,
}

impl RouterLabel {
    /// 1-based index `G q^2 + (a-1) q + b`.
    pub fn index(&self, q: usize) -> usize {
        self.group_type as usize * q * q + (self.subgroup - 1) * q + self.position
    }

    pub fn from_index(index: usize, q: usize) -> Self {
        let i = index - 1;
        RouterLabel {
            group_type: (i / (q * q)) as u8,
            subgroup: (i % (q * q)) / q + 1,
            position: i % q + 1,
        }
    }
}

impl std::fmt::Display for RouterLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}|{},{}]", self.group_type, self.subgroup, self.position)
    }
}

/// An undirected router graph with `concentration` nodes per router.
///
/// Node `n` (0-based) attaches to router `n / concentration`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    name: String,
    kind: TopologyKind,
    concentration: usize,
    adj: Vec<Vec<usize>>,
    labels: Option<Vec<RouterLabel>>,
}

impl Topology {
    /// Builds a topology from an edge list. Self-loops are rejected and
    /// duplicate edges collapse into one.
    pub fn from_edges(
        name: impl Into<String>,
        kind: TopologyKind,
        routers: usize,
        concentration: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TopoError> {
        if concentration == 0 {
            return Err(TopoError::InvalidConcentration);
        }
        let mut adj = vec![Vec::new(); routers];
        for (a, b) in edges {
            if a >= routers || b >= routers {
                return Err(TopoError::Malformed(format!("edge ({a},{b}) out of range")));
            }
            if a == b {
                return Err(TopoError::Malformed(format!("self-loop at router {a}")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self {
            name: name.into(),
            kind,
            concentration,
            adj,
            labels: None,
        })
    }

    pub(crate) fn with_labels(mut self, labels: Vec<RouterLabel>) -> Self {
        debug_assert_eq!(labels.len(), self.adj.len());
        self.labels = Some(labels);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &TopologyKind {
        &self.kind
    }

    pub fn routers(&self) -> usize {
        self.adj.len()
    }

    pub fn concentration(&self) -> usize {
        self.concentration
    }

    pub fn nodes(&self) -> usize {
        self.adj.len() * self.concentration
    }

    pub fn router_of(&self, node: usize) -> usize {
        node / self.concentration
    }

    pub fn nodes_of(&self, router: usize) -> std::ops::Range<usize> {
        router * self.concentration..(router + 1) * self.concentration
    }

    /// Sorted neighbor list.
    pub fn neighbors(&self, r: usize) -> &[usize] {
        &self.adj[r]
    }

    pub fn degree(&self, r: usize) -> usize {
        self.adj[r].len()
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Position of `b` in `a`'s neighbor list, i.e. the output port of `a`
    /// that leads to `b`.
    pub fn port_to(&self, a: usize, b: usize) -> Option<usize> {
        self.adj[a].binary_search(&b).ok()
    }

    /// Undirected edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, ns)| ns.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Largest router-to-router degree (network radix k').
    pub fn network_radix(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Router radix `k = k' + p`.
    pub fn router_radix(&self) -> usize {
        self.network_radix() + self.concentration
    }

    /// Common degree when every router has the same number of neighbors.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.adj.first()?.len();
        self.adj.iter().all(|ns| ns.len() == d).then_some(d)
    }

    pub fn labels(&self) -> Option<&[RouterLabel]> {
        self.labels.as_deref()
    }

    /// Global `(row, col)` of a router in grid-shaped families.
    pub fn grid_position(&self, r: usize) -> Option<(usize, usize)> {
        let (_, cols) = self.kind.grid_dims()?;
        Some((r / cols, r % cols))
    }

    pub fn to_file(&self) -> TopologyFile {
        TopologyFile {
            name: self.name.clone(),
            kind: self.kind.clone(),
            routers: self.routers(),
            concentration: self.concentration,
            labels: self.labels.clone(),
            edges: self.edges().map(|(a, b)| [a, b]).collect(),
            attachment: (0..self.nodes()).map(|n| self.router_of(n)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("topology serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, TopoError> {
        let file: TopologyFile = serde_json::from_str(s).map_err(|e| TopoError::Malformed(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn from_file(file: TopologyFile) -> Result<Self, TopoError> {
        let mut t = Self::from_edges(
            file.name,
            file.kind,
            file.routers,
            file.concentration,
            file.edges.into_iter().map(|[a, b]| (a, b)),
        )?;
        if file.attachment.len() != t.nodes() || file.attachment.iter().enumerate().any(|(n, &r)| r != t.router_of(n)) {
            return Err(TopoError::Malformed(
                "attachment must assign node n to router n / concentration".into(),
            ));
        }
        if let Some(labels) = file.labels {
            if labels.len() != t.routers() {
                return Err(TopoError::Malformed("label count differs from router count".into()));
            }
            t.labels = Some(labels);
        }
        Ok(t)
    }

    /// Graphviz rendering for visual inspection.
    pub fn to_dot(&self) -> String {
        let mut out = format!("graph \"{}\" {{\n", self.name);
        for r in 0..self.routers() {
            match self.labels.as_ref() {
                Some(l) => out.push_str(&format!("  {r} [label=\"{}\"];\n", l[r])),
                None => out.push_str(&format!("  {r};\n")),
            }
        }
        for (a, b) in self.edges() {
            out.push_str(&format!("  {a} -- {b};\n"));
        }
        out.push_str("}\n");
        out
    }
}

/// On-disk topology representation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyFile {
    pub name: String,
    pub kind: TopologyKind,
    pub routers: usize,
    pub concentration: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<RouterLabel>>,
    pub edges: Vec<[usize; 2]>,
    pub attachment: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_index_is_a_bijection() {
        for q in [2, 3, 5, 9] {
            let mut seen = vec![false; 2 * q * q + 1];
            for g in 0..2u8 {
                for a in 1..=q {
                    for b in 1..=q {
                        let l = RouterLabel {
                            group_type: g,
                            subgroup: a,
                            position: b,
                        };
                        let i = l.index(q);
                        assert!((1..=2 * q * q).contains(&i));
                        assert!(!seen[i]);
                        seen[i] = true;
                        assert_eq!(RouterLabel::from_index(i, q), l);
                    }
                }
            }
        }
    }

    #[test]
    fn from_edges_collapses_duplicates_and_rejects_loops() {
        let t = Topology::from_edges("x", TopologyKind::Custom, 3, 1, [(0, 1), (1, 0), (1, 2)]).unwrap();
        assert_eq!(t.edge_count(), 2);
        assert_eq!(t.neighbors(1), &[0, 2]);
        assert!(Topology::from_edges("x", TopologyKind::Custom, 3, 1, [(1, 1)]).is_err());
        assert!(Topology::from_edges("x", TopologyKind::Custom, 3, 0, [(0, 1)]).is_err());
    }

    #[test]
    fn node_attachment_is_blockwise() {
        let t = Topology::from_edges("x", TopologyKind::Custom, 3, 4, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(t.nodes(), 12);
        assert_eq!(t.router_of(0), 0);
        assert_eq!(t.router_of(3), 0);
        assert_eq!(t.router_of(4), 1);
        assert_eq!(t.router_of(11), 2);
        assert_eq!(t.nodes_of(1), 4..8);
    }

    #[test]
    fn json_import_rejects_foreign_attachment() {
        let t = Topology::from_edges("x", TopologyKind::Custom, 2, 2, [(0, 1)]).unwrap();
        let mut file = t.to_file();
        file.attachment = vec![1, 0, 0, 1];
        assert!(Topology::from_file(file).is_err());
    }

    #[test]
    fn dot_lists_every_edge() {
        let t = build_fbf(2, 2, 1).unwrap();
        let dot = t.to_dot();
        assert_eq!(dot.matches(" -- ").count(), t.edge_count());
    }
}
