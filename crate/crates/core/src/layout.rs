//! Die-grid placement of routers.
//!
//! Coordinates are 1-based. Slim NoC layouts derive positions from router
//! labels; grid baselines place router `(row, col)` at `(col + 1, row + 1)`.

use std::collections::HashMap;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topo::{RouterLabel, Topology};

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("layout requires a labeled Slim NoC topology")]
    NotSlimNoc,
    #[error("topology has no grid geometry")]
    NotGridded,
    #[error("routers {first} and {second} both map to cell ({x},{y})")]
    CollisionDetected {
        first: usize,
        second: usize,
        x: usize,
        y: usize,
    },
    #[error("malformed layout: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayoutKind {
    Basic,
    Subgroup,
    Group,
    Random { seed: u64 },
    Grid,
}

impl LayoutKind {
    pub fn short_name(&self) -> &'static str {
        match self {
            LayoutKind::Basic => "basic",
            LayoutKind::Subgroup => "subgr",
            LayoutKind::Group => "gr",
            LayoutKind::Random { .. } => "rand",
            LayoutKind::Grid => "grid",
        }
    }
}

impl FromStr for LayoutKind {
    type Err = LayoutError;

    /// Accepts `basic`, `subgr`, `gr`, `rand`, `rand:<seed>` and `grid`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let s = s.strip_prefix("sn_").unwrap_or(&s);
        Ok(match s {
            "basic" => LayoutKind::Basic,
            "subgr" => LayoutKind::Subgroup,
            "gr" => LayoutKind::Group,
            "rand" => LayoutKind::Random { seed: 0 },
            "grid" => LayoutKind::Grid,
            _ => match s.strip_prefix("rand:").map(str::parse) {
                Some(Ok(seed)) => LayoutKind::Random { seed },
                _ => return Err(LayoutError::Malformed(format!("unknown layout '{s}'"))),
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    kind: LayoutKind,
    extent: (usize, usize),
    coords: Vec<(usize, usize)>,
}

impl Layout {
    /// Validates bounds and injectivity.
    pub fn new(kind: LayoutKind, extent: (usize, usize), coords: Vec<(usize, usize)>) -> Result<Self, LayoutError> {
        let mut seen: HashMap<(usize, usize), usize> = HashMap::with_capacity(coords.len());
        for (r, &(x, y)) in coords.iter().enumerate() {
            if x < 1 || y < 1 || x > extent.0 || y > extent.1 {
                return Err(LayoutError::Malformed(format!(
                    "router {r} at ({x},{y}) outside extent {}x{}",
                    extent.0, extent.1
                )));
            }
            if let Some(first) = seen.insert((x, y), r) {
                return Err(LayoutError::CollisionDetected {
                    first,
                    second: r,
                    x,
                    y,
                });
            }
        }
        Ok(Self { kind, extent, coords })
    }

    pub fn kind(&self) -> LayoutKind {
        self.kind
    }

    /// Grid dimensions `(X, Y)`.
    pub fn extent(&self) -> (usize, usize) {
        self.extent
    }

    pub fn coords(&self) -> &[(usize, usize)] {
        &self.coords
    }

    pub fn pos(&self, r: usize) -> (usize, usize) {
        self.coords[r]
    }

    pub fn routers(&self) -> usize {
        self.coords.len()
    }

    pub fn manhattan(&self, i: usize, j: usize) -> usize {
        let (a, b) = (self.coords[i], self.coords[j]);
        a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
    }

    pub fn to_file(&self) -> LayoutFile {
        LayoutFile {
            kind: self.kind,
            extent: [self.extent.0, self.extent.1],
            coords: self
                .coords
                .iter()
                .enumerate()
                .map(|(router, &(x, y))| PlacedRouter { router, x, y })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("layout serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, LayoutError> {
        let file: LayoutFile = serde_json::from_str(s).map_err(|e| LayoutError::Malformed(e.to_string()))?;
        let mut coords = vec![None; file.coords.len()];
        for c in &file.coords {
            match coords.get_mut(c.router) {
                Some(slot @ None) => *slot = Some((c.x, c.y)),
                _ => return Err(LayoutError::Malformed(format!("bad router id {}", c.router))),
            }
        }
        let coords = coords.into_iter().collect::<Option<Vec<_>>>().expect("every slot filled");
        Self::new(file.kind, (file.extent[0], file.extent[1]), coords)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["router", "x", "y"]).expect("in-memory write");
        for (r, &(x, y)) in self.coords.iter().enumerate() {
            w.serialize((r, x, y)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayoutFile {
    pub kind: LayoutKind,
    pub extent: [usize; 2],
    pub coords: Vec<PlacedRouter>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PlacedRouter {
    pub router: usize,
    pub x: usize,
    pub y: usize,
}

fn sn_labels(t: &Topology) -> Result<(usize, &[RouterLabel]), LayoutError> {
    match (t.kind(), t.labels()) {
        (crate::topo::TopologyKind::SlimNoc { q }, Some(labels)) => Ok((*q, labels)),
        _ => Err(LayoutError::NotSlimNoc),
    }
}

fn from_labels(
    t: &Topology,
    kind: LayoutKind,
    f: impl Fn(usize, usize, usize, usize) -> (usize, usize),
) -> Result<Layout, LayoutError> {
    let (q, labels) = sn_labels(t)?;
    let coords = labels
        .iter()
        .map(|l| f(q, l.group_type as usize, l.subgroup, l.position))
        .collect();
    Layout::new(kind, (q, 2 * q), coords)
}

/// `[G|a,b] -> (b, a + Gq)`.
pub fn layout_basic(t: &Topology) -> Result<Layout, LayoutError> {
    from_labels(t, LayoutKind::Basic, |q, g, a, b| (b, a + g * q))
}

/// `[G|a,b] -> (b, 2a - (1 - G))`: subgroups of both types interleave.
pub fn layout_subgr(t: &Topology) -> Result<Layout, LayoutError> {
    from_labels(t, LayoutKind::Subgroup, |_, g, a, b| (b, 2 * a + g - 1))
}

/// Groups (pairs of same-id subgroups) arranged as close to a square as
/// possible. The raw formula can emit `x = 0`, so coordinates are shifted
/// into their bounding box.
pub fn layout_gr(t: &Topology) -> Result<Layout, LayoutError> {
    let (q, labels) = sn_labels(t)?;
    let s2 = ceil_sqrt(2 * q);
    let s1 = ceil_sqrt(q);
    let rows_per_group = (2 * q).div_ceil(s2);
    let raw: Vec<(usize, usize)> = labels
        .iter()
        .map(|l| {
            let t = l.position + l.group_type as usize * q;
            let x = ((l.subgroup - 1) * s2) % (s2 * s1) + t % s2;
            let y = (l.subgroup - 1) / s1 * rows_per_group + t.div_ceil(s2);
            (x, y)
        })
        .collect();
    let min_x = raw.iter().map(|c| c.0).min().unwrap_or(1);
    let min_y = raw.iter().map(|c| c.1).min().unwrap_or(1);
    let coords: Vec<(usize, usize)> = raw.iter().map(|&(x, y)| (x + 1 - min_x, y + 1 - min_y)).collect();
    let extent = (
        coords.iter().map(|c| c.0).max().unwrap_or(0),
        coords.iter().map(|c| c.1).max().unwrap_or(0),
    );
    Layout::new(LayoutKind::Group, extent, coords)
}

/// Uniform random permutation of the `q x 2q` cells.
pub fn layout_rand(t: &Topology, seed: u64) -> Result<Layout, LayoutError> {
    let (q, _) = sn_labels(t)?;
    let mut cells: Vec<(usize, usize)> = (1..=2 * q).flat_map(|y| (1..=q).map(move |x| (x, y))).collect();
    cells.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Layout::new(LayoutKind::Random { seed }, (q, 2 * q), cells)
}

/// Natural placement for mesh, torus and flattened-butterfly variants.
pub fn layout_grid(t: &Topology) -> Result<Layout, LayoutError> {
    let (rows, cols) = t.kind().grid_dims().ok_or(LayoutError::NotGridded)?;
    let coords = (0..t.routers()).map(|r| (r % cols + 1, r / cols + 1)).collect();
    Layout::new(LayoutKind::Grid, (cols, rows), coords)
}

pub fn make_layout(t: &Topology, kind: LayoutKind) -> Result<Layout, LayoutError> {
    match kind {
        LayoutKind::Basic => layout_basic(t),
        LayoutKind::Subgroup => layout_subgr(t),
        LayoutKind::Group => layout_gr(t),
        LayoutKind::Random { seed } => layout_rand(t, seed),
        LayoutKind::Grid => layout_grid(t),
    }
}

fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}
