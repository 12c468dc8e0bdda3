//! Manhattan wire placement, per-cell crossing counts and the technology
//! wiring-density constraint.

use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::layout::Layout;
use crate::topo::Topology;

pub type Cell = (usize, usize);

/// Two-segment Manhattan polyline from `a` to `b`.
///
/// When the horizontal offset dominates the wire first runs along y to
/// `(x_a, y_b)`; otherwise it first runs along x to `(x_b, y_a)`. Collinear
/// endpoints yield a single segment.
pub fn place_wire(a: Cell, b: Cell) -> Vec<Cell> {
    let bend = if a.0.abs_diff(b.0) > a.1.abs_diff(b.1) {
        (a.0, b.1)
    } else {
        (b.0, a.1)
    };
    if bend == a || bend == b {
        vec![a, b]
    } else {
        vec![a, bend, b]
    }
}

/// Every grid cell a polyline passes through, endpoints included, each once.
pub fn path_cells(path: &[Cell]) -> Vec<Cell> {
    let mut cells = vec![path[0]];
    for seg in path.windows(2) {
        let (from, to) = (seg[0], seg[1]);
        let mut cur = from;
        while cur != to {
            cur = (step(cur.0, to.0), step(cur.1, to.1));
            cells.push(cur);
        }
    }
    cells
}

fn step(from: usize, to: usize) -> usize {
    use std::cmp::Ordering::*;
    match from.cmp(&to) {
        Less => from + 1,
        Greater => from - 1,
        Equal => from,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirePath {
    pub from: usize,
    pub to: usize,
    pub points: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirePlan {
    pub paths: Vec<WirePath>,
    pub link_width: usize,
}

pub const DEFAULT_LINK_WIDTH: usize = 128;

/// Places every edge, oriented from the lower router index.
pub fn plan_wires(t: &Topology, layout: &Layout, link_width: usize, exec: Exec) -> WirePlan {
    let edges: Vec<(usize, usize)> = t.edges().collect();
    let paths = exec.map(&edges, |&(i, j)| WirePath {
        from: i,
        to: j,
        points: place_wire(layout.pos(i), layout.pos(j)),
    });
    WirePlan { paths, link_width }
}

/// Link-crossing count for every cell of the layout extent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossingGrid {
    extent: (usize, usize),
    counts: Vec<u32>,
}

impl CrossingGrid {
    pub fn extent(&self) -> (usize, usize) {
        self.extent
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.counts[(y - 1) * self.extent.0 + (x - 1)]
    }

    pub fn max(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Nonzero cells as `(x, y, count)`, row-major.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        let w = self.extent.0;
        self.counts
            .iter()
            .enumerate()
            .map(move |(i, &c)| (i % w + 1, i / w + 1, c))
    }

    /// Heatmap with one CSV row per grid row, y ascending.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in self.counts.chunks(self.extent.0.max(1)) {
            w.write_record(row.iter().map(u32::to_string)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

pub fn crossing_counts(layout: &Layout, plan: &WirePlan, exec: Exec) -> CrossingGrid {
    let extent = layout.extent();
    let covered = exec.map(&plan.paths, |p| path_cells(&p.points));
    let mut counts = vec![0u32; extent.0 * extent.1];
    for cells in covered {
        for (x, y) in cells {
            counts[(y - 1) * extent.0 + (x - 1)] += 1;
        }
    }
    CrossingGrid { extent, counts }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TechProfile {
    pub node_nm: u32,
    /// Wires per millimetre on one metal layer.
    pub density: f64,
    /// Side of one router tile in millimetres.
    pub core_side_mm: f64,
}

impl TechProfile {
    pub fn for_node(node_nm: u32) -> Option<Self> {
        let (density, core_side_mm) = match node_nm {
            45 => (3500.0, 2.0),
            22 => (7000.0, 1.0),
            11 => (14000.0, 0.5),
            _ => return None,
        };
        Some(Self {
            node_nm,
            density,
            core_side_mm,
        })
    }

    /// Wires that fit across one tile.
    pub fn max_wires(&self) -> f64 {
        self.density * self.core_side_mm
    }
}

/// Whether cell counts are multiplied by the link width before comparing
/// against the wire budget.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    #[default]
    Wires,
    Links,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: usize,
    pub y: usize,
    pub links: u32,
    pub load: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub pass: bool,
    pub max_links: u32,
    pub max_load: f64,
    pub limit: f64,
    pub link_width: usize,
    pub mode: CountMode,
    pub tech: TechProfile,
    pub violations: Vec<Violation>,
}

impl ConstraintCheck {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("check serializes")
    }
}

pub fn check_constraint(grid: &CrossingGrid, tech: TechProfile, link_width: usize, mode: CountMode) -> ConstraintCheck {
    let scale = match mode {
        CountMode::Wires => link_width as f64,
        CountMode::Links => 1.0,
    };
    let limit = tech.max_wires();
    let violations: Vec<Violation> = grid
        .cells()
        .filter(|&(_, _, c)| c > 0 && c as f64 * scale > limit)
        .map(|(x, y, links)| Violation {
            x,
            y,
            links,
            load: links as f64 * scale,
        })
        .collect();
    ConstraintCheck {
        pass: violations.is_empty(),
        max_links: grid.max(),
        max_load: grid.max() as f64 * scale,
        limit,
        link_width,
        mode,
        tech,
        violations,
    }
}
