//! Named comparison configurations for the two size classes (N ≈ 200 and
//! N = 1296), plus the 1024-node Slim NoC.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::exec::Exec;
use crate::layout::{make_layout, Layout, LayoutError, LayoutKind};
use crate::sim::{Network, SetupError};
use crate::topo::{build_cmesh, build_fbf, build_pfbf, build_torus, slim_noc, TopoError, Topology};

/// Seed of the `*_rand` layouts.
pub const RAND_LAYOUT_SEED: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Torus { rows: usize, cols: usize },
    Mesh { rows: usize, cols: usize },
    Fbf { rows: usize, cols: usize },
    Pfbf { px: usize, py: usize, sub_rows: usize, sub_cols: usize },
    SlimNoc { q: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub family: Family,
    pub p: usize,
    /// Network radix.
    pub k_net: usize,
    /// Router grid, rows x cols.
    pub grid: (usize, usize),
    pub nodes: usize,
    pub vcs: usize,
    pub layout: LayoutKind,
}

#[derive(Debug, Error)]
pub enum PresetError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error(transparent)]
    Topo(#[from] TopoError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Setup(#[from] SetupError),
}

const fn grid_preset(name: &'static str, family: Family, p: usize, k_net: usize, grid: (usize, usize), vcs: usize) -> Preset {
    Preset {
        name,
        family,
        p,
        k_net,
        grid,
        nodes: grid.0 * grid.1 * p,
        vcs,
        layout: LayoutKind::Grid,
    }
}

const fn sn_preset(name: &'static str, q: usize, p: usize, grid: (usize, usize), layout: LayoutKind) -> Preset {
    let u: isize = match q % 4 {
        0 => 0,
        1 => 1,
        _ => -1,
    };
    Preset {
        name,
        family: Family::SlimNoc { q },
        p,
        k_net: ((3 * q as isize - u) / 2) as usize,
        grid,
        nodes: 2 * q * q * p,
        vcs: 2,
        layout,
    }
}

const RAND: LayoutKind = LayoutKind::Random { seed: RAND_LAYOUT_SEED };

static PRESETS: [Preset; 28] = [
    grid_preset("t2d3", Family::Torus { rows: 8, cols: 8 }, 3, 4, (8, 8), 2),
    grid_preset("t2d4", Family::Torus { rows: 10, cols: 5 }, 4, 4, (10, 5), 2),
    grid_preset("t2d9", Family::Torus { rows: 12, cols: 12 }, 9, 4, (12, 12), 2),
    grid_preset("t2d8", Family::Torus { rows: 18, cols: 9 }, 8, 4, (18, 9), 2),
    grid_preset("cm3", Family::Mesh { rows: 8, cols: 8 }, 3, 4, (8, 8), 2),
    grid_preset("cm4", Family::Mesh { rows: 10, cols: 5 }, 4, 4, (10, 5), 2),
    grid_preset("cm9", Family::Mesh { rows: 12, cols: 12 }, 9, 4, (12, 12), 2),
    grid_preset("cm8", Family::Mesh { rows: 18, cols: 9 }, 8, 4, (18, 9), 2),
    grid_preset("fbf3", Family::Fbf { rows: 8, cols: 8 }, 3, 14, (8, 8), 2),
    grid_preset("fbf4", Family::Fbf { rows: 10, cols: 5 }, 4, 13, (10, 5), 2),
    grid_preset("fbf9", Family::Fbf { rows: 12, cols: 12 }, 9, 22, (12, 12), 2),
    grid_preset("fbf8", Family::Fbf { rows: 18, cols: 9 }, 8, 25, (18, 9), 2),
    grid_preset(
        "pfbf3",
        Family::Pfbf { px: 2, py: 2, sub_rows: 4, sub_cols: 4 },
        3,
        8,
        (8, 8),
        4,
    ),
    grid_preset(
        "pfbf4",
        Family::Pfbf { px: 1, py: 2, sub_rows: 5, sub_cols: 5 },
        4,
        9,
        (10, 5),
        4,
    ),
    grid_preset(
        "pfbf9",
        Family::Pfbf { px: 2, py: 2, sub_rows: 6, sub_cols: 6 },
        9,
        12,
        (12, 12),
        4,
    ),
    grid_preset(
        "pfbf8",
        Family::Pfbf { px: 1, py: 2, sub_rows: 9, sub_cols: 9 },
        8,
        17,
        (18, 9),
        4,
    ),
    sn_preset("sn_basic", 5, 4, (10, 5), LayoutKind::Basic),
    sn_preset("sn_subgr", 5, 4, (10, 5), LayoutKind::Subgroup),
    sn_preset("sn_gr", 5, 4, (10, 5), LayoutKind::Group),
    sn_preset("sn_rand", 5, 4, (10, 5), RAND),
    sn_preset("snl_basic", 9, 8, (18, 9), LayoutKind::Basic),
    sn_preset("snl_subgr", 9, 8, (18, 9), LayoutKind::Subgroup),
    sn_preset("snl_gr", 9, 8, (18, 9), LayoutKind::Group),
    sn_preset("snl_rand", 9, 8, (18, 9), RAND),
    sn_preset("sn1024_basic", 8, 8, (16, 8), LayoutKind::Basic),
    sn_preset("sn1024_subgr", 8, 8, (16, 8), LayoutKind::Subgroup),
    sn_preset("sn1024_gr", 8, 8, (16, 8), LayoutKind::Group),
    sn_preset("sn1024_rand", 8, 8, (16, 8), RAND),
];

pub fn presets() -> &'static [Preset] {
    &PRESETS
}

pub fn preset(name: &str) -> Result<&'static Preset, PresetError> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| PresetError::UnknownPreset(name.to_string()))
}

impl Preset {
    pub fn topology(&self) -> Result<Topology, PresetError> {
        let p = self.p;
        Ok(match self.family {
            Family::Torus { rows, cols } => build_torus(rows, cols, p)?,
            Family::Mesh { rows, cols } => build_cmesh(rows, cols, p)?,
            Family::Fbf { rows, cols } => build_fbf(rows, cols, p)?,
            Family::Pfbf {
                px,
                py,
                sub_rows,
                sub_cols,
            } => build_pfbf(px, py, sub_rows, sub_cols, p)?,
            Family::SlimNoc { q } => slim_noc(q, p)?,
        })
    }

    pub fn layout(&self, t: &Topology) -> Result<Layout, PresetError> {
        Ok(make_layout(t, self.layout)?)
    }

    /// Topology, layout, routing tables and VC policy, deadlock-checked.
    pub fn network(&self, exec: Exec) -> Result<Network, PresetError> {
        let t = self.topology()?;
        let l = self.layout(&t)?;
        Ok(Network::new(t, l, self.vcs, exec)?)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (p={}, k'={}, {}x{} routers, N={})",
            self.name, self.p, self.k_net, self.grid.0, self.grid.1, self.nodes
        )
    }
}
