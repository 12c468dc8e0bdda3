//! Wire-length and buffer-space models.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::layout::{layout_subgr, Layout, LayoutError};
use crate::topo::{slim_noc, sn_params, TopoError, Topology};

#[derive(Debug, Error)]
pub enum CostError {
    #[error("invalid buffer parameters: {0}")]
    InvalidParams(&'static str),
    #[error(transparent)]
    Topo(#[from] TopoError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BufferParams {
    /// Link bandwidth in flits per cycle.
    pub b_over_l: f64,
    pub vc: usize,
    /// Grid hops a flit covers per cycle (1 for plain wires, 9 for SMART).
    pub h: usize,
    /// Central buffer capacity in flits.
    pub cb_size: usize,
}

impl BufferParams {
    pub fn new(b_over_l: f64, vc: usize, h: usize, cb_size: usize) -> Result<Self, CostError> {
        if !(b_over_l > 0.0 && b_over_l.is_finite()) {
            return Err(CostError::InvalidParams("b/L must be positive"));
        }
        if vc == 0 {
            return Err(CostError::InvalidParams("at least one virtual channel is required"));
        }
        if h == 0 {
            return Err(CostError::InvalidParams("H must be at least 1"));
        }
        Ok(Self {
            b_over_l,
            vc,
            h,
            cb_size,
        })
    }
}

impl Default for BufferParams {
    fn default() -> Self {
        Self {
            b_over_l: 1.0,
            vc: 2,
            h: 1,
            cb_size: 20,
        }
    }
}

/// Round-trip time in cycles over a wire of `dist` grid hops.
pub fn rtt(dist: usize, h: usize) -> usize {
    2 * dist.div_ceil(h) + 3
}

pub fn rtt_between(layout: &Layout, i: usize, j: usize, h: usize) -> usize {
    rtt(layout.manhattan(i, j), h)
}

/// Buffer depth in flits that keeps a link of `dist` hops fully utilized.
pub fn buffer_for_distance(dist: usize, params: &BufferParams) -> usize {
    let exact = rtt(dist, params.h) as f64 * params.b_over_l * params.vc as f64;
    // Guard against representation noise such as 26.000000000000004.
    (exact - 1e-9).ceil().max(0.0) as usize
}

pub fn edge_buffer_size(layout: &Layout, i: usize, j: usize, params: &BufferParams) -> usize {
    buffer_for_distance(layout.manhattan(i, j), params)
}

/// Mean Manhattan length over all links.
pub fn avg_wire_length(t: &Topology, layout: &Layout) -> f64 {
    let (sum, n) = t
        .edges()
        .fold((0usize, 0usize), |(s, n), (i, j)| (s + layout.manhattan(i, j), n + 1));
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}

/// Total edge-buffer space: one buffer at each end of every link.
pub fn total_edge_buffers(t: &Topology, layout: &Layout, params: &BufferParams) -> u64 {
    t.edges()
        .map(|(i, j)| 2 * edge_buffer_size(layout, i, j, params) as u64)
        .sum()
}

/// Total buffer space with central-buffer routers.
pub fn total_central_buffers(routers: usize, k_net: usize, params: &BufferParams) -> u64 {
    routers as u64 * (params.cb_size as u64 + 2 * k_net as u64 * params.vc as u64)
}

/// A single buffer size applied to every edge port.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniformBuffer {
    Min,
    Max,
    Fixed(usize),
}

pub fn uniform_buffer_size(t: &Topology, layout: &Layout, params: &BufferParams, mode: UniformBuffer) -> usize {
    let sizes = t.edges().map(|(i, j)| edge_buffer_size(layout, i, j, params));
    match mode {
        UniformBuffer::Min => sizes.min().unwrap_or(0),
        UniformBuffer::Max => sizes.max().unwrap_or(0),
        UniformBuffer::Fixed(n) => n,
    }
}

pub fn total_uniform_buffers(t: &Topology, layout: &Layout, params: &BufferParams, mode: UniformBuffer) -> u64 {
    2 * t.edge_count() as u64 * uniform_buffer_size(t, layout, params, mode) as u64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCost {
    pub i: usize,
    pub j: usize,
    pub dist: usize,
    #[serde(rename = "T")]
    pub rtt: usize,
    pub delta: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub topology: String,
    pub layout: String,
    pub params: BufferParams,
    #[serde(rename = "M")]
    pub m: f64,
    pub delta_eb: u64,
    pub delta_cb: u64,
    pub per_edge: Vec<EdgeCost>,
}

impl CostReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn cost_report(t: &Topology, layout: &Layout, params: &BufferParams, exec: Exec) -> CostReport {
    let edges: Vec<(usize, usize)> = t.edges().collect();
    let per_edge = exec.map(&edges, |&(i, j)| {
        let dist = layout.manhattan(i, j);
        EdgeCost {
            i,
            j,
            dist,
            rtt: rtt(dist, params.h),
            delta: buffer_for_distance(dist, params),
        }
    });
    let m = if per_edge.is_empty() {
        0.0
    } else {
        per_edge.iter().map(|e| e.dist).sum::<usize>() as f64 / per_edge.len() as f64
    };
    CostReport {
        topology: t.name().to_string(),
        layout: layout.kind().short_name().to_string(),
        params: *params,
        m,
        delta_eb: per_edge.iter().map(|e| 2 * e.delta as u64).sum(),
        delta_cb: total_central_buffers(t.routers(), t.network_radix(), params),
        per_edge,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub q: usize,
    pub n_r: usize,
    /// Node count with concentration `floor(k'/2)`.
    pub n: usize,
    #[serde(rename = "M")]
    pub m: f64,
    pub ratio: f64,
}

/// `M / cbrt(N)` under the subgroup layout for each q.
pub fn scaling_envelope(qs: &[usize], exec: Exec) -> Result<Vec<ScalingRow>, CostError> {
    let rows = exec.map(qs, |&q| -> Result<ScalingRow, CostError> {
        let cfg = sn_params(q, 1)?;
        let p = (cfg.k_net / 2).max(1);
        let t = slim_noc(q, p)?;
        let m = avg_wire_length(&t, &layout_subgr(&t)?);
        let n = cfg.n_r * p;
        Ok(ScalingRow {
            q,
            n_r: cfg.n_r,
            n,
            m,
            ratio: m / (n as f64).cbrt(),
        })
    });
    rows.into_iter().collect()
}

/// `max / min` of the scaling ratios; 1.0 for fewer than two rows.
pub fn envelope_band(rows: &[ScalingRow]) -> f64 {
    let max = rows.iter().map(|r| r.ratio).fold(f64::MIN, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::MAX, f64::min);
    if rows.len() < 2 {
        1.0
    } else {
        max / min
    }
}
