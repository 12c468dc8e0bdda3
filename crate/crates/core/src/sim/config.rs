use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Network, Pattern, SetupError};
use crate::cost::avg_wire_length;
use crate::topo::TopologyKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouterKind {
    Edge,
    Central,
}

/// Buffer organisation of routers and links.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Buffering {
    /// Edge buffers of 5 flits per VC.
    EbSmall,
    /// Edge buffers of 15 flits per VC.
    EbLarge,
    /// Edge buffers sized to the round trip of each link with H = 9.
    EbVarS,
    /// Edge buffers sized to the round trip of each link with H = 1.
    EbVarN,
    /// Central-buffer routers with a shared buffer of the given size.
    Cbr(usize),
    /// Elastic links only; no router buffers beyond staging.
    ElLinks,
}

impl Buffering {
    pub fn router_kind(self) -> RouterKind {
        match self {
            Buffering::Cbr(_) => RouterKind::Central,
            _ => RouterKind::Edge,
        }
    }

    /// Whether links store flits themselves (per-VC pipeline latches with
    /// backpressure) instead of using credit flow control.
    pub fn elastic_links(self) -> bool {
        matches!(self, Buffering::Cbr(_) | Buffering::ElLinks)
    }
}

impl fmt::Display for Buffering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Buffering::EbSmall => write!(f, "EB-Small"),
            Buffering::EbLarge => write!(f, "EB-Large"),
            Buffering::EbVarS => write!(f, "EB-Var-S"),
            Buffering::EbVarN => write!(f, "EB-Var-N"),
            Buffering::Cbr(x) => write!(f, "CBR-{x}"),
            Buffering::ElLinks => write!(f, "EL-Links"),
        }
    }
}

impl FromStr for Buffering {
    type Err = SetupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Ok(match lower.as_str() {
            "eb-small" => Buffering::EbSmall,
            "eb-large" => Buffering::EbLarge,
            "eb-var-s" => Buffering::EbVarS,
            "eb-var-n" => Buffering::EbVarN,
            "el-links" => Buffering::ElLinks,
            _ => match lower.strip_prefix("cbr-").map(str::parse) {
                Some(Ok(x)) => Buffering::Cbr(x),
                _ => return Err(SetupError::InvalidConfig(format!("unknown buffering '{s}'"))),
            },
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkMode {
    /// Each link's latency follows its own Manhattan length.
    #[default]
    Exact,
    /// Every link uses the network's mean wire length.
    Average,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub buffering: Buffering,
    pub packet_flits: usize,
    /// Offered load in flits per node per cycle.
    pub injection_rate: f64,
    pub pattern: Pattern,
    /// Grid hops per link cycle.
    pub h: usize,
    pub warmup_cycles: u64,
    pub measure_cycles: u64,
    /// Upper bound on the drain phase that waits for measured packets.
    pub drain_cycles: u64,
    pub seed: u64,
    pub link_mode: LinkMode,
    /// Cycles a flit may sit without moving before the run aborts.
    pub stall_bound: u64,
    pub injection_queue: usize,
    /// Link bandwidth in flits per cycle, used to size EB-Var buffers.
    pub b_over_l: f64,
    /// Answer every trace request with a reply packet.
    pub reply: bool,
    pub record_packets: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            buffering: Buffering::EbVarN,
            packet_flits: 6,
            injection_rate: 0.1,
            pattern: Pattern::Random,
            h: 1,
            warmup_cycles: 1_000,
            measure_cycles: 10_000,
            drain_cycles: 50_000,
            seed: 1,
            link_mode: LinkMode::Exact,
            stall_bound: 50_000,
            injection_queue: 20,
            b_over_l: 1.0,
            reply: false,
            record_packets: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SetupError> {
        let bad = |m: &str| Err(SetupError::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.injection_rate) {
            return bad("injection rate must lie in [0, 1]");
        }
        if self.measure_cycles == 0 {
            return bad("measure_cycles must be at least 1");
        }
        if self.packet_flits == 0 || self.packet_flits > u16::MAX as usize {
            return bad("packet_flits must be at least 1");
        }
        if self.h == 0 {
            return bad("H must be at least 1");
        }
        if self.injection_queue == 0 {
            return bad("injection queue must hold at least one flit");
        }
        if !(self.b_over_l > 0.0) {
            return bad("b/L must be positive");
        }
        if self.stall_bound == 0 {
            return bad("stall bound must be positive");
        }
        Ok(())
    }
}

/// Router clock period used to convert cycles to nanoseconds.
pub fn cycle_time_ns(kind: &TopologyKind) -> f64 {
    match kind {
        TopologyKind::Torus { .. } | TopologyKind::Mesh { .. } => 0.4,
        TopologyKind::Fbf { .. } => 0.6,
        _ => 0.5,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkBuffer {
    pub from: usize,
    pub to: usize,
    pub dist: f64,
    /// Link traversal cycles.
    pub latency: usize,
    /// Downstream input buffer per VC.
    pub depth_per_vc: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BufferPlan {
    pub buffering: Buffering,
    /// One entry per directed link, ordered by source router then port.
    pub links: Vec<LinkBuffer>,
    /// Pipeline registers behind each staging slot that let an elastic
    /// input sustain one flit per cycle through the two-cycle router.
    pub pipeline_registers: usize,
    pub cb_capacity: usize,
    pub injection_queue: usize,
}

pub(crate) const STAGING_PIPELINE_REGS: usize = 2;

/// Link latencies and buffer depths for a network under `cfg`.
pub fn buffer_sizes_for(net: &Network, cfg: &SimConfig) -> BufferPlan {
    let t = net.topology();
    let layout = net.layout();
    let vcs = net.vcs();
    let mean = avg_wire_length(t, layout);
    let mut links = Vec::with_capacity(2 * t.edge_count());
    for a in 0..t.routers() {
        for &b in t.neighbors(a) {
            let dist = match cfg.link_mode {
                LinkMode::Exact => layout.manhattan(a, b) as f64,
                LinkMode::Average => mean,
            };
            let latency = hops_to_cycles(dist, cfg.h);
            let per_vc = match cfg.buffering {
                Buffering::EbSmall => 5,
                Buffering::EbLarge => 15,
                Buffering::EbVarS => round_trip_depth(dist, 9, cfg.b_over_l),
                Buffering::EbVarN => round_trip_depth(dist, 1, cfg.b_over_l),
                Buffering::Cbr(_) | Buffering::ElLinks => 1,
            };
            links.push(LinkBuffer {
                from: a,
                to: b,
                dist,
                latency,
                depth_per_vc: per_vc,
                total: per_vc * vcs,
            });
        }
    }
    BufferPlan {
        buffering: cfg.buffering,
        links,
        pipeline_registers: if cfg.buffering.elastic_links() { STAGING_PIPELINE_REGS } else { 0 },
        cb_capacity: match cfg.buffering {
            Buffering::Cbr(x) => x,
            _ => 0,
        },
        injection_queue: cfg.injection_queue,
    }
}

pub(crate) fn hops_to_cycles(dist: f64, h: usize) -> usize {
    ((dist / h as f64) - 1e-9).ceil().max(1.0) as usize
}

fn round_trip_depth(dist: f64, h: usize, b_over_l: f64) -> usize {
    let t = 2 * ((dist / h as f64) - 1e-9).ceil().max(0.0) as usize + 3;
    ((t as f64 * b_over_l) - 1e-9).ceil().max(1.0) as usize
}
