//! Cycle-level flit simulator.
//!
//! A run is single-threaded and fully determined by its configuration and
//! seed. Sweeps fan independent runs out through [`Exec`](crate::Exec).

mod config;
mod engine;
mod report;
mod sweep;
mod traffic;

pub use config::{buffer_sizes_for, cycle_time_ns, BufferPlan, Buffering, LinkBuffer, LinkMode, RouterKind, SimConfig};
pub use engine::run;
pub use report::{curve_to_csv, CurvePoint, PacketRecord, SimReport};
pub use sweep::{mean_zero_load_latency, saturation_point, saturation_throughput, sweep, zero_load_latency};
pub use traffic::{bit_reverse, bit_shuffle, Pattern, Trace, TraceRecord, TrafficGen};

use thiserror::Error;

use crate::exec::Exec;
use crate::layout::Layout;
use crate::route::{assign_vcs, build_tables, check_deadlock_free, RouteError, RoutingTable, VcPolicy};
use crate::topo::Topology;

#[derive(Debug, Error)]
pub enum SetupError {
    #[error("routing is not deadlock free: channel dependency cycle through {0} channels")]
    CyclicDependencies(usize),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error("layout has {layout} routers, topology has {topology}")]
    LayoutMismatch { layout: usize, topology: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error("flit stalled for {waited} cycles at router {router} (cycle {cycle})")]
    Stall { cycle: u64, router: usize, waited: u64 },
}

/// A topology with placement, routing and a deadlock-checked VC policy.
///
/// The only constructors run the channel-dependency check, so every
/// `Network` handed to [`run`] is known to be deadlock free.
#[derive(Clone, Debug)]
pub struct Network {
    topology: Topology,
    layout: Layout,
    tables: RoutingTable,
    policy: VcPolicy,
}

impl Network {
    /// Builds default routing tables and VC policy for the topology family.
    pub fn new(topology: Topology, layout: Layout, vcs: usize, exec: Exec) -> Result<Self, SetupError> {
        let tables = build_tables(&topology, exec)?;
        let policy = assign_vcs(&topology, &tables, vcs)?;
        Self::with_parts(topology, layout, tables, policy, exec)
    }

    pub fn with_parts(
        topology: Topology,
        layout: Layout,
        tables: RoutingTable,
        policy: VcPolicy,
        exec: Exec,
    ) -> Result<Self, SetupError> {
        if layout.routers() != topology.routers() {
            return Err(SetupError::LayoutMismatch {
                layout: layout.routers(),
                topology: topology.routers(),
            });
        }
        if tables.routers() != topology.routers() {
            return Err(SetupError::InvalidConfig("routing table size differs from topology".into()));
        }
        let verdict = check_deadlock_free(&topology, &tables, &policy, exec);
        if let Some(cycle) = verdict.cycle {
            return Err(SetupError::CyclicDependencies(cycle.len()));
        }
        Ok(Self {
            topology,
            layout,
            tables,
            policy,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn tables(&self) -> &RoutingTable {
        &self.tables
    }

    pub fn policy(&self) -> &VcPolicy {
        &self.policy
    }

    pub fn vcs(&self) -> usize {
        self.policy.vcs()
    }
}
