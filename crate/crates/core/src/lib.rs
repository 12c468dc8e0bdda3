//! Slim NoC topology toolkit: finite-field graph construction, die layouts,
//! wire and buffer cost models, deadlock-free routing and a cycle-level
//! flit simulator.

pub mod exec;
pub mod ff;
pub mod cost;
pub mod layout;
pub mod presets;
pub mod route;
pub mod sim;
pub mod topo;
pub mod wiring;

pub use exec::Exec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
