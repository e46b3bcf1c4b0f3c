//! Provisioning engine and deterministic simulator for a heterogeneous HPC
//! cluster.
//!
//! The cluster is carved into sandboxed per-application partitions through an
//! offer-based allocator. Three execution models sit on top of it: virtual
//! batch farms with matchmaking, linear stage pipelines, and single-node
//! userspace sessions. Every state transition is recorded in an append-only
//! [`EventLog`](sim::EventLog) and the whole system state can be rebuilt by
//! replaying it.
//!
//! Performance is never measured, only modeled: compute time is expressed in
//! HEP-SPEC06 seconds against per-node-class calibration, storage is shared
//! max-min fairly under the measured appliance caps, and parallel LINPACK runs
//! follow a locked-step timing model.

pub mod alloc;
pub mod bench;
pub mod cluster;
pub mod control;
pub mod error;
pub mod farm;
pub mod fixtures;
pub mod fuzz;
pub mod manifest;
pub mod par;
pub mod pipeline;
pub mod resources;
pub mod session;
pub mod sim;

pub use control::{Command, Outcome, System, SystemState};
pub use error::{Error, Result};
pub use resources::ResourceVector;
pub use sim::SimTime;
