//! Documents shipped under `fixtures/` at the workspace root.

pub const INVENTORY: &str = include_str!("../../../fixtures/inventory.json");

/// Multi-node MPI code running in a whole-node virtual batch farm.
pub const CRYSTAL: &str = include_str!("../../../fixtures/apps/crystal.json");
/// Containerized analysis stages run in sequence.
pub const CASC: &str = include_str!("../../../fixtures/apps/casc.json");
/// Single-node interactive statistics workload.
pub const NO2: &str = include_str!("../../../fixtures/apps/no2.json");

pub const HPL: &str = include_str!("../../../fixtures/bench/hpl.json");
pub const FIO: &str = include_str!("../../../fixtures/bench/fio.json");
pub const MDTEST: &str = include_str!("../../../fixtures/bench/mdtest.json");
