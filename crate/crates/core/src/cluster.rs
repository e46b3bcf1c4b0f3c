//! Static description of the physical cluster: node classes, networks and
//! storage appliances, plus the per-class HEP-SPEC06 speed calibration.
//!
//! Physical core counts are not listed with the hardware table; they are
//! inferred from the HEP-SPEC06 runs, which used one process per logical core
//! with Hyper-Threading enabled (48 runs on Light nodes, 96 on Fat nodes).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::resources::ResourceVector;

/// Whole-node HS06 score measured on a Light node (48 concurrent runs).
pub const LIGHT_HS06: f64 = 549.7;
/// Whole-node HS06 score measured on a Fat node (96 concurrent runs).
pub const FAT_HS06: f64 = 825.6;

const MIB_PER_GB: u64 = 1024;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("invalid inventory: {0}")]
    InvalidInventory(String),
    #[error("malformed inventory document: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeClass {
    Light,
    Fat,
    Gpu,
}

impl NodeClass {
    pub const ALL: [NodeClass; 3] = [NodeClass::Light, NodeClass::Fat, NodeClass::Gpu];

    pub fn as_str(&self) -> &'static str {
        match self {
            NodeClass::Light => "light",
            NodeClass::Fat => "fat",
            NodeClass::Gpu => "gpu",
        }
    }

    /// Logical cores of the calibrated configuration of this class.
    pub fn logical_cores(&self) -> u32 {
        match self {
            NodeClass::Light | NodeClass::Gpu => 48,
            NodeClass::Fat => 96,
        }
    }
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "light" => Ok(NodeClass::Light),
            "fat" => Ok(NodeClass::Fat),
            "gpu" => Ok(NodeClass::Gpu),
            other => Err(format!("unknown node class {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub class: NodeClass,
    pub physical_cores: u32,
    pub logical_cores: u32,
    pub memory_mib: u64,
    pub gpus: u32,
    pub local_disk_gib: u32,
    /// Whole-node HEP-SPEC06 score.
    pub hs06: f64,
}

impl NodeSpec {
    fn check(&self) -> Result<(), String> {
        if self.logical_cores != 2 * self.physical_cores {
            return Err(format!(
                "{}: logical cores must be twice the physical cores",
                self.id
            ));
        }
        if self.gpus > 0 && self.class != NodeClass::Gpu {
            return Err(format!("{}: only gpu-class nodes carry GPUs", self.id));
        }
        if !(self.hs06 > 0.0) || self.memory_mib == 0 {
            return Err(format!("{}: hs06 and memory must be positive", self.id));
        }
        Ok(())
    }

    /// Calibrated speed of one logical core of this node.
    pub fn speed_per_core(&self) -> f64 {
        self.hs06 / f64::from(self.logical_cores)
    }
}

/// Allocatable capacity of a node.
pub fn capacity(node: &NodeSpec) -> ResourceVector {
    ResourceVector::new(
        1000 * u64::from(node.logical_cores),
        node.memory_mib,
        u64::from(node.gpus),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpeedMode {
    PerNode,
    PerLogicalCore,
}

/// Calibrated HS06 speed of a node class.
///
/// Gpu nodes share the Light nodes' CPUs, so they reuse the Light score; the
/// accelerators themselves have no speed model.
pub fn node_speed(class: NodeClass, mode: SpeedMode) -> f64 {
    let whole = match class {
        NodeClass::Light | NodeClass::Gpu => LIGHT_HS06,
        NodeClass::Fat => FAT_HS06,
    };
    match mode {
        SpeedMode::PerNode => whole,
        SpeedMode::PerLogicalCore => whole / f64::from(class.logical_cores()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkKind {
    InfiniBand,
    Eth10,
    Eth1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    NonBlockingFatTree,
    Flat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkLink {
    pub kind: LinkKind,
    pub bandwidth_gbps: f64,
    pub topology: Topology,
}

impl NetworkLink {
    pub fn of_kind(kind: LinkKind) -> Self {
        let (bandwidth_gbps, topology) = match kind {
            LinkKind::InfiniBand => (56.0, Topology::NonBlockingFatTree),
            LinkKind::Eth10 => (10.0, Topology::Flat),
            LinkKind::Eth1 => (1.0, Topology::Flat),
        };
        Self {
            kind,
            bandwidth_gbps,
            topology,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StorageKind {
    Scratch,
    Archive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageAppliance {
    pub kind: StorageKind,
    pub capacity_tb: u64,
    pub read_cap_kibps: u64,
    pub write_cap_kibps: u64,
    /// Scratch only, filled in by metadata calibration.
    pub metadata_rate_ops_per_s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inventory {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<NetworkLink>,
    pub storage: Vec<StorageAppliance>,
}

impl Inventory {
    pub fn from_json(text: &str) -> Result<Self, ClusterError> {
        let inv: Inventory =
            serde_json::from_str(text).map_err(|e| ClusterError::Parse(e.to_string()))?;
        inv.check()?;
        Ok(inv)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("inventory serializes") + "\n"
    }

    pub fn check(&self) -> Result<(), ClusterError> {
        let mut ids = BTreeSet::new();
        for node in &self.nodes {
            node.check().map_err(ClusterError::InvalidInventory)?;
            if !ids.insert(node.id.as_str()) {
                return Err(ClusterError::InvalidInventory(format!(
                    "duplicate node id {}",
                    node.id
                )));
            }
        }
        for kind in [StorageKind::Scratch, StorageKind::Archive] {
            let n = self.storage.iter().filter(|s| s.kind == kind).count();
            if n != 1 {
                return Err(ClusterError::InvalidInventory(format!(
                    "expected exactly one {kind:?} appliance, found {n}"
                )));
            }
        }
        for s in &self.storage {
            if s.read_cap_kibps == 0 || s.write_cap_kibps == 0 {
                return Err(ClusterError::InvalidInventory(format!(
                    "{:?} caps must be positive",
                    s.kind
                )));
            }
            if s.kind == StorageKind::Archive && s.metadata_rate_ops_per_s.is_some() {
                return Err(ClusterError::InvalidInventory(
                    "the archive appliance has no metadata rate".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn nodes_of(&self, class: NodeClass) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.iter().filter(move |n| n.class == class)
    }

    pub fn storage(&self, kind: StorageKind) -> &StorageAppliance {
        self.storage
            .iter()
            .find(|s| s.kind == kind)
            .expect("inventory holds one appliance per kind")
    }

    pub fn storage_mut(&mut self, kind: StorageKind) -> &mut StorageAppliance {
        self.storage
            .iter_mut()
            .find(|s| s.kind == kind)
            .expect("inventory holds one appliance per kind")
    }

    pub fn link(&self, kind: LinkKind) -> Option<&NetworkLink> {
        self.links.iter().find(|l| l.kind == kind)
    }
}

fn make_nodes<'a>(
    prefix: &'a str,
    count: usize,
    template: &'a NodeSpec,
) -> impl Iterator<Item = NodeSpec> + 'a {
    (1..=count).map(move |i| NodeSpec {
        id: format!("{prefix}{i:02}"),
        ..template.clone()
    })
}

/// The initial cluster configuration: 32 Light, 4 Fat and 4 Gpu nodes, the
/// Scratch and Archive appliances with their measured throughput caps, and
/// the three network fabrics.
pub fn default_inventory() -> Inventory {
    let light = NodeSpec {
        id: String::new(),
        class: NodeClass::Light,
        physical_cores: 24,
        logical_cores: 48,
        memory_mib: 128 * MIB_PER_GB,
        gpus: 0,
        local_disk_gib: 400,
        hs06: LIGHT_HS06,
    };
    let fat = NodeSpec {
        class: NodeClass::Fat,
        physical_cores: 48,
        logical_cores: 96,
        memory_mib: 768 * MIB_PER_GB,
        local_disk_gib: 800 + 2000,
        hs06: FAT_HS06,
        ..light.clone()
    };
    let gpu = NodeSpec {
        class: NodeClass::Gpu,
        gpus: 2,
        local_disk_gib: 800,
        ..light.clone()
    };

    let nodes = make_nodes("L", 32, &light)
        .chain(make_nodes("F", 4, &fat))
        .chain(make_nodes("G", 4, &gpu))
        .collect();

    Inventory {
        nodes,
        links: vec![
            NetworkLink::of_kind(LinkKind::InfiniBand),
            NetworkLink::of_kind(LinkKind::Eth10),
            NetworkLink::of_kind(LinkKind::Eth1),
        ],
        storage: vec![
            StorageAppliance {
                kind: StorageKind::Scratch,
                capacity_tb: 256,
                read_cap_kibps: 2_026_246,
                write_cap_kibps: 2_025_983,
                metadata_rate_ops_per_s: None,
            },
            StorageAppliance {
                kind: StorageKind::Archive,
                capacity_tb: 768,
                read_cap_kibps: 39_314,
                write_cap_kibps: 39_314,
                metadata_rate_ops_per_s: None,
            },
        ],
    }
}
