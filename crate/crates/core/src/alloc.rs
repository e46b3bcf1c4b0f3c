//! Offer-based two-level allocation.
//!
//! The allocator snapshots free capacity as one [`Offer`] per node, and an
//! application framework turns a batch of requests into [`Placement`]s
//! against those offers. Batches are all-or-nothing: a half-deployed
//! sub-cluster is useless, so a single unsatisfiable request fails the whole
//! batch and nothing is placed.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{capacity, Inventory, NodeClass};
use crate::resources::ResourceVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocError {
    #[error("insufficient resources for request #{index} ({role} {share} on {target})")]
    InsufficientResources {
        index: usize,
        role: Role,
        share: ResourceVector,
        target: Target,
    },
    #[error("request #{index} asks for an empty share")]
    EmptyShare { index: usize },
    #[error("corrupt allocation state: {0}")]
    CorruptState(String),
    #[error("partition {0} is already released")]
    AlreadyReleased(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Access,
    Manager,
    Executor,
    StageTask,
    SessionExec,
    Child,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Role::Access => "access",
            Role::Manager => "manager",
            Role::Executor => "executor",
            Role::StageTask => "stage-task",
            Role::SessionExec => "session-exec",
            Role::Child => "child",
        };
        f.write_str(name)
    }
}

/// Free capacity of one node at one allocation epoch.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Offer {
    pub node_id: String,
    pub available: ResourceVector,
    pub epoch: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub container_id: String,
    pub app_id: String,
    pub node_id: String,
    pub share: ResourceVector,
    pub role: Role,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionState {
    Deploying,
    Running,
    Released,
}

/// A sandboxed sub-cluster: every container one deployment owns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub partition_id: String,
    pub app_id: String,
    pub placements: Vec<Placement>,
    pub state: PartitionState,
}

/// Which nodes a request may land on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Class(NodeClass),
    /// The class first, then any node.
    PreferClass(NodeClass),
    Any,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Class(c) => write!(f, "{c} nodes"),
            Target::PreferClass(c) => write!(f, "{c} nodes or any node"),
            Target::Any => f.write_str("any node"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementRequest {
    pub role: Role,
    /// Ignored for whole-node requests, which take the node's full capacity.
    pub share: ResourceVector,
    pub target: Target,
    pub whole_node: bool,
}

impl PlacementRequest {
    pub fn fractional(role: Role, share: ResourceVector, target: Target) -> Self {
        Self {
            role,
            share,
            target,
            whole_node: false,
        }
    }

    pub fn whole(role: Role, class: NodeClass) -> Self {
        Self {
            role,
            share: ResourceVector::ZERO,
            target: Target::Class(class),
            whole_node: true,
        }
    }
}

pub fn container_id(seq: u64) -> String {
    format!("c{seq:06}")
}

/// One offer per node with non-zero free capacity, in inventory order.
pub fn make_offers(
    inv: &Inventory,
    live: &[Placement],
    epoch: u64,
) -> Result<Vec<Offer>, AllocError> {
    let mut used: BTreeMap<&str, ResourceVector> = BTreeMap::new();
    for p in live {
        if inv.node(&p.node_id).is_none() {
            return Err(AllocError::CorruptState(format!(
                "{} is placed on unknown node {}",
                p.container_id, p.node_id
            )));
        }
        *used.entry(&p.node_id).or_default() += p.share;
    }
    let mut offers = Vec::with_capacity(inv.nodes.len());
    for node in &inv.nodes {
        let taken = used.get(node.id.as_str()).copied().unwrap_or_default();
        let available = capacity(node).checked_sub(&taken).ok_or_else(|| {
            AllocError::CorruptState(format!("node {} over-allocated: {taken}", node.id))
        })?;
        if !available.is_zero() {
            offers.push(Offer {
                node_id: node.id.clone(),
                available,
                epoch,
            });
        }
    }
    Ok(offers)
}

/// Working view of an offer set while a batch is being placed.
struct Pool<'a> {
    inv: &'a Inventory,
    free: BTreeMap<String, ResourceVector>,
}

impl<'a> Pool<'a> {
    fn new(inv: &'a Inventory, offers: &[Offer]) -> Self {
        if let Some(first) = offers.first() {
            debug_assert!(
                offers.iter().all(|o| o.epoch == first.epoch),
                "offers span epochs"
            );
        }
        let free = offers
            .iter()
            .map(|o| (o.node_id.clone(), o.available))
            .collect();
        Self { inv, free }
    }

    fn candidates(
        &self,
        class: Option<NodeClass>,
    ) -> impl Iterator<Item = (&String, &ResourceVector)> {
        self.free.iter().filter(move |(id, _)| {
            class.is_none_or(|c| self.inv.node(id).is_some_and(|n| n.class == c))
        })
    }

    fn pick(
        &self,
        req: &PlacementRequest,
        class: Option<NodeClass>,
    ) -> Option<(String, ResourceVector)> {
        if req.whole_node {
            // Every full node of one class leaves the same remainder: lowest id wins.
            return self
                .candidates(class)
                .find(|(id, avail)| self.inv.node(id).is_some_and(|n| capacity(n) == **avail))
                .map(|(id, avail)| (id.clone(), *avail));
        }
        self.candidates(class)
            .filter_map(|(id, avail)| Some((avail.checked_sub(&req.share)?.fit_key(), id)))
            .min()
            .map(|(_, id)| (id.clone(), req.share))
    }

    fn take(&mut self, req: &PlacementRequest) -> Option<(String, ResourceVector)> {
        let chosen = match req.target {
            Target::Class(c) => self.pick(req, Some(c)),
            Target::PreferClass(c) => self.pick(req, Some(c)).or_else(|| self.pick(req, None)),
            Target::Any => self.pick(req, None),
        }?;
        let slot = self.free.get_mut(&chosen.0).expect("picked from the pool");
        *slot = slot.checked_sub(&chosen.1).expect("picked share fits");
        Some(chosen)
    }
}

/// Places a batch of requests against one epoch's offers.
///
/// Whole-node requests need a node whose offer equals its full capacity.
/// Fractional requests are packed best-fit: the node left with the fewest
/// millicores, then the least memory, with ties broken by ascending node id.
/// Container ids are numbered from `first_container`.
pub fn place(
    app_id: &str,
    requests: &[PlacementRequest],
    offers: &[Offer],
    inv: &Inventory,
    first_container: u64,
) -> Result<Vec<Placement>, AllocError> {
    let mut pool = Pool::new(inv, offers);
    let mut placements = Vec::with_capacity(requests.len());
    for (index, req) in requests.iter().enumerate() {
        if !req.whole_node && req.share.is_zero() {
            return Err(AllocError::EmptyShare { index });
        }
        let (node_id, share) = pool.take(req).ok_or(AllocError::InsufficientResources {
            index,
            role: req.role,
            share: req.share,
            target: req.target,
        })?;
        placements.push(Placement {
            container_id: container_id(first_container + index as u64),
            app_id: app_id.to_string(),
            node_id,
            share,
            role: req.role,
        });
    }
    Ok(placements)
}

/// Places as many copies of `request` as fit, up to `max`.
pub fn place_up_to(
    app_id: &str,
    request: &PlacementRequest,
    max: usize,
    offers: &[Offer],
    inv: &Inventory,
    first_container: u64,
) -> Vec<Placement> {
    let mut pool = Pool::new(inv, offers);
    let mut placements = Vec::new();
    if !request.whole_node && request.share.is_zero() {
        return placements;
    }
    while placements.len() < max {
        let Some((node_id, share)) = pool.take(request) else {
            break;
        };
        placements.push(Placement {
            container_id: container_id(first_container + placements.len() as u64),
            app_id: app_id.to_string(),
            node_id,
            share,
            role: request.role,
        });
    }
    placements
}

/// Marks a partition released and returns what it held.
pub fn release(partition: &mut Partition) -> Result<Vec<(String, ResourceVector)>, AllocError> {
    if partition.state == PartitionState::Released {
        return Err(AllocError::AlreadyReleased(partition.partition_id.clone()));
    }
    partition.state = PartitionState::Released;
    Ok(partition
        .placements
        .drain(..)
        .map(|p| (p.node_id, p.share))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::default_inventory;

    fn offers(inv: &Inventory, live: &[Placement]) -> Vec<Offer> {
        make_offers(inv, live, 0).unwrap()
    }

    #[test]
    fn empty_cluster_offers_full_capacity() {
        let inv = default_inventory();
        let o = offers(&inv, &[]);
        assert_eq!(o.len(), 40);
        for (offer, node) in o.iter().zip(&inv.nodes) {
            assert_eq!(offer.available, capacity(node));
        }
    }

    #[test]
    fn offers_subtract_live_shares() {
        let inv = default_inventory();
        let whole = place(
            "a",
            &[PlacementRequest::whole(Role::Executor, NodeClass::Light)],
            &offers(&inv, &[]),
            &inv,
            0,
        )
        .unwrap();
        assert_eq!(offers(&inv, &whole).len(), 39);

        let half = ResourceVector::new(24_000, 65_536, 0);
        let live = place(
            "a",
            &[PlacementRequest::fractional(
                Role::Executor,
                half,
                Target::Class(NodeClass::Light),
            )],
            &offers(&inv, &[]),
            &inv,
            0,
        )
        .unwrap();
        let o = offers(&inv, &live);
        let l01 = o.iter().find(|o| o.node_id == "L01").unwrap();
        assert_eq!(l01.available, half);
    }

    #[test]
    fn over_allocation_is_corrupt_state() {
        let inv = default_inventory();
        let p = Placement {
            container_id: "x".into(),
            app_id: "a".into(),
            node_id: "L01".into(),
            share: ResourceVector::new(48_001, 0, 0),
            role: Role::Executor,
        };
        assert!(matches!(
            make_offers(&inv, &[p], 0),
            Err(AllocError::CorruptState(_))
        ));
    }

    #[test]
    fn whole_node_requests_take_ascending_ids() {
        let inv = default_inventory();
        let reqs = vec![PlacementRequest::whole(Role::Executor, NodeClass::Light); 4];
        let placed = place("a", &reqs, &offers(&inv, &[]), &inv, 0).unwrap();
        let nodes: Vec<_> = placed.iter().map(|p| p.node_id.as_str()).collect();
        assert_eq!(nodes, ["L01", "L02", "L03", "L04"]);
        assert!(placed
            .iter()
            .all(|p| p.share == ResourceVector::new(48_000, 131_072, 0)));
    }

    #[test]
    fn oversized_request_fails() {
        let inv = default_inventory();
        let req = PlacementRequest::fractional(
            Role::Executor,
            ResourceVector::new(48_001, 1, 0),
            Target::Class(NodeClass::Light),
        );
        let err = place("a", &[req], &offers(&inv, &[]), &inv, 0).unwrap_err();
        assert!(matches!(
            err,
            AllocError::InsufficientResources { index: 0, .. }
        ));
    }

    #[test]
    fn fractional_requests_pack_best_fit() {
        let inv = default_inventory();
        let one_node: Vec<Offer> = offers(&inv, &[])
            .into_iter()
            .filter(|o| o.node_id == "L05")
            .collect();
        let req = PlacementRequest::fractional(
            Role::Executor,
            ResourceVector::new(16_000, 32_768, 0),
            Target::Class(NodeClass::Light),
        );
        let placed = place("a", &[req; 3], &one_node, &inv, 0).unwrap();
        assert!(placed.iter().all(|p| p.node_id == "L05"));
        let o = offers(&inv, &placed);
        let l05 = o.iter().find(|o| o.node_id == "L05").unwrap();
        assert_eq!(l05.available, ResourceVector::new(0, 32_768, 0));

        // On the full cluster the second request follows the first onto the
        // already-used node.
        let placed = place("a", &[req; 2], &offers(&inv, &[]), &inv, 0).unwrap();
        assert_eq!(placed[0].node_id, "L01");
        assert_eq!(placed[1].node_id, "L01");
    }

    #[test]
    fn batches_are_atomic_and_deterministic() {
        let inv = default_inventory();
        let o = offers(&inv, &[]);
        let mut reqs = vec![PlacementRequest::whole(Role::Executor, NodeClass::Fat); 4];
        assert_eq!(
            place("a", &reqs, &o, &inv, 0),
            place("a", &reqs, &o, &inv, 0)
        );
        reqs.push(PlacementRequest::whole(Role::Executor, NodeClass::Fat));
        let err = place("a", &reqs, &o, &inv, 0).unwrap_err();
        assert!(matches!(
            err,
            AllocError::InsufficientResources { index: 4, .. }
        ));
    }

    #[test]
    fn prefer_class_falls_back() {
        let inv = default_inventory();
        let light: Vec<_> = (0..32)
            .map(|_| PlacementRequest::whole(Role::Executor, NodeClass::Light))
            .collect();
        let taken = place("a", &light, &offers(&inv, &[]), &inv, 0).unwrap();
        let svc = PlacementRequest::fractional(
            Role::Access,
            ResourceVector::new(1000, 2048, 0),
            Target::PreferClass(NodeClass::Light),
        );
        let placed = place("a", &[svc], &offers(&inv, &taken), &inv, 100).unwrap();
        assert_eq!(placed[0].node_id, "G01");
        assert_eq!(placed[0].container_id, "c000100");
    }

    #[test]
    fn gpu_shares_land_on_gpu_nodes() {
        let inv = default_inventory();
        let req = PlacementRequest::fractional(
            Role::StageTask,
            ResourceVector::new(1000, 1024, 1),
            Target::Any,
        );
        let placed = place_up_to("a", &req, 100, &offers(&inv, &[]), &inv, 0);
        assert_eq!(placed.len(), 8);
        assert!(placed.iter().all(|p| p.node_id.starts_with('G')));
    }

    #[test]
    fn release_round_trip() {
        let inv = default_inventory();
        let before = offers(&inv, &[]);
        let reqs = vec![PlacementRequest::whole(Role::Executor, NodeClass::Light); 4];
        let placements = place("a", &reqs, &before, &inv, 0).unwrap();
        let mut part = Partition {
            partition_id: "p0".into(),
            app_id: "a".into(),
            placements,
            state: PartitionState::Running,
        };
        let freed = release(&mut part).unwrap();
        assert_eq!(freed.len(), 4);
        assert_eq!(offers(&inv, &part.placements), before);
        assert!(matches!(
            release(&mut part),
            Err(AllocError::AlreadyReleased(_))
        ));
    }
}
