//! One-hop message passing between agents.
//!
//! Every estimator step reads other agents' state only through an [`Inbox`],
//! which checks each access against the receiver's declared neighbor set and
//! counts the reads in a shared [`LocalityAudit`].

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::Vector3;

use super::consensus::PiFilterState;
use super::RigidityEstimatorState;
use crate::error::{Error, Result};

/// Relative position of an anchor agent measured by the special agent,
/// `p_target - p_center`, forwarded in the special agent's packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorPayload {
    pub target: usize,
    pub relative: Vector3<f64>,
}

/// Everything an agent broadcasts to its neighbors in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborPacket {
    pub sender: usize,
    pub p_hat: Vector3<f64>,
    pub v_hat: Vector3<f64>,
    pub avg_v: PiFilterState<3>,
    pub avg_v2: PiFilterState<3>,
    pub z_xy: PiFilterState<1>,
    pub z_xz: PiFilterState<1>,
    pub z_yz: PiFilterState<1>,
    /// Sender's view of `W_sender,j` for each of its neighbors.
    pub weight_row: Vec<(usize, f64)>,
    /// Only the special agent fills this in.
    pub anchors: Vec<AnchorPayload>,
}

impl NeighborPacket {
    pub fn from_state(
        sender: usize,
        p_hat: Vector3<f64>,
        est: &RigidityEstimatorState,
        weight_row: Vec<(usize, f64)>,
        anchors: Vec<AnchorPayload>,
    ) -> Self {
        Self {
            sender,
            p_hat,
            v_hat: est.v_hat,
            avg_v: est.avg_v,
            avg_v2: est.avg_v2,
            z_xy: est.z_xy,
            z_xz: est.z_xz,
            z_yz: est.z_yz,
            weight_row,
            anchors,
        }
    }

    pub fn anchor_for(&self, target: usize) -> Option<&AnchorPayload> {
        self.anchors.iter().find(|a| a.target == target)
    }

    pub fn weight_to(&self, j: usize) -> Option<f64> {
        self.weight_row.iter().find(|(k, _)| *k == j).map(|&(_, w)| w)
    }
}

/// Counters shared by every inbox of a run.
#[derive(Debug, Default)]
pub struct LocalityAudit {
    reads: AtomicUsize,
    violations: AtomicUsize,
}

impl LocalityAudit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reads(&self) -> usize {
        self.reads.load(Ordering::Relaxed)
    }

    pub fn violations(&self) -> usize {
        self.violations.load(Ordering::Relaxed)
    }
}

/// Read-only snapshot of one round's packets. Agents publish into the next
/// round's bus while reading this one, so a round never sees its own writes.
#[derive(Debug, Clone, Default)]
pub struct Bus {
    packets: Vec<Option<NeighborPacket>>,
}

impl Bus {
    pub fn new(n: usize) -> Self {
        Self {
            packets: vec![None; n],
        }
    }

    pub fn publish(&mut self, packet: NeighborPacket) {
        let i = packet.sender;
        self.packets[i] = Some(packet);
    }

    pub fn inbox<'a>(
        &'a self,
        owner: usize,
        neighbors: &'a [usize],
        audit: &'a LocalityAudit,
    ) -> Inbox<'a> {
        Inbox {
            owner,
            neighbors,
            packets: &self.packets,
            audit,
        }
    }
}

/// Receiver-side view of the bus for one agent.
#[derive(Debug, Clone, Copy)]
pub struct Inbox<'a> {
    owner: usize,
    neighbors: &'a [usize],
    packets: &'a [Option<NeighborPacket>],
    audit: &'a LocalityAudit,
}

impl<'a> Inbox<'a> {
    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn neighbors(&self) -> &'a [usize] {
        self.neighbors
    }

    /// Packet from `j`. Reads outside the neighbor set are refused and
    /// counted as violations.
    pub fn get(&self, j: usize) -> Result<&'a NeighborPacket> {
        self.audit.reads.fetch_add(1, Ordering::Relaxed);
        if !self.neighbors.contains(&j) {
            self.audit.violations.fetch_add(1, Ordering::Relaxed);
            return Err(Error::Invalid(format!(
                "agent {} read state of non-neighbor {j}",
                self.owner
            )));
        }
        self.packets
            .get(j)
            .and_then(Option::as_ref)
            .ok_or(Error::MissingNeighborPacket {
                agent: self.owner,
                neighbor: j,
            })
    }

    /// Packets from every declared neighbor, in neighbor order.
    pub fn all(&self) -> Result<Vec<&'a NeighborPacket>> {
        self.neighbors.iter().map(|&j| self.get(j)).collect()
    }
}
