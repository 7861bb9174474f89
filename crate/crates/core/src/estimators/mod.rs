//! Per-agent estimator bank: relative positions, PI consensus filters and the
//! distributed power iteration for the rigidity eigenpair.

pub mod consensus;
pub mod packet;
pub mod position;
pub mod power;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use consensus::{pi_consensus_step, PiFilterState};
pub use packet::{AnchorPayload, Bus, Inbox, LocalityAudit, NeighborPacket};
pub use position::{
    position_estimator_step, select_anchors, AnchorPair, AnchorRole, PositionEstimatorState, MIN_ANCHOR_AREA,
};
pub use power::{
    power_iteration_step, rigidity_eigenvalue_estimate, tt_t_action, ConsensusView,
};

/// Estimator gains, all in 1/s except the dimensionless `eta_pos`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gains {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k_p: f64,
    pub k_i: f64,
    pub gamma: f64,
    pub eta_pos: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            k1: 150.0,
            k2: 5.0,
            k3: 150.0,
            k_p: 500.0,
            k_i: 500.0,
            gamma: 300.0,
            eta_pos: 20.0,
        }
    }
}

impl Gains {
    pub fn validate(&self) -> Result<()> {
        let g = [self.k1, self.k2, self.k3, self.k_p, self.k_i, self.gamma, self.eta_pos];
        if g.iter().all(|x| x.is_finite() && *x > 0.0) {
            Ok(())
        } else {
            Err(Error::Invalid("all gains must be finite and positive".into()))
        }
    }

    /// Sufficient conditions for convergence of the power iteration:
    /// `k₁ > k₂λ₇` and `k₃ > k₂λ₇`.
    pub fn power_iteration_conditions(&self, lambda7: f64) -> bool {
        self.k1 > self.k2 * lambda7 && self.k3 > self.k2 * lambda7
    }
}

/// Eigenvector estimate and the five consensus filters feeding it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidityEstimatorState {
    pub v_hat: Vector3<f64>,
    pub avg_v: PiFilterState<3>,
    pub avg_v2: PiFilterState<3>,
    pub z_xy: PiFilterState<1>,
    pub z_xz: PiFilterState<1>,
    pub z_yz: PiFilterState<1>,
}

impl RigidityEstimatorState {
    /// Filters start at the agent's own local inputs with zero integrators.
    pub fn new(v_hat: Vector3<f64>, p_hat: Vector3<f64>) -> Self {
        let (v1, v2, zxy, zxz, zyz) = power::local_inputs(&v_hat, &p_hat);
        Self {
            v_hat,
            avg_v: PiFilterState::new(v1),
            avg_v2: PiFilterState::new(v2),
            z_xy: PiFilterState::scalar(zxy),
            z_xz: PiFilterState::scalar(zxz),
            z_yz: PiFilterState::scalar(zyz),
        }
    }

    pub fn lambda7_estimate(&self, gains: &Gains) -> f64 {
        rigidity_eigenvalue_estimate(ConsensusView::from_filters(self).v2_scalar(), gains)
    }
}

/// Complete estimator state of one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentEstimator {
    pub pos: PositionEstimatorState,
    pub rig: RigidityEstimatorState,
}

/// Inputs an agent has for one estimator round besides its inbox.
#[derive(Debug, Clone, Copy)]
pub struct LocalData<'a> {
    /// Measured ranges to neighbors.
    pub ranges: &'a [(usize, f64)],
    /// `W_ij` for every neighbor.
    pub weights: &'a [(usize, f64)],
    pub role: AnchorRole,
    pub n: usize,
}

impl AgentEstimator {
    pub fn new(p_hat: Vector3<f64>, v_hat: Vector3<f64>) -> Self {
        Self {
            pos: PositionEstimatorState { p_hat },
            rig: RigidityEstimatorState::new(v_hat, p_hat),
        }
    }

    /// Advances every filter by `dt` from the previous round's packets. With
    /// `ideal` set, the power iteration uses those exact averages in place of
    /// the consensus outputs.
    pub fn step(
        &self,
        inbox: &Inbox<'_>,
        local: &LocalData<'_>,
        gains: &Gains,
        ideal: Option<&ConsensusView>,
        dt: f64,
    ) -> Result<Self> {
        let pos = position_estimator_step(
            &self.pos,
            inbox,
            local.ranges,
            local.role,
            gains.eta_pos,
            dt,
        )?;
        let p_hat = &self.pos.p_hat;
        let view = match ideal {
            Some(v) => *v,
            None => ConsensusView::from_filters(&self.rig),
        };
        let v_hat = power_iteration_step(
            &self.rig,
            p_hat,
            &view,
            inbox,
            local.weights,
            gains,
            local.n,
            dt,
        )?;
        let packets = inbox.all()?;
        let (v1, v2, zxy, zxz, zyz) = power::local_inputs(&self.rig.v_hat, p_hat);
        let r = &self.rig;
        let rig = RigidityEstimatorState {
            v_hat,
            avg_v: pi_consensus_step(&r.avg_v, v1, packets.iter().map(|p| &p.avg_v), gains, dt),
            avg_v2: pi_consensus_step(&r.avg_v2, v2, packets.iter().map(|p| &p.avg_v2), gains, dt),
            z_xy: pi_consensus_step(&r.z_xy, [zxy], packets.iter().map(|p| &p.z_xy), gains, dt),
            z_xz: pi_consensus_step(&r.z_xz, [zxz], packets.iter().map(|p| &p.z_xz), gains, dt),
            z_yz: pi_consensus_step(&r.z_yz, [zyz], packets.iter().map(|p| &p.z_yz), gains, dt),
        };
        Ok(Self { pos, rig })
    }
}
