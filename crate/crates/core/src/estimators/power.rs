//! Distributed continuous-time power iteration for the rigidity eigenvector.

use nalgebra::Vector3;

use super::packet::Inbox;
use super::{Gains, RigidityEstimatorState};
use crate::error::Result;

/// Network averages an agent needs for one power-iteration step: either its
/// own consensus outputs or, in idealized mode, the exact values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusView {
    /// avg(v̂) per coordinate.
    pub v_bar: Vector3<f64>,
    /// avg(v̂ ∘ v̂) per coordinate.
    pub v2_bar: Vector3<f64>,
    /// avg(p̂ʸv̂ˣ - p̂ˣv̂ʸ)
    pub z_xy: f64,
    /// avg(p̂ᶻv̂ˣ - p̂ˣv̂ᶻ)
    pub z_xz: f64,
    /// avg(p̂ʸv̂ᶻ - p̂ᶻv̂ʸ)
    pub z_yz: f64,
}

impl ConsensusView {
    pub fn from_filters(est: &RigidityEstimatorState) -> Self {
        Self {
            v_bar: Vector3::from(est.avg_v.output()),
            v2_bar: Vector3::from(est.avg_v2.output()),
            z_xy: est.z_xy.value(),
            z_xz: est.z_xz.value(),
            z_yz: est.z_yz.value(),
        }
    }

    /// Exact averages over all agents.
    pub fn exact(v_hat: &[Vector3<f64>], p_hat: &[Vector3<f64>]) -> Self {
        let n = v_hat.len() as f64;
        let mut out = Self {
            v_bar: Vector3::zeros(),
            v2_bar: Vector3::zeros(),
            z_xy: 0.0,
            z_xz: 0.0,
            z_yz: 0.0,
        };
        for (v, p) in v_hat.iter().zip(p_hat) {
            let (v1, v2, zxy, zxz, zyz) = local_inputs(v, p);
            out.v_bar += Vector3::from(v1);
            out.v2_bar += Vector3::from(v2);
            out.z_xy += zxy;
            out.z_xz += zxz;
            out.z_yz += zyz;
        }
        out.v_bar /= n;
        out.v2_bar /= n;
        out.z_xy /= n;
        out.z_xz /= n;
        out.z_yz /= n;
        out
    }

    /// Scalar `avg(v̂ ∘ v̂)` over all `3n` entries, i.e. `‖v̂‖² / 3n`.
    pub fn v2_scalar(&self) -> f64 {
        self.v2_bar.sum() / 3.0
    }
}

/// Local consensus inputs of one agent: `v̂ᵢ`, `v̂ᵢ ∘ v̂ᵢ` and the three
/// cross moments.
pub fn local_inputs(v: &Vector3<f64>, p: &Vector3<f64>) -> ([f64; 3], [f64; 3], f64, f64, f64) {
    (
        [v.x, v.y, v.z],
        [v.x * v.x, v.y * v.y, v.z * v.z],
        p.y * v.x - p.x * v.y,
        p.z * v.x - p.x * v.z,
        p.y * v.z - p.z * v.y,
    )
}

/// Agent `i`'s three entries of `TTᵀv̂`, with `T` the null-space basis
/// about the special agent, assembled from network averages.
pub fn tt_t_action(view: &ConsensusView, p_hat: &Vector3<f64>, n: usize) -> Vector3<f64> {
    let p = p_hat;
    let v = &view.v_bar;
    Vector3::new(
        v.x + view.z_xy * p.y + view.z_xz * p.z,
        v.y - view.z_xy * p.x - view.z_yz * p.z,
        v.z - view.z_xz * p.x + view.z_yz * p.y,
    ) * n as f64
}

/// Agent `i`'s three entries of `R v̂`, from neighbor packets.
pub fn rigidity_action(
    v_hat: &Vector3<f64>,
    p_hat: &Vector3<f64>,
    inbox: &Inbox<'_>,
    weights: &[(usize, f64)],
) -> Result<Vector3<f64>> {
    let mut out = Vector3::zeros();
    for &(j, w) in weights {
        let pk = inbox.get(j)?;
        let d = p_hat - pk.p_hat;
        let dv = v_hat - pk.v_hat;
        out += d * (w * w * d.dot(&dv));
    }
    Ok(out)
}

/// One Euler step of
///
/// ```text
/// v̂̇ᵢ = -k₁ (TTᵀv̂)ᵢ - k₂ (R v̂)ᵢ - k₃ (avg(v̂∘v̂) - 1) v̂ᵢ
/// ```
///
/// where `weights` lists `W_ij` for every neighbor.
#[allow(clippy::too_many_arguments)]
pub fn power_iteration_step(
    est: &RigidityEstimatorState,
    p_hat: &Vector3<f64>,
    view: &ConsensusView,
    inbox: &Inbox<'_>,
    weights: &[(usize, f64)],
    gains: &Gains,
    n: usize,
    dt: f64,
) -> Result<Vector3<f64>> {
    let v = &est.v_hat;
    let deflate = tt_t_action(view, p_hat, n);
    let r = rigidity_action(v, p_hat, inbox, weights)?;
    let vdot = -deflate * gains.k1 - r * gains.k2 - v * (gains.k3 * (view.v2_scalar() - 1.0));
    Ok(v + vdot * dt)
}

/// `λ̂₇ = (k₃/k₂)(1 - avg(v̂∘v̂))`. Passed through unclamped.
pub fn rigidity_eigenvalue_estimate(v2_bar: f64, gains: &Gains) -> f64 {
    gains.k3 / gains.k2 * (1.0 - v2_bar)
}
