//! Rigidity-maintenance control law built from estimated quantities.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Inbox;
use crate::rigidity::{edge_quadratic, edge_quadratic_gradient};

/// Smallest `‖v̂‖²` used when rescaling the eigenvector estimate.
pub const MIN_EIGVEC_NORM2: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialParams {
    pub lambda_min: f64,
    pub b: f64,
    #[serde(default = "default_eps_clamp")]
    pub eps_clamp: f64,
}

fn default_eps_clamp() -> f64 {
    1e-3
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self {
            lambda_min: 7.5,
            b: 1.0,
            eps_clamp: default_eps_clamp(),
        }
    }
}

impl PotentialParams {
    pub fn validate(&self) -> Result<()> {
        if [self.lambda_min, self.b, self.eps_clamp]
            .iter()
            .all(|x| x.is_finite() && *x > 0.0)
        {
            Ok(())
        } else {
            Err(Error::Invalid(
                "potential parameters must be finite and positive".into(),
            ))
        }
    }

    /// Raises `lambda` to `lambda_min + eps_clamp` if needed; the flag
    /// reports whether it did.
    pub fn clamp(&self, lambda: f64) -> (f64, bool) {
        let floor = self.lambda_min + self.eps_clamp;
        if lambda < floor || lambda.is_nan() {
            (floor, true)
        } else {
            (lambda, false)
        }
    }
}

/// `V(λ) = coth(b(λ - λ_min)) - 1`, evaluated on the clamped input.
pub fn potential(lambda: f64, p: &PotentialParams) -> f64 {
    let (l, _) = p.clamp(lambda);
    let x = p.b * (l - p.lambda_min);
    // coth(x) - 1 = 2 / (e^{2x} - 1)
    2.0 / (2.0 * x).exp_m1()
}

/// `V'(λ) = -b / sinh²(b(λ - λ_min))`, evaluated on the clamped input.
pub fn potential_derivative(lambda: f64, p: &PotentialParams) -> f64 {
    let (l, _) = p.clamp(lambda);
    let s = (p.b * (l - p.lambda_min)).sinh();
    -p.b / (s * s)
}

/// Weight of the link to one neighbor and its gradient with respect to the
/// agent's own position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborTerm {
    pub neighbor: usize,
    pub weight: f64,
    pub weight_grad: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub xi: Vector3<f64>,
    pub clamped: bool,
}

/// Gradient term `Σ_j [W_ij² ∂S_ij/∂p_i + 2 W_ij S_ij ∂W_ij/∂p_i]` on the
/// estimated states, with `v̂` rescaled by `1/‖v̂‖²` so that it stands in for
/// a unit eigenvector.
pub fn local_gradient(
    v_hat: &Vector3<f64>,
    p_hat: &Vector3<f64>,
    v_norm2: f64,
    inbox: &Inbox<'_>,
    terms: &[NeighborTerm],
) -> Result<Vector3<f64>> {
    let mut g = Vector3::zeros();
    for t in terms {
        let pk = inbox.get(t.neighbor)?;
        let d = p_hat - pk.p_hat;
        let dv = v_hat - pk.v_hat;
        let w = t.weight;
        g += edge_quadratic_gradient(&d, &dv) * (w * w);
        g += t.weight_grad * (2.0 * w * edge_quadratic(&d, &dv));
    }
    Ok(g / v_norm2.max(MIN_EIGVEC_NORM2))
}

/// `ξᵢ = -V'(λ̂₇ᵢ) · ∂λ₇/∂pᵢ` with every quantity replaced by its estimate.
/// `v_norm2` is the agent's estimate of `‖v̂‖²`, i.e. `3n·avg(v̂∘v̂)`.
pub fn control_velocity(
    lambda_hat: f64,
    v_hat: &Vector3<f64>,
    p_hat: &Vector3<f64>,
    v_norm2: f64,
    inbox: &Inbox<'_>,
    terms: &[NeighborTerm],
    params: &PotentialParams,
) -> Result<ControlOutput> {
    let (_, clamped) = params.clamp(lambda_hat);
    let dv = potential_derivative(lambda_hat, params);
    let g = local_gradient(v_hat, p_hat, v_norm2, inbox, terms)?;
    Ok(ControlOutput {
        xi: g * (-dv),
        clamped,
    })
}

/// Fails with [`Error::EstimatorNotReady`] during the warm-up window.
pub fn check_ready(t: f64, warmup: f64) -> Result<()> {
    if t < warmup {
        Err(Error::EstimatorNotReady)
    } else {
        Ok(())
    }
}

/// Constant exogenous velocity over `[t_start, t_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExogenousSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

impl ExogenousSegment {
    pub fn contains(&self, t: f64) -> bool {
        self.t_start <= t && t < self.t_end
    }

    pub fn velocity(&self) -> Vector3<f64> {
        Vector3::new(self.vx, self.vy, self.vz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExogenousSchedule {
    pub agent: usize,
    pub schedule: Vec<ExogenousSegment>,
}

/// Exogenous input active at `t`, norm-capped at `cap`. The first matching
/// segment wins.
pub fn exogenous_at(segments: &[ExogenousSegment], t: f64, cap: f64) -> Vector3<f64> {
    segments
        .iter()
        .find(|s| s.contains(t))
        .map(|s| saturate(s.velocity(), cap))
        .unwrap_or_else(Vector3::zeros)
}

/// `ξ + ξ*(t)`.
pub fn apply_exogenous(
    xi: Vector3<f64>,
    segments: &[ExogenousSegment],
    t: f64,
    cap: f64,
) -> Vector3<f64> {
    xi + exogenous_at(segments, t, cap)
}

/// Scales `v` down to norm `v_max` if it is longer, keeping its direction.
pub fn saturate(v: Vector3<f64>, v_max: f64) -> Vector3<f64> {
    let n = v.norm();
    if n > v_max {
        v * (v_max / n)
    } else {
        v
    }
}
