//! Gradient-flow estimator of positions relative to the special agent.

use nalgebra::Vector3;

use super::packet::Inbox;
use crate::error::{Error, Result};

/// Below this triangle area the special agent's two anchors are treated as
/// collinear with it and the anchor terms are dropped for the tick.
pub const MIN_ANCHOR_AREA: f64 = 1e-6;

/// Agent `i`'s estimate of `p_i - p_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionEstimatorState {
    pub p_hat: Vector3<f64>,
}

/// Part an agent plays in anchoring the common frame this tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorRole {
    None,
    /// The special agent, pulled towards the origin.
    Center,
    /// Selected anchor: pulled towards the relative position the center
    /// measured, read from the center's packet.
    Anchor { center: usize },
}

/// The special agent's anchor choice for one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorPair {
    pub first: usize,
    pub second: usize,
    /// Area of the triangle spanned with the special agent.
    pub area: f64,
}

impl AnchorPair {
    /// Whether the triangle is wide enough for the anchor terms to be used.
    pub fn accepted(&self) -> bool {
        self.area >= MIN_ANCHOR_AREA
    }
}

/// Picks the two neighbors of the special agent spanning the largest
/// triangle with it, ties to the lowest indices. `relative` holds the
/// measured `p_j - p_c`. `None` when fewer than two neighbors exist.
pub fn select_anchors(relative: &[(usize, Vector3<f64>)]) -> Option<AnchorPair> {
    let mut rel: Vec<_> = relative.to_vec();
    rel.sort_by_key(|&(j, _)| j);
    let mut best: Option<AnchorPair> = None;
    for a in 0..rel.len() {
        for b in a + 1..rel.len() {
            let area = 0.5 * rel[a].1.cross(&rel[b].1).norm();
            if best.is_none_or(|p| area > p.area) {
                best = Some(AnchorPair {
                    first: rel[a].0,
                    second: rel[b].0,
                    area,
                });
            }
        }
    }
    best
}

/// One Euler step of
///
/// ```text
/// p̂ᵢ += dt·η·[Σⱼ (‖p̂ⱼ - p̂ᵢ‖² - ℓᵢⱼ²)(p̂ⱼ - p̂ᵢ) - δ(i = c) p̂ᵢ - δ(i anchor)(p̂ᵢ - m)]
/// ```
///
/// with `ranges` holding the measured `ℓᵢⱼ` for every neighbor.
pub fn position_estimator_step(
    state: &PositionEstimatorState,
    inbox: &Inbox<'_>,
    ranges: &[(usize, f64)],
    role: AnchorRole,
    eta: f64,
    dt: f64,
) -> Result<PositionEstimatorState> {
    let i = inbox.owner();
    let p = state.p_hat;
    let mut grad = Vector3::zeros();
    for &j in inbox.neighbors() {
        let pj = inbox.get(j)?.p_hat;
        let l = ranges
            .iter()
            .find(|(k, _)| *k == j)
            .map(|&(_, l)| l)
            .ok_or_else(|| Error::Invalid(format!("agent {i} has no range to neighbor {j}")))?;
        let d = pj - p;
        grad += d * (d.norm_squared() - l * l);
    }
    match role {
        AnchorRole::None => {}
        AnchorRole::Center => grad -= p,
        AnchorRole::Anchor { center } => {
            let m = inbox
                .get(center)
                .ok()
                .and_then(|pk| pk.anchor_for(i))
                .ok_or(Error::StaleSpecialMeasurement(i))?
                .relative;
            grad -= p - m;
        }
    }
    Ok(PositionEstimatorState {
        p_hat: p + grad * (eta * dt),
    })
}

/// Least-squares error `e(p̂)` of a full set of estimates against measured
/// ranges on `edges` and the anchor measurements.
pub fn estimation_error(
    p_hat: &[Vector3<f64>],
    edges: &[(usize, usize, f64)],
    center: usize,
    anchors: &[(usize, Vector3<f64>)],
) -> f64 {
    let mut e = 0.0;
    for &(i, j, l) in edges {
        let r = (p_hat[i] - p_hat[j]).norm_squared() - l * l;
        e += 0.25 * r * r;
    }
    e += 0.5 * p_hat[center].norm_squared();
    for (k, m) in anchors {
        e += 0.5 * (p_hat[*k] - m).norm_squared();
    }
    e
}
