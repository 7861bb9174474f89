//! State-dependent edge weights `W_uv = α_uv β_uv γᵃ_uv γᵇ_uv` and their
//! analytic position gradients.
//!
//! The transition shapes are C¹: smoothstep plateaus for the range fade (γᵃ),
//! the line-of-sight and clearance rises (γᵇ and every α factor), and a
//! Gaussian bump centred on the desired spacing for β.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    closest_segment_parameter, segment_obstacle_distance, Graph, ObstacleSet, PositionMatrix,
};
use crate::rigidity::{WeightGradients, WeightedFramework};

/// Shape parameters of the weight functions, all lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightParams {
    /// Sensing range.
    #[serde(rename = "D")]
    pub range: f64,
    /// Minimum safety distance.
    pub l_min: f64,
    /// Desired inter-agent distance.
    pub l_0: f64,
    /// Width of the γᵃ fade before the sensing range.
    pub delta_a: f64,
    /// Width of the γᵇ and α rise after `l_min`.
    pub delta_b: f64,
    /// Standard deviation of β.
    pub sigma_beta: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        Self {
            range: 6.0,
            l_min: 1.0,
            l_0: 4.0,
            delta_a: 1.0,
            delta_b: 1.0,
            sigma_beta: 1.0,
        }
    }
}

impl WeightParams {
    pub fn validate(&self) -> Result<()> {
        let p = self;
        let all = [p.range, p.l_min, p.l_0, p.delta_a, p.delta_b, p.sigma_beta];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("weight parameters".into()));
        }
        let checks = [
            (p.l_min > 0.0, "l_min > 0"),
            (p.l_min < p.l_0, "l_min < l_0"),
            (p.l_0 < p.range, "l_0 < D"),
            (p.delta_a > 0.0 && p.delta_b > 0.0 && p.sigma_beta > 0.0, "widths > 0"),
            (p.delta_a < p.range - p.l_0, "delta_a < D - l_0"),
            (p.delta_b < p.l_0 - p.l_min, "delta_b < l_0 - l_min"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, what)) => Err(Error::Invalid(format!("weight parameters violate {what}"))),
            None => Ok(()),
        }
    }
}

/// `3t² - 2t³` on `[0, 1]`, with the input clamped first.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Derivative of [`smoothstep`]; zero outside `(0, 1)`.
pub fn smoothstep_derivative(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        6.0 * t * (1.0 - t)
    }
}

/// Range fade: 1 up to `D - delta_a`, 0 from `D` on.
pub fn gamma_a(l: f64, p: &WeightParams) -> f64 {
    1.0 - smoothstep((l - (p.range - p.delta_a)) / p.delta_a)
}

pub fn gamma_a_derivative(l: f64, p: &WeightParams) -> f64 {
    -smoothstep_derivative((l - (p.range - p.delta_a)) / p.delta_a) / p.delta_a
}

/// Clearance rise shared by γᵇ and every α factor: 0 up to `l_min`, 1 from
/// `l_min + delta_b` on. An infinite clearance gives 1.
pub fn clearance(l: f64, p: &WeightParams) -> f64 {
    smoothstep((l - p.l_min) / p.delta_b)
}

pub fn clearance_derivative(l: f64, p: &WeightParams) -> f64 {
    smoothstep_derivative((l - p.l_min) / p.delta_b) / p.delta_b
}

/// Line-of-sight factor as a function of the segment–obstacle distance.
pub fn gamma_b(l_uvo: f64, p: &WeightParams) -> f64 {
    clearance(l_uvo, p)
}

/// Gaussian preference for the desired spacing `l_0`.
pub fn beta(l: f64, p: &WeightParams) -> f64 {
    let e = (l - p.l_0) / p.sigma_beta;
    (-0.5 * e * e).exp()
}

pub fn beta_derivative(l: f64, p: &WeightParams) -> f64 {
    -(l - p.l_0) / (p.sigma_beta * p.sigma_beta) * beta(l, p)
}

/// Candidate sensing neighbors of `u`: within range and with line of sight
/// clear of every obstacle by more than `l_min`.
pub fn candidate_neighbors(
    u: usize,
    pos: &PositionMatrix,
    obs: &ObstacleSet,
    p: &WeightParams,
) -> Vec<usize> {
    (0..pos.len())
        .filter(|&k| k != u)
        .filter(|&k| {
            let (a, b) = (pos.row(u), pos.row(k));
            (a - b).norm() < p.range && segment_obstacle_distance(a, b, obs) > p.l_min
        })
        .collect()
}

/// One clearance factor of α: the distance between an agent and either
/// another agent or an obstacle point.
#[derive(Debug, Clone, Copy)]
struct Factor {
    agent: usize,
    other: Option<usize>,
    delta: Vector3<f64>,
}

impl Factor {
    fn value(&self, p: &WeightParams) -> f64 {
        clearance(self.delta.norm(), p)
    }

    fn gradient(&self, wrt: usize, p: &WeightParams) -> Vector3<f64> {
        let l = self.delta.norm();
        let sign = if wrt == self.agent {
            1.0
        } else if Some(wrt) == self.other {
            -1.0
        } else {
            return Vector3::zeros();
        };
        let dl = clearance_derivative(l, p);
        if dl == 0.0 || l == 0.0 {
            return Vector3::zeros();
        }
        self.delta * (sign * dl / l)
    }
}

fn alpha_factors(
    a: usize,
    b: usize,
    pos: &PositionMatrix,
    obs: &ObstacleSet,
    p: &WeightParams,
) -> Vec<Factor> {
    let mut out = Vec::new();
    for agent in [a, b] {
        for k in candidate_neighbors(agent, pos, obs, p) {
            out.push(Factor {
                agent,
                other: Some(k),
                delta: pos.row(agent) - pos.row(k),
            });
        }
        for o in obs.points() {
            out.push(Factor {
                agent,
                other: None,
                delta: pos.row(agent) - o,
            });
        }
    }
    out
}

fn canonical(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// Collision factor: the product of clearance rises over the candidate
/// neighbors of `u` and `v` and over every obstacle point.
pub fn alpha(u: usize, v: usize, pos: &PositionMatrix, obs: &ObstacleSet, p: &WeightParams) -> f64 {
    let (a, b) = canonical(u, v);
    alpha_factors(a, b, pos, obs, p)
        .iter()
        .map(|f| f.value(p))
        .product()
}

/// `W_uv`, symmetric bit for bit.
pub fn weight(u: usize, v: usize, pos: &PositionMatrix, obs: &ObstacleSet, p: &WeightParams) -> f64 {
    let (a, b) = canonical(u, v);
    let (pa, pb) = (pos.row(a), pos.row(b));
    let l = (pa - pb).norm();
    let ga = gamma_a(l, p);
    if ga == 0.0 {
        return 0.0;
    }
    let gb = gamma_b(segment_obstacle_distance(pa, pb, obs), p);
    alpha(a, b, pos, obs, p) * beta(l, p) * ga * gb
}

/// Gradient of the distance between segment `[pa, pb]` and its closest
/// obstacle with respect to `(pa, pb)`.
fn segment_distance_gradient(
    pa: &Vector3<f64>,
    pb: &Vector3<f64>,
    obs: &ObstacleSet,
) -> Option<(f64, Vector3<f64>, Vector3<f64>)> {
    let mut best: Option<(f64, f64, Vector3<f64>)> = None;
    for o in obs.points() {
        let t = closest_segment_parameter(pa, pb, o);
        let c = pa + (pb - pa) * t;
        let d = (c - o).norm();
        if best.is_none_or(|(bd, _, _)| d < bd) {
            best = Some((d, t, c - o));
        }
    }
    let (d, t, r) = best?;
    if d == 0.0 {
        return Some((d, Vector3::zeros(), Vector3::zeros()));
    }
    let unit = r / d;
    Some((d, unit * (1.0 - t), unit * t))
}

/// `∂W_uv/∂p_wrt`. Exactly zero unless `wrt` is `u`, `v` or one of their
/// candidate neighbors.
pub fn weight_gradient(
    u: usize,
    v: usize,
    pos: &PositionMatrix,
    obs: &ObstacleSet,
    p: &WeightParams,
    wrt: usize,
) -> Vector3<f64> {
    let (a, b) = canonical(u, v);
    let (pa, pb) = (pos.row(a), pos.row(b));
    let d = pa - pb;
    let l = d.norm();
    let ga = gamma_a(l, p);
    let dga = gamma_a_derivative(l, p);
    if ga == 0.0 && dga == 0.0 {
        return Vector3::zeros();
    }
    let factors = alpha_factors(a, b, pos, obs, p);
    let involved = wrt == a || wrt == b || factors.iter().any(|f| f.other == Some(wrt));
    if !involved {
        return Vector3::zeros();
    }

    let values: Vec<f64> = factors.iter().map(|f| f.value(p)).collect();
    let al: f64 = values.iter().product();
    // product rule over the α factors via prefix and suffix products
    let mut dalpha = Vector3::zeros();
    let mut prefix = vec![1.0; values.len() + 1];
    for (k, &x) in values.iter().enumerate() {
        prefix[k + 1] = prefix[k] * x;
    }
    let mut suffix = 1.0;
    for k in (0..values.len()).rev() {
        let g = factors[k].gradient(wrt, p);
        if g != Vector3::zeros() {
            dalpha += g * (prefix[k] * suffix);
        }
        suffix *= values[k];
    }

    let be = beta(l, p);
    let (gb, dgb_a, dgb_b) = match segment_distance_gradient(pa, pb, obs) {
        Some((dist, ga_, gb_)) => {
            let s = clearance_derivative(dist, p);
            (gamma_b(dist, p), ga_ * s, gb_ * s)
        }
        None => (1.0, Vector3::zeros(), Vector3::zeros()),
    };

    let mut grad = dalpha * (be * ga * gb);
    if wrt == a || wrt == b {
        let sign = if wrt == a { 1.0 } else { -1.0 };
        let dir = if l > 0.0 { d * (sign / l) } else { Vector3::zeros() };
        let dpair = beta_derivative(l, p) * ga + be * dga;
        grad += dir * (al * dpair * gb);
        let dgb = if wrt == a { dgb_a } else { dgb_b };
        grad += dgb * (al * be * ga);
    }
    grad
}

/// All weights of a framework over `graph` together with every `∂W_k/∂p_i`.
#[derive(Debug, Clone)]
pub struct WeightField {
    pub weights: Vec<f64>,
    grads: Vec<Vec<Vector3<f64>>>,
}

impl WeightField {
    pub fn compute(graph: &Graph, pos: &PositionMatrix, obs: &ObstacleSet, p: &WeightParams) -> Self {
        let n = graph.n();
        let mut weights = Vec::with_capacity(graph.m());
        let mut grads = Vec::with_capacity(graph.m());
        for &(u, v) in graph.edges() {
            weights.push(weight(u, v, pos, obs, p));
            grads.push((0..n).map(|i| weight_gradient(u, v, pos, obs, p, i)).collect());
        }
        Self { weights, grads }
    }

    pub fn framework(&self, graph: &Graph, pos: &PositionMatrix) -> Result<WeightedFramework> {
        WeightedFramework::new(graph.clone(), pos.clone(), self.weights.clone())
    }
}

impl WeightGradients for WeightField {
    fn weight_gradient(&self, edge: usize, vertex: usize) -> Vector3<f64> {
        self.grads[edge][vertex]
    }
}

/// Weighted framework over `graph` with weights evaluated at `pos`.
pub fn weighted_framework(
    graph: &Graph,
    pos: &PositionMatrix,
    obs: &ObstacleSet,
    p: &WeightParams,
) -> Result<WeightedFramework> {
    let w = graph
        .edges()
        .iter()
        .map(|&(u, v)| weight(u, v, pos, obs, p))
        .collect();
    WeightedFramework::new(graph.clone(), pos.clone(), w)
}
