//! Proportional-integral average consensus with forward-Euler updates.

use super::Gains;

/// Tracker output `z` and integrator `w` for `N` independent scalar channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiFilterState<const N: usize> {
    pub z: [f64; N],
    pub w: [f64; N],
}

impl<const N: usize> PiFilterState<N> {
    /// Starts the tracker at the local input with a zero integrator.
    pub fn new(input: [f64; N]) -> Self {
        Self {
            z: input,
            w: [0.0; N],
        }
    }

    pub fn output(&self) -> [f64; N] {
        self.z
    }
}

impl PiFilterState<1> {
    pub fn scalar(input: f64) -> Self {
        Self::new([input])
    }

    pub fn value(&self) -> f64 {
        self.z[0]
    }
}

/// One Euler step of
///
/// ```text
/// ż = γ(u - z) - K_P Σ_j (z - z_j) + K_I Σ_j (w - w_j)
/// ẇ = -K_I Σ_j (z - z_j)
/// ```
///
/// over the given neighbor states.
pub fn pi_consensus_step<'a, const N: usize>(
    state: &PiFilterState<N>,
    input: [f64; N],
    neighbors: impl IntoIterator<Item = &'a PiFilterState<N>>,
    gains: &Gains,
    dt: f64,
) -> PiFilterState<N> {
    let mut dz = [0.0; N];
    let mut dw = [0.0; N];
    for nb in neighbors {
        for c in 0..N {
            dz[c] += state.z[c] - nb.z[c];
            dw[c] += state.w[c] - nb.w[c];
        }
    }
    let mut next = *state;
    for c in 0..N {
        let zdot = gains.gamma * (input[c] - state.z[c]) - gains.k_p * dz[c] + gains.k_i * dw[c];
        let wdot = -gains.k_i * dz[c];
        next.z[c] += dt * zdot;
        next.w[c] += dt * wdot;
    }
    next
}
