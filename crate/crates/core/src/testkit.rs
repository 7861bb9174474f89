//! Seeded generators shared by unit, integration and acceptance tests.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, PositionMatrix};
use crate::rigidity::WeightedFramework;

pub struct TestRng(ChaCha8Rng);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.random_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.0.random_bool(p)
    }

    /// Uniform point in the cube `[-scale, scale]^3`.
    pub fn point(&mut self, scale: f64) -> [f64; 3] {
        [
            self.uniform(-scale, scale),
            self.uniform(-scale, scale),
            self.uniform(-scale, scale),
        ]
    }

    pub fn vector(&mut self, scale: f64) -> Vector3<f64> {
        Vector3::from(self.point(scale))
    }
}

/// Random graph on `n` vertices keeping each edge with probability
/// `edge_prob`; when `connected` a random spanning path is always included.
pub fn random_graph(rng: &mut TestRng, n: usize, edge_prob: f64, connected: bool) -> Graph {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.index(i + 1));
    }
    let mut keep = std::collections::BTreeSet::new();
    if connected {
        for w in order.windows(2) {
            keep.insert((w[0].min(w[1]), w[0].max(w[1])));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.chance(edge_prob) {
                keep.insert((i, j));
            }
        }
    }
    Graph::new(n, keep).expect("valid random graph")
}

/// Random framework with positions in `[-2, 2]^3` and weights in `[0.2, 1]`.
pub fn random_framework(
    rng: &mut TestRng,
    n: usize,
    edge_prob: f64,
    connected: bool,
) -> WeightedFramework {
    let g = random_graph(rng, n, edge_prob, connected);
    let rows: Vec<[f64; 3]> = (0..n).map(|_| rng.point(2.0)).collect();
    let weights = (0..g.m()).map(|_| rng.uniform(0.2, 1.0)).collect();
    WeightedFramework::new(g, PositionMatrix::from_rows(&rows).unwrap(), weights).unwrap()
}
