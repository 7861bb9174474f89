//! Graphs, incidence structure, frameworks and the geometric predicates the
//! rest of the crate consumes.
//!
//! Vertices are 0-based. Every edge carries a fixed orientation `(tail, head)`
//! with `tail < head`; edge indices are the positions in the edge list and are
//! never relabelled afterwards.

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positions closer than this are treated as a degenerate segment.
pub const DEGENERATE_SEGMENT: f64 = 1e-12;

/// A simple undirected graph on `n >= 3` vertices with a stable edge labelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph keeping the given edge order. Each pair is oriented with
    /// the smaller vertex as tail.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n < 3 {
            return Err(Error::TooFewVertices(n));
        }
        let mut seen = std::collections::HashSet::new();
        let mut oriented = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::VertexOutOfRange {
                    vertex: a.max(b),
                    n,
                });
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::DuplicateEdge(e.0, e.1));
            }
            oriented.push(e);
        }
        Ok(Self { n, edges: oriented })
    }

    /// Complete graph `K_n` with lexicographic edge order.
    pub fn complete(n: usize) -> Result<Self> {
        let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
        Self::new(n, edges.collect::<Vec<_>>())
    }

    /// Graph with no edges.
    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, std::iter::empty())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Oriented edges `(tail, head)` in label order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let e = (u.min(v), u.max(v));
        self.edges.iter().position(|&x| x == e)
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| match (a == i, b == i) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect()
    }

    /// Subgraph keeping the edges whose index satisfies `keep`, labels compacted
    /// in the original order.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(k, _)| keep(*k))
            .map(|(_, &e)| e)
            .collect();
        Self { n: self.n, edges }
    }

    /// Number of connected components (union-find).
    pub fn components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut count = self.n;
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                count -= 1;
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.components() == 1
    }
}

/// The `n x 3` position matrix of a framework, one row per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionMatrix(Vec<Vector3<f64>>);

impl PositionMatrix {
    pub fn new(rows: Vec<Vector3<f64>>) -> Result<Self> {
        check_finite(&rows)?;
        Ok(Self(rows))
    }

    pub fn from_rows(rows: &[[f64; 3]]) -> Result<Self> {
        Self::new(rows.iter().map(|r| Vector3::from(*r)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn row(&self, i: usize) -> &Vector3<f64> {
        &self.0[i]
    }

    pub fn rows(&self) -> &[Vector3<f64>] {
        &self.0
    }

    pub fn rows_mut(&mut self) -> &mut [Vector3<f64>] {
        &mut self.0
    }

    /// Coordinate column `s` (0 = x, 1 = y, 2 = z).
    pub fn column(&self, s: usize) -> Vec<f64> {
        self.0.iter().map(|p| p[s]).collect()
    }

    pub fn x(&self) -> Vec<f64> {
        self.column(0)
    }

    pub fn y(&self) -> Vec<f64> {
        self.column(1)
    }

    pub fn z(&self) -> Vec<f64> {
        self.column(2)
    }

    /// Dense `n x 3` matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.0.len(), 3, |i, s| self.0[i][s])
    }

    /// Stacked `3n` vector `[p_1; p_2; ...]`.
    pub fn stacked(&self) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_fn(3 * self.0.len(), |k, _| self.0[k / 3][k % 3])
    }

    pub fn map(&self, f: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> Self {
        Self(self.0.iter().map(f).collect())
    }
}

/// Point obstacles.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObstacleSet(Vec<Vector3<f64>>);

impl ObstacleSet {
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self> {
        check_finite(&points)?;
        Ok(Self(points))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn map(&self, f: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> Self {
        Self(self.0.iter().map(f).collect())
    }
}

fn check_finite(rows: &[Vector3<f64>]) -> Result<()> {
    match rows.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
        Some(i) => Err(Error::NonFinite(format!("point {i}"))),
        None => Ok(()),
    }
}

/// Signed `n x m` incidence matrix: `+1` at the tail, `-1` at the head.
pub fn incidence_matrix(g: &Graph) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(g.n(), g.m());
    for (k, &(tail, head)) in g.edges().iter().enumerate() {
        e[(tail, k)] = 1.0;
        e[(head, k)] = -1.0;
    }
    e
}

/// Local incidence matrix at vertex `j`: incident edges re-oriented so that `j`
/// is the tail, every other column kept as an all-zero placeholder.
pub fn local_incidence_matrix(g: &Graph, j: usize) -> Result<DMatrix<f64>> {
    if j >= g.n() {
        return Err(Error::VertexOutOfRange { vertex: j, n: g.n() });
    }
    let mut e = DMatrix::zeros(g.n(), g.m());
    for (k, &(a, b)) in g.edges().iter().enumerate() {
        let other = match (a == j, b == j) {
            (true, _) => b,
            (_, true) => a,
            _ => continue,
        };
        e[(j, k)] = 1.0;
        e[(other, k)] = -1.0;
    }
    Ok(e)
}

pub fn pairwise_distance(p: &PositionMatrix, i: usize, j: usize) -> f64 {
    (p.row(i) - p.row(j)).norm()
}

/// Closest point of segment `[a, b]` to `o`, as the clamped segment parameter.
pub(crate) fn closest_segment_parameter(
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    o: &Vector3<f64>,
) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= DEGENERATE_SEGMENT * DEGENERATE_SEGMENT {
        return 0.0;
    }
    ((o - a).dot(&ab) / len2).clamp(0.0, 1.0)
}

pub fn point_segment_distance(a: &Vector3<f64>, b: &Vector3<f64>, o: &Vector3<f64>) -> f64 {
    let t = closest_segment_parameter(a, b, o);
    (a + (b - a) * t - o).norm()
}

/// Distance between segment `[a, b]` and the closest obstacle point, or
/// `f64::INFINITY` when there are no obstacles.
pub fn segment_obstacle_distance(a: &Vector3<f64>, b: &Vector3<f64>, obs: &ObstacleSet) -> f64 {
    obs.points()
        .iter()
        .map(|o| point_segment_distance(a, b, o))
        .fold(f64::INFINITY, f64::min)
}

/// On-disk framework description. Vertex indices are 0-based.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FrameworkFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
    pub positions: Vec<[f64; 3]>,
    #[serde(default)]
    pub obstacles: Vec<[f64; 3]>,
}

impl FrameworkFile {
    /// Graph of the file: the explicit edge list in file order, or `K_n`.
    pub fn graph(&self) -> Result<Graph> {
        match &self.edges {
            Some(edges) => Graph::new(self.n, edges.iter().map(|e| (e[0], e[1]))),
            None => Graph::complete(self.n),
        }
    }

    pub fn positions(&self) -> Result<PositionMatrix> {
        if self.positions.len() != self.n {
            return Err(Error::Invalid(format!(
                "framework declares n = {} but lists {} positions",
                self.n,
                self.positions.len()
            )));
        }
        PositionMatrix::from_rows(&self.positions)
    }

    pub fn obstacles(&self) -> Result<ObstacleSet> {
        ObstacleSet::new(self.obstacles.iter().map(|r| Vector3::from(*r)).collect())
    }
}
