//! Exact k-nearest-neighbor image similarity graphs.
//!
//! Every image is compared against every other image of the comparison set
//! by Euclidean distance on the raw embedding vectors. Each image links to
//! its `k = floor(ln N)` nearest neighbors and the directed lists are
//! symmetrized by union: `{i, j}` is an edge when either endpoint lists the
//! other. Edge weight is `1 / (1 + distance)`.

use std::cmp::Ordering;

use thiserror::Error;

use crate::ingest::FeatureMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("vectors have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("need at least 2 images to build a similarity graph, got {0}")]
    TooFewImages(usize),
    #[error("k = {k} is outside 1..={max}")]
    InvalidK { k: usize, max: usize },
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0}, {1}) appears more than once")]
    DuplicateEdge(usize, usize),
    #[error("edge ({u}, {v}) references a node outside 0..{n}")]
    NodeOutOfRange { u: usize, v: usize, n: usize },
    #[error("edge ({u}, {v}) has invalid distance/weight")]
    InvalidEdgeValue { u: usize, v: usize },
}

/// Read-only adjacency view shared by metrics, layout and rendering.
pub trait Topology {
    fn node_count(&self) -> usize;
    /// Neighbors of `v`, sorted ascending, without `v` itself.
    fn neighbors(&self, v: usize) -> &[usize];

    fn degree(&self, v: usize) -> usize {
        self.neighbors(v).len()
    }
}

/// Undirected edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub distance: f64,
    pub weight: f64,
}

/// Similarity as a function of Euclidean distance.
pub fn similarity(distance: f64) -> f64 {
    1.0 / (1.0 + distance)
}

/// Undirected weighted graph over image rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    n: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
}

impl SimilarityGraph {
    /// Builds a graph from `(u, v, distance)` triples; weights are derived
    /// from the distances.
    pub fn from_distances<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let edges = edges
            .into_iter()
            .map(|(u, v, distance)| Edge {
                u,
                v,
                distance,
                weight: similarity(distance),
            })
            .collect();
        Self::from_edges(n, edges)
    }

    /// Builds a graph with explicit weights. Endpoint order within an edge
    /// does not matter; the stored edge list is sorted by `(u, v)`.
    pub fn from_edges(n: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|e| {
                if e.u > e.v {
                    Edge { u: e.v, v: e.u, ..e }
                } else {
                    e
                }
            })
            .collect();
        for e in &edges {
            if e.u >= n || e.v >= n {
                return Err(GraphError::NodeOutOfRange { u: e.u, v: e.v, n });
            }
            if e.u == e.v {
                return Err(GraphError::SelfLoop(e.u, e.v));
            }
            let valid_distance = e.distance.is_finite() && e.distance >= 0.0;
            let valid_weight = e.weight.is_finite() && e.weight > 0.0;
            if !valid_distance || !valid_weight {
                return Err(GraphError::InvalidEdgeValue { u: e.u, v: e.v });
            }
        }
        edges.sort_by_key(|e| (e.u, e.v));
        if let Some(w) = edges.windows(2).find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(GraphError::DuplicateEdge(w[0].u, w[0].v));
        }
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            adjacency[e.u].push(e.v);
            adjacency[e.v].push(e.u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(SimilarityGraph { n, edges, adjacency })
    }

    /// Unit-weight graph from index pairs, with distance 0. Handy for metric
    /// and community tests where only the structure matters.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self, GraphError> {
        Self::from_edges(
            n,
            pairs
                .iter()
                .map(|&(u, v)| Edge {
                    u,
                    v,
                    distance: 0.0,
                    weight: 1.0,
                })
                .collect(),
        )
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency
            .get(u)
            .is_some_and(|list| list.binary_search(&v).is_ok())
    }

    pub fn edge(&self, u: usize, v: usize) -> Option<&Edge> {
        let key = (u.min(v), u.max(v));
        self.edges
            .binary_search_by(|e| (e.u, e.v).cmp(&key))
            .ok()
            .map(|i| &self.edges[i])
    }

    /// Keeps only edges with `distance <= max_distance`. Nodes are retained,
    /// so tight thresholds produce isolates.
    pub fn filter_max_distance(&self, max_distance: f64) -> SimilarityGraph {
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| e.distance <= max_distance)
            .copied()
            .collect();
        Self::from_edges(self.n, edges).expect("subset of a valid edge set is valid")
    }
}

impl Topology for SimilarityGraph {
    fn node_count(&self) -> usize {
        self.n
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }
}

/// Parameters of k-NN construction. Ties at equal distance always go to
/// the smaller row index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnParams {
    pub k: usize,
    /// Optional post-filter dropping edges longer than this distance.
    pub max_distance: Option<f64>,
}

impl KnnParams {
    /// Default parameters for a comparison set of `n` images.
    pub fn for_count(n: usize) -> Result<Self, GraphError> {
        Ok(KnnParams {
            k: k_for(n)?,
            max_distance: None,
        })
    }
}

/// Euclidean distance with 64-bit accumulation in ascending index order.
pub fn euclidean_distance(a: &[f32], b: &[f32]) -> Result<f64, GraphError> {
    if a.len() != b.len() {
        return Err(GraphError::DimensionMismatch(a.len(), b.len()));
    }
    Ok(distance_unchecked(a, b))
}

#[inline]
fn distance_unchecked(a: &[f32], b: &[f32]) -> f64 {
    let mut sum = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let d = f64::from(*x) - f64::from(*y);
        sum += d * d;
    }
    sum.sqrt()
}

/// Neighborhood size `clamp(floor(ln n), 1, n - 1)`.
pub fn k_for(n: usize) -> Result<usize, GraphError> {
    if n < 2 {
        return Err(GraphError::TooFewImages(n));
    }
    let k = (n as f64).ln().floor() as usize;
    Ok(k.clamp(1, n - 1))
}

#[inline]
fn by_distance_then_row(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

/// The `k` rows nearest to row `i`, ascending by `(distance, row)`.
///
/// # Panics
///
/// If `i` is out of range or `k > count - 1`.
pub fn knn_of(matrix: &FeatureMatrix, i: usize, k: usize) -> Vec<(usize, f64)> {
    let n = matrix.count();
    assert!(i < n, "row {i} out of range for {n} rows");
    assert!(k < n, "k = {k} needs at least {} rows", k + 1);
    if k == 0 {
        return Vec::new();
    }
    let query = matrix.row(i);
    let mut candidates: Vec<(usize, f64)> = (0..n)
        .filter(|&j| j != i)
        .map(|j| (j, distance_unchecked(query, matrix.row(j))))
        .collect();
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, by_distance_then_row);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(by_distance_then_row);
    candidates
}

/// Directed k-NN lists for every row.
pub fn knn_lists(matrix: &FeatureMatrix, k: usize) -> Result<Vec<Vec<(usize, f64)>>, GraphError> {
    let n = matrix.count();
    if n < 2 {
        return Err(GraphError::TooFewImages(n));
    }
    if k == 0 || k > n - 1 {
        return Err(GraphError::InvalidK { k, max: n - 1 });
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok((0..n).into_par_iter().map(|i| knn_of(matrix, i, k)).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok((0..n).map(|i| knn_of(matrix, i, k)).collect())
    }
}

/// Builds the union-symmetrized k-NN graph.
pub fn build_image_graph(
    matrix: &FeatureMatrix,
    params: &KnnParams,
) -> Result<SimilarityGraph, GraphError> {
    let lists = knn_lists(matrix, params.k)?;
    let mut pairs: Vec<(usize, usize, f64)> = lists
        .iter()
        .enumerate()
        .flat_map(|(i, list)| list.iter().map(move |&(j, d)| (i.min(j), i.max(j), d)))
        .collect();
    pairs.sort_by_key(|p| (p.0, p.1));
    pairs.dedup_by(|a, b| (a.0, a.1) == (b.0, b.1));
    if let Some(t) = params.max_distance {
        pairs.retain(|&(_, _, d)| d <= t);
    }
    SimilarityGraph::from_distances(matrix.count(), pairs)
}
