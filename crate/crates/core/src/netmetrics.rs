//! Network-level coordination metrics: average local clustering coefficient,
//! fragmentation and connected components. Edge weights are ignored.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simnet::Topology;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("fragmentation needs at least 2 nodes, got {0}")]
    DegenerateGraph(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetrics {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub clustering_coefficient: f64,
    pub fragmentation: f64,
    pub n_components: usize,
    pub n_isolates: usize,
    /// Sizes in descending order.
    pub component_sizes: Vec<usize>,
}

/// Maximal connected node sets, each sorted ascending, ordered by their
/// smallest node.
pub fn connected_components<G: Topology + ?Sized>(graph: &G) -> Vec<Vec<usize>> {
    let n = graph.node_count();
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut members = Vec::new();
        while let Some(v) = stack.pop() {
            members.push(v);
            for &w in graph.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

/// Number of edges among the neighbors of `v`.
fn neighbor_links<G: Topology + ?Sized>(graph: &G, v: usize) -> usize {
    let nbrs = graph.neighbors(v);
    let mut links = 0;
    for (idx, &a) in nbrs.iter().enumerate() {
        // Both lists are sorted, so count the intersection of a's neighbors
        // with the neighbors of v that come after a.
        let rest = &nbrs[idx + 1..];
        let adj = graph.neighbors(a);
        let (mut i, mut j) = (0, 0);
        while i < rest.len() && j < adj.len() {
            match rest[i].cmp(&adj[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    links += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    links
}

/// Fraction of neighbor pairs of `v` that are linked; 0 when `deg(v) < 2`.
pub fn local_clustering<G: Topology + ?Sized>(graph: &G, v: usize) -> f64 {
    let deg = graph.degree(v);
    if deg < 2 {
        return 0.0;
    }
    let links = neighbor_links(graph, v);
    (2 * links) as f64 / (deg * (deg - 1)) as f64
}

/// Mean of [`local_clustering`] over all nodes, low-degree nodes included.
pub fn clustering_coefficient<G: Topology + Sync + ?Sized>(graph: &G) -> f64 {
    let n = graph.node_count();
    if n == 0 {
        return 0.0;
    }
    let locals: Vec<f64> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(|v| local_clustering(graph, v)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..n).map(|v| local_clustering(graph, v)).collect()
        }
    };
    locals.iter().sum::<f64>() / n as f64
}

fn fragmentation_from_sizes(n: usize, sizes: impl Iterator<Item = usize>) -> f64 {
    let reachable: u128 = sizes.map(|s| (s as u128) * (s as u128 - 1)).sum();
    let pairs = (n as u128) * (n as u128 - 1);
    (pairs - reachable) as f64 / pairs as f64
}

/// Share of ordered node pairs that cannot reach each other:
/// `1 - Σ s(s-1) / n(n-1)` over component sizes `s`.
pub fn fragmentation<G: Topology + ?Sized>(graph: &G) -> Result<f64, MetricsError> {
    let n = graph.node_count();
    if n < 2 {
        return Err(MetricsError::DegenerateGraph(n));
    }
    let components = connected_components(graph);
    Ok(fragmentation_from_sizes(n, components.iter().map(Vec::len)))
}

pub fn metrics_report<G: Topology + Sync + ?Sized>(graph: &G) -> NetworkMetrics {
    let n = graph.node_count();
    let components = connected_components(graph);
    let mut sizes: Vec<usize> = components.iter().map(Vec::len).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let degree_sum: usize = (0..n).map(|v| graph.degree(v)).sum();
    let fragmentation = if n < 2 {
        0.0
    } else {
        fragmentation_from_sizes(n, sizes.iter().copied())
    };
    NetworkMetrics {
        n_nodes: n,
        n_edges: degree_sum / 2,
        clustering_coefficient: clustering_coefficient(graph),
        fragmentation,
        n_components: sizes.len(),
        n_isolates: sizes.iter().filter(|&&s| s == 1).count(),
        component_sizes: sizes,
    }
}
