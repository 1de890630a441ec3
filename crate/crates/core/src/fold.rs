//! Projection of the image network onto accounts and countries.
//!
//! Every image-image edge is attributed to the owners of its two endpoints.
//! An account (or country) edge weight counts the similar image pairs shared
//! between its two ends.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{DatasetHandle, ImageRecord};
use crate::simnet::{build_image_graph, GraphError, KnnParams, SimilarityGraph, Topology};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FoldError {
    #[error("no image carries an account id")]
    NoAttributedImages,
    #[error("unknown country {0:?}")]
    UnknownCountry(String),
    #[error("graph has {graph} nodes but the manifest has {records} records")]
    Misaligned { graph: usize, records: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldedEdge {
    /// Node indices with `a < b`.
    pub a: usize,
    pub b: usize,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountNode {
    pub account_id: String,
    pub image_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountGraph {
    /// Sorted by account id.
    pub nodes: Vec<AccountNode>,
    /// Sorted by `(a, b)`.
    pub edges: Vec<FoldedEdge>,
    /// Image edges whose endpoints share an account.
    pub intra_account_pairs: u64,
    /// Image edges with at least one endpoint lacking an account id.
    pub unattributed_edges: u64,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryNode {
    pub country: String,
    pub total_images: usize,
    pub unique_authors: usize,
    /// Image edges with both endpoints in this country.
    pub self_weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryGraph {
    /// Sorted by country label.
    pub nodes: Vec<CountryNode>,
    pub edges: Vec<FoldedEdge>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
}

fn adjacency_of(n: usize, edges: &[FoldedEdge]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.a].push(e.b);
        adj[e.b].push(e.a);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

fn tally_to_edges(tally: HashMap<(usize, usize), u64>) -> Vec<FoldedEdge> {
    let mut edges: Vec<FoldedEdge> = tally
        .into_iter()
        .map(|((a, b), weight)| FoldedEdge { a, b, weight })
        .collect();
    edges.sort_unstable_by_key(|e| (e.a, e.b));
    edges
}

impl AccountGraph {
    pub fn total_edge_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.weight).sum()
    }
}

impl CountryGraph {
    pub fn total_edge_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.weight).sum()
    }
}

impl Topology for AccountGraph {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }
}

impl Topology for CountryGraph {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }
}

fn check_alignment(graph: &SimilarityGraph, records: &[ImageRecord]) -> Result<(), FoldError> {
    if graph.node_count() != records.len() {
        return Err(FoldError::Misaligned {
            graph: graph.node_count(),
            records: records.len(),
        });
    }
    Ok(())
}

/// Folds image edges onto accounts. Runs in `O(|E|)` plus sorting the output.
pub fn fold_accounts(
    graph: &SimilarityGraph,
    records: &[ImageRecord],
) -> Result<AccountGraph, FoldError> {
    check_alignment(graph, records)?;
    let accounts: BTreeSet<&str> = records.iter().filter_map(|r| r.account_id.as_deref()).collect();
    if accounts.is_empty() {
        return Err(FoldError::NoAttributedImages);
    }
    let index: HashMap<&str, usize> = accounts.iter().enumerate().map(|(i, a)| (*a, i)).collect();
    let owner: Vec<Option<usize>> = records
        .iter()
        .map(|r| r.account_id.as_deref().map(|a| index[a]))
        .collect();
    let mut image_count = vec![0; accounts.len()];
    for o in owner.iter().flatten() {
        image_count[*o] += 1;
    }

    let mut tally: HashMap<(usize, usize), u64> = HashMap::new();
    let mut intra = 0;
    let mut unattributed = 0;
    for e in graph.edges() {
        match (owner[e.u], owner[e.v]) {
            (Some(a), Some(b)) if a == b => intra += 1,
            (Some(a), Some(b)) => *tally.entry((a.min(b), a.max(b))).or_insert(0) += 1,
            _ => unattributed += 1,
        }
    }
    let edges = tally_to_edges(tally);
    let nodes: Vec<AccountNode> = accounts
        .iter()
        .zip(image_count)
        .map(|(a, image_count)| AccountNode {
            account_id: a.to_string(),
            image_count,
        })
        .collect();
    Ok(AccountGraph {
        adjacency: adjacency_of(nodes.len(), &edges),
        nodes,
        edges,
        intra_account_pairs: intra,
        unattributed_edges: unattributed,
    })
}

/// Folds image edges onto countries.
pub fn fold_countries(
    graph: &SimilarityGraph,
    records: &[ImageRecord],
) -> Result<CountryGraph, FoldError> {
    check_alignment(graph, records)?;
    let mut authors: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *totals.entry(&r.country).or_insert(0) += 1;
        let set = authors.entry(&r.country).or_default();
        if let Some(a) = r.account_id.as_deref() {
            set.insert(a);
        }
    }
    let index: HashMap<&str, usize> = totals.keys().enumerate().map(|(i, c)| (*c, i)).collect();
    let country_of: Vec<usize> = records.iter().map(|r| index[r.country.as_str()]).collect();

    let mut self_weight = vec![0u64; totals.len()];
    let mut tally: HashMap<(usize, usize), u64> = HashMap::new();
    for e in graph.edges() {
        let (a, b) = (country_of[e.u], country_of[e.v]);
        if a == b {
            self_weight[a] += 1;
        } else {
            *tally.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let edges = tally_to_edges(tally);
    let nodes: Vec<CountryNode> = totals
        .iter()
        .zip(self_weight)
        .map(|((country, &total_images), self_weight)| CountryNode {
            country: country.to_string(),
            total_images,
            unique_authors: authors[country].len(),
            self_weight,
        })
        .collect();
    Ok(CountryGraph {
        adjacency: adjacency_of(nodes.len(), &edges),
        nodes,
        edges,
    })
}

/// Rebuilds the k-NN graph over one country's images with `k = k_for(n)`.
/// The result is not an induced subgraph of the all-country graph.
pub fn per_country_subgraph(
    dataset: &DatasetHandle,
    country: &str,
    max_distance: Option<f64>,
) -> Result<(DatasetHandle, SimilarityGraph), FoldError> {
    let country = country.to_lowercase();
    if !dataset.countries.contains(&country) {
        return Err(FoldError::UnknownCountry(country));
    }
    let subset = dataset.restrict(&dataset.rows_of_country(&country));
    let mut params = KnnParams::for_count(subset.len())?;
    params.max_distance = max_distance;
    let graph = build_image_graph(&subset.matrix, &params)?;
    Ok((subset, graph))
}
