//! Louvain modularity optimization and cluster summaries.
//!
//! The implementation is the classic two-phase scheme: greedy local moves
//! until no node can improve modularity, then aggregation of communities
//! into super-nodes, repeated until a level produces no move. Runs are
//! fully deterministic: the level-0 visit order is a seeded shuffle, later
//! levels visit super-nodes by the earliest visit rank among their members,
//! and gain ties go to the smallest community id.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ImageRecord;
use crate::simnet::SimilarityGraph;

/// Minimum modularity gain for a local move to count as an improvement.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommunityError {
    #[error("modularity is undefined on a graph without edges")]
    EmptyGraph,
    #[error("assignment covers {got} nodes, graph has {expected}")]
    AssignmentLength { expected: usize, got: usize },
    #[error("visit order is not a permutation of 0..{0}")]
    InvalidOrder(usize),
}

/// How edge weights enter the modularity objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Similarity weights as stored on the graph.
    #[default]
    Weighted,
    /// Every edge counts 1.
    Unweighted,
}

impl Weighting {
    fn of(self, weight: f64) -> f64 {
        match self {
            Weighting::Weighted => weight,
            Weighting::Unweighted => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Community of each node; ids are contiguous and numbered by the
    /// smallest node they contain.
    pub assignment: Vec<usize>,
    pub modularity: f64,
    pub n_communities: usize,
    /// Modularity of the singleton partition followed by the value reached
    /// at the end of each level.
    pub level_modularity: Vec<f64>,
}

impl Partition {
    pub fn community_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_communities];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Member lists per community, each ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_communities];
        for (v, &c) in self.assignment.iter().enumerate() {
            members[c].push(v);
        }
        members
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub community: usize,
    pub size: usize,
    pub members: Vec<String>,
    /// Highest within-cluster weighted degree first.
    pub representatives: Vec<String>,
}

/// Relabels arbitrary community labels to `0..c`, numbered by first node.
pub fn compact_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = BTreeMap::new();
    let mut out = Vec::with_capacity(labels.len());
    for &l in labels {
        let next = map.len();
        out.push(*map.entry(l).or_insert(next));
    }
    (out, map.len())
}

/// Newman modularity `Σ_c [in_c / 2m − (tot_c / 2m)²]`.
pub fn modularity(
    graph: &SimilarityGraph,
    assignment: &[usize],
    weighting: Weighting,
) -> Result<f64, CommunityError> {
    use crate::simnet::Topology;
    let n = graph.node_count();
    if assignment.len() != n {
        return Err(CommunityError::AssignmentLength {
            expected: n,
            got: assignment.len(),
        });
    }
    if graph.edge_count() == 0 {
        return Err(CommunityError::EmptyGraph);
    }
    let (labels, c) = compact_labels(assignment);
    let mut internal = vec![0.0; c];
    let mut total = vec![0.0; c];
    let mut two_m = 0.0;
    for e in graph.edges() {
        let w = weighting.of(e.weight);
        two_m += 2.0 * w;
        total[labels[e.u]] += w;
        total[labels[e.v]] += w;
        if labels[e.u] == labels[e.v] {
            internal[labels[e.u]] += 2.0 * w;
        }
    }
    Ok(internal
        .iter()
        .zip(&total)
        .map(|(i, t)| i / two_m - (t / two_m) * (t / two_m))
        .sum())
}

/// Weighted graph at one Louvain level. Self-loop weights hold the
/// collapsed internal weight of a super-node (`A_ii`).
struct LevelGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    strength: Vec<f64>,
    two_m: f64,
}

impl LevelGraph {
    fn from_similarity(graph: &SimilarityGraph, weighting: Weighting) -> Self {
        use crate::simnet::Topology;
        let n = graph.node_count();
        let mut adjacency = vec![Vec::new(); n];
        for e in graph.edges() {
            let w = weighting.of(e.weight);
            adjacency[e.u].push((e.v, w));
            adjacency[e.v].push((e.u, w));
        }
        Self::new(adjacency, vec![0.0; n])
    }

    fn new(adjacency: Vec<Vec<(usize, f64)>>, self_loops: Vec<f64>) -> Self {
        let strength: Vec<f64> = adjacency
            .iter()
            .zip(&self_loops)
            .map(|(list, s)| s + list.iter().map(|&(_, w)| w).sum::<f64>())
            .collect();
        let two_m = strength.iter().sum();
        LevelGraph {
            adjacency,
            self_loops,
            strength,
            two_m,
        }
    }

    fn len(&self) -> usize {
        self.adjacency.len()
    }

    fn singleton_modularity(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let k = self.strength[i] / self.two_m;
                self.self_loops[i] / self.two_m - k * k
            })
            .sum()
    }

    /// Collapses communities (labels `0..c`) into super-nodes.
    fn aggregate(&self, community: &[usize], c: usize) -> LevelGraph {
        let mut self_loops = vec![0.0; c];
        let mut links: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); c];
        for i in 0..self.len() {
            let ci = community[i];
            self_loops[ci] += self.self_loops[i];
            for &(j, w) in &self.adjacency[i] {
                let cj = community[j];
                if ci == cj {
                    self_loops[ci] += w;
                } else {
                    *links[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        let adjacency = links.into_iter().map(|m| m.into_iter().collect()).collect();
        LevelGraph::new(adjacency, self_loops)
    }
}

struct LevelOutcome {
    community: Vec<usize>,
    moved: bool,
    modularity: f64,
}

/// Local-moving phase over one level. `order` lists nodes in visit order.
fn local_moves(graph: &LevelGraph, order: &[usize], start_q: f64) -> LevelOutcome {
    let n = graph.len();
    let two_m = graph.two_m;
    let mut community: Vec<usize> = (0..n).collect();
    let mut total = graph.strength.clone();
    let mut link_weight = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut is_touched = vec![false; n];
    let mut q = start_q;
    let mut moved_any = false;

    // Gain of inserting an isolated node of strength k into a community
    // with total `tot`, sharing `w` weight with it.
    let gain = |w: f64, tot: f64, k: f64| (2.0 / two_m) * (w - tot * k / two_m);

    loop {
        let mut moved = false;
        for &i in order {
            let k = graph.strength[i];
            let home = community[i];
            for &(j, w) in &graph.adjacency[i] {
                let c = community[j];
                if !is_touched[c] {
                    is_touched[c] = true;
                    touched.push(c);
                }
                link_weight[c] += w;
            }
            total[home] -= k;
            let stay = gain(link_weight[home], total[home], k);
            touched.sort_unstable();
            let mut best: Option<(usize, f64)> = None;
            for &c in &touched {
                if c == home {
                    continue;
                }
                let g = gain(link_weight[c], total[c], k);
                if best.is_none_or(|(_, bg)| g > bg) {
                    best = Some((c, g));
                }
            }
            let target = match best {
                Some((c, g)) if g > stay + MIN_GAIN => {
                    q += g - stay;
                    moved = true;
                    c
                }
                _ => home,
            };
            total[target] += k;
            community[i] = target;
            for &c in &touched {
                link_weight[c] = 0.0;
                is_touched[c] = false;
            }
            link_weight[home] = 0.0;
            touched.clear();
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    LevelOutcome {
        community,
        moved: moved_any,
        modularity: q,
    }
}

/// Louvain with a seeded visit order.
pub fn louvain(
    graph: &SimilarityGraph,
    seed: u64,
    weighting: Weighting,
) -> Result<Partition, CommunityError> {
    use crate::simnet::Topology;
    let mut order: Vec<usize> = (0..graph.node_count()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    louvain_with_order(graph, &order, weighting)
}

/// Louvain with an explicit level-0 visit order (a permutation of the nodes).
pub fn louvain_with_order(
    graph: &SimilarityGraph,
    order: &[usize],
    weighting: Weighting,
) -> Result<Partition, CommunityError> {
    use crate::simnet::Topology;
    let n = graph.node_count();
    if graph.edge_count() == 0 {
        return Err(CommunityError::EmptyGraph);
    }
    let mut rank = vec![usize::MAX; n];
    if order.len() != n {
        return Err(CommunityError::InvalidOrder(n));
    }
    for (pos, &v) in order.iter().enumerate() {
        if v >= n || rank[v] != usize::MAX {
            return Err(CommunityError::InvalidOrder(n));
        }
        rank[v] = pos;
    }

    let mut level = LevelGraph::from_similarity(graph, weighting);
    // Super-node each original node currently belongs to.
    let mut membership: Vec<usize> = (0..n).collect();
    let mut q = level.singleton_modularity();
    let mut history = vec![q];

    loop {
        let mut visit: Vec<usize> = (0..level.len()).collect();
        visit.sort_by_key(|&v| rank[v]);
        let outcome = local_moves(&level, &visit, q);
        if !outcome.moved {
            break;
        }
        q = outcome.modularity;
        history.push(q);

        // Number super-nodes by the earliest visit rank among their members.
        let mut first_rank: BTreeMap<usize, usize> = BTreeMap::new();
        for v in 0..level.len() {
            let c = outcome.community[v];
            let r = first_rank.entry(c).or_insert(usize::MAX);
            *r = (*r).min(rank[v]);
        }
        let mut by_rank: Vec<(usize, usize)> = first_rank.into_iter().map(|(c, r)| (r, c)).collect();
        by_rank.sort_unstable();
        let mut relabel = vec![0; level.len()];
        let mut next_rank = Vec::with_capacity(by_rank.len());
        for (new_id, &(r, c)) in by_rank.iter().enumerate() {
            relabel[c] = new_id;
            next_rank.push(r);
        }
        let community: Vec<usize> = outcome.community.iter().map(|&c| relabel[c]).collect();
        for m in membership.iter_mut() {
            *m = community[*m];
        }
        level = level.aggregate(&community, by_rank.len());
        rank = next_rank;
        if level.len() == 1 {
            break;
        }
    }

    let (assignment, n_communities) = compact_labels(&membership);
    Ok(Partition {
        assignment,
        modularity: q,
        n_communities,
        level_modularity: history,
    })
}

/// The `count` largest communities (ties by smaller id), each with up to
/// `reps_per_cluster` representatives ranked by within-cluster weighted
/// degree (ties by image id).
///
/// # Panics
///
/// If `records` and `partition` do not cover the same nodes as `graph`.
pub fn top_clusters(
    graph: &SimilarityGraph,
    partition: &Partition,
    records: &[ImageRecord],
    count: usize,
    reps_per_cluster: usize,
) -> Vec<ClusterSummary> {
    use crate::simnet::Topology;
    assert_eq!(records.len(), graph.node_count(), "records must align with graph nodes");
    assert_eq!(partition.assignment.len(), graph.node_count());
    let mut inner_degree = vec![0.0; graph.node_count()];
    for e in graph.edges() {
        if partition.assignment[e.u] == partition.assignment[e.v] {
            inner_degree[e.u] += e.weight;
            inner_degree[e.v] += e.weight;
        }
    }
    let members = partition.members();
    let mut ranked: Vec<usize> = (0..partition.n_communities).collect();
    ranked.sort_by(|&a, &b| members[b].len().cmp(&members[a].len()).then(a.cmp(&b)));
    ranked
        .into_iter()
        .take(count)
        .map(|c| {
            let nodes = &members[c];
            let mut reps = nodes.clone();
            reps.sort_by(|&a, &b| {
                inner_degree[b]
                    .total_cmp(&inner_degree[a])
                    .then_with(|| records[a].image_id.cmp(&records[b].image_id))
            });
            reps.truncate(reps_per_cluster);
            ClusterSummary {
                community: c,
                size: nodes.len(),
                members: nodes.iter().map(|&v| records[v].image_id.clone()).collect(),
                representatives: reps.iter().map(|&v| records[v].image_id.clone()).collect(),
            }
        })
        .collect()
}
