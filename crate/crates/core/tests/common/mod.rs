//! Brute-force oracles and property checks shared by the integration tests
//! and the acceptance runner. Each `check_*` returns a one-line summary on
//! success and a description of the first violation otherwise.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use simnet_core::communities::{louvain, louvain_with_order, modularity, Weighting};
use simnet_core::fold::{fold_accounts, fold_countries};
use simnet_core::ingest::{FeatureMatrix, ImageRecord};
use simnet_core::layout::{centroid, init_positions, step, total_pairwise_distance, Fa2Params, LayoutState};
use simnet_core::netmetrics::{clustering_coefficient, fragmentation, metrics_report};
use simnet_core::simnet::{build_image_graph, k_for, knn_of, Edge, KnnParams, SimilarityGraph, Topology};

pub type Check = Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- k-NN

/// Random matrix. Mode 0 draws uniform values, mode 1 duplicates a few
/// distinct rows, mode 2 uses small integers so equal distances are common.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize, mode: usize) -> FeatureMatrix {
    let rows: Vec<Vec<f32>> = match mode % 3 {
        0 => (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect())
            .collect(),
        1 => {
            let distinct = rng.random_range(1..=n.div_ceil(3));
            let base: Vec<Vec<f32>> = (0..distinct)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect())
                .collect();
            (0..n).map(|_| base[rng.random_range(0..distinct)].clone()).collect()
        }
        _ => (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-2i32..=2) as f32).collect())
            .collect(),
    };
    FeatureMatrix::from_rows(&rows).unwrap()
}

fn oracle_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Every row's k nearest rows by full sort on (distance, index).
pub fn brute_knn(matrix: &FeatureMatrix, k: usize) -> Vec<Vec<(usize, f64)>> {
    let n = matrix.count();
    (0..n)
        .map(|i| {
            let mut all: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, oracle_distance(matrix.row(i), matrix.row(j))))
                .collect();
            all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            all.truncate(k);
            all
        })
        .collect()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

pub fn check_knn_oracle(count: usize, max_n: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let dims = [2usize, 8, 2048];
    let started = Instant::now();
    let mut tie_rows = 0;
    for t in 0..count {
        let n = rng.random_range(5..=max_n);
        let d = dims[t % dims.len()];
        let matrix = random_matrix(&mut rng, n, d, t / dims.len());
        let k = if t % 2 == 0 { k_for(n).unwrap() } else { rng.random_range(1..n) };
        let oracle = brute_knn(&matrix, k);
        let graph = build_image_graph(&matrix, &KnnParams { k, max_distance: None }).map_err(|e| e.to_string())?;
        let mut union: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (i, list) in oracle.iter().enumerate() {
            let got: Vec<usize> = knn_of(&matrix, i, k).iter().map(|p| p.0).collect();
            let want: Vec<usize> = list.iter().map(|p| p.0).collect();
            if got != want {
                return Err(format!("matrix {t} (n={n}, d={d}, k={k}) row {i}: {got:?} != {want:?}"));
            }
            if list.windows(2).any(|w| w[0].1 == w[1].1) {
                tie_rows += 1;
            }
            for &(j, _) in list {
                union[i].insert(j);
                union[j].insert(i);
            }
        }
        for (i, want) in union.iter().enumerate() {
            let want: Vec<usize> = want.iter().copied().collect();
            if graph.neighbors(i) != want.as_slice() {
                return Err(format!("matrix {t} (n={n}, d={d}, k={k}) node {i}: neighbor lists differ"));
            }
        }
        for e in graph.edges() {
            let want = oracle_distance(matrix.row(e.u), matrix.row(e.v));
            if !close(e.distance, want, 1e-12) || e.weight != 1.0 / (1.0 + e.distance) {
                return Err(format!("matrix {t}: edge {}-{} distance/weight mismatch", e.u, e.v));
            }
        }
    }
    Ok(format!(
        "{count} matrices, {tie_rows} rows with tied distances, {:.1}s",
        started.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------- metrics

/// Erdős–Rényi graph with optional random weights in (0, 1].
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, weighted: bool) -> SimilarityGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                let weight = if weighted { rng.random_range(0.05..=1.0) } else { 1.0 };
                edges.push(Edge {
                    u,
                    v,
                    distance: 1.0 / weight - 1.0,
                    weight,
                });
            }
        }
    }
    SimilarityGraph::from_edges(n, edges).unwrap()
}

/// Random graph plus a path through all nodes.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> SimilarityGraph {
    let g = random_graph(rng, n, p, false);
    let mut pairs: BTreeSet<(usize, usize)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for w in order.windows(2) {
        pairs.insert((w[0].min(w[1]), w[0].max(w[1])));
    }
    SimilarityGraph::from_pairs(n, &pairs.into_iter().collect::<Vec<_>>()).unwrap()
}

fn adjacency_matrix(g: &SimilarityGraph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut adj = vec![vec![false; n]; n];
    for e in g.edges() {
        adj[e.u][e.v] = true;
        adj[e.v][e.u] = true;
    }
    adj
}

pub fn brute_clustering(g: &SimilarityGraph) -> f64 {
    let adj = adjacency_matrix(g);
    let n = adj.len();
    let mut total = 0.0;
    for v in 0..n {
        let nb: Vec<usize> = (0..n).filter(|&u| adj[v][u]).collect();
        if nb.len() < 2 {
            continue;
        }
        let mut triangles = 0usize;
        for a in 0..nb.len() {
            for b in a + 1..nb.len() {
                if adj[nb[a]][nb[b]] {
                    triangles += 1;
                }
            }
        }
        total += 2.0 * triangles as f64 / (nb.len() * (nb.len() - 1)) as f64;
    }
    total / n as f64
}

/// Unreachable ordered pairs over n(n-1), via transitive closure.
pub fn brute_fragmentation(g: &SimilarityGraph) -> f64 {
    let mut reach = adjacency_matrix(g);
    let n = reach.len();
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for m in 0..n {
        for i in 0..n {
            if reach[i][m] {
                for j in 0..n {
                    if reach[m][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let unreachable = reach.iter().flatten().filter(|r| !**r).count();
    unreachable as f64 / (n * (n - 1)) as f64
}

pub fn check_metric_oracles(count: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut connected = 0;
    for t in 0..count {
        let n = rng.random_range(2..=60);
        let p = rng.random_range(0.0..0.4);
        let g = if t % 3 == 0 {
            random_connected_graph(&mut rng, n, p)
        } else {
            random_graph(&mut rng, n, p, false)
        };
        let cc = clustering_coefficient(&g);
        let want_cc = brute_clustering(&g);
        if (cc - want_cc).abs() > 1e-12 {
            return Err(format!("graph {t}: clustering {cc} vs oracle {want_cc}"));
        }
        let frag = fragmentation(&g).map_err(|e| e.to_string())?;
        let want_frag = brute_fragmentation(&g);
        if frag != want_frag {
            return Err(format!("graph {t}: fragmentation {frag} vs oracle {want_frag}"));
        }
        let report = metrics_report(&g);
        if report.fragmentation != frag || report.clustering_coefficient != cc {
            return Err(format!("graph {t}: metrics_report disagrees with direct calls"));
        }
        if report.n_components == 1 {
            connected += 1;
            if frag != 0.0 {
                return Err(format!("graph {t}: connected but fragmentation {frag}"));
            }
        }
    }
    Ok(format!("{count} graphs ({connected} connected, all with fragmentation exactly 0)"))
}

// ---------------------------------------------------------------- modularity

/// All set partitions of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=max + 1 {
            prefix.push(c);
            rec(prefix, max.max(c), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut prefix = vec![0];
    rec(&mut prefix, 0, n, &mut out);
    out
}

/// Canonical form of a partition: sorted list of sorted member sets.
pub fn canonical(assignment: &[usize]) -> Vec<Vec<usize>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, &c) in assignment.iter().enumerate() {
        groups.entry(c).or_default().push(v);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

pub fn relabel(assignment: &[usize], perm: &[usize]) -> Vec<usize> {
    let mut out = vec![0; assignment.len()];
    for (v, &c) in assignment.iter().enumerate() {
        out[perm[v]] = c;
    }
    out
}

/// Disjoint unit-weight cliques; node labels shuffled by `perm_seed`.
/// Returns the graph and the clique of every node.
pub fn disjoint_cliques(sizes: &[usize], perm_seed: u64) -> (SimilarityGraph, Vec<usize>) {
    let n: usize = sizes.iter().sum();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng(perm_seed));
    let mut pairs = Vec::new();
    let mut clique = vec![0; n];
    let mut start = 0;
    for (c, &s) in sizes.iter().enumerate() {
        for a in start..start + s {
            clique[perm[a]] = c;
            for b in a + 1..start + s {
                pairs.push((perm[a].min(perm[b]), perm[a].max(perm[b])));
            }
        }
        start += s;
    }
    (SimilarityGraph::from_pairs(n, &pairs).unwrap(), clique)
}

/// Exhaustive modularity optimum over all partitions of disjoint cliques,
/// enumerated up to relabeling of nodes inside each clique. Returns the best
/// Q and how many configurations reach it within 1e-12.
pub fn clique_family_optimum(sizes: &[usize]) -> (f64, usize) {
    let m: f64 = sizes.iter().map(|s| (s * (s - 1) / 2) as f64).sum();
    fn score(comms: &[(u64, u64)], m: f64) -> f64 {
        comms
            .iter()
            .map(|&(l, d)| l as f64 / m - (d as f64 / (2.0 * m)).powi(2))
            .sum()
    }
    fn integer_partitions(r: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if r == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=r.min(max)).rev() {
            prefix.push(part);
            integer_partitions(r - part, part, prefix, out);
            prefix.pop();
        }
    }
    struct Search<'a> {
        sizes: &'a [usize],
        m: f64,
        best: f64,
        ties: usize,
    }
    impl Search<'_> {
        fn clique(&mut self, j: usize, comms: &mut Vec<(u64, u64)>) {
            if j == self.sizes.len() {
                let q = score(comms, self.m);
                if q > self.best + 1e-12 {
                    self.best = q;
                    self.ties = 1;
                } else if (q - self.best).abs() <= 1e-12 {
                    self.ties += 1;
                }
                return;
            }
            self.existing(j, 0, self.sizes[j], comms);
        }
        fn existing(&mut self, j: usize, e: usize, left: usize, comms: &mut Vec<(u64, u64)>) {
            let s = self.sizes[j];
            if e == comms.len() {
                let mut parts = Vec::new();
                integer_partitions(left, left, &mut Vec::new(), &mut parts);
                let base = comms.len();
                for p in parts {
                    for &c in &p {
                        comms.push(((c * (c.max(1) - 1) / 2) as u64, (c * (s - 1)) as u64));
                    }
                    self.clique(j + 1, comms);
                    comms.truncate(base);
                }
                return;
            }
            for c in 0..=left {
                let saved = comms[e];
                comms[e].0 += (c * c.saturating_sub(1) / 2) as u64;
                comms[e].1 += (c * (s - 1)) as u64;
                self.existing(j, e + 1, left - c, comms);
                comms[e] = saved;
            }
        }
    }
    let mut search = Search {
        sizes,
        m,
        best: f64::NEG_INFINITY,
        ties: 0,
    };
    search.clique(0, &mut Vec::new());
    (search.best, search.ties)
}

/// Best modularity over every set partition (n ≤ 10) and the partitions
/// achieving it within 1e-12.
pub fn brute_best_partition(g: &SimilarityGraph, weighting: Weighting) -> (f64, Vec<Vec<usize>>, Vec<f64>) {
    let mut best = f64::NEG_INFINITY;
    let mut argmax = Vec::new();
    let mut all = Vec::new();
    for p in set_partitions(g.node_count()) {
        let q = modularity(g, &p, weighting).unwrap();
        all.push(q);
        if q > best + 1e-12 {
            best = q;
            argmax = vec![p];
        } else if (q - best).abs() <= 1e-12 {
            argmax.push(p);
        }
    }
    (best, argmax, all)
}

pub fn clique_instances() -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for a in 3..=5 {
        for b in a..=5 {
            out.push(vec![a, b]);
            for c in b..=5 {
                out.push(vec![a, b, c]);
            }
        }
    }
    out
}

pub fn check_modularity_ground_truth(seeds: u64) -> Check {
    let (tri, _) = disjoint_cliques(&[3, 3], 0);
    let by_triangle: Vec<usize> = (0..6)
        .map(|v| usize::from(!tri.neighbors(0).contains(&v) && v != 0))
        .collect();
    let q = modularity(&tri, &by_triangle, Weighting::Weighted).map_err(|e| e.to_string())?;
    if (q - 0.5).abs() > 1e-12 {
        return Err(format!("two triangles split by triangle: Q = {q}"));
    }
    let q = modularity(&tri, &[0; 6], Weighting::Weighted).map_err(|e| e.to_string())?;
    if q.abs() > 1e-12 {
        return Err(format!("single community: Q = {q}"));
    }
    let instances = clique_instances();
    let mut runs = 0;
    for (t, sizes) in instances.iter().enumerate() {
        let (opt, ties) = clique_family_optimum(sizes);
        let (g, clique) = disjoint_cliques(sizes, 1000 + t as u64);
        let truth = canonical(&clique);
        let truth_q = modularity(&g, &clique, Weighting::Weighted).unwrap();
        if ties != 1 || (truth_q - opt).abs() > 1e-12 {
            return Err(format!("cliques {sizes:?}: optimum {opt} (x{ties}) is not the clique partition {truth_q}"));
        }
        if g.node_count() <= 10 {
            let (best, argmax, _) = brute_best_partition(&g, Weighting::Weighted);
            if (best - opt).abs() > 1e-12 || argmax.len() != 1 || canonical(&argmax[0]) != truth {
                return Err(format!("cliques {sizes:?}: full enumeration disagrees with reduced search"));
            }
        }
        for seed in 0..seeds {
            let p = louvain(&g, seed, Weighting::Weighted).map_err(|e| e.to_string())?;
            if canonical(&p.assignment) != truth || (p.modularity - opt).abs() > 1e-12 {
                return Err(format!(
                    "cliques {sizes:?}, seed {seed}: louvain Q {} vs optimum {opt}",
                    p.modularity
                ));
            }
            runs += 1;
        }
    }
    Ok(format!("{} clique instances, {runs} louvain runs at the optimum", instances.len()))
}

/// Random graph with planted groups, so Louvain runs several levels.
pub fn planted_weighted_graph(rng: &mut ChaCha8Rng, n: usize) -> SimilarityGraph {
    let groups = rng.random_range(2..=8);
    let p_in = rng.random_range(0.2..0.7);
    let p_out = rng.random_range(0.0..0.08);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if u % groups == v % groups { p_in } else { p_out };
            if rng.random_bool(p) {
                let weight: f64 = rng.random_range(0.05..=1.0);
                edges.push(Edge {
                    u,
                    v,
                    distance: 1.0 / weight - 1.0,
                    weight,
                });
            }
        }
    }
    SimilarityGraph::from_edges(n, edges).unwrap()
}

pub fn check_louvain_consistency(count: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut max_err: f64 = 0.0;
    let mut levels = 0;
    let mut tested = 0;
    while tested < count {
        let n = rng.random_range(8..=200);
        let g = if tested % 2 == 0 {
            planted_weighted_graph(&mut rng, n)
        } else {
            let p = rng.random_range(0.02..0.2);
            random_graph(&mut rng, n, p, true)
        };
        if g.edge_count() == 0 {
            continue;
        }
        for weighting in [Weighting::Weighted, Weighting::Unweighted] {
            let p = louvain(&g, rng.random(), weighting).map_err(|e| e.to_string())?;
            let fresh = modularity(&g, &p.assignment, weighting).map_err(|e| e.to_string())?;
            let err = (p.modularity - fresh).abs();
            max_err = max_err.max(err);
            if err > 1e-9 {
                return Err(format!("graph {tested}: tracked Q {} vs recomputed {fresh}", p.modularity));
            }
            if let Some(w) = p.level_modularity.windows(2).find(|w| w[1] < w[0]) {
                return Err(format!("graph {tested}: modularity fell from {} to {}", w[0], w[1]));
            }
            if p.level_modularity.last() != Some(&p.modularity) {
                return Err(format!("graph {tested}: last level Q differs from reported Q"));
            }
            levels = levels.max(p.level_modularity.len() - 1);
        }
        tested += 1;
    }
    Ok(format!("{count} graphs x 2 weightings, max |dQ| {max_err:.1e}, up to {levels} levels"))
}

pub fn check_louvain_equivariance(count: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    for t in 0..count {
        let n = rng.random_range(10..=80);
        let g = planted_weighted_graph(&mut rng, n);
        if g.edge_count() == 0 {
            continue;
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let edges = g
            .edges()
            .iter()
            .map(|e| {
                let (a, b) = (perm[e.u], perm[e.v]);
                Edge {
                    u: a.min(b),
                    v: a.max(b),
                    ..*e
                }
            })
            .collect();
        let h = SimilarityGraph::from_edges(n, edges).unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let permuted_order: Vec<usize> = order.iter().map(|&v| perm[v]).collect();
        let pg = louvain_with_order(&g, &order, Weighting::Weighted).unwrap();
        let ph = louvain_with_order(&h, &permuted_order, Weighting::Weighted).unwrap();
        if canonical(&relabel(&pg.assignment, &perm)) != canonical(&ph.assignment) {
            return Err(format!("graph {t}: permuted partition differs"));
        }
    }
    Ok(format!("{count} relabeled graphs"))
}

// ---------------------------------------------------------------- folding

pub fn random_records(rng: &mut ChaCha8Rng, n: usize) -> Vec<ImageRecord> {
    let accounts = rng.random_range(1..=8);
    let countries = ["china", "iran", "russia", "venezuela"];
    let used = rng.random_range(1..=countries.len());
    let mut records: Vec<ImageRecord> = (0..n)
        .map(|row| ImageRecord {
            image_id: format!("img{row}"),
            account_id: (!rng.random_bool(0.2)).then(|| format!("acct{}", rng.random_range(0..accounts))),
            country: countries[rng.random_range(0..used)].to_string(),
            row,
        })
        .collect();
    if records.iter().all(|r| r.account_id.is_none()) {
        records[0].account_id = Some("acct0".into());
    }
    records
}

pub fn check_fold_conservation(count: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut total_edges = 0;
    for t in 0..count {
        let n = rng.random_range(2..=80);
        let p = rng.random_range(0.0..0.3);
        let g = random_graph(&mut rng, n, p, false);
        let records = random_records(&mut rng, n);
        let e = g.edge_count() as u64;
        total_edges += e;
        let acc = fold_accounts(&g, &records).map_err(|e| e.to_string())?;
        let acc_sum = acc.total_edge_weight() + acc.intra_account_pairs as u64 + acc.unattributed_edges as u64;
        if acc_sum != e {
            return Err(format!("graph {t}: account fold accounts for {acc_sum} of {e} edges"));
        }
        let attributed = records.iter().filter(|r| r.account_id.is_some()).count();
        if acc.nodes.iter().map(|a| a.image_count).sum::<usize>() != attributed {
            return Err(format!("graph {t}: account image counts do not sum to attributed images"));
        }
        let cty = fold_countries(&g, &records).map_err(|e| e.to_string())?;
        let cty_sum = cty.total_edge_weight() + cty.nodes.iter().map(|c| c.self_weight).sum::<u64>();
        if cty_sum != e {
            return Err(format!("graph {t}: country fold accounts for {cty_sum} of {e} edges"));
        }
        if cty.nodes.iter().map(|c| c.total_images).sum::<usize>() != n {
            return Err(format!("graph {t}: country image totals do not sum to {n}"));
        }
    }
    Ok(format!("{count} graphs, {total_edges} image edges conserved by both folds"))
}

// ---------------------------------------------------------------- layout

pub fn random_knn_graph(n: usize, d: usize, seed: u64) -> SimilarityGraph {
    let matrix = random_matrix(&mut rng(seed), n, d, 0);
    build_image_graph(&matrix, &KnnParams::for_count(n).unwrap()).unwrap()
}

fn rms_radius(positions: &[[f64; 2]]) -> f64 {
    let c = centroid(positions);
    let s: f64 = positions
        .iter()
        .map(|p| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2))
        .sum();
    (s / positions.len() as f64).sqrt()
}

/// Largest per-step centroid drift relative to the layout's RMS radius.
pub fn centroid_drift(graph: &SimilarityGraph, params: &Fa2Params, steps: usize) -> Result<f64, String> {
    let mut state = init_positions(graph.node_count(), params.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let before = centroid(&state.positions);
        state = step(graph, &state, params).map_err(|e| e.to_string())?;
        let after = centroid(&state.positions);
        let drift = ((after[0] - before[0]).powi(2) + (after[1] - before[1]).powi(2)).sqrt();
        worst = worst.max(drift / rms_radius(&state.positions).max(1.0));
    }
    Ok(worst)
}

/// Steps a repulsion-only system and returns the first step whose total
/// pairwise distance decreased, if any.
pub fn repulsion_monotone(n: usize, params: &Fa2Params, steps: usize) -> Result<Option<usize>, String> {
    let g = SimilarityGraph::from_pairs(n, &[]).unwrap();
    let mut state = init_positions(n, params.seed);
    let mut total = total_pairwise_distance(&state.positions);
    for s in 0..steps {
        state = step(&g, &state, params).map_err(|e| e.to_string())?;
        let next = total_pairwise_distance(&state.positions);
        if next < total {
            return Ok(Some(s));
        }
        total = next;
    }
    Ok(None)
}

pub fn timed_layout(graph: &SimilarityGraph, params: &Fa2Params) -> Result<(f64, bool), String> {
    let started = Instant::now();
    let mut state = init_positions(graph.node_count(), params.seed);
    for _ in 0..params.iterations {
        state = step(graph, &state, params).map_err(|e| e.to_string())?;
    }
    let finite = state.positions.iter().flatten().all(|v| v.is_finite());
    Ok((started.elapsed().as_secs_f64(), finite))
}

pub fn check_layout_physics(big_n: usize, exact_budget: f64, bh_budget: f64) -> Check {
    let free = Fa2Params {
        gravity: 0.0,
        ..Fa2Params::default()
    };
    let g = random_knn_graph(400, 8, 11);
    let drift_exact = centroid_drift(&g, &free, 200)?;
    let drift_bh = centroid_drift(
        &g,
        &Fa2Params {
            barnes_hut: Some(1.2),
            ..free.clone()
        },
        200,
    )?;
    if drift_exact >= 1e-6 || drift_bh >= 1e-6 {
        return Err(format!("centroid drift {drift_exact:.1e} exact, {drift_bh:.1e} Barnes-Hut"));
    }
    for (n, seed) in [(2, 1), (50, 2), (300, 3)] {
        let params = Fa2Params { seed, ..free.clone() };
        if let Some(s) = repulsion_monotone(n, &params, 100)? {
            return Err(format!("repulsion-only n={n}: total distance fell at step {s}"));
        }
    }
    let big = random_knn_graph(big_n, 16, 4000);
    let (exact_secs, exact_finite) = timed_layout(&big, &Fa2Params::default())?;
    let (bh_secs, bh_finite) = timed_layout(
        &big,
        &Fa2Params {
            barnes_hut: Some(1.2),
            ..Fa2Params::default()
        },
    )?;
    if !exact_finite || !bh_finite {
        return Err("non-finite coordinate in large layout".into());
    }
    if exact_secs >= exact_budget || bh_secs >= bh_budget {
        return Err(format!(
            "{big_n} nodes x 500 iterations took {exact_secs:.1}s exact (limit {exact_budget}s), {bh_secs:.1}s Barnes-Hut (limit {bh_budget}s)"
        ));
    }
    Ok(format!(
        "drift {drift_exact:.1e}/{drift_bh:.1e}, repulsion monotone, {big_n} nodes: {exact_secs:.1}s exact, {bh_secs:.1}s Barnes-Hut"
    ))
}

pub fn translated(state: &LayoutState, t: [f64; 2]) -> LayoutState {
    LayoutState::from_positions(state.positions.iter().map(|p| [p[0] + t[0], p[1] + t[1]]).collect())
}
