//! ForceAtlas2 force-directed layout.
//!
//! Forces per iteration, all evaluated against the pre-step positions:
//!
//! * repulsion between every node pair, `k_r (deg u + 1)(deg v + 1) / d`;
//! * attraction along each edge, `d` (or `ln(1 + d)` in lin-log mode);
//! * gravity toward the origin, `k_g (deg u + 1)`.
//!
//! Displacements use the swing/traction adaptive speed scheme: a global
//! speed tuned from the total swing and traction, and a per-node factor
//! `speed / (1 + sqrt(speed * swing))`.

mod barnes_hut;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simnet::Topology;

use barnes_hut::QuadTree;

/// Opening angle used when Barnes-Hut repulsion is requested without one.
pub const DEFAULT_THETA: f64 = 1.2;

/// Length of the separation vector substituted for coincident nodes.
const COINCIDENT_JITTER: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("non-finite coordinate for node {node} at iteration {iteration}")]
    NumericalBlowup { node: usize, iteration: usize },
    #[error("invalid layout parameter: {0}")]
    InvalidParams(String),
    #[error("layout state covers {state} nodes, graph has {graph}")]
    StateMismatch { state: usize, graph: usize },
    #[error("prevent_overlap is not implemented")]
    PreventOverlapUnsupported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Fa2Params {
    /// Repulsion strength `k_r`.
    pub scaling: f64,
    /// Gravity strength `k_g`; 0 disables gravity.
    pub gravity: f64,
    pub iterations: usize,
    pub jitter_tolerance: f64,
    pub linlog: bool,
    /// Accepted for configuration compatibility; enabling it is an error.
    pub prevent_overlap: bool,
    pub seed: u64,
    /// Barnes-Hut opening angle; `None` computes exact O(n²) repulsion.
    pub barnes_hut: Option<f64>,
    /// Stop early once no node moves farther than this in one step.
    pub until_stable: Option<f64>,
}

impl Default for Fa2Params {
    fn default() -> Self {
        Fa2Params {
            scaling: 2.0,
            gravity: 1.0,
            iterations: 500,
            jitter_tolerance: 1.0,
            linlog: false,
            prevent_overlap: false,
            seed: 7,
            barnes_hut: None,
            until_stable: None,
        }
    }
}

impl Fa2Params {
    pub fn validate(&self) -> Result<(), LayoutError> {
        let bad = |what: &str| Err(LayoutError::InvalidParams(what.to_string()));
        if !(self.scaling > 0.0 && self.scaling.is_finite()) {
            return bad("scaling must be positive");
        }
        if !(self.gravity >= 0.0 && self.gravity.is_finite()) {
            return bad("gravity must be non-negative");
        }
        if self.iterations == 0 {
            return bad("iterations must be positive");
        }
        if !(self.jitter_tolerance > 0.0 && self.jitter_tolerance.is_finite()) {
            return bad("jitter_tolerance must be positive");
        }
        if self.barnes_hut.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
            return bad("Barnes-Hut theta must be positive");
        }
        if self.until_stable.is_some_and(|e| e.is_nan() || e <= 0.0) {
            return bad("until_stable must be positive");
        }
        if self.prevent_overlap {
            return Err(LayoutError::PreventOverlapUnsupported);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutState {
    pub positions: Vec<[f64; 2]>,
    /// Forces of the previous step, for swing and traction.
    pub prev_forces: Vec<[f64; 2]>,
    pub iteration: usize,
    pub speed: f64,
    pub speed_efficiency: f64,
    /// Largest single-node displacement of the last step.
    pub max_displacement: f64,
}

impl LayoutState {
    pub fn from_positions(positions: Vec<[f64; 2]>) -> Self {
        let n = positions.len();
        LayoutState {
            positions,
            prev_forces: vec![[0.0; 2]; n],
            iteration: 0,
            speed: 1.0,
            speed_efficiency: 1.0,
            max_displacement: f64::INFINITY,
        }
    }
}

/// Uniform positions in `[-√n, √n]²`, with no two nodes coincident.
pub fn init_positions(n: usize, seed: u64) -> LayoutState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extent = (n.max(1) as f64).sqrt();
    let mut seen = std::collections::HashSet::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    while positions.len() < n {
        let p = [
            rng.random_range(-extent..=extent),
            rng.random_range(-extent..=extent),
        ];
        if seen.insert((p[0].to_bits(), p[1].to_bits())) {
            positions.push(p);
        }
    }
    LayoutState::from_positions(positions)
}

/// Fixed pseudo-random direction for a coincident pair, antisymmetric in
/// the pair so the two nodes are pushed apart equally.
fn coincident_offset(i: usize, j: usize) -> [f64; 2] {
    let (a, b) = (i.min(j) as u64, i.max(j) as u64);
    let mut h = a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_add(0xD1B5_4A32_D192_ED03);
    h ^= h >> 33;
    h = h.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    h ^= h >> 33;
    let angle = (h >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU;
    let sign = if i < j { 1.0 } else { -1.0 };
    [
        sign * COINCIDENT_JITTER * angle.cos(),
        sign * COINCIDENT_JITTER * angle.sin(),
    ]
}

fn repulsion_pair(positions: &[[f64; 2]], masses: &[f64], scaling: f64, i: usize, j: usize) -> [f64; 2] {
    let mut dx = positions[i][0] - positions[j][0];
    let mut dy = positions[i][1] - positions[j][1];
    let mut d2 = dx * dx + dy * dy;
    if d2 == 0.0 {
        [dx, dy] = coincident_offset(i, j);
        d2 = dx * dx + dy * dy;
    }
    let f = scaling * masses[i] * masses[j] / d2;
    [dx * f, dy * f]
}

fn node_force<G: Topology + ?Sized>(
    graph: &G,
    positions: &[[f64; 2]],
    masses: &[f64],
    params: &Fa2Params,
    tree: Option<&QuadTree>,
    i: usize,
) -> [f64; 2] {
    let p = positions[i];
    let mut f = match tree {
        Some(tree) => tree.repulsion(
            i,
            positions,
            masses,
            params.scaling,
            params.barnes_hut.unwrap_or(DEFAULT_THETA),
            |a, b| repulsion_pair(positions, masses, params.scaling, a, b),
        ),
        None => {
            let mut acc = [0.0; 2];
            for j in 0..positions.len() {
                if j != i {
                    let r = repulsion_pair(positions, masses, params.scaling, i, j);
                    acc[0] += r[0];
                    acc[1] += r[1];
                }
            }
            acc
        }
    };
    for &j in graph.neighbors(i) {
        let dx = p[0] - positions[j][0];
        let dy = p[1] - positions[j][1];
        let scale = if params.linlog {
            let d = (dx * dx + dy * dy).sqrt();
            if d > 0.0 {
                d.ln_1p() / d
            } else {
                0.0
            }
        } else {
            1.0
        };
        f[0] -= dx * scale;
        f[1] -= dy * scale;
    }
    if params.gravity > 0.0 {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if r > 0.0 {
            let g = params.gravity * masses[i] / r;
            f[0] -= p[0] * g;
            f[1] -= p[1] * g;
        }
    }
    f
}

/// All node forces for the current positions.
pub fn compute_forces<G: Topology + Sync + ?Sized>(
    graph: &G,
    positions: &[[f64; 2]],
    params: &Fa2Params,
) -> Vec<[f64; 2]> {
    let n = positions.len();
    let masses: Vec<f64> = (0..n).map(|v| (graph.degree(v) + 1) as f64).collect();
    let tree = params.barnes_hut.map(|_| QuadTree::build(positions, &masses));
    let eval = |i| node_force(graph, positions, &masses, params, tree.as_ref(), i);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(eval).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(eval).collect()
    }
}

fn norm(v: [f64; 2]) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

/// One synchronous ForceAtlas2 iteration.
///
/// Without gravity the layout has no anchor, so the mean displacement is
/// removed and the centroid stays fixed.
pub fn step<G: Topology + Sync + ?Sized>(
    graph: &G,
    state: &LayoutState,
    params: &Fa2Params,
) -> Result<LayoutState, LayoutError> {
    let n = graph.node_count();
    if state.positions.len() != n {
        return Err(LayoutError::StateMismatch {
            state: state.positions.len(),
            graph: n,
        });
    }
    let forces = compute_forces(graph, &state.positions, params);
    let masses: Vec<f64> = (0..n).map(|v| (graph.degree(v) + 1) as f64).collect();

    let mut swinging = vec![0.0; n];
    let mut total_swing = 0.0;
    let mut total_traction = 0.0;
    for i in 0..n {
        let (f, old) = (forces[i], state.prev_forces[i]);
        swinging[i] = masses[i] * norm([old[0] - f[0], old[1] - f[1]]);
        total_swing += swinging[i];
        total_traction += masses[i] * 0.5 * norm([old[0] + f[0], old[1] + f[1]]);
    }

    let (speed, speed_efficiency) = adapt_speed(
        n,
        state.speed,
        state.speed_efficiency,
        total_swing,
        total_traction,
        params.jitter_tolerance,
    );

    let mut displacement: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let factor = speed / (1.0 + (speed * swinging[i]).sqrt());
            [forces[i][0] * factor, forces[i][1] * factor]
        })
        .collect();
    if params.gravity == 0.0 && n > 0 {
        let mut mean = [0.0; 2];
        for d in &displacement {
            mean[0] += d[0];
            mean[1] += d[1];
        }
        mean = [mean[0] / n as f64, mean[1] / n as f64];
        for d in &mut displacement {
            d[0] -= mean[0];
            d[1] -= mean[1];
        }
    }

    let mut positions = state.positions.clone();
    let mut max_displacement: f64 = 0.0;
    for (i, (p, d)) in positions.iter_mut().zip(&displacement).enumerate() {
        p[0] += d[0];
        p[1] += d[1];
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(LayoutError::NumericalBlowup {
                node: i,
                iteration: state.iteration + 1,
            });
        }
        max_displacement = max_displacement.max(norm(*d));
    }
    Ok(LayoutState {
        positions,
        prev_forces: forces,
        iteration: state.iteration + 1,
        speed,
        speed_efficiency,
        max_displacement,
    })
}

/// Global speed update from swing and traction; returns
/// `(speed, speed_efficiency)`.
fn adapt_speed(
    n: usize,
    speed: f64,
    mut efficiency: f64,
    swing: f64,
    traction: f64,
    tolerance: f64,
) -> (f64, f64) {
    if n == 0 || swing <= 0.0 || traction <= 0.0 {
        return (speed, efficiency);
    }
    const MIN_EFFICIENCY: f64 = 0.05;
    const MAX_RISE: f64 = 0.5;
    let estimated = 0.05 * (n as f64).sqrt();
    let min_jt = estimated.sqrt();
    let max_jt: f64 = 10.0;
    let mut jt = tolerance * min_jt.max(max_jt.min(estimated * traction / (n * n) as f64));
    if swing / traction > 2.0 {
        if efficiency > MIN_EFFICIENCY {
            efficiency *= 0.5;
        }
        jt = jt.max(tolerance);
    }
    let target = jt * efficiency * traction / swing;
    if swing > jt * traction {
        if efficiency > MIN_EFFICIENCY {
            efficiency *= 0.7;
        }
    } else if speed < 1000.0 {
        efficiency *= 1.3;
    }
    let next = speed + (target - speed).min(MAX_RISE * speed);
    (next, efficiency)
}

/// Runs a full layout from seeded initial positions.
pub fn run_layout<G: Topology + Sync + ?Sized>(
    graph: &G,
    params: &Fa2Params,
) -> Result<Vec<[f64; 2]>, LayoutError> {
    params.validate()?;
    let mut state = init_positions(graph.node_count(), params.seed);
    for _ in 0..params.iterations {
        state = step(graph, &state, params)?;
        if params.until_stable.is_some_and(|eps| state.max_displacement < eps) {
            break;
        }
    }
    Ok(state.positions)
}

/// Sum of Euclidean distances over all unordered node pairs.
pub fn total_pairwise_distance(positions: &[[f64; 2]]) -> f64 {
    let mut sum = 0.0;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            sum += norm([positions[i][0] - positions[j][0], positions[i][1] - positions[j][1]]);
        }
    }
    sum
}

pub fn centroid(positions: &[[f64; 2]]) -> [f64; 2] {
    let n = positions.len().max(1) as f64;
    let (sx, sy) = positions.iter().fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
    [sx / n, sy / n]
}
