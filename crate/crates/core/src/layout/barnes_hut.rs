//! Quadtree for approximate degree-weighted repulsion.

const MAX_DEPTH: usize = 48;

struct Cell {
    center: [f64; 2],
    half: f64,
    mass: f64,
    mass_center: [f64; 2],
    /// Child cell indices, or `None` for a leaf.
    children: Option<[usize; 4]>,
    /// Bodies held by a leaf (more than one only for coincident points).
    bodies: Vec<usize>,
}

pub(crate) struct QuadTree {
    cells: Vec<Cell>,
}

impl QuadTree {
    pub(crate) fn build(positions: &[[f64; 2]], masses: &[f64]) -> QuadTree {
        let mut tree = QuadTree { cells: Vec::new() };
        if positions.is_empty() {
            return tree;
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in positions {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let half = ((hi[0] - lo[0]).max(hi[1] - lo[1]) / 2.0).max(1e-9) * 1.000_001;
        let all: Vec<usize> = (0..positions.len()).collect();
        tree.insert(all, center, half, 0, positions, masses);
        tree
    }

    fn insert(
        &mut self,
        bodies: Vec<usize>,
        center: [f64; 2],
        half: f64,
        depth: usize,
        positions: &[[f64; 2]],
        masses: &[f64],
    ) -> usize {
        let mass: f64 = bodies.iter().map(|&b| masses[b]).sum();
        let mut mc = [0.0; 2];
        for &b in &bodies {
            mc[0] += positions[b][0] * masses[b];
            mc[1] += positions[b][1] * masses[b];
        }
        mc = [mc[0] / mass, mc[1] / mass];
        let idx = self.cells.len();
        self.cells.push(Cell {
            center,
            half,
            mass,
            mass_center: mc,
            children: None,
            bodies: Vec::new(),
        });
        let first = positions[bodies[0]];
        let coincident = bodies.iter().all(|&b| positions[b] == first);
        if bodies.len() == 1 || coincident || depth >= MAX_DEPTH {
            self.cells[idx].bodies = bodies;
            return idx;
        }
        let mut quadrants: [Vec<usize>; 4] = Default::default();
        for b in bodies {
            let p = positions[b];
            let q = usize::from(p[0] >= center[0]) + 2 * usize::from(p[1] >= center[1]);
            quadrants[q].push(b);
        }
        let h = half / 2.0;
        let mut children = [usize::MAX; 4];
        for (q, members) in quadrants.into_iter().enumerate() {
            let c = [
                center[0] + if q & 1 == 1 { h } else { -h },
                center[1] + if q & 2 == 2 { h } else { -h },
            ];
            if members.is_empty() {
                // Empty placeholder keeps child indexing simple.
                children[q] = self.cells.len();
                self.cells.push(Cell {
                    center: c,
                    half: h,
                    mass: 0.0,
                    mass_center: c,
                    children: None,
                    bodies: Vec::new(),
                });
            } else {
                children[q] = self.insert(members, c, h, depth + 1, positions, masses);
            }
        }
        self.cells[idx].children = Some(children);
        idx
    }

    /// Repulsion on `body` from all other bodies, opening cells whose
    /// `width / distance` ratio is at least `theta`.
    pub(crate) fn repulsion(
        &self,
        body: usize,
        positions: &[[f64; 2]],
        masses: &[f64],
        scaling: f64,
        theta: f64,
        pair_force: impl Fn(usize, usize) -> [f64; 2],
    ) -> [f64; 2] {
        let mut force = [0.0; 2];
        if self.cells.is_empty() {
            return force;
        }
        let p = positions[body];
        let mut stack = vec![0usize];
        while let Some(ci) = stack.pop() {
            let cell = &self.cells[ci];
            if cell.mass == 0.0 {
                continue;
            }
            match cell.children {
                None => {
                    for &b in &cell.bodies {
                        if b != body {
                            let f = pair_force(body, b);
                            force[0] += f[0];
                            force[1] += f[1];
                        }
                    }
                }
                Some(children) => {
                    let dx = p[0] - cell.mass_center[0];
                    let dy = p[1] - cell.mass_center[1];
                    let d2 = dx * dx + dy * dy;
                    let width = 2.0 * cell.half;
                    let inside = (p[0] - cell.center[0]).abs() <= cell.half
                        && (p[1] - cell.center[1]).abs() <= cell.half;
                    if !inside && d2 > 0.0 && width * width < theta * theta * d2 {
                        let f = scaling * masses[body] * cell.mass / d2;
                        force[0] += dx * f;
                        force[1] += dy * f;
                    } else {
                        stack.extend(children.iter().rev());
                    }
                }
            }
        }
        force
    }
}
