//! Benchmark world generators: 2D perfect mazes and randomly connected box
//! worlds. Both are deterministic for a given seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::ConvexSet;

/// Wall half-thickness of the maze. Cells are unit squares inset by this
/// amount; a box extends through every open wall to the neighbor's interior
/// boundary, so open neighbors overlap in a `2*MAZE_WALL`-wide strip while
/// closed neighbors stay `2*MAZE_WALL` apart.
pub const MAZE_WALL: f64 = 0.01;

/// A perfect maze on a `rows x cols` grid of unit cells. The open walls form
/// a spanning tree of the cells (randomized depth-first carve), so the
/// resulting overlap graph is connected.
#[derive(Clone, Debug)]
pub struct Maze {
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    /// Open walls as cell-index pairs `(a, b)` with `a < b`.
    pub openings: Vec<(usize, usize)>,
}

impl Maze {
    pub fn generate(rows: usize, cols: usize, seed: u64) -> Maze {
        assert!(rows >= 2 && cols >= 2, "maze needs at least a 2x2 grid");
        let n = rows * cols;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut visited = vec![false; n];
        let mut openings = Vec::with_capacity(n - 1);
        let mut stack = vec![rng.gen_range(0..n)];
        visited[stack[0]] = true;
        while let Some(&cell) = stack.last() {
            let r = cell / cols;
            let c = cell % cols;
            let mut neighbors = Vec::with_capacity(4);
            if r + 1 < rows {
                neighbors.push(cell + cols);
            }
            if r > 0 {
                neighbors.push(cell - cols);
            }
            if c + 1 < cols {
                neighbors.push(cell + 1);
            }
            if c > 0 {
                neighbors.push(cell - 1);
            }
            neighbors.retain(|&x| !visited[x]);
            match neighbors.choose(&mut rng) {
                Some(&next) => {
                    visited[next] = true;
                    openings.push((cell.min(next), cell.max(next)));
                    stack.push(next);
                }
                None => {
                    stack.pop();
                }
            }
        }
        openings.sort_unstable();
        Maze {
            rows,
            cols,
            seed,
            openings,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    fn is_open(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.openings.binary_search(&key).is_ok()
    }

    /// One axis-aligned box per cell: the unit cell inset by the wall
    /// thickness, stretched through each open wall to meet the neighbor.
    pub fn sets(&self) -> Vec<ConvexSet> {
        let w = MAZE_WALL;
        let mut out = Vec::with_capacity(self.cell_count());
        for cell in 0..self.cell_count() {
            let r = (cell / self.cols) as f64;
            let c = (cell % self.cols) as f64;
            let mut lo = [c + w, r + w];
            let mut hi = [c + 1.0 - w, r + 1.0 - w];
            let idx = cell;
            if cell % self.cols + 1 < self.cols && self.is_open(idx, idx + 1) {
                hi[0] = c + 1.0 + w;
            }
            if cell % self.cols > 0 && self.is_open(idx - 1, idx) {
                lo[0] = c - w;
            }
            if cell / self.cols + 1 < self.rows && self.is_open(idx, idx + self.cols) {
                hi[1] = r + 1.0 + w;
            }
            if cell / self.cols > 0 && self.is_open(idx - self.cols, idx) {
                lo[1] = r - w;
            }
            out.push(
                ConvexSet::from_box(&lo, &hi)
                    .expect("maze cell box is nonempty and bounded")
                    .with_label(format!("cell-{}", cell)),
            );
        }
        out
    }
}

/// Maze sets only; see [`Maze`] when the opening list is needed.
pub fn generate_maze(rows: usize, cols: usize, seed: u64) -> Vec<ConvexSet> {
    Maze::generate(rows, cols, seed).sets()
}

/// Random axis-aligned boxes inside `[lo, hi]` with guaranteed chain
/// connectivity: every new box is grown around an interior point of an
/// existing one. `n_boxes = 1` returns the bounds box itself.
pub fn generate_box_world(lo: &[f64], hi: &[f64], n_boxes: usize, seed: u64) -> Vec<ConvexSet> {
    assert!(n_boxes >= 1, "box world needs at least one box");
    assert_eq!(lo.len(), hi.len());
    let d = lo.len();
    let bounds = ConvexSet::from_box(lo, hi).expect("bounds box is valid");
    if n_boxes == 1 {
        return vec![bounds];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
    let mut out: Vec<ConvexSet> = Vec::with_capacity(n_boxes);
    // Seed box: a random sub-box of the bounds.
    let first = random_sub_box(&mut rng, lo, hi, &span, d);
    out.push(first);
    while out.len() < n_boxes {
        let donor = out[rng.gen_range(0..out.len())].clone();
        let anchor = donor.sample_interior(&mut rng, 1e-3, 64);
        let mut blo = vec![0.0; d];
        let mut bhi = vec![0.0; d];
        for ax in 0..d {
            let ext_lo = rng.gen_range(0.15..0.45) * span[ax];
            let ext_hi = rng.gen_range(0.15..0.45) * span[ax];
            blo[ax] = (anchor[ax] - ext_lo).max(lo[ax]);
            bhi[ax] = (anchor[ax] + ext_hi).min(hi[ax]);
        }
        out.push(ConvexSet::from_box(&blo, &bhi).expect("anchored box is valid"));
    }
    out
}

fn random_sub_box(
    rng: &mut ChaCha8Rng,
    lo: &[f64],
    hi: &[f64],
    span: &[f64],
    d: usize,
) -> ConvexSet {
    let mut blo = vec![0.0; d];
    let mut bhi = vec![0.0; d];
    for ax in 0..d {
        let w = rng.gen_range(0.3..0.6) * span[ax];
        let start = rng.gen_range(lo[ax]..(hi[ax] - w));
        blo[ax] = start;
        bhi[ax] = start + w;
    }
    ConvexSet::from_box(&blo, &bhi).expect("sub-box is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry;
    use crate::graph::{GcsGraph, DEFAULT_EDGE_MARGIN};

    #[test]
    fn maze_2x2_is_a_spanning_tree() {
        let maze = Maze::generate(2, 2, 42);
        assert_eq!(maze.cell_count(), 4);
        assert_eq!(maze.openings.len(), 3);
        let g = GcsGraph::build(maze.sets(), DEFAULT_EDGE_MARGIN).unwrap();
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn maze_edges_match_openings() {
        let maze = Maze::generate(5, 5, 7);
        let g = GcsGraph::build(maze.sets(), DEFAULT_EDGE_MARGIN).unwrap();
        assert_eq!(g.edge_count(), 2 * maze.openings.len());
        // Every opening really is an edge.
        for &(a, b) in &maze.openings {
            assert!(g.has_edge(a, b) && g.has_edge(b, a));
        }
    }

    #[test]
    fn maze_50x50_has_2500_sets() {
        let sets = generate_maze(50, 50, 1);
        assert_eq!(sets.len(), 2500);
    }

    #[test]
    fn maze_deterministic_for_seed() {
        let a = Maze::generate(6, 9, 123);
        let b = Maze::generate(6, 9, 123);
        assert_eq!(a.openings, b.openings);
        let c = Maze::generate(6, 9, 124);
        assert_ne!(a.openings, c.openings);
    }

    #[test]
    fn maze_graph_is_connected() {
        let maze = Maze::generate(4, 7, 3);
        let g = GcsGraph::build(maze.sets(), DEFAULT_EDGE_MARGIN).unwrap();
        let mut seen = vec![false; g.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in g.successors(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn maze_edges_all_overlap() {
        let maze = Maze::generate(3, 3, 11);
        let sets = maze.sets();
        let g = GcsGraph::build(sets.clone(), DEFAULT_EDGE_MARGIN).unwrap();
        for (u, v) in g.edges() {
            assert!(geometry::intersects(&sets[u], &sets[v], DEFAULT_EDGE_MARGIN).unwrap());
        }
    }

    #[test]
    fn box_world_single_box_is_bounds() {
        let sets = generate_box_world(&[0.0, 0.0, 0.0], &[4.0, 4.0, 4.0], 1, 9);
        assert_eq!(sets.len(), 1);
        let (lo, hi) = sets[0].aabb();
        assert_eq!(lo, &[0.0, 0.0, 0.0]);
        assert_eq!(hi, &[4.0, 4.0, 4.0]);
    }

    #[test]
    fn box_world_connected() {
        let sets = generate_box_world(&[0.0, 0.0, 0.0], &[6.0, 6.0, 6.0], 10, 5);
        assert_eq!(sets.len(), 10);
        let g = GcsGraph::build(sets, DEFAULT_EDGE_MARGIN).unwrap();
        // Union-find over the generated edges.
        let mut parent: Vec<usize> = (0..g.len()).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        for (u, v) in g.edges() {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            parent[ru] = rv;
        }
        let root = find(&mut parent, 0);
        for i in 1..g.len() {
            assert_eq!(find(&mut parent, i), root);
        }
    }

    #[test]
    fn box_world_deterministic() {
        let a = generate_box_world(&[0.0, 0.0], &[5.0, 5.0], 8, 77);
        let b = generate_box_world(&[0.0, 0.0], &[5.0, 5.0], 8, 77);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.aabb(), y.aabb());
        }
    }
}
