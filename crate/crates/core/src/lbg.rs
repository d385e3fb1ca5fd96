//! The lower-bound graph: a prescribed surrogate of the graph of convex sets
//! whose shortest paths underestimate optimal trajectory costs.
//!
//! Construction solves, for every vertex `c` and ordered neighbor pair
//! `(p, s)`, a relaxed single-segment program through `c` with endpoints free
//! in the interfaces `p∩c` and `c∩s` (continuity 0, no boundary velocities).
//! The optimized endpoints become graph vertices, the relaxed cost becomes a
//! directed edge, and vertices sharing an interface region are closed with
//! either zero-cost edges or chord lower-bound edges. A vertex created on the
//! directed interface `(u, v)` is owned by `u` ("about to traverse `v`"), so
//! the per-set heuristic `l(Q)` reads off the cost that remains after `Q`.
//!
//! Backward Dijkstra from the goal point then yields an admissible
//! cost-to-go table; the cached triplet trajectories double as warm starts
//! during search.

use std::collections::{BinaryHeap, HashMap};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dist, sub, ConvexSet, VelocitySet};
use crate::graph::{GcsGraph, GraphError};
use crate::trajopt::{
    cost, solve_sequence, Boundary, CostWeights, SeqProgram, SolveOutcome, SolverSettings,
    Trajectory, TrajectorySegment,
};

/// Merge radius for repeated vertex insertions.
const MERGE_EPS: f64 = 1e-9;
/// Geometric membership tolerance when attaching vertices to regions.
const REGION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LbgError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cache does not match this scenario/template (expected {expected:016x}, found {found:016x})")]
    CacheMismatch { expected: u64, found: u64 },
    #[error("point {0:?} is not a vertex of the lower-bound graph")]
    UnknownPoint(Vec<f64>),
}

/// Cost model of the closure edges between vertices on one interface region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterfaceCostMode {
    /// Admissible chord bound `a*|q1-q2| + b*T_min(q1-q2)`.
    ChordLowerBound,
    /// Literal zero cost.
    Zero,
}

impl InterfaceCostMode {
    fn tag(self) -> u8 {
        match self {
            InterfaceCostMode::ChordLowerBound => 0,
            InterfaceCostMode::Zero => 1,
        }
    }
}

/// Parameters of the relaxed triplet programs and closure edges.
#[derive(Clone, Debug)]
pub struct LbgTemplate {
    pub order: usize,
    pub weights: CostWeights,
    pub vset: VelocitySet,
    pub mode: InterfaceCostMode,
    pub solver: SolverSettings,
}

impl LbgTemplate {
    pub fn new(order: usize, weights: CostWeights, vset: VelocitySet) -> Self {
        LbgTemplate {
            order,
            weights,
            vset,
            mode: InterfaceCostMode::ChordLowerBound,
            solver: SolverSettings::default(),
        }
    }

    pub fn with_mode(mut self, mode: InterfaceCostMode) -> Self {
        self.mode = mode;
        self
    }

    /// Combined key of scenario geometry and template parameters; a cache
    /// file is only valid for an exact match.
    pub fn cache_key(&self, g: &GcsGraph) -> u64 {
        let mut h = Fnv::new();
        h.write_u64(scenario_hash(g));
        h.write_u64(self.order as u64);
        h.write_f64(self.weights.a);
        h.write_f64(self.weights.b);
        for v in self.vset.vmax() {
            h.write_f64(*v);
        }
        h.write_u64(self.mode.tag() as u64);
        h.finish()
    }
}

/// FNV-1a over the base vertex geometry.
pub fn scenario_hash(g: &GcsGraph) -> u64 {
    let mut h = Fnv::new();
    h.write_u64(g.dim() as u64);
    h.write_u64(g.base_len() as u64);
    h.write_f64(g.margin());
    for i in 0..g.base_len() {
        for hs in g.vertex(i).halfspaces() {
            for c in &hs.normal {
                h.write_f64(*c);
            }
            h.write_f64(hs.offset);
        }
    }
    h.finish()
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    fn write_u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    fn write_f64(&mut self, v: f64) {
        self.write_u64(v.to_bits());
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    Triplet,
    Interface,
    Query,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbgVertex {
    pub point: Vec<f64>,
    /// Owning graph vertex: the set just behind the interface this vertex
    /// sits on (query points are owned by their singleton).
    pub owner: usize,
    /// Directed interface `(u, v)` the vertex was created on; `None` for
    /// query points.
    pub interface: Option<(usize, usize)>,
    /// Outer box of the interface region this vertex stands for (the point
    /// itself for query vertices). Query edges are priced against this box
    /// rather than the sampled point: any trajectory leg still has to reach
    /// the region, but not the particular optimizer-chosen point on it, so
    /// only the region distance is an admissible bound.
    pub region_lo: Vec<f64>,
    pub region_hi: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbgEdge {
    pub to: usize,
    pub cost: f64,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug, Default)]
pub struct LbgStats {
    pub triplets_solved: usize,
    pub triplets_infeasible: usize,
    pub max_subproblem_vars: usize,
}

/// The prescribed lower-bound graph plus the triplet trajectory cache.
#[derive(Clone, Debug)]
pub struct LowerBoundGraph {
    pub cache_key: u64,
    vertices: Vec<LbgVertex>,
    out: Vec<Vec<LbgEdge>>,
    triplet_cache: HashMap<(usize, usize, usize), Trajectory>,
    weights: CostWeights,
    vset: VelocitySet,
    mode: InterfaceCostMode,
    pub stats: LbgStats,
}

impl LowerBoundGraph {
    pub fn empty(template: &LbgTemplate, g: &GcsGraph) -> Self {
        LowerBoundGraph {
            cache_key: template.cache_key(g),
            vertices: Vec::new(),
            out: Vec::new(),
            triplet_cache: HashMap::new(),
            weights: template.weights,
            vset: template.vset.clone(),
            mode: template.mode,
            stats: LbgStats::default(),
        }
    }

    pub fn vertices(&self) -> &[LbgVertex] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn edges_from(&self, v: usize) -> &[LbgEdge] {
        &self.out[v]
    }

    pub fn triplet_count(&self) -> usize {
        self.triplet_cache.len()
    }

    /// Cached relaxed trajectory for the directed triplet `(p, c, s)`.
    pub fn lookup_triplet(&self, p: usize, c: usize, s: usize) -> Option<&Trajectory> {
        self.triplet_cache.get(&(p, c, s))
    }

    fn find_vertex(&self, point: &[f64], owner: Option<usize>) -> Option<usize> {
        self.vertices.iter().position(|v| {
            dist(&v.point, point) < MERGE_EPS && owner.map_or(true, |o| v.owner == o)
        })
    }

    fn insert_vertex(&mut self, v: LbgVertex) -> usize {
        // Merge only true duplicates: same owner and interface, same point.
        if let Some(idx) = self.vertices.iter().position(|w| {
            w.owner == v.owner && w.interface == v.interface && dist(&w.point, &v.point) < MERGE_EPS
        }) {
            return idx;
        }
        self.vertices.push(v);
        self.out.push(Vec::new());
        self.vertices.len() - 1
    }

    fn insert_edge(&mut self, from: usize, to: usize, cost: f64, kind: EdgeKind) {
        if from == to {
            return;
        }
        match self.out[from].iter_mut().find(|e| e.to == to) {
            Some(e) => {
                if cost < e.cost {
                    e.cost = cost;
                    e.kind = kind;
                }
            }
            None => self.out[from].push(LbgEdge { to, cost, kind }),
        }
    }

    fn chord_cost(&self, a: &[f64], b: &[f64]) -> f64 {
        let delta = sub(b, a);
        self.weights.a * crate::geometry::norm(&delta)
            + self.weights.b * self.vset.min_traversal_time(&delta)
    }

    /// Chord bound between the regions of two vertices: per-axis interval
    /// gaps, priced like a chord. Zero whenever the regions touch.
    fn region_chord_cost(&self, a: usize, b: usize) -> f64 {
        let (va, vb) = (&self.vertices[a], &self.vertices[b]);
        let gap: Vec<f64> = (0..va.point.len())
            .map(|ax| {
                let lo = va.region_lo[ax].max(vb.region_lo[ax]);
                let hi = va.region_hi[ax].min(vb.region_hi[ax]);
                (lo - hi).max(0.0)
            })
            .collect();
        self.weights.a * crate::geometry::norm(&gap)
            + self.weights.b * self.vset.min_traversal_time(&gap)
    }

    /// Insert a query point: the point becomes a vertex connected in both
    /// directions to every vertex lying inside each set that contains it,
    /// with chord lower-bound costs. Idempotent for repeated points.
    pub fn update_with_point(&mut self, g: &GcsGraph, q: &[f64]) -> Result<usize, LbgError> {
        let mut containing = Vec::new();
        let mut owner = None;
        for i in 0..g.len() {
            let set = g.vertex(i);
            if set.contains_unchecked(q, 1e-9) {
                containing.push(i);
                let (c, r) = set.chebyshev_center();
                if r < 1e-12 && dist(c, q) < 1e-9 {
                    owner = Some(i); // the query's own singleton vertex
                }
            }
        }
        if containing.is_empty() {
            return Err(GraphError::QueryOutsideCover {
                endpoint: crate::graph::QueryEndpoint::Start,
                point: q.to_vec(),
            }
            .into());
        }
        let owner = owner.unwrap_or(containing[0]);
        if let Some(existing) = self.find_vertex(q, Some(owner)) {
            return Ok(existing); // repeated update leaves the graph unchanged
        }
        let qid = self.insert_vertex(LbgVertex {
            point: q.to_vec(),
            owner,
            interface: None,
            region_lo: q.to_vec(),
            region_hi: q.to_vec(),
        });
        let mut linked = vec![false; self.vertices.len()];
        for &set_id in &containing {
            let set = g.vertex(set_id);
            for v in 0..self.vertices.len() {
                if v == qid || linked[v] {
                    continue;
                }
                if self.vertices[v].point.len() == set.dim()
                    && set.contains_unchecked(&self.vertices[v].point, REGION_TOL)
                {
                    linked[v] = true;
                    let c = self.region_chord_cost(qid, v);
                    self.insert_edge(qid, v, c, EdgeKind::Query);
                    self.insert_edge(v, qid, c, EdgeKind::Query);
                }
            }
        }
        Ok(qid)
    }

    /// Exact shortest-path-to-goal labels on the reversed graph, folded into
    /// a per-graph-vertex heuristic by the ownership map.
    pub fn backward_dijkstra(&self, g: &GcsGraph, goal: &[f64]) -> Result<HeuristicTable, LbgError> {
        let goal_id = self
            .find_vertex(goal, None)
            .ok_or_else(|| LbgError::UnknownPoint(goal.to_vec()))?;
        let n = self.vertices.len();
        let mut rev: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (from, edges) in self.out.iter().enumerate() {
            for e in edges {
                rev[e.to].push((from, e.cost));
            }
        }
        let mut labels = vec![f64::INFINITY; n];
        labels[goal_id] = 0.0;
        let mut heap: BinaryHeap<HeapItem> = BinaryHeap::new();
        heap.push(HeapItem {
            cost: 0.0,
            id: goal_id,
        });
        while let Some(HeapItem { cost, id }) = heap.pop() {
            if cost > labels[id] {
                continue;
            }
            for &(prev, w) in &rev[id] {
                let nc = cost + w;
                if nc < labels[prev] {
                    labels[prev] = nc;
                    heap.push(HeapItem { cost: nc, id: prev });
                }
            }
        }
        let mut per_vertex = vec![f64::INFINITY; g.len()];
        for (v, label) in self.vertices.iter().zip(&labels) {
            if v.owner < per_vertex.len() && *label < per_vertex[v.owner] {
                per_vertex[v.owner] = *label;
            }
        }
        Ok(HeuristicTable { per_vertex, labels })
    }

    /// Appendix-style structural bound `|V_lb| <= 2 * sum_i in_i * out_i`.
    pub fn vertex_bound(g: &GcsGraph) -> usize {
        (0..g.base_len())
            .map(|i| 2 * g.predecessors(i).len() * g.successors(i).len())
            .sum()
    }

    /// Vertices lying on each undirected interface region (geometric
    /// membership, query vertices excluded).
    pub fn region_populations(&self, g: &GcsGraph) -> Vec<((usize, usize), usize)> {
        let mut out = Vec::new();
        for (u, v) in g.edges() {
            if u < v && v < g.base_len() {
                let su = g.vertex(u);
                let sv = g.vertex(v);
                let count = self
                    .vertices
                    .iter()
                    .filter(|w| {
                        w.interface.is_some()
                            && su.contains_unchecked(&w.point, REGION_TOL)
                            && sv.contains_unchecked(&w.point, REGION_TOL)
                    })
                    .count();
                out.push(((u, v), count));
            }
        }
        out
    }
}

#[derive(PartialEq)]
struct HeapItem {
    cost: f64,
    id: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Min-heap by cost, then id for determinism.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Admissible cost-to-go per graph vertex plus the raw per-vertex labels.
#[derive(Clone, Debug)]
pub struct HeuristicTable {
    pub per_vertex: Vec<f64>,
    pub labels: Vec<f64>,
}

impl HeuristicTable {
    #[inline]
    pub fn l(&self, gcs_vertex: usize) -> f64 {
        self.per_vertex.get(gcs_vertex).copied().unwrap_or(f64::INFINITY)
    }
}

/// Build the lower-bound graph for `g` under `template`.
///
/// Infeasible triplet programs are skipped and counted, never fabricated.
pub fn build_lbg(g: &GcsGraph, template: &LbgTemplate) -> LowerBoundGraph {
    let mut lbg = LowerBoundGraph::empty(template, g);
    let n = g.base_len();
    for c in 0..n {
        let neighbors = g.successors(c);
        for (pi, &p) in neighbors.iter().enumerate() {
            for &s in neighbors.iter().skip(pi + 1) {
                if p >= n || s >= n {
                    continue;
                }
                solve_triplet(g, template, &mut lbg, p, c, s);
                solve_triplet(g, template, &mut lbg, s, c, p);
            }
        }
    }
    close_interfaces(g, &mut lbg);
    for list in lbg.out.iter_mut() {
        list.sort_by(|a, b| a.to.cmp(&b.to));
    }
    lbg
}

fn solve_triplet(
    g: &GcsGraph,
    template: &LbgTemplate,
    lbg: &mut LowerBoundGraph,
    p: usize,
    c: usize,
    s: usize,
) {
    let set_c: &Arc<ConvexSet> = g.vertex(c);
    let set_p = g.vertex(p);
    let set_s = g.vertex(s);
    let prog = match SeqProgram::new(
        vec![c],
        vec![set_c.clone()],
        Boundary::InSet(set_p.halfspaces().to_vec()),
        Boundary::InSet(set_s.halfspaces().to_vec()),
        template.order,
        0,
        template.weights,
        template.vset.clone(),
    ) {
        Ok(prog) => prog.with_warm_start(triplet_warm(template, set_p, set_c, set_s, c), None),
        Err(_) => {
            lbg.stats.triplets_infeasible += 1;
            return;
        }
    };
    match solve_sequence(&prog, &template.solver) {
        Ok((SolveOutcome::Solved(traj), info)) => {
            lbg.stats.triplets_solved += 1;
            lbg.stats.max_subproblem_vars = lbg.stats.max_subproblem_vars.max(info.vars);
            let edge_cost = cost(&traj, &template.weights);
            let (in_lo, in_hi) = region_box(set_p, set_c);
            let (out_lo, out_hi) = region_box(set_c, set_s);
            let start = lbg.insert_vertex(LbgVertex {
                point: traj.start().unwrap().to_vec(),
                owner: p,
                interface: Some((p, c)),
                region_lo: in_lo,
                region_hi: in_hi,
            });
            let end = lbg.insert_vertex(LbgVertex {
                point: traj.end().unwrap().to_vec(),
                owner: c,
                interface: Some((c, s)),
                region_lo: out_lo,
                region_hi: out_hi,
            });
            lbg.insert_edge(start, end, edge_cost, EdgeKind::Triplet);
            lbg.triplet_cache.insert((p, c, s), traj);
        }
        _ => {
            lbg.stats.triplets_infeasible += 1;
        }
    }
}

/// Outer box of `a ∩ b`: the interval intersection of the two bounding
/// boxes.
fn region_box(a: &ConvexSet, b: &ConvexSet) -> (Vec<f64>, Vec<f64>) {
    let (alo, ahi) = a.aabb();
    let (blo, bhi) = b.aabb();
    let lo: Vec<f64> = alo.iter().zip(blo).map(|(x, y)| x.max(*y)).collect();
    let hi: Vec<f64> = ahi.iter().zip(bhi).map(|(x, y)| x.min(*y)).collect();
    (lo, hi)
}

/// Chord warm start between the interface Chebyshev centers.
fn triplet_warm(
    template: &LbgTemplate,
    set_p: &ConvexSet,
    set_c: &ConvexSet,
    set_s: &ConvexSet,
    c_id: usize,
) -> Option<Trajectory> {
    let (a, _) = crate::geometry::chebyshev_intersection(set_p, set_c)?;
    let (b, _) = crate::geometry::chebyshev_intersection(set_c, set_s)?;
    let r = template.order;
    let mut control = Vec::with_capacity(r + 1);
    for i in 0..=r {
        let t = i as f64 / r as f64;
        control.push(
            a.iter()
                .zip(&b)
                .map(|(x, y)| (1.0 - t) * x + t * y)
                .collect(),
        );
    }
    let duration = template.vset.min_traversal_time(&sub(&b, &a)) * 1.3 + 0.05;
    Some(Trajectory::new(
        vec![TrajectorySegment {
            set_id: c_id,
            control,
            duration,
        }],
        0,
    ))
}

fn close_interfaces(g: &GcsGraph, lbg: &mut LowerBoundGraph) {
    let n = g.base_len();
    for (u, v) in g.edges().collect::<Vec<_>>() {
        if u >= v || v >= n {
            continue;
        }
        let su = g.vertex(u).clone();
        let sv = g.vertex(v).clone();
        let members: Vec<usize> = (0..lbg.vertices.len())
            .filter(|&w| {
                su.contains_unchecked(&lbg.vertices[w].point, REGION_TOL)
                    && sv.contains_unchecked(&lbg.vertices[w].point, REGION_TOL)
            })
            .collect();
        for (ai, &a) in members.iter().enumerate() {
            for &b in members.iter().skip(ai + 1) {
                let c = match lbg.mode {
                    InterfaceCostMode::Zero => 0.0,
                    InterfaceCostMode::ChordLowerBound => {
                        let pa = lbg.vertices[a].point.clone();
                        let pb = lbg.vertices[b].point.clone();
                        lbg.chord_cost(&pa, &pb)
                    }
                };
                lbg.insert_edge(a, b, c, EdgeKind::Interface);
                lbg.insert_edge(b, a, c, EdgeKind::Interface);
            }
        }
    }
}

// --- cache file -----------------------------------------------------------

const CACHE_MAGIC: &str = "ixg-lbg 1";

impl LowerBoundGraph {
    /// Versioned text dump: vertices, edges, and the triplet trajectories.
    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<(), LbgError> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "{CACHE_MAGIC}")?;
        writeln!(w, "key {:016x}", self.cache_key)?;
        writeln!(
            w,
            "meta {} {} {} {}",
            self.weights.a,
            self.weights.b,
            self.mode.tag(),
            self.vset
                .vmax()
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(",")
        )?;
        writeln!(
            w,
            "counts {} {} {}",
            self.vertices.len(),
            self.edge_count(),
            self.triplet_cache.len()
        )?;
        for v in &self.vertices {
            let (iu, iv) = v.interface.map_or((-1i64, -1i64), |(a, b)| (a as i64, b as i64));
            writeln!(
                w,
                "vertex {} {} {} {} {} {}",
                v.owner,
                iu,
                iv,
                join(&v.point),
                join(&v.region_lo),
                join(&v.region_hi)
            )?;
        }
        for (from, edges) in self.out.iter().enumerate() {
            for e in edges {
                writeln!(w, "edge {} {} {} {}", from, e.to, fmt_f64(e.cost), kind_tag(e.kind))?;
            }
        }
        let mut keys: Vec<_> = self.triplet_cache.keys().cloned().collect();
        keys.sort_unstable();
        for (p, c, s) in keys {
            let t = &self.triplet_cache[&(p, c, s)];
            write!(w, "triplet {} {} {} {}", p, c, s, t.segments.len())?;
            for seg in &t.segments {
                write!(
                    w,
                    " {} {} {}",
                    seg.set_id,
                    fmt_f64(seg.duration),
                    seg.control.len()
                )?;
                for cp in &seg.control {
                    write!(w, " {}", join(cp))?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P, expected_key: u64) -> Result<Self, LbgError> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let mut lines = reader.lines().enumerate();
        let mut lbg = LowerBoundGraph {
            cache_key: 0,
            vertices: Vec::new(),
            out: Vec::new(),
            triplet_cache: HashMap::new(),
            weights: CostWeights { a: 1.0, b: 0.0 },
            vset: VelocitySet::uniform(1, 1.0).expect("placeholder"),
            mode: InterfaceCostMode::ChordLowerBound,
            stats: LbgStats::default(),
        };
        let bad = |line: usize, msg: &str| LbgError::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        let (ln, first) = lines
            .next()
            .ok_or_else(|| bad(0, "empty file"))
            .and_then(|(i, l)| Ok((i, l?)))?;
        if first.trim() != CACHE_MAGIC {
            return Err(bad(ln, "missing magic header"));
        }
        for entry in lines {
            let (ln, line) = entry;
            let line = line?;
            let mut it = line.split_whitespace();
            match it.next() {
                None => continue,
                Some("key") => {
                    let k = it.next().ok_or_else(|| bad(ln, "missing key"))?;
                    lbg.cache_key = u64::from_str_radix(k, 16)
                        .map_err(|e| bad(ln, &format!("bad key: {e}")))?;
                    if lbg.cache_key != expected_key {
                        return Err(LbgError::CacheMismatch {
                            expected: expected_key,
                            found: lbg.cache_key,
                        });
                    }
                }
                Some("meta") => {
                    let a: f64 = parse_next(&mut it, ln, "a")?;
                    let b: f64 = parse_next(&mut it, ln, "b")?;
                    let mode: u8 = parse_next(&mut it, ln, "mode")?;
                    let vmax_str = it.next().ok_or_else(|| bad(ln, "missing vmax"))?;
                    let vmax: Vec<f64> = vmax_str
                        .split(',')
                        .map(str::parse)
                        .collect::<Result<_, _>>()
                        .map_err(|e| bad(ln, &format!("bad vmax: {e}")))?;
                    lbg.weights = CostWeights { a, b };
                    lbg.vset = VelocitySet::per_axis(vmax)
                        .map_err(|e| bad(ln, &format!("bad vmax: {e}")))?;
                    lbg.mode = if mode == 1 {
                        InterfaceCostMode::Zero
                    } else {
                        InterfaceCostMode::ChordLowerBound
                    };
                }
                Some("counts") => {}
                Some("vertex") => {
                    let owner: usize = parse_next(&mut it, ln, "owner")?;
                    let iu: i64 = parse_next(&mut it, ln, "iface u")?;
                    let iv: i64 = parse_next(&mut it, ln, "iface v")?;
                    let mut coords = |what: &str| -> Result<Vec<f64>, LbgError> {
                        let s = it.next().ok_or_else(|| bad(ln, what))?;
                        s.split(',')
                            .map(str::parse)
                            .collect::<Result<_, _>>()
                            .map_err(|e| bad(ln, &format!("bad {what}: {e}")))
                    };
                    let point = coords("point")?;
                    let region_lo = coords("region lo")?;
                    let region_hi = coords("region hi")?;
                    lbg.vertices.push(LbgVertex {
                        point,
                        owner,
                        interface: if iu >= 0 {
                            Some((iu as usize, iv as usize))
                        } else {
                            None
                        },
                        region_lo,
                        region_hi,
                    });
                    lbg.out.push(Vec::new());
                }
                Some("edge") => {
                    let from: usize = parse_next(&mut it, ln, "from")?;
                    let to: usize = parse_next(&mut it, ln, "to")?;
                    let cost: f64 = parse_next(&mut it, ln, "cost")?;
                    let kind = match it.next() {
                        Some("t") => EdgeKind::Triplet,
                        Some("i") => EdgeKind::Interface,
                        Some("q") => EdgeKind::Query,
                        other => return Err(bad(ln, &format!("bad edge kind {other:?}"))),
                    };
                    if from >= lbg.out.len() || to >= lbg.out.len() {
                        return Err(bad(ln, "edge endpoint out of range"));
                    }
                    lbg.out[from].push(LbgEdge { to, cost, kind });
                }
                Some("triplet") => {
                    let p: usize = parse_next(&mut it, ln, "p")?;
                    let c: usize = parse_next(&mut it, ln, "c")?;
                    let s: usize = parse_next(&mut it, ln, "s")?;
                    let nsegs: usize = parse_next(&mut it, ln, "segments")?;
                    let mut segments = Vec::with_capacity(nsegs);
                    for _ in 0..nsegs {
                        let set_id: usize = parse_next(&mut it, ln, "set id")?;
                        let duration: f64 = parse_next(&mut it, ln, "duration")?;
                        let ncp: usize = parse_next(&mut it, ln, "control count")?;
                        let mut control = Vec::with_capacity(ncp);
                        for _ in 0..ncp {
                            let cp_str = it.next().ok_or_else(|| bad(ln, "missing control"))?;
                            let cp: Vec<f64> = cp_str
                                .split(',')
                                .map(str::parse)
                                .collect::<Result<_, _>>()
                                .map_err(|e| bad(ln, &format!("bad control point: {e}")))?;
                            control.push(cp);
                        }
                        segments.push(TrajectorySegment {
                            set_id,
                            control,
                            duration,
                        });
                    }
                    lbg.triplet_cache
                        .insert((p, c, s), Trajectory::new(segments, 0));
                }
                Some(other) => return Err(bad(ln, &format!("unknown record {other:?}"))),
            }
        }
        Ok(lbg)
    }
}

fn kind_tag(kind: EdgeKind) -> &'static str {
    match kind {
        EdgeKind::Triplet => "t",
        EdgeKind::Interface => "i",
        EdgeKind::Query => "q",
    }
}

fn fmt_f64(v: f64) -> String {
    // Round-trippable float formatting.
    format!("{v:e}")
}

fn join(p: &[f64]) -> String {
    p.iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_next<'a, T: std::str::FromStr>(
    it: &mut impl Iterator<Item = &'a str>,
    line: usize,
    what: &str,
) -> Result<T, LbgError>
where
    T::Err: std::fmt::Display,
{
    it.next()
        .ok_or_else(|| LbgError::Parse {
            line: line + 1,
            msg: format!("missing {what}"),
        })?
        .parse()
        .map_err(|e| LbgError::Parse {
            line: line + 1,
            msg: format!("bad {what}: {e}"),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DEFAULT_EDGE_MARGIN;

    fn chain_graph() -> GcsGraph {
        let sets = vec![
            ConvexSet::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap(),
            ConvexSet::from_box(&[0.8, 0.0], &[1.8, 1.0]).unwrap(),
            ConvexSet::from_box(&[1.6, 0.0], &[2.6, 1.0]).unwrap(),
        ];
        GcsGraph::build(sets, DEFAULT_EDGE_MARGIN).unwrap()
    }

    fn template() -> LbgTemplate {
        LbgTemplate::new(
            1,
            CostWeights::new(1.0, 0.2).unwrap(),
            VelocitySet::uniform(2, 1.0).unwrap(),
        )
    }

    fn point_vertex(point: Vec<f64>, owner: usize, interface: Option<(usize, usize)>) -> LbgVertex {
        LbgVertex {
            region_lo: point.clone(),
            region_hi: point.clone(),
            point,
            owner,
            interface,
        }
    }

    #[test]
    fn chain_has_two_triplets_four_vertices() {
        let g = chain_graph();
        let lbg = build_lbg(&g, &template());
        assert_eq!(lbg.triplet_count(), 2); // (0,1,2) and (2,1,0)
        assert_eq!(lbg.vertex_count(), 4);
        let triplet_edges = lbg
            .out
            .iter()
            .flatten()
            .filter(|e| e.kind == EdgeKind::Triplet)
            .count();
        assert_eq!(triplet_edges, 2);
        // Two regions with two vertices each close into 4 directed edges.
        let iface_edges = lbg
            .out
            .iter()
            .flatten()
            .filter(|e| e.kind == EdgeKind::Interface)
            .count();
        assert_eq!(iface_edges, 4);
    }

    #[test]
    fn single_vertex_graph_gives_empty_lbg() {
        let g = GcsGraph::build(
            vec![ConvexSet::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap()],
            DEFAULT_EDGE_MARGIN,
        )
        .unwrap();
        let lbg = build_lbg(&g, &template());
        assert_eq!(lbg.vertex_count(), 0);
        assert_eq!(lbg.edge_count(), 0);
    }

    #[test]
    fn maze_vertex_bound_holds() {
        let sets = crate::worlds::generate_maze(5, 5, 7);
        let g = GcsGraph::build(sets, DEFAULT_EDGE_MARGIN).unwrap();
        let lbg = build_lbg(&g, &template());
        let bound = LowerBoundGraph::vertex_bound(&g);
        assert!(
            lbg.vertex_count() <= bound,
            "vertices {} exceed bound {}",
            lbg.vertex_count(),
            bound
        );
        assert!(lbg.vertex_count() > 0);
    }

    #[test]
    fn lookup_returns_both_directions() {
        let g = chain_graph();
        let lbg = build_lbg(&g, &template());
        let fwd = lbg.lookup_triplet(0, 1, 2).expect("forward cached");
        let rev = lbg.lookup_triplet(2, 1, 0).expect("reverse cached");
        assert!(lbg.lookup_triplet(0, 2, 1).is_none());
        // Forward starts in 0∩1; reverse starts in 1∩2.
        assert!(g.vertex(0).contains_unchecked(fwd.start().unwrap(), 1e-6));
        assert!(g.vertex(2).contains_unchecked(rev.start().unwrap(), 1e-6));
    }

    #[test]
    fn update_adds_vertex_and_bidirectional_edges() {
        let g = chain_graph();
        let mut lbg = build_lbg(&g, &template());
        let before_v = lbg.vertex_count();
        let before_e = lbg.edge_count();
        // Vertices inside set 1: all four (both interfaces lie in the middle
        // box), so a point in set 1 links to all of them both ways.
        let q = [1.3, 0.5];
        let in_set1 = lbg
            .vertices()
            .iter()
            .filter(|v| g.vertex(1).contains_unchecked(&v.point, 1e-9))
            .count();
        lbg.update_with_point(&g, &q).unwrap();
        assert_eq!(lbg.vertex_count(), before_v + 1);
        assert_eq!(lbg.edge_count(), before_e + 2 * in_set1);
    }

    #[test]
    fn update_is_idempotent() {
        let g = chain_graph();
        let mut lbg = build_lbg(&g, &template());
        let q = [0.5, 0.5];
        let id1 = lbg.update_with_point(&g, &q).unwrap();
        let v = lbg.vertex_count();
        let e = lbg.edge_count();
        let id2 = lbg.update_with_point(&g, &q).unwrap();
        assert_eq!(id1, id2);
        assert_eq!(lbg.vertex_count(), v);
        assert_eq!(lbg.edge_count(), e);
    }

    #[test]
    fn update_outside_cover_fails() {
        let g = chain_graph();
        let mut lbg = build_lbg(&g, &template());
        assert!(lbg.update_with_point(&g, &[9.0, 9.0]).is_err());
    }

    #[test]
    fn dijkstra_goal_label_zero_and_chain_sum() {
        let tpl = template();
        let g = chain_graph();
        let mut lbg = LowerBoundGraph::empty(&tpl, &g);
        // Hand-built two-edge chain: a -> b cost 1, b -> c cost 2.
        let a = lbg.insert_vertex(point_vertex(vec![0.0, 0.0], 0, Some((0, 1))));
        let b = lbg.insert_vertex(point_vertex(vec![1.0, 0.0], 1, Some((1, 2))));
        let c = lbg.insert_vertex(point_vertex(vec![2.0, 0.0], 2, None));
        lbg.insert_edge(a, b, 1.0, EdgeKind::Triplet);
        lbg.insert_edge(b, c, 2.0, EdgeKind::Triplet);
        let table = lbg.backward_dijkstra(&g, &[2.0, 0.0]).unwrap();
        assert_eq!(table.labels[c], 0.0);
        assert_eq!(table.labels[b], 2.0);
        assert_eq!(table.labels[a], 3.0);
        assert_eq!(table.l(0), 3.0);
    }

    #[test]
    fn dijkstra_unreachable_is_infinite() {
        let tpl = template();
        let g = chain_graph();
        let mut lbg = LowerBoundGraph::empty(&tpl, &g);
        let a = lbg.insert_vertex(point_vertex(vec![0.0, 0.0], 0, None));
        let _b = lbg.insert_vertex(point_vertex(vec![5.0, 0.0], 2, None));
        let table = lbg.backward_dijkstra(&g, &[0.0, 0.0]).unwrap();
        assert_eq!(table.labels[a], 0.0);
        assert!(table.l(2).is_infinite());
    }

    #[test]
    fn cache_roundtrip() {
        let g = chain_graph();
        let tpl = template();
        let lbg = build_lbg(&g, &tpl);
        let dir = std::env::temp_dir().join(format!("ixg-lbg-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("chain.lbg");
        lbg.save(&path).unwrap();
        let loaded = LowerBoundGraph::load(&path, tpl.cache_key(&g)).unwrap();
        assert_eq!(loaded.vertex_count(), lbg.vertex_count());
        assert_eq!(loaded.edge_count(), lbg.edge_count());
        assert_eq!(loaded.triplet_count(), lbg.triplet_count());
        // Wrong key is rejected.
        assert!(matches!(
            LowerBoundGraph::load(&path, 42),
            Err(LbgError::CacheMismatch { .. })
        ));
        std::fs::remove_dir_all(&dir).ok();
    }
}
