//! Interleaved search and trajectory optimization over the graph of convex
//! sets.
//!
//! `plan_ixg` is a weighted-A*-style search over set vertices with a CLOSED
//! list: complete when every edge constraint is satisfiable, but neither
//! optimal nor bounded-suboptimal because partial-trajectory costs depend on
//! the whole ancestor sequence. `plan_ixg_star` searches over paths of sets
//! instead, never closes anything, optionally allows revisits under a
//! per-vertex budget, and prunes with the lower-bound heuristic against an
//! upper bound furnished by a preliminary `plan_ixg` run; with `epsilon = 1`
//! it returns the optimum over all admissible paths, and `epsilon > 1` bounds
//! the returned cost by `epsilon` times the optimum (relative to the pruning
//! bound actually used).

use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::VelocitySet;
use crate::graph::{GcsGraph, GraphError, Query};
use crate::lbg::{HeuristicTable, LbgError, LowerBoundGraph};
use crate::trajopt::{
    cost, solve_sequence, CostWeights, SeqProgram, SolveOutcome, SolverSettings, TrajOptError,
    Trajectory,
};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lbg(#[from] LbgError),
    #[error(transparent)]
    TrajOpt(#[from] TrajOptError),
    #[error("invalid planner configuration: {0}")]
    BadConfig(String),
    #[error("result is not Solved")]
    NotSolved,
}

/// Pruning threshold semantics for IxG*.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpperBoundMode {
    /// Literal pseudocode comparison against `epsilon * u` with
    /// `u = epsilon * c_ixg` (an effective `epsilon^2` bound).
    Paper,
    /// Compare against `u = epsilon * c_ixg` directly.
    Tight,
}

#[derive(Clone, Debug)]
pub struct PlannerConfig {
    pub epsilon: f64,
    pub allow_cycles: bool,
    pub max_visits_per_vertex: usize,
    pub upper_bound_mode: UpperBoundMode,
    /// When false the upper bound is treated as infinite and no lower-bound
    /// pruning happens at all.
    pub prune: bool,
    pub order: usize,
    pub continuity: u8,
    pub weights: CostWeights,
    pub vset: VelocitySet,
    pub solver: SolverSettings,
    pub max_expansions: Option<usize>,
    pub time_budget: Option<Duration>,
    /// Nodes popped per expansion round. The round's insertions are merged
    /// before the next termination check, so widths above one keep the
    /// bound guarantees while giving up pop-order determinism.
    pub batch_width: usize,
    pub trace: bool,
}

impl PlannerConfig {
    pub fn new(weights: CostWeights, vset: VelocitySet) -> Self {
        PlannerConfig {
            epsilon: 1.0,
            allow_cycles: false,
            max_visits_per_vertex: 3,
            upper_bound_mode: UpperBoundMode::Tight,
            prune: true,
            order: 3,
            continuity: 0,
            weights,
            vset,
            solver: SolverSettings::default(),
            max_expansions: None,
            time_budget: None,
            batch_width: 1,
            trace: false,
        }
    }

    fn validate(&self) -> Result<(), PlanError> {
        if self.epsilon < 1.0 {
            return Err(PlanError::BadConfig("epsilon must be >= 1".into()));
        }
        if self.max_visits_per_vertex < 1 {
            return Err(PlanError::BadConfig("max visits must be >= 1".into()));
        }
        if self.batch_width < 1 {
            return Err(PlanError::BadConfig("batch width must be >= 1".into()));
        }
        if self.order < 1 {
            return Err(PlanError::BadConfig("order must be >= 1".into()));
        }
        if self.continuity > 1 {
            return Err(PlanError::BadConfig("continuity must be 0 or 1".into()));
        }
        Ok(())
    }
}

/// Priority of a node: cost-to-come plus inflated cost-to-go.
#[inline]
pub fn key(g: f64, l: f64, epsilon: f64) -> f64 {
    g + epsilon * l
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanStatus {
    Solved,
    Infeasible,
    BudgetExhausted,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PlanStats {
    pub expansions: usize,
    pub reexpansions_total: usize,
    /// Expansions beyond the first, per graph vertex.
    pub reexpansions: Vec<usize>,
    /// Sequence-optimizer invocations (cache misses).
    pub optimized_edges: usize,
    pub pruned: usize,
    pub stalled_solves: usize,
    pub max_subproblem_vars: usize,
    pub wall_ms: f64,
    /// Certified bound on cost/optimum (1 means proven optimal).
    pub suboptimality: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trace: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct PlanResult {
    pub status: PlanStatus,
    pub path: Vec<usize>,
    pub trajectory: Option<Trajectory>,
    pub cost: f64,
    pub stats: PlanStats,
}

impl PlanResult {
    fn empty(status: PlanStatus, stats: PlanStats) -> Self {
        PlanResult {
            status,
            path: Vec::new(),
            trajectory: None,
            cost: f64::INFINITY,
            stats,
        }
    }
}

/// Path of set ids with its optimized trajectory and cost-to-come.
#[derive(Clone, Debug)]
pub struct PathNode {
    pub last: usize,
    pub parent: Option<usize>,
    pub g: f64,
    pub trajectory: Trajectory,
    pub depth: usize,
}

struct HeapEntry {
    key: f64,
    g: f64,
    seq: u64,
    node: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Max-heap: pop smallest key, break ties by larger g, then FIFO.
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Per-query context shared by the upper-bound pass and the path search:
/// wired graph, heuristic, the sequence-solve cache, and counters.
struct Ctx<'a> {
    g: GcsGraph,
    lbg: LowerBoundGraph,
    heur: HeuristicTable,
    query: &'a Query,
    cfg: &'a PlannerConfig,
    start_id: usize,
    goal_id: usize,
    cache: HashMap<Vec<usize>, Option<(Trajectory, f64)>>,
    stats: PlanStats,
    expanded_per_vertex: Vec<usize>,
    started: Instant,
}

impl<'a> Ctx<'a> {
    fn new(
        base: &GcsGraph,
        lbg: &LowerBoundGraph,
        query: &'a Query,
        cfg: &'a PlannerConfig,
    ) -> Result<Self, PlanError> {
        cfg.validate()?;
        query.validate(&cfg.vset)?;
        let wired = match base.wiring() {
            Some(_) => base.clone(),
            None => base.wire_query(query)?,
        };
        let wiring = wired.wiring().expect("wired").clone();
        let mut lbg = lbg.clone();
        lbg.update_with_point(&wired, &query.start)?;
        lbg.update_with_point(&wired, &query.goal)?;
        let heur = lbg.backward_dijkstra(&wired, &query.goal)?;
        let n = wired.len();
        Ok(Ctx {
            g: wired,
            lbg,
            heur,
            query,
            cfg,
            start_id: wiring.start_id,
            goal_id: wiring.goal_id,
            cache: HashMap::new(),
            stats: PlanStats::default(),
            expanded_per_vertex: vec![0; n],
            started: Instant::now(),
        })
    }

    fn over_budget(&self) -> bool {
        if let Some(max) = self.cfg.max_expansions {
            if self.stats.expansions >= max {
                return true;
            }
        }
        if let Some(budget) = self.cfg.time_budget {
            if self.started.elapsed() > budget {
                return true;
            }
        }
        false
    }

    /// Goal-first successor order; otherwise ascending ids.
    fn successors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.g.successors(v).to_vec();
        out.sort_unstable_by_key(|&s| (s != self.goal_id, s));
        out
    }

    /// Solve the sequence program for a full path, memoized on the exact id
    /// sequence. `None` means infeasible (or a stalled solve).
    fn solve_path(
        &mut self,
        path: &[usize],
        warm: Option<(&Trajectory, Option<Vec<f64>>)>,
    ) -> Option<(Trajectory, f64)> {
        if let Some(hit) = self.cache.get(path) {
            return hit.clone();
        }
        let goal_point = if *path.last().unwrap() == self.goal_id {
            Some(self.query.goal.as_slice())
        } else {
            None
        };
        let prog = SeqProgram::from_path(
            &self.g,
            path,
            Some(&self.query.start),
            goal_point,
            self.cfg.order,
            self.cfg.continuity,
            self.cfg.weights,
            self.cfg.vset.clone(),
        );
        let mut prog = match prog {
            Ok(p) => p,
            Err(_) => {
                self.cache.insert(path.to_vec(), None);
                return None;
            }
        };
        prog = prog.with_start_velocity(self.query.start_velocity.clone());
        if goal_point.is_some() {
            prog = prog.with_goal_velocity(self.query.goal_velocity.clone());
        }
        if let Some((traj, hint)) = warm {
            prog = prog.with_warm_start(Some(traj.clone()), hint);
        }
        self.stats.optimized_edges += 1;
        let entry = match solve_sequence(&prog, &self.cfg.solver) {
            Ok((SolveOutcome::Solved(t), info)) => {
                self.stats.max_subproblem_vars = self.stats.max_subproblem_vars.max(info.vars);
                let c = cost(&t, &self.cfg.weights);
                Some((t, c))
            }
            Ok((SolveOutcome::Infeasible(_), info)) => {
                self.stats.max_subproblem_vars = self.stats.max_subproblem_vars.max(info.vars);
                None
            }
            Err(TrajOptError::Stalled { .. }) => {
                self.stats.stalled_solves += 1;
                None
            }
            Err(_) => None,
        };
        self.cache.insert(path.to_vec(), entry.clone());
        entry
    }

    /// Warm-start hint: the cached relaxed crossing point between the tip set
    /// and the successor, keyed by the tip's predecessor.
    fn triplet_hint(&self, pred: Option<usize>, tip: usize, succ: usize) -> Option<Vec<f64>> {
        let p = pred?;
        self.lbg
            .lookup_triplet(p, tip, succ)
            .and_then(|t| t.end().map(<[f64]>::to_vec))
    }

    fn trace_pop(&mut self, label: &str, k: f64, g: f64, l: f64, path: &[usize]) {
        if self.cfg.trace {
            self.stats.trace.push(format!(
                "{label} key={k:.6} g={g:.6} l={l:.6} path={path:?}"
            ));
        }
    }

    fn finish(&mut self, mut result: PlanResult) -> PlanResult {
        self.stats.wall_ms = self.started.elapsed().as_secs_f64() * 1e3;
        self.stats.reexpansions = self
            .expanded_per_vertex
            .iter()
            .map(|&c| c.saturating_sub(1))
            .collect();
        self.stats.reexpansions_total = self.stats.reexpansions.iter().sum();
        if result.status == PlanStatus::Solved {
            let lb_start = self.heur.l(self.start_id);
            let eps_bound = result.cost / self.cfg.epsilon;
            let denom = lb_start.max(eps_bound);
            self.stats.suboptimality = if denom > 0.0 && denom.is_finite() {
                (result.cost / denom).max(1.0)
            } else {
                1.0
            };
        }
        result.stats = std::mem::take(&mut self.stats);
        result
    }
}

/// Weighted-A*-style search over set vertices with a CLOSED list.
pub fn plan_ixg(
    g: &GcsGraph,
    lbg: &LowerBoundGraph,
    query: &Query,
    cfg: &PlannerConfig,
) -> Result<PlanResult, PlanError> {
    let mut ctx = Ctx::new(g, lbg, query, cfg)?;
    let outcome = ixg_pass(&mut ctx);
    let result = match outcome {
        IxgOutcome::Solved { path, traj, cost } => PlanResult {
            status: PlanStatus::Solved,
            path,
            trajectory: Some(traj),
            cost,
            stats: PlanStats::default(),
        },
        IxgOutcome::Infeasible => PlanResult::empty(PlanStatus::Infeasible, PlanStats::default()),
        IxgOutcome::Budget => {
            PlanResult::empty(PlanStatus::BudgetExhausted, PlanStats::default())
        }
    };
    Ok(ctx.finish(result))
}

enum IxgOutcome {
    Solved {
        path: Vec<usize>,
        traj: Trajectory,
        cost: f64,
    },
    Infeasible,
    Budget,
}

fn ixg_pass(ctx: &mut Ctx) -> IxgOutcome {
    let n = ctx.g.len();
    let eps = ctx.cfg.epsilon;
    let mut g_val = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut traj: Vec<Option<Trajectory>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    g_val[ctx.start_id] = 0.0;
    traj[ctx.start_id] = Some(Trajectory::default());
    heap.push(HeapEntry {
        key: key(0.0, ctx.heur.l(ctx.start_id), eps),
        g: 0.0,
        seq,
        node: ctx.start_id,
    });

    while let Some(entry) = heap.pop() {
        let c = entry.node;
        if closed[c] || entry.g > g_val[c] {
            continue;
        }
        if ctx.over_budget() {
            return IxgOutcome::Budget;
        }
        closed[c] = true;
        ctx.stats.expansions += 1;
        ctx.expanded_per_vertex[c] += 1;
        if c == ctx.goal_id {
            let mut path = Vec::new();
            let mut cur = Some(c);
            while let Some(v) = cur {
                path.push(v);
                cur = parent[v];
            }
            path.reverse();
            return IxgOutcome::Solved {
                path,
                traj: traj[c].clone().expect("goal has a trajectory"),
                cost: g_val[c],
            };
        }
        ctx.trace_pop("ixg", entry.key, entry.g, ctx.heur.l(c), &[c]);

        // Ancestor sequence via parent pointers.
        let mut ancestors = Vec::new();
        let mut cur = Some(c);
        while let Some(v) = cur {
            ancestors.push(v);
            cur = parent[v];
        }
        ancestors.reverse();
        let pred = if ancestors.len() >= 2 {
            Some(ancestors[ancestors.len() - 2])
        } else {
            None
        };

        for s in ctx.successors(c) {
            if closed[s] {
                continue;
            }
            let l_s = ctx.heur.l(s);
            // Skip successors that provably cannot beat the current goal
            // value (cost-to-come only grows along an extension).
            if ctx.cfg.prune
                && l_s.is_finite()
                && key(g_val[c], l_s, eps) >= g_val[ctx.goal_id]
            {
                ctx.stats.pruned += 1;
                continue;
            }
            let mut path = ancestors.clone();
            path.push(s);
            let hint = ctx.triplet_hint(pred, c, s);
            let warm = traj[c].clone();
            let solved = ctx.solve_path(&path, warm.as_ref().map(|t| (t, hint)));
            if let Some((t, g_new)) = solved {
                if g_new < g_val[s] {
                    g_val[s] = g_new;
                    parent[s] = Some(c);
                    traj[s] = Some(t);
                    seq += 1;
                    heap.push(HeapEntry {
                        key: key(g_new, l_s, eps),
                        g: g_new,
                        seq,
                        node: s,
                    });
                }
            }
        }
    }
    IxgOutcome::Infeasible
}

/// Path-space search without a CLOSED list: optimal at `epsilon = 1`,
/// `epsilon`-bounded-suboptimal otherwise.
pub fn plan_ixg_star(
    g: &GcsGraph,
    lbg: &LowerBoundGraph,
    query: &Query,
    cfg: &PlannerConfig,
) -> Result<PlanResult, PlanError> {
    let mut ctx = Ctx::new(g, lbg, query, cfg)?;
    let eps = cfg.epsilon;

    // Upper bound from a preliminary CLOSED-list pass (Tight and Paper modes
    // share u = eps * c_ixg; they differ in the threshold compared against).
    let mut threshold = f64::INFINITY;
    if cfg.prune {
        match ixg_pass(&mut ctx) {
            IxgOutcome::Solved { cost, .. } => {
                let u = eps * cost;
                threshold = match cfg.upper_bound_mode {
                    UpperBoundMode::Paper => eps * u,
                    UpperBoundMode::Tight => u,
                };
            }
            IxgOutcome::Budget => {
                return Ok(ctx.finish(PlanResult::empty(
                    PlanStatus::BudgetExhausted,
                    PlanStats::default(),
                )))
            }
            IxgOutcome::Infeasible => {}
        }
    }

    let result = star_pass(&mut ctx, threshold);
    Ok(ctx.finish(result))
}

fn star_pass(ctx: &mut Ctx, threshold: f64) -> PlanResult {
    let eps = ctx.cfg.epsilon;
    let mut arena: Vec<PathNode> = Vec::new();
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    let mut best_by_seq: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut incumbent: Option<usize> = None;
    let mut seq = 0u64;

    arena.push(PathNode {
        last: ctx.start_id,
        parent: None,
        g: 0.0,
        trajectory: Trajectory::default(),
        depth: 1,
    });
    heap.push(HeapEntry {
        key: key(0.0, ctx.heur.l(ctx.start_id), eps),
        g: 0.0,
        seq,
        node: 0,
    });

    let path_of = |arena: &[PathNode], mut idx: usize| -> Vec<usize> {
        let mut out = Vec::with_capacity(arena[idx].depth);
        loop {
            out.push(arena[idx].last);
            match arena[idx].parent {
                Some(p) => idx = p,
                None => break,
            }
        }
        out.reverse();
        out
    };

    loop {
        // Termination: the best goal path beats everything still open.
        if let Some(inc) = incumbent {
            let open_min = heap.peek().map_or(f64::INFINITY, |e| e.key);
            if arena[inc].g <= open_min {
                let path = path_of(&arena, inc);
                return PlanResult {
                    status: PlanStatus::Solved,
                    path,
                    trajectory: Some(arena[inc].trajectory.clone()),
                    cost: arena[inc].g,
                    stats: PlanStats::default(),
                };
            }
        }

        // Pop a batch; insertions merge before the next termination check.
        let mut batch = Vec::with_capacity(ctx.cfg.batch_width);
        while batch.len() < ctx.cfg.batch_width {
            match heap.pop() {
                Some(e) => {
                    let node = &arena[e.node];
                    let stale = best_by_seq
                        .get(&path_of(&arena, e.node))
                        .map_or(false, |&b| b < node.g);
                    if !stale {
                        batch.push(e);
                    }
                }
                None => break,
            }
        }
        if batch.is_empty() {
            return match incumbent {
                Some(inc) => PlanResult {
                    status: PlanStatus::Solved,
                    path: path_of(&arena, inc),
                    trajectory: Some(arena[inc].trajectory.clone()),
                    cost: arena[inc].g,
                    stats: PlanStats::default(),
                },
                None => PlanResult::empty(PlanStatus::Infeasible, PlanStats::default()),
            };
        }

        for entry in batch {
            if ctx.over_budget() {
                let (status, path, trajectory, cost_v) = match incumbent {
                    Some(inc) => (
                        PlanStatus::BudgetExhausted,
                        path_of(&arena, inc),
                        Some(arena[inc].trajectory.clone()),
                        arena[inc].g,
                    ),
                    None => (PlanStatus::BudgetExhausted, Vec::new(), None, f64::INFINITY),
                };
                return PlanResult {
                    status,
                    path,
                    trajectory,
                    cost: cost_v,
                    stats: PlanStats::default(),
                };
            }
            let node_idx = entry.node;
            let tip = arena[node_idx].last;
            let path = path_of(&arena, node_idx);
            ctx.stats.expansions += 1;
            ctx.expanded_per_vertex[tip] += 1;
            ctx.trace_pop("ixg*", entry.key, entry.g, ctx.heur.l(tip), &path);

            let pred = if path.len() >= 2 {
                Some(path[path.len() - 2])
            } else {
                None
            };
            for s in ctx.successors(tip) {
                let visits = path.iter().filter(|&&v| v == s).count();
                if visits >= 1 {
                    if !ctx.cfg.allow_cycles {
                        continue;
                    }
                    if visits + 1 > ctx.cfg.max_visits_per_vertex {
                        continue;
                    }
                }
                let l_s = ctx.heur.l(s);
                if ctx.cfg.prune && l_s.is_finite() {
                    let optimistic = key(arena[node_idx].g, l_s, eps);
                    if optimistic > threshold {
                        ctx.stats.pruned += 1;
                        continue;
                    }
                    if let Some(inc) = incumbent {
                        if optimistic >= arena[inc].g {
                            ctx.stats.pruned += 1;
                            continue;
                        }
                    }
                }
                let mut new_path = path.clone();
                new_path.push(s);
                let hint = ctx.triplet_hint(pred, tip, s);
                let warm = arena[node_idx].trajectory.clone();
                let warm_ref = if warm.is_empty() {
                    None
                } else {
                    Some((&warm, hint))
                };
                let Some((t, g_new)) = ctx.solve_path(&new_path, warm_ref) else {
                    continue;
                };
                if ctx.cfg.prune && l_s.is_finite() && key(g_new, l_s, eps) > threshold {
                    ctx.stats.pruned += 1;
                    continue;
                }
                // Merge duplicate id sequences, keeping the cheaper one.
                match best_by_seq.get_mut(&new_path) {
                    Some(best) if *best <= g_new => continue,
                    Some(best) => *best = g_new,
                    None => {
                        best_by_seq.insert(new_path.clone(), g_new);
                    }
                }
                let depth = arena[node_idx].depth + 1;
                arena.push(PathNode {
                    last: s,
                    parent: Some(node_idx),
                    g: g_new,
                    trajectory: t,
                    depth,
                });
                let new_idx = arena.len() - 1;
                if s == ctx.goal_id {
                    let better = incumbent.map_or(true, |inc| g_new < arena[inc].g);
                    if better {
                        incumbent = Some(new_idx);
                    }
                } else {
                    seq += 1;
                    heap.push(HeapEntry {
                        key: key(g_new, l_s, eps),
                        g: g_new,
                        seq,
                        node: new_idx,
                    });
                }
            }
        }
    }
}

/// IxG* with an escalating revisit budget: on Infeasible with cycles
/// enabled, the per-vertex budget doubles and the search reruns, up to
/// `budget_cap`.
pub fn plan_ixg_star_escalating(
    g: &GcsGraph,
    lbg: &LowerBoundGraph,
    query: &Query,
    cfg: &PlannerConfig,
    budget_cap: usize,
) -> Result<PlanResult, PlanError> {
    let mut cfg = cfg.clone();
    loop {
        let result = plan_ixg_star(g, lbg, query, &cfg)?;
        if result.status != PlanStatus::Infeasible
            || !cfg.allow_cycles
            || cfg.max_visits_per_vertex >= budget_cap
        {
            return Ok(result);
        }
        cfg.max_visits_per_vertex = (cfg.max_visits_per_vertex * 2).min(budget_cap);
    }
}

/// Path and trajectory of a solved plan.
pub fn reconstruct(result: &PlanResult) -> Result<(&[usize], &Trajectory), PlanError> {
    if result.status != PlanStatus::Solved {
        return Err(PlanError::NotSolved);
    }
    match &result.trajectory {
        Some(t) => Ok((&result.path, t)),
        None => Err(PlanError::NotSolved),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexSet;
    use crate::graph::DEFAULT_EDGE_MARGIN;
    use crate::lbg::{build_lbg, LbgTemplate};

    fn simple_cfg() -> PlannerConfig {
        let mut cfg = PlannerConfig::new(
            CostWeights::new(1.0, 0.0).unwrap(),
            VelocitySet::uniform(2, 1.0).unwrap(),
        );
        cfg.order = 1;
        cfg
    }

    fn lbg_for(g: &GcsGraph, cfg: &PlannerConfig) -> LowerBoundGraph {
        build_lbg(
            g,
            &LbgTemplate::new(cfg.order, cfg.weights, cfg.vset.clone()),
        )
    }

    #[test]
    fn key_is_inflated_sum() {
        assert_eq!(key(2.0, 3.0, 1.0), 5.0);
        assert_eq!(key(2.0, 3.0, 6.0), 20.0);
        assert!(key(2.0, f64::INFINITY, 1.0).is_infinite());
    }

    #[test]
    fn single_set_solved_in_three_expansions() {
        let g = GcsGraph::build(
            vec![ConvexSet::from_box(&[0.0, 0.0], &[4.0, 4.0]).unwrap()],
            DEFAULT_EDGE_MARGIN,
        )
        .unwrap();
        let cfg = simple_cfg();
        let lbg = lbg_for(&g, &cfg);
        let q = Query::point_to_point(vec![1.0, 1.0], vec![3.0, 1.0]);
        let r = plan_ixg(&g, &lbg, &q, &cfg).unwrap();
        assert_eq!(r.status, PlanStatus::Solved);
        assert!(r.stats.expansions <= 3, "{} expansions", r.stats.expansions);
        assert!((r.cost - 2.0).abs() < 1e-4);
        let (path, traj) = reconstruct(&r).unwrap();
        assert_eq!(path.len(), 3); // start singleton, the set, goal singleton
        assert_eq!(traj.segments.len(), 1);
    }

    #[test]
    fn disconnected_goal_is_infeasible() {
        let g = GcsGraph::build(
            vec![
                ConvexSet::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap(),
                ConvexSet::from_box(&[5.0, 5.0], &[6.0, 6.0]).unwrap(),
            ],
            DEFAULT_EDGE_MARGIN,
        )
        .unwrap();
        let cfg = simple_cfg();
        let lbg = lbg_for(&g, &cfg);
        let q = Query::point_to_point(vec![0.5, 0.5], vec![5.5, 5.5]);
        assert_eq!(
            plan_ixg(&g, &lbg, &q, &cfg).unwrap().status,
            PlanStatus::Infeasible
        );
        assert_eq!(
            plan_ixg_star(&g, &lbg, &q, &cfg).unwrap().status,
            PlanStatus::Infeasible
        );
    }

    #[test]
    fn reconstruct_requires_solved() {
        let r = PlanResult::empty(PlanStatus::Infeasible, PlanStats::default());
        assert!(reconstruct(&r).is_err());
    }

    #[test]
    fn chain_world_monotone_path() {
        let sets = vec![
            ConvexSet::from_box(&[0.0, 0.0], &[1.1, 1.0]).unwrap(),
            ConvexSet::from_box(&[0.9, 0.0], &[2.1, 1.0]).unwrap(),
            ConvexSet::from_box(&[1.9, 0.0], &[3.0, 1.0]).unwrap(),
        ];
        let g = GcsGraph::build(sets, DEFAULT_EDGE_MARGIN).unwrap();
        let cfg = simple_cfg();
        let lbg = lbg_for(&g, &cfg);
        let q = Query::point_to_point(vec![0.2, 0.5], vec![2.8, 0.5]);
        let r = plan_ixg_star(&g, &lbg, &q, &cfg).unwrap();
        assert_eq!(r.status, PlanStatus::Solved);
        let (path, _) = reconstruct(&r).unwrap();
        assert_eq!(path, &[3, 0, 1, 2, 4]);
        // Optimal cost is the straight chord (corridor is flat).
        assert!((r.cost - 2.6).abs() < 1e-3, "cost {}", r.cost);
    }

    #[test]
    fn budget_exhaustion_reported() {
        let sets = crate::worlds::generate_maze(3, 3, 2);
        let g = GcsGraph::build(sets, DEFAULT_EDGE_MARGIN).unwrap();
        let mut cfg = simple_cfg();
        cfg.max_expansions = Some(1);
        let lbg = lbg_for(&g, &cfg);
        let q = Query::point_to_point(vec![0.5, 0.5], vec![2.5, 2.5]);
        let r = plan_ixg_star(&g, &lbg, &q, &cfg).unwrap();
        assert_eq!(r.status, PlanStatus::BudgetExhausted);
    }
}

