//! Brute-force ground truth: enumerate every start-goal path under a
//! per-vertex visit budget, optimize each sequence, and return the global
//! minimum. Only viable on small worlds; the planners are tested against it.

use std::collections::HashMap;
use std::time::Instant;

use thiserror::Error;

use ixg_core::graph::{GcsGraph, GraphError, Query};
use ixg_core::search::{PlanError, PlanResult, PlanStats, PlanStatus, PlannerConfig};
use ixg_core::trajopt::{
    cost, solve_sequence, Boundary, SeqProgram, SolveOutcome, Trajectory,
};

/// Hard cap on enumerated start-goal paths.
pub const DEFAULT_PATH_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("path enumeration exceeded the cap of {cap} paths")]
    TooLarge { cap: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Exhaustive enumeration with memoized sequence solves, depth-first order.
pub fn oracle_enumerate(
    g: &GcsGraph,
    query: &Query,
    max_visits: usize,
    cfg: &PlannerConfig,
) -> Result<PlanResult, OracleError> {
    oracle_enumerate_capped(g, query, max_visits, cfg, DEFAULT_PATH_CAP)
}

pub fn oracle_enumerate_capped(
    g: &GcsGraph,
    query: &Query,
    max_visits: usize,
    cfg: &PlannerConfig,
    cap: usize,
) -> Result<PlanResult, OracleError> {
    let started = Instant::now();
    let wired = match g.wiring() {
        Some(_) => g.clone(),
        None => g.wire_query(query)?,
    };
    let wiring = wired.wiring().expect("wired").clone();
    let mut stats = PlanStats::default();
    let mut best: Option<(Vec<usize>, Trajectory, f64)> = None;
    let mut paths_seen = 0usize;
    let mut memo: HashMap<Vec<usize>, Option<(Trajectory, f64)>> = HashMap::new();

    let mut visits = vec![0usize; wired.len()];
    let mut path = vec![wiring.start_id];
    visits[wiring.start_id] = 1;
    // Iterative DFS over (path, next successor index to try).
    let mut cursor = vec![0usize];
    while !path.is_empty() {
        let tip = *path.last().unwrap();
        let idx = *cursor.last().unwrap();
        let succ = wired.successors(tip);
        if idx >= succ.len() {
            path.pop();
            cursor.pop();
            visits[tip] -= 1;
            continue;
        }
        *cursor.last_mut().unwrap() += 1;
        let s = succ[idx];
        if visits[s] + 1 > max_visits && s != wiring.goal_id {
            continue;
        }
        if s == wiring.goal_id {
            paths_seen += 1;
            if paths_seen > cap {
                return Err(OracleError::TooLarge { cap });
            }
            let mut full = path.clone();
            full.push(s);
            if let Some((traj, c)) = solve_memo(
                &wired,
                query,
                cfg,
                &full,
                Some(&wiring),
                &mut memo,
                &mut stats,
            ) {
                let better = best.as_ref().map_or(true, |(_, _, bc)| c < *bc);
                if better {
                    best = Some((full, traj, c));
                }
            }
            continue;
        }
        visits[s] += 1;
        path.push(s);
        cursor.push(0);
    }

    stats.expansions = paths_seen;
    stats.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(match best {
        Some((path, traj, c)) => PlanResult {
            status: PlanStatus::Solved,
            path,
            trajectory: Some(traj),
            cost: c,
            stats,
        },
        None => PlanResult {
            status: PlanStatus::Infeasible,
            path: Vec::new(),
            trajectory: None,
            cost: f64::INFINITY,
            stats,
        },
    })
}

fn solve_memo(
    g: &GcsGraph,
    query: &Query,
    cfg: &PlannerConfig,
    path: &[usize],
    wiring: Option<&ixg_core::graph::QueryWiring>,
    memo: &mut HashMap<Vec<usize>, Option<(Trajectory, f64)>>,
    stats: &mut PlanStats,
) -> Option<(Trajectory, f64)> {
    if let Some(hit) = memo.get(path) {
        return hit.clone();
    }
    let goal_point = wiring
        .filter(|w| *path.last().unwrap() == w.goal_id)
        .map(|_| query.goal.as_slice());
    let prog = SeqProgram::from_path(
        g,
        path,
        Some(&query.start),
        goal_point,
        cfg.order,
        cfg.continuity,
        cfg.weights,
        cfg.vset.clone(),
    );
    let entry = match prog {
        Ok(prog) => {
            let prog = prog
                .with_start_velocity(query.start_velocity.clone())
                .with_goal_velocity(if goal_point.is_some() {
                    query.goal_velocity.clone()
                } else {
                    None
                });
            stats.optimized_edges += 1;
            match solve_sequence(&prog, &cfg.solver) {
                Ok((SolveOutcome::Solved(t), info)) => {
                    stats.max_subproblem_vars = stats.max_subproblem_vars.max(info.vars);
                    let c = cost(&t, &cfg.weights);
                    Some((t, c))
                }
                Ok((SolveOutcome::Infeasible(_), _)) | Err(_) => None,
            }
        }
        Err(_) => None,
    };
    memo.insert(path.to_vec(), entry.clone());
    entry
}

/// Optimal free-endpoint cost between two graph vertices (no query points):
/// enumerate paths from `s` to `t` under the visit budget and solve each
/// with both endpoints free in their sets. `None` when no feasible path
/// exists.
pub fn oracle_set_to_set(
    g: &GcsGraph,
    s: usize,
    t: usize,
    max_visits: usize,
    cfg: &PlannerConfig,
    cap: usize,
) -> Result<Option<f64>, OracleError> {
    if s == t {
        return Ok(Some(0.0));
    }
    let mut best: Option<f64> = None;
    let mut paths_seen = 0usize;
    let mut visits = vec![0usize; g.len()];
    let mut path = vec![s];
    visits[s] = 1;
    let mut cursor = vec![0usize];
    while !path.is_empty() {
        let tip = *path.last().unwrap();
        let idx = *cursor.last().unwrap();
        let succ = g.successors(tip);
        if idx >= succ.len() {
            path.pop();
            cursor.pop();
            visits[tip] -= 1;
            continue;
        }
        *cursor.last_mut().unwrap() += 1;
        let nxt = succ[idx];
        if nxt >= g.base_len() {
            continue; // never route through query singletons
        }
        if visits[nxt] + 1 > max_visits {
            continue;
        }
        if nxt == t {
            paths_seen += 1;
            if paths_seen > cap {
                return Err(OracleError::TooLarge { cap });
            }
            let mut full = path.clone();
            full.push(t);
            if let Some(c) = solve_free_path(g, cfg, &full) {
                if best.map_or(true, |b| c < b) {
                    best = Some(c);
                }
            }
            // Keep exploring longer paths through t as well.
        }
        visits[nxt] += 1;
        path.push(nxt);
        cursor.push(0);
    }
    Ok(best)
}

fn solve_free_path(g: &GcsGraph, cfg: &PlannerConfig, path: &[usize]) -> Option<f64> {
    let sets = path.iter().map(|&id| g.vertex(id).clone()).collect();
    let prog = SeqProgram::new(
        path.to_vec(),
        sets,
        Boundary::Free,
        Boundary::Free,
        cfg.order,
        cfg.continuity,
        cfg.weights,
        cfg.vset.clone(),
    )
    .ok()?;
    match solve_sequence(&prog, &cfg.solver) {
        Ok((SolveOutcome::Solved(t), _)) => Some(cost(&t, &cfg.weights)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ixg_core::geometry::{ConvexSet, VelocitySet};
    use ixg_core::graph::DEFAULT_EDGE_MARGIN;
    use ixg_core::trajopt::CostWeights;

    fn cfg2() -> PlannerConfig {
        let mut cfg = PlannerConfig::new(
            CostWeights::new(1.0, 0.0).unwrap(),
            VelocitySet::uniform(2, 1.0).unwrap(),
        );
        cfg.order = 1;
        cfg
    }

    #[test]
    fn single_route_equals_sequence_solve() {
        let sets = vec![
            ConvexSet::from_box(&[0.0, 0.0], &[1.1, 1.0]).unwrap(),
            ConvexSet::from_box(&[0.9, 0.0], &[2.0, 1.0]).unwrap(),
        ];
        let g = GcsGraph::build(sets, DEFAULT_EDGE_MARGIN).unwrap();
        let q = Query::point_to_point(vec![0.2, 0.5], vec![1.8, 0.5]);
        let r = oracle_enumerate(&g, &q, 1, &cfg2()).unwrap();
        assert_eq!(r.status, PlanStatus::Solved);
        assert!((r.cost - 1.6).abs() < 1e-3, "cost {}", r.cost);
    }

    #[test]
    fn diamond_takes_the_cheaper_branch() {
        // Two routes around a gap: the lower corridor is straight, the upper
        // detours. Both connect start box to goal box.
        let sets = vec![
            ConvexSet::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), // start
            ConvexSet::from_box(&[0.8, 0.0], &[2.2, 0.6]).unwrap(), // low, short
            ConvexSet::from_box(&[0.8, 0.4], &[1.4, 3.0]).unwrap(), // high detour up
            ConvexSet::from_box(&[1.2, 2.4], &[2.2, 3.0]).unwrap(), // high detour across
            ConvexSet::from_box(&[2.0, 0.0], &[3.0, 3.0]).unwrap(), // goal column
        ];
        let g = GcsGraph::build(sets, DEFAULT_EDGE_MARGIN).unwrap();
        let q = Query::point_to_point(vec![0.3, 0.3], vec![2.8, 0.3]);
        let r = oracle_enumerate(&g, &q, 1, &cfg2()).unwrap();
        assert_eq!(r.status, PlanStatus::Solved);
        // The straight line through the low corridor is feasible.
        assert!((r.cost - 2.5).abs() < 1e-3, "cost {}", r.cost);
        assert!(r.path.contains(&1), "path {:?}", r.path);
        assert!(!r.path.contains(&3), "path {:?}", r.path);
    }

    #[test]
    fn cap_is_enforced() {
        let sets = ixg_core::worlds::generate_maze(3, 3, 1);
        let g = GcsGraph::build(sets, DEFAULT_EDGE_MARGIN).unwrap();
        let q = Query::point_to_point(vec![0.5, 0.5], vec![2.5, 2.5]);
        match oracle_enumerate_capped(&g, &q, 2, &cfg2(), 1) {
            Err(OracleError::TooLarge { cap }) => assert_eq!(cap, 1),
            other => panic!("expected TooLarge, got {:?}", other.map(|r| r.status)),
        }
    }

    #[test]
    fn set_to_set_adjacent_is_free() {
        let sets = vec![
            ConvexSet::from_box(&[0.0, 0.0], &[1.1, 1.0]).unwrap(),
            ConvexSet::from_box(&[0.9, 0.0], &[2.0, 1.0]).unwrap(),
        ];
        let g = GcsGraph::build(sets, DEFAULT_EDGE_MARGIN).unwrap();
        let c = oracle_set_to_set(&g, 0, 1, 1, &cfg2(), 1000)
            .unwrap()
            .expect("feasible");
        // Free endpoints can coincide on the shared strip.
        assert!(c < 1e-3, "cost {c}");
    }
}
