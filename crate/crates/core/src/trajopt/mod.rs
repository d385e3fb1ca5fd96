//! Convex trajectory optimization over a prescribed sequence of convex sets.
//!
//! The decision variables are the Bezier control points of one segment per
//! set in the sequence plus the segment durations. The objective
//! `a * L + b * sum(T_k)` uses the control-polygon length `L`, a convex upper
//! bound on arc length (exact for straight segments). Containment and
//! velocity limits are imposed on (derivative) control points, which is
//! sufficient by the convex-hull property; with continuity order 1 all
//! segments share one duration variable so that parametric and time-domain
//! derivative continuity coincide while the program stays convex.

mod bezier;
mod solver;
mod validate;

pub use bezier::{Trajectory, TrajectorySegment};
pub use solver::{SolveInfo, SolverSettings};
pub use validate::{endpoints_match, validate, ValidityReport, Violation};

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ConvexSet, GeomError, Halfspace, VelocitySet};
use crate::graph::GcsGraph;

/// Relative objective tolerance the solver targets and tests assert against.
pub const REL_TOL: f64 = 1e-4;

/// Floor on segment durations; keeps degenerate (zero-length) pieces from
/// driving durations to zero exactly.
pub const MIN_DURATION: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TrajOptError {
    #[error("invalid program: {0}")]
    BadProgram(String),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("solver stalled after {iterations} iterations (residual {residual:.3e})")]
    Stalled { iterations: usize, residual: f64 },
}

/// Weights of the cost `a * length + b * total_time`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub a: f64,
    pub b: f64,
}

impl CostWeights {
    pub fn new(a: f64, b: f64) -> Result<Self, TrajOptError> {
        if !(a >= 0.0 && b >= 0.0 && a + b > 0.0) {
            return Err(TrajOptError::BadProgram(format!(
                "cost weights must be nonnegative with a + b > 0, got a={a}, b={b}"
            )));
        }
        Ok(CostWeights { a, b })
    }
}

/// Endpoint condition of a sequence program.
#[derive(Clone, Debug)]
pub enum Boundary {
    /// Pinned to a point (which must lie in the first/last set).
    Fixed(Vec<f64>),
    /// Free anywhere in the first/last set.
    Free,
    /// Free within the first/last set further restricted by extra halfspaces
    /// (e.g. an interface region).
    InSet(Vec<Halfspace>),
}

/// A convex program over a fixed sequence of sets.
#[derive(Clone, Debug)]
pub struct SeqProgram {
    pub set_ids: Vec<usize>,
    pub sets: Vec<Arc<ConvexSet>>,
    pub start: Boundary,
    pub goal: Boundary,
    pub start_velocity: Option<Vec<f64>>,
    pub goal_velocity: Option<Vec<f64>>,
    pub order: usize,
    pub continuity: u8,
    pub weights: CostWeights,
    pub vset: VelocitySet,
    /// Optional warm start; a prefix of the sequence is enough, the tail is
    /// seeded by the solver.
    pub warm_start: Option<Trajectory>,
    /// Preferred target for the first unwarmed segment end (a cached
    /// relaxed-trajectory endpoint, when the caller has one).
    pub tail_hint: Option<Vec<f64>>,
}

impl SeqProgram {
    /// Validates dimensions, collapses repeated consecutive ids, and checks
    /// fixed boundary membership.
    pub fn new(
        set_ids: Vec<usize>,
        sets: Vec<Arc<ConvexSet>>,
        start: Boundary,
        goal: Boundary,
        order: usize,
        continuity: u8,
        weights: CostWeights,
        vset: VelocitySet,
    ) -> Result<Self, TrajOptError> {
        if set_ids.is_empty() || sets.is_empty() {
            return Err(TrajOptError::BadProgram("empty sequence".into()));
        }
        if set_ids.len() != sets.len() {
            return Err(TrajOptError::BadProgram(
                "set id / set list length mismatch".into(),
            ));
        }
        if order < 1 {
            return Err(TrajOptError::BadProgram("order must be >= 1".into()));
        }
        if continuity > 1 {
            return Err(TrajOptError::BadProgram(
                "continuity order must be 0 or 1".into(),
            ));
        }
        let dim = sets[0].dim();
        if vset.dim() != dim || sets.iter().any(|s| s.dim() != dim) {
            return Err(TrajOptError::Geometry(GeomError::DimensionMismatch {
                expected: dim,
                got: vset.dim(),
            }));
        }
        // Collapse repeated consecutive ids.
        let mut ids = Vec::with_capacity(set_ids.len());
        let mut kept = Vec::with_capacity(sets.len());
        for (id, set) in set_ids.into_iter().zip(sets) {
            if ids.last() != Some(&id) {
                ids.push(id);
                kept.push(set);
            }
        }
        let prog = SeqProgram {
            set_ids: ids,
            sets: kept,
            start,
            goal,
            start_velocity: None,
            goal_velocity: None,
            order,
            continuity,
            weights,
            vset,
            warm_start: None,
            tail_hint: None,
        };
        prog.check_boundaries()?;
        Ok(prog)
    }

    fn check_boundaries(&self) -> Result<(), TrajOptError> {
        let dim = self.dim();
        let check = |b: &Boundary, set: &ConvexSet, which: &str| -> Result<(), TrajOptError> {
            if let Boundary::Fixed(p) = b {
                if p.len() != dim {
                    return Err(TrajOptError::Geometry(GeomError::DimensionMismatch {
                        expected: dim,
                        got: p.len(),
                    }));
                }
                if !set.contains_unchecked(p, 1e-7) {
                    return Err(TrajOptError::BadProgram(format!(
                        "{which} point {p:?} outside its boundary set"
                    )));
                }
            }
            Ok(())
        };
        check(&self.start, &self.sets[0], "start")?;
        check(&self.goal, self.sets.last().unwrap(), "goal")
    }

    /// Program for a search path. Wired query singletons at the ends become
    /// fixed-point boundary conditions on the neighboring real sets.
    pub fn from_path(
        g: &GcsGraph,
        path: &[usize],
        start_point: Option<&[f64]>,
        goal_point: Option<&[f64]>,
        order: usize,
        continuity: u8,
        weights: CostWeights,
        vset: VelocitySet,
    ) -> Result<Self, TrajOptError> {
        let wiring = g.wiring();
        let is_singleton = |id: usize| {
            wiring.map_or(false, |w| id == w.start_id || id == w.goal_id)
        };
        let mut ids = Vec::with_capacity(path.len());
        for &id in path {
            if !is_singleton(id) {
                ids.push(id);
            }
        }
        if ids.is_empty() {
            return Err(TrajOptError::BadProgram(
                "path holds no non-singleton sets".into(),
            ));
        }
        let sets: Vec<Arc<ConvexSet>> = ids.iter().map(|&id| g.vertex(id).clone()).collect();
        let start = match start_point {
            Some(p) => Boundary::Fixed(p.to_vec()),
            None => Boundary::Free,
        };
        let goal = match goal_point {
            Some(p) => Boundary::Fixed(p.to_vec()),
            None => Boundary::Free,
        };
        SeqProgram::new(ids, sets, start, goal, order, continuity, weights, vset)
    }

    pub fn with_start_velocity(mut self, v: Option<Vec<f64>>) -> Self {
        self.start_velocity = v;
        self
    }

    pub fn with_goal_velocity(mut self, v: Option<Vec<f64>>) -> Self {
        self.goal_velocity = v;
        self
    }

    pub fn with_warm_start(mut self, warm: Option<Trajectory>, hint: Option<Vec<f64>>) -> Self {
        self.warm_start = warm;
        self.tail_hint = hint;
        self
    }

    pub fn dim(&self) -> usize {
        self.sets[0].dim()
    }

    pub fn segments(&self) -> usize {
        self.sets.len()
    }

    /// Decision variable count of the assembled program.
    pub fn var_count(&self) -> usize {
        let k = self.segments();
        let cps = k * (self.order + 1) * self.dim();
        cps + if self.continuity >= 1 { 1 } else { k }
    }

    /// Debugging dump of the program structure.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "sequence program: {} segments, order {}, continuity {}, a={}, b={}",
            self.segments(),
            self.order,
            self.continuity,
            self.weights.a,
            self.weights.b
        );
        for (k, (id, set)) in self.set_ids.iter().zip(&self.sets).enumerate() {
            let (lo, hi) = set.aabb();
            let _ = writeln!(
                s,
                "  [{k}] set {id} ({} halfspaces) aabb {lo:?}..{hi:?}",
                set.halfspaces().len()
            );
        }
        let _ = writeln!(s, "  start: {:?} vel {:?}", self.start, self.start_velocity);
        let _ = writeln!(s, "  goal:  {:?} vel {:?}", self.goal, self.goal_velocity);
        s
    }
}

/// Why a program was judged infeasible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfeasibleClass {
    Containment,
    Velocity,
    Continuity,
    BoundaryPoint,
    BoundaryVelocity,
    Duration,
}

#[derive(Clone, Debug)]
pub enum SolveOutcome {
    Solved(Trajectory),
    Infeasible(InfeasibleClass),
}

impl SolveOutcome {
    pub fn trajectory(&self) -> Option<&Trajectory> {
        match self {
            SolveOutcome::Solved(t) => Some(t),
            SolveOutcome::Infeasible(_) => None,
        }
    }
}

/// Solve the sequence program to the solver's residual tolerances.
///
/// Deterministic for identical inputs; warm starts change the iteration
/// count, not the reported optimum (beyond `REL_TOL`).
pub fn solve_sequence(
    prog: &SeqProgram,
    settings: &SolverSettings,
) -> Result<(SolveOutcome, SolveInfo), TrajOptError> {
    INVOCATIONS.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    solver::solve(prog, settings)
}

static INVOCATIONS: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);

/// Process-wide count of sequence-solver invocations; lets callers
/// cross-check their own bookkeeping.
pub fn solver_invocations() -> u64 {
    INVOCATIONS.load(std::sync::atomic::Ordering::Relaxed)
}

/// Trajectory cost under the given weights; additive over concatenation.
pub fn cost(traj: &Trajectory, w: &CostWeights) -> f64 {
    w.a * traj.length() + w.b * traj.total_time()
}

#[cfg(test)]
mod tests;
