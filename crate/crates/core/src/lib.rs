//! Planning over graphs of convex sets.
//!
//! The library decomposes into: polytope geometry ([`geometry`]), the overlap
//! graph and benchmark world generators ([`graph`], [`worlds`]), convex
//! optimization of piecewise Bezier trajectories over a prescribed sequence
//! of sets ([`trajopt`]), the precomputed lower-bound graph that serves
//! admissible cost-to-go estimates and warm starts ([`lbg`]), and the
//! interleaved best-first planners ([`search`]).

pub mod geometry;
pub mod graph;
pub mod lbg;
pub mod search;
pub mod trajopt;
pub mod worlds;

pub use geometry::{ConvexSet, GeomError, VelocitySet};
pub use graph::{GcsGraph, GraphError, Query};
pub use lbg::{HeuristicTable, InterfaceCostMode, LbgTemplate, LowerBoundGraph};
pub use search::{PlanResult, PlanStatus, PlannerConfig, UpperBoundMode};
pub use trajopt::{CostWeights, SeqProgram, SolveOutcome, Trajectory, TrajectorySegment};
