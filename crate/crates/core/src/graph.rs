//! The graph of convex sets: vertices carry polytopes, directed edges certify
//! overlap, and planning queries are wired in as singleton vertices.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, ConvexSet, GeomError, VelocitySet};

/// Default overlap margin for edges: zero-volume facet contact is excluded so
/// junction points always have room.
pub const DEFAULT_EDGE_MARGIN: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph construction needs at least one set")]
    EmptyInput,
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("query {endpoint} at {point:?} lies inside no vertex set")]
    QueryOutsideCover { endpoint: QueryEndpoint, point: Vec<f64> },
    #[error("query velocity {velocity:?} outside the velocity set")]
    QueryVelocityOutOfBounds { velocity: Vec<f64> },
    #[error("vertex id {0} out of range")]
    BadVertexId(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryEndpoint {
    Start,
    Goal,
}

impl std::fmt::Display for QueryEndpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QueryEndpoint::Start => write!(f, "start"),
            QueryEndpoint::Goal => write!(f, "goal"),
        }
    }
}

/// A planning query: ambient start/goal points with optional boundary
/// velocities (zero by default means "unconstrained" here; callers set
/// explicit vectors when they want velocity boundary conditions).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    pub start_velocity: Option<Vec<f64>>,
    pub goal_velocity: Option<Vec<f64>>,
}

impl Query {
    pub fn point_to_point(start: Vec<f64>, goal: Vec<f64>) -> Self {
        Query {
            start,
            goal,
            start_velocity: None,
            goal_velocity: None,
        }
    }

    pub fn with_start_velocity(mut self, v: Vec<f64>) -> Self {
        self.start_velocity = Some(v);
        self
    }

    pub fn with_goal_velocity(mut self, v: Vec<f64>) -> Self {
        self.goal_velocity = Some(v);
        self
    }

    pub fn validate(&self, vset: &VelocitySet) -> Result<(), GraphError> {
        for v in [&self.start_velocity, &self.goal_velocity].into_iter().flatten() {
            if !vset.contains(v, 1e-9) {
                return Err(GraphError::QueryVelocityOutOfBounds {
                    velocity: v.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Ids of the singleton vertices a query was wired in as.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryWiring {
    pub start_id: usize,
    pub goal_id: usize,
}

/// Directed graph over convex sets. Overlap edges appear in both directions;
/// query wiring adds one-directional edges (start outgoing, goal incoming).
#[derive(Clone, Debug)]
pub struct GcsGraph {
    dim: usize,
    vertices: Vec<Arc<ConvexSet>>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    edge_count: usize,
    margin: f64,
    wiring: Option<QueryWiring>,
}

impl GcsGraph {
    /// Build the overlap graph: a directed edge `(u, v)` for every ordered
    /// pair whose intersection holds a ball of radius `margin`.
    pub fn build(sets: Vec<ConvexSet>, margin: f64) -> Result<Self, GraphError> {
        if sets.is_empty() {
            return Err(GraphError::EmptyInput);
        }
        let dim = sets[0].dim();
        for s in &sets {
            if s.dim() != dim {
                return Err(GraphError::Geometry(GeomError::DimensionMismatch {
                    expected: dim,
                    got: s.dim(),
                }));
            }
        }
        let n = sets.len();
        let vertices: Vec<Arc<ConvexSet>> = sets.into_iter().map(Arc::new).collect();
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        let mut edge_count = 0usize;
        for u in 0..n {
            for v in (u + 1)..n {
                if geometry::intersects(&vertices[u], &vertices[v], margin)? {
                    succ[u].push(v);
                    succ[v].push(u);
                    pred[u].push(v);
                    pred[v].push(u);
                    edge_count += 2;
                }
            }
        }
        for list in succ.iter_mut().chain(pred.iter_mut()) {
            list.sort_unstable();
        }
        Ok(GcsGraph {
            dim,
            vertices,
            succ,
            pred,
            edge_count,
            margin,
            wiring: None,
        })
    }

    /// Clone of this graph with `Q_start = {q.start}` and `Q_goal = {q.goal}`
    /// appended: the start gets an outgoing edge into every set containing it,
    /// the goal an incoming edge from every set containing it.
    pub fn wire_query(&self, q: &Query) -> Result<GcsGraph, GraphError> {
        let containing = |p: &[f64], endpoint: QueryEndpoint| -> Result<Vec<usize>, GraphError> {
            if p.len() != self.dim || p.iter().any(|x| !x.is_finite()) {
                return Err(GraphError::Geometry(GeomError::DimensionMismatch {
                    expected: self.dim,
                    got: p.len(),
                }));
            }
            let ids: Vec<usize> = (0..self.base_len())
                .filter(|&i| self.vertices[i].contains_unchecked(p, 1e-9))
                .collect();
            if ids.is_empty() {
                return Err(GraphError::QueryOutsideCover {
                    endpoint,
                    point: p.to_vec(),
                });
            }
            Ok(ids)
        };
        let start_sets = containing(&q.start, QueryEndpoint::Start)?;
        let goal_sets = containing(&q.goal, QueryEndpoint::Goal)?;

        let mut g = self.clone();
        let start_id = g.vertices.len();
        let goal_id = start_id + 1;
        g.vertices.push(Arc::new(ConvexSet::singleton(&q.start)?));
        g.vertices.push(Arc::new(ConvexSet::singleton(&q.goal)?));
        g.succ.push(start_sets.clone());
        g.succ.push(Vec::new());
        g.pred.push(Vec::new());
        g.pred.push(goal_sets.clone());
        for &s in &start_sets {
            g.pred[s].push(start_id);
        }
        for &t in &goal_sets {
            g.succ[t].push(goal_id);
        }
        g.edge_count += start_sets.len() + goal_sets.len();
        g.wiring = Some(QueryWiring { start_id, goal_id });
        Ok(g)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vertices including any wired query singletons.
    #[inline]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Number of vertices excluding query singletons.
    #[inline]
    pub fn base_len(&self) -> usize {
        match &self.wiring {
            Some(w) => w.start_id,
            None => self.vertices.len(),
        }
    }

    #[inline]
    pub fn vertex(&self, id: usize) -> &Arc<ConvexSet> {
        &self.vertices[id]
    }

    pub fn try_vertex(&self, id: usize) -> Result<&Arc<ConvexSet>, GraphError> {
        self.vertices.get(id).ok_or(GraphError::BadVertexId(id))
    }

    #[inline]
    pub fn successors(&self, id: usize) -> &[usize] {
        &self.succ[id]
    }

    #[inline]
    pub fn predecessors(&self, id: usize) -> &[usize] {
        &self.pred[id]
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn wiring(&self) -> Option<&QueryWiring> {
        self.wiring.as_ref()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.succ.get(u).map_or(false, |s| s.contains(&v))
    }

    /// Per-vertex (in-degree, out-degree).
    pub fn degree_stats(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .map(|i| (self.pred[i].len(), self.succ[i].len()))
            .collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().map(move |&v| (u, v)))
    }

    /// Plain-text edge list, one `u v` per line.
    pub fn export_edges<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(w, "{} {}", u, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxes_chain() -> Vec<ConvexSet> {
        vec![
            ConvexSet::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap(),
            ConvexSet::from_box(&[0.8, 0.0], &[1.8, 1.0]).unwrap(),
            ConvexSet::from_box(&[1.6, 0.0], &[2.6, 1.0]).unwrap(),
        ]
    }

    #[test]
    fn chain_has_four_directed_edges() {
        let g = GcsGraph::build(boxes_chain(), DEFAULT_EDGE_MARGIN).unwrap();
        assert_eq!(g.edge_count(), 4);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 0));
        assert!(g.has_edge(1, 2) && g.has_edge(2, 1));
        assert!(!g.has_edge(0, 2));
    }

    #[test]
    fn single_set_no_edges() {
        let g = GcsGraph::build(
            vec![ConvexSet::from_box(&[0.0], &[1.0]).unwrap()],
            DEFAULT_EDGE_MARGIN,
        )
        .unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            GcsGraph::build(Vec::new(), 0.0),
            Err(GraphError::EmptyInput)
        ));
    }

    #[test]
    fn wire_query_adds_expected_edges() {
        let g = GcsGraph::build(boxes_chain(), DEFAULT_EDGE_MARGIN).unwrap();
        // Start inside sets 0 and 1 (overlap region), goal inside set 2 only.
        let q = Query::point_to_point(vec![0.9, 0.5], vec![2.2, 0.5]);
        let wired = g.wire_query(&q).unwrap();
        assert_eq!(wired.len(), g.len() + 2);
        assert_eq!(wired.edge_count(), g.edge_count() + 3);
        let w = wired.wiring().unwrap();
        assert_eq!(wired.successors(w.start_id), &[0, 1]);
        assert!(wired.successors(w.goal_id).is_empty());
        assert_eq!(wired.predecessors(w.goal_id), &[2]);
        // Original untouched.
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn wire_query_same_point_path_exists() {
        let g = GcsGraph::build(boxes_chain(), DEFAULT_EDGE_MARGIN).unwrap();
        let q = Query::point_to_point(vec![0.2, 0.2], vec![0.2, 0.2]);
        let wired = g.wire_query(&q).unwrap();
        let w = wired.wiring().unwrap();
        assert_eq!(wired.successors(w.start_id), &[0]);
        assert!(wired.successors(0).contains(&w.goal_id));
    }

    #[test]
    fn wire_query_outside_cover() {
        let g = GcsGraph::build(boxes_chain(), DEFAULT_EDGE_MARGIN).unwrap();
        let q = Query::point_to_point(vec![5.0, 5.0], vec![0.5, 0.5]);
        match g.wire_query(&q) {
            Err(GraphError::QueryOutsideCover { endpoint, .. }) => {
                assert_eq!(endpoint, QueryEndpoint::Start)
            }
            other => panic!("expected QueryOutsideCover, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn wire_query_never_removes_edges() {
        let g = GcsGraph::build(boxes_chain(), DEFAULT_EDGE_MARGIN).unwrap();
        let q = Query::point_to_point(vec![0.5, 0.5], vec![2.0, 0.5]);
        let wired = g.wire_query(&q).unwrap();
        for (u, v) in g.edges() {
            assert!(wired.has_edge(u, v));
        }
    }
}
