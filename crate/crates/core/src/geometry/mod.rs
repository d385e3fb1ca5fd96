//! Bounded convex polytopes in R^d with membership, intersection, and
//! sampling primitives.
//!
//! Sets are stored in halfspace form `normal·x <= offset` with unit normals,
//! so tolerances everywhere are Euclidean distances. Every constructed set is
//! certified nonempty and bounded; the certificates (Chebyshev ball and
//! axis-aligned bounding box) are cached on the set because the graph
//! builder, the samplers, and the renderer all reuse them.

mod lp;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lp::{maximize, LpOutcome, LpStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("halfspace normal must be finite and nonzero")]
    BadHalfspace,
    #[error("polytope is empty")]
    EmptySet,
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("sets do not intersect")]
    EmptyIntersection,
    #[error("velocity bound must be strictly positive")]
    BadVelocityBound,
}

/// Closed halfspace `normal·x <= offset` with `||normal|| = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self, GeomError> {
        let nrm = norm(&normal);
        if !nrm.is_finite() || nrm <= 0.0 || !offset.is_finite() {
            return Err(GeomError::BadHalfspace);
        }
        Ok(Halfspace {
            normal: normal.iter().map(|v| v / nrm).collect(),
            offset: offset / nrm,
        })
    }

    /// Signed distance of `p` to the boundary; negative inside.
    #[inline]
    pub fn violation(&self, p: &[f64]) -> f64 {
        dot(&self.normal, p) - self.offset
    }
}

/// Bounded convex polytope in halfspace representation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvexSet {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    label: Option<String>,
    aabb_lo: Vec<f64>,
    aabb_hi: Vec<f64>,
    cheb_center: Vec<f64>,
    cheb_radius: f64,
}

impl ConvexSet {
    /// Build and certify a set from raw `(normal, offset)` pairs.
    ///
    /// Fails when any normal is degenerate, the intersection is empty, or the
    /// polytope is unbounded in some axis direction.
    pub fn new(
        dim: usize,
        halfspaces: Vec<(Vec<f64>, f64)>,
        label: Option<String>,
    ) -> Result<Self, GeomError> {
        if dim == 0 {
            return Err(GeomError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        let mut hs = Vec::with_capacity(halfspaces.len());
        for (n, o) in halfspaces {
            if n.len() != dim {
                return Err(GeomError::DimensionMismatch {
                    expected: dim,
                    got: n.len(),
                });
            }
            hs.push(Halfspace::new(n, o)?);
        }
        Self::from_halfspaces(dim, hs, label)
    }

    pub fn from_halfspaces(
        dim: usize,
        halfspaces: Vec<Halfspace>,
        label: Option<String>,
    ) -> Result<Self, GeomError> {
        let rows: Vec<Vec<f64>> = halfspaces.iter().map(|h| h.normal.clone()).collect();
        let rhs: Vec<f64> = halfspaces.iter().map(|h| h.offset).collect();

        // Support in the 2d axis directions: proves boundedness (or emptiness)
        // and yields the bounding box.
        let mut lo = vec![0.0; dim];
        let mut hi = vec![0.0; dim];
        for ax in 0..dim {
            let mut dir = vec![0.0; dim];
            dir[ax] = 1.0;
            let up = lp::maximize(&dir, &rows, &rhs);
            match up.status {
                LpStatus::Optimal => hi[ax] = up.objective,
                LpStatus::Infeasible => return Err(GeomError::EmptySet),
                LpStatus::Unbounded => return Err(GeomError::Unbounded),
            }
            dir[ax] = -1.0;
            let down = lp::maximize(&dir, &rows, &rhs);
            match down.status {
                LpStatus::Optimal => lo[ax] = -down.objective,
                LpStatus::Infeasible => return Err(GeomError::EmptySet),
                LpStatus::Unbounded => return Err(GeomError::Unbounded),
            }
        }

        let (center, radius) = chebyshev_lp(dim, &halfspaces).ok_or(GeomError::EmptySet)?;
        if radius < -lp::LP_EPS {
            return Err(GeomError::EmptySet);
        }
        Ok(ConvexSet {
            dim,
            halfspaces,
            label,
            aabb_lo: lo,
            aabb_hi: hi,
            cheb_center: center,
            cheb_radius: radius.max(0.0),
        })
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self, GeomError> {
        if lo.len() != hi.len() {
            return Err(GeomError::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        let d = lo.len();
        let mut hs = Vec::with_capacity(2 * d);
        for ax in 0..d {
            let mut n = vec![0.0; d];
            n[ax] = 1.0;
            hs.push((n.clone(), hi[ax]));
            n[ax] = -1.0;
            hs.push((n, -lo[ax]));
        }
        Self::new(d, hs, None)
    }

    /// Degenerate set holding exactly one point.
    pub fn singleton(p: &[f64]) -> Result<Self, GeomError> {
        Self::from_box(p, p)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn aabb(&self) -> (&[f64], &[f64]) {
        (&self.aabb_lo, &self.aabb_hi)
    }

    /// Deterministic interior point with the radius of the largest inscribed
    /// ball (zero for degenerate sets).
    pub fn chebyshev_center(&self) -> (&[f64], f64) {
        (&self.cheb_center, self.cheb_radius)
    }

    /// Membership within Euclidean tolerance `tol` of every facet.
    pub fn contains(&self, p: &[f64], tol: f64) -> Result<bool, GeomError> {
        if p.len() != self.dim {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        Ok(self.contains_unchecked(p, tol))
    }

    /// Membership without the dimension check; callers on hot paths hold the
    /// invariant themselves.
    #[inline]
    pub fn contains_unchecked(&self, p: &[f64], tol: f64) -> bool {
        debug_assert_eq!(p.len(), self.dim);
        self.halfspaces.iter().all(|h| h.violation(p) <= tol)
    }

    /// Largest facet violation of `p`; negative when strictly inside.
    pub fn max_violation(&self, p: &[f64]) -> f64 {
        self.halfspaces
            .iter()
            .map(|h| h.violation(p))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Support value `max {dir·x : x in set}`.
    pub fn support(&self, dir: &[f64]) -> f64 {
        let rows: Vec<Vec<f64>> = self.halfspaces.iter().map(|h| h.normal.clone()).collect();
        let rhs: Vec<f64> = self.halfspaces.iter().map(|h| h.offset).collect();
        lp::maximize(dir, &rows, &rhs).objective
    }

    /// Uniform-ish interior sample at least `margin` inside every facet,
    /// via rejection from the bounding box. Falls back to the Chebyshev
    /// center when the margin leaves too little volume.
    pub fn sample_interior<R: Rng>(&self, rng: &mut R, margin: f64, attempts: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        for _ in 0..attempts {
            for ax in 0..self.dim {
                p[ax] = rng.gen_range(self.aabb_lo[ax]..=self.aabb_hi[ax]);
            }
            if self.contains_unchecked(&p, -margin) {
                return p;
            }
        }
        self.cheb_center.clone()
    }

    /// Drop halfspaces implied by the others (LP per facet). Keeps the
    /// certificates intact.
    pub fn prune_redundant(&mut self) {
        let mut keep: Vec<Halfspace> = Vec::with_capacity(self.halfspaces.len());
        for i in 0..self.halfspaces.len() {
            let mut rows = Vec::new();
            let mut rhs = Vec::new();
            for (j, h) in self.halfspaces.iter().enumerate() {
                if i != j && !(j < i && !keep_contains(&keep, h)) {
                    rows.push(h.normal.clone());
                    rhs.push(h.offset);
                }
            }
            let h = &self.halfspaces[i];
            let out = lp::maximize(&h.normal, &rows, &rhs);
            let redundant =
                out.status == LpStatus::Optimal && out.objective <= h.offset + 1e-9;
            if !redundant {
                keep.push(h.clone());
            }
        }
        if keep.len() < self.halfspaces.len() && !keep.is_empty() {
            self.halfspaces = keep;
        }
    }
}

fn keep_contains(keep: &[Halfspace], h: &Halfspace) -> bool {
    keep.iter().any(|k| k == h)
}

fn chebyshev_lp(dim: usize, halfspaces: &[Halfspace]) -> Option<(Vec<f64>, f64)> {
    // Variables (x, r), maximize r subject to n·x + r <= o. Normals are unit,
    // so r is the true inscribed radius; r may come back negative for empty
    // sets, which the caller rejects.
    let mut rows = Vec::with_capacity(halfspaces.len());
    let mut rhs = Vec::with_capacity(halfspaces.len());
    for h in halfspaces {
        let mut row = h.normal.clone();
        row.push(1.0);
        rows.push(row);
        rhs.push(h.offset);
    }
    let mut c = vec![0.0; dim + 1];
    c[dim] = 1.0;
    let out = lp::maximize(&c, &rows, &rhs);
    match out.status {
        LpStatus::Optimal => {
            let r = out.x[dim];
            Some((out.x[..dim].to_vec(), r))
        }
        _ => None,
    }
}

/// True when the intersection of `a` and `b` contains a ball of radius
/// `margin`; `margin = 0` is closed-set intersection (facet contact counts).
pub fn intersects(a: &ConvexSet, b: &ConvexSet, margin: f64) -> Result<bool, GeomError> {
    if a.dim() != b.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    // Cheap reject on bounding boxes.
    for ax in 0..a.dim() {
        if a.aabb_lo[ax] > b.aabb_hi[ax] + 2.0 * margin + lp::LP_EPS
            || b.aabb_lo[ax] > a.aabb_hi[ax] + 2.0 * margin + lp::LP_EPS
        {
            return Ok(false);
        }
    }
    let mut hs: Vec<Halfspace> = a.halfspaces.clone();
    hs.extend(b.halfspaces.iter().cloned());
    // At margin zero, facet contact counts: allow the LP's own tolerance.
    // At positive margins, the margin is the tolerance; degenerate contact
    // must not pass.
    let slack = if margin == 0.0 { lp::LP_EPS } else { 0.0 };
    match chebyshev_lp(a.dim(), &hs) {
        Some((_, r)) => Ok(r >= margin - slack),
        None => Ok(false),
    }
}

/// Intersection polytope (concatenated halfspace lists, exact duplicates
/// dropped). Errors when the sets do not meet.
pub fn intersection(a: &ConvexSet, b: &ConvexSet) -> Result<ConvexSet, GeomError> {
    if a.dim() != b.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut hs: Vec<Halfspace> = a.halfspaces.clone();
    for h in &b.halfspaces {
        if !hs.iter().any(|g| g == h) {
            hs.push(h.clone());
        }
    }
    ConvexSet::from_halfspaces(a.dim(), hs, None).map_err(|e| match e {
        GeomError::EmptySet => GeomError::EmptyIntersection,
        other => other,
    })
}

/// Chebyshev center and radius of `a ∩ b` without materializing the
/// intersection set; `None` when the sets do not meet.
pub fn chebyshev_intersection(a: &ConvexSet, b: &ConvexSet) -> Option<(Vec<f64>, f64)> {
    if a.dim() != b.dim() {
        return None;
    }
    let mut hs: Vec<Halfspace> = a.halfspaces.clone();
    hs.extend(b.halfspaces.iter().cloned());
    match chebyshev_lp(a.dim(), &hs) {
        Some((c, r)) if r >= -lp::LP_EPS => Some((c, r.max(0.0))),
        _ => None,
    }
}

/// Axis-aligned velocity box `[-vmax, +vmax]` per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocitySet {
    vmax: Vec<f64>,
}

impl VelocitySet {
    pub fn uniform(dim: usize, vmax: f64) -> Result<Self, GeomError> {
        Self::per_axis(vec![vmax; dim])
    }

    pub fn per_axis(vmax: Vec<f64>) -> Result<Self, GeomError> {
        if vmax.is_empty() || vmax.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(GeomError::BadVelocityBound);
        }
        Ok(VelocitySet { vmax })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.vmax.len()
    }

    #[inline]
    pub fn vmax(&self) -> &[f64] {
        &self.vmax
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        v.len() == self.vmax.len()
            && v.iter()
                .zip(&self.vmax)
                .all(|(vi, m)| vi.abs() <= m + tol)
    }

    /// Minimum time to move by `delta` under the per-axis bounds; the exact
    /// lower bound for any trajectory between two points.
    pub fn min_traversal_time(&self, delta: &[f64]) -> f64 {
        delta
            .iter()
            .zip(&self.vmax)
            .map(|(d, m)| d.abs() / m)
            .fold(0.0, f64::max)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm(&sub(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn unit_box2() -> ConvexSet {
        ConvexSet::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn contains_box_points() {
        let b = unit_box2();
        assert!(b.contains(&[0.5, 0.5], 0.0).unwrap());
        assert!(!b.contains(&[1.5, 0.5], 0.0).unwrap());
    }

    #[test]
    fn contains_simplex() {
        let s = ConvexSet::new(
            2,
            vec![
                (vec![-1.0, 0.0], 0.0),
                (vec![0.0, -1.0], 0.0),
                (vec![1.0, 1.0], 1.0),
            ],
            None,
        )
        .unwrap();
        assert!(s.contains(&[0.3, 0.3], 0.0).unwrap());
        assert!(!s.contains(&[0.6, 0.6], 0.0).unwrap());
    }

    #[test]
    fn contains_dimension_mismatch() {
        let b = unit_box2();
        assert!(matches!(
            b.contains(&[0.5], 0.0),
            Err(GeomError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn intersects_overlapping_and_disjoint() {
        let a = unit_box2();
        let b = ConvexSet::from_box(&[0.5, 0.5], &[1.5, 1.5]).unwrap();
        let c = ConvexSet::from_box(&[2.0, 2.0], &[3.0, 3.0]).unwrap();
        assert!(intersects(&a, &b, 0.0).unwrap());
        assert!(!intersects(&a, &c, 0.0).unwrap());
    }

    #[test]
    fn intersects_facet_touching_margin() {
        let a = ConvexSet::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let b = ConvexSet::from_box(&[1.0, 0.0], &[2.0, 1.0]).unwrap();
        assert!(intersects(&a, &b, 0.0).unwrap());
        assert!(!intersects(&a, &b, 0.01).unwrap());
    }

    #[test]
    fn intersection_of_boxes() {
        let a = ConvexSet::from_box(&[0.0, 0.0], &[2.0, 2.0]).unwrap();
        let b = ConvexSet::from_box(&[1.0, 1.0], &[3.0, 3.0]).unwrap();
        let i = intersection(&a, &b).unwrap();
        assert!(i.contains(&[1.5, 1.5], 0.0).unwrap());
        assert!(!i.contains(&[0.5, 0.5], 1e-9).unwrap());
        let (lo, hi) = i.aabb();
        assert!((lo[0] - 1.0).abs() < 1e-9 && (hi[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn intersection_idempotent() {
        let a = unit_box2();
        let i = intersection(&a, &a).unwrap();
        assert_eq!(i.halfspaces().len(), a.halfspaces().len());
    }

    #[test]
    fn intersection_disjoint_errors() {
        let a = unit_box2();
        let c = ConvexSet::from_box(&[2.0, 2.0], &[3.0, 3.0]).unwrap();
        assert!(matches!(
            intersection(&a, &c),
            Err(GeomError::EmptyIntersection)
        ));
    }

    #[test]
    fn chebyshev_symmetric_box() {
        let b = ConvexSet::from_box(&[0.0, 0.0], &[2.0, 2.0]).unwrap();
        let (c, r) = b.chebyshev_center();
        assert!((r - 1.0).abs() < 1e-8);
        assert!((c[0] - 1.0).abs() < 1e-8 && (c[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn chebyshev_ties_allowed() {
        let b = ConvexSet::from_box(&[0.0, 0.0], &[4.0, 2.0]).unwrap();
        let (c, r) = b.chebyshev_center();
        assert!((r - 1.0).abs() < 1e-8);
        assert!((c[1] - 1.0).abs() < 1e-8);
        assert!(c[0] >= 1.0 - 1e-8 && c[0] <= 3.0 + 1e-8);
    }

    #[test]
    fn empty_set_rejected() {
        let r = ConvexSet::new(
            1,
            vec![(vec![-1.0], 0.0), (vec![1.0], -1.0)],
            None,
        );
        assert!(matches!(r, Err(GeomError::EmptySet)));
    }

    #[test]
    fn unbounded_rejected() {
        let r = ConvexSet::new(2, vec![(vec![1.0, 0.0], 1.0)], None);
        assert!(matches!(r, Err(GeomError::Unbounded)));
    }

    #[test]
    fn singleton_has_zero_radius() {
        let s = ConvexSet::singleton(&[0.3, -0.7]).unwrap();
        let (c, r) = s.chebyshev_center();
        assert!(r.abs() < 1e-8);
        assert!((c[0] - 0.3).abs() < 1e-8 && (c[1] + 0.7).abs() < 1e-8);
        assert!(s.contains(&[0.3, -0.7], 1e-9).unwrap());
    }

    #[test]
    fn sample_interior_respects_margin() {
        let b = unit_box2();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p = b.sample_interior(&mut rng, 1e-3, 64);
            assert!(b.contains_unchecked(&p, -1e-3 + 1e-12));
        }
    }

    #[test]
    fn velocity_set_traversal_time() {
        let v = VelocitySet::uniform(2, 2.0).unwrap();
        assert!((v.min_traversal_time(&[4.0, 2.0]) - 2.0).abs() < 1e-12);
        assert!(v.contains(&[1.5, -2.0], 0.0));
        assert!(!v.contains(&[2.5, 0.0], 0.0));
    }

    proptest! {
        #[test]
        fn intersection_membership_matches_conjunction(
            ax in -2.0f64..2.0, ay in -2.0f64..2.0,
            bx in -2.0f64..2.0, by in -2.0f64..2.0,
            w in 0.5f64..2.0, h in 0.5f64..2.0,
            pts in proptest::collection::vec((-3.0f64..5.0, -3.0f64..5.0), 50)
        ) {
            let a = ConvexSet::from_box(&[ax, ay], &[ax + w, ay + h]).unwrap();
            let b = ConvexSet::from_box(&[bx, by], &[bx + h, by + w]).unwrap();
            prop_assume!(intersects(&a, &b, 0.0).unwrap());
            let i = intersection(&a, &b).unwrap();
            for (px, py) in pts {
                let p = [px, py];
                let both = a.contains_unchecked(&p, 1e-9) && b.contains_unchecked(&p, 1e-9);
                prop_assert_eq!(i.contains_unchecked(&p, 1e-9), both);
            }
        }

        #[test]
        fn intersects_symmetric(
            ax in -2.0f64..2.0, ay in -2.0f64..2.0,
            bx in -2.0f64..2.0, by in -2.0f64..2.0,
            m in 0.0f64..0.2
        ) {
            let a = ConvexSet::from_box(&[ax, ay], &[ax + 1.0, ay + 1.0]).unwrap();
            let b = ConvexSet::from_box(&[bx, by], &[bx + 1.3, by + 0.8]).unwrap();
            prop_assert_eq!(
                intersects(&a, &b, m).unwrap(),
                intersects(&b, &a, m).unwrap()
            );
        }

        #[test]
        fn chebyshev_center_is_member(
            lo0 in -3.0f64..0.0, lo1 in -3.0f64..0.0,
            w in 0.2f64..3.0, h in 0.2f64..3.0
        ) {
            let b = ConvexSet::from_box(&[lo0, lo1], &[lo0 + w, lo1 + h]).unwrap();
            let (c, _) = b.chebyshev_center();
            prop_assert!(b.contains_unchecked(c, 0.0));
        }
    }
}
