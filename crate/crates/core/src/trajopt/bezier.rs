//! Piecewise Bezier trajectories.
//!
//! Each segment is a Bezier curve of order `r` in a normalized parameter
//! `s in [0,1]` with its own duration; containment and velocity constraints
//! elsewhere act on control points, which suffices by the convex-hull
//! property of the Bernstein basis.

use serde::{Deserialize, Serialize};

use crate::geometry::{dist, sub};

/// One Bezier piece: `r+1` control points, a duration, and the id of the
/// graph vertex whose set it must inhabit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySegment {
    pub set_id: usize,
    pub control: Vec<Vec<f64>>,
    pub duration: f64,
}

impl TrajectorySegment {
    pub fn order(&self) -> usize {
        self.control.len().saturating_sub(1)
    }

    pub fn dim(&self) -> usize {
        self.control.first().map_or(0, Vec::len)
    }

    pub fn start(&self) -> &[f64] {
        &self.control[0]
    }

    pub fn end(&self) -> &[f64] {
        self.control.last().expect("segment has control points")
    }

    /// De Casteljau evaluation at normalized parameter `s`; the endpoints are
    /// returned exactly.
    pub fn eval(&self, s: f64) -> Vec<f64> {
        if s <= 0.0 {
            return self.control[0].clone();
        }
        if s >= 1.0 {
            return self.end().to_vec();
        }
        let mut pts = self.control.clone();
        let n = pts.len();
        for level in (1..n).rev() {
            for i in 0..level {
                for ax in 0..pts[i].len() {
                    pts[i][ax] = (1.0 - s) * pts[i][ax] + s * pts[i + 1][ax];
                }
            }
        }
        pts.truncate(1);
        pts.pop().unwrap()
    }

    /// Control points of the time-domain derivative: `r (c_{i+1} - c_i) / T`.
    pub fn velocity_control(&self) -> Vec<Vec<f64>> {
        let r = self.order() as f64;
        self.control
            .windows(2)
            .map(|w| {
                w[1].iter()
                    .zip(&w[0])
                    .map(|(b, a)| r * (b - a) / self.duration)
                    .collect()
            })
            .collect()
    }

    /// Time-domain velocity at normalized parameter `s`.
    pub fn velocity(&self, s: f64) -> Vec<f64> {
        let dctrl = self.velocity_control();
        if dctrl.is_empty() {
            return vec![0.0; self.dim()];
        }
        let seg = TrajectorySegment {
            set_id: self.set_id,
            control: dctrl,
            duration: 1.0,
        };
        seg.eval(s)
    }

    /// Control-polygon length: a convex upper bound on the arc length, exact
    /// for straight segments.
    pub fn polygon_length(&self) -> f64 {
        self.control.windows(2).map(|w| dist(&w[1], &w[0])).sum()
    }
}

/// Ordered Bezier segments with the continuity order they were solved for.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub segments: Vec<TrajectorySegment>,
    pub continuity_order: u8,
}

impl Trajectory {
    pub fn new(segments: Vec<TrajectorySegment>, continuity_order: u8) -> Self {
        Trajectory {
            segments,
            continuity_order,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.segments.first().map_or(0, TrajectorySegment::dim)
    }

    pub fn start(&self) -> Option<&[f64]> {
        self.segments.first().map(|s| s.start())
    }

    pub fn end(&self) -> Option<&[f64]> {
        self.segments.last().map(|s| s.end())
    }

    pub fn set_ids(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.set_id).collect()
    }

    /// Sum of control-polygon lengths over all segments.
    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.polygon_length()).sum()
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Position at global time `t in [0, total_time]`, clamped outside.
    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        if self.segments.is_empty() {
            return None;
        }
        let mut rem = t;
        for seg in &self.segments {
            if rem <= seg.duration {
                return Some(seg.eval((rem / seg.duration).clamp(0.0, 1.0)));
            }
            rem -= seg.duration;
        }
        self.end().map(<[f64]>::to_vec)
    }

    /// `n >= 2` uniformly spaced `(time, point)` samples; the first and last
    /// entries are the exact endpoints.
    pub fn sample(&self, n: usize) -> Vec<(f64, Vec<f64>)> {
        assert!(n >= 2, "need at least the two endpoints");
        let total = self.total_time();
        let mut out = Vec::with_capacity(n);
        out.push((0.0, self.start().map(<[f64]>::to_vec).unwrap_or_default()));
        for i in 1..n - 1 {
            let t = total * i as f64 / (n - 1) as f64;
            out.push((t, self.eval(t).unwrap_or_default()));
        }
        out.push((total, self.end().map(<[f64]>::to_vec).unwrap_or_default()));
        out
    }

    /// This trajectory followed by `tail` (used when assembling warm starts).
    pub fn concat(&self, tail: &Trajectory) -> Trajectory {
        let mut segments = self.segments.clone();
        segments.extend(tail.segments.iter().cloned());
        Trajectory {
            segments,
            continuity_order: self.continuity_order.min(tail.continuity_order),
        }
    }

    /// Junction mismatches `|end_k - start_{k+1}|`, the C0 defect per joint.
    pub fn junction_gaps(&self) -> Vec<f64> {
        self.segments
            .windows(2)
            .map(|w| dist(w[0].end(), w[1].start()))
            .collect()
    }

    /// Time-domain velocity mismatch per joint, the C1 defect.
    pub fn junction_velocity_gaps(&self) -> Vec<f64> {
        self.segments
            .windows(2)
            .map(|w| {
                let vout = w[0].velocity(1.0);
                let vin = w[1].velocity(0.0);
                crate::geometry::norm(&sub(&vout, &vin))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_segment() -> TrajectorySegment {
        TrajectorySegment {
            set_id: 0,
            control: vec![vec![0.0, 0.0], vec![2.0, 0.0]],
            duration: 2.0,
        }
    }

    #[test]
    fn sample_two_points_are_endpoints() {
        let t = Trajectory::new(vec![line_segment()], 0);
        let s = t.sample(2);
        assert_eq!(s[0].1, vec![0.0, 0.0]);
        assert_eq!(s[1].1, vec![2.0, 0.0]);
    }

    #[test]
    fn linear_midpoint_at_midtime() {
        let t = Trajectory::new(vec![line_segment()], 0);
        let s = t.sample(3);
        assert!((s[1].0 - 1.0).abs() < 1e-12);
        assert!((s[1].1[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_de_casteljau_collinear() {
        let seg = TrajectorySegment {
            set_id: 0,
            control: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]],
            duration: 1.0,
        };
        let p = seg.eval(0.5);
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
    }

    #[test]
    fn polygon_length_and_time() {
        let t = Trajectory::new(vec![line_segment(), line_segment()], 0);
        assert!((t.length() - 4.0).abs() < 1e-12);
        assert!((t.total_time() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn velocity_of_straight_segment() {
        let seg = line_segment();
        let v = seg.velocity(0.3);
        assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
    }
}
