//! Trajectory validity checks: containment, velocity, continuity, and dense
//! sampling as defense-in-depth on top of the control-point conditions.

use serde::{Deserialize, Serialize};

use crate::geometry::{dist, norm, sub, VelocitySet};
use crate::graph::GcsGraph;

use super::bezier::Trajectory;

/// Dense samples per segment checked in addition to control points.
const SAMPLES_PER_SEGMENT: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    Containment {
        segment: usize,
        control_point: usize,
        amount: f64,
    },
    SampleContainment {
        segment: usize,
        sample: usize,
        amount: f64,
    },
    Velocity {
        segment: usize,
        edge: usize,
        amount: f64,
    },
    Continuity {
        junction: usize,
        derivative_order: u8,
        amount: f64,
    },
    BadSetId {
        segment: usize,
        set_id: usize,
    },
    NonPositiveDuration {
        segment: usize,
        duration: f64,
    },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check every segment against its set, the velocity set, and the trajectory
/// continuity order. `tol` is a Euclidean tolerance.
pub fn validate(traj: &Trajectory, g: &GcsGraph, vset: &VelocitySet, tol: f64) -> ValidityReport {
    let mut report = ValidityReport::default();
    let vmax = vset.vmax();
    for (k, seg) in traj.segments.iter().enumerate() {
        if seg.set_id >= g.len() {
            report.violations.push(Violation::BadSetId {
                segment: k,
                set_id: seg.set_id,
            });
            continue;
        }
        if !(seg.duration > 0.0) {
            report.violations.push(Violation::NonPositiveDuration {
                segment: k,
                duration: seg.duration,
            });
        }
        let set = g.vertex(seg.set_id);
        for (i, c) in seg.control.iter().enumerate() {
            let v = set.max_violation(c);
            if v > tol {
                report.violations.push(Violation::Containment {
                    segment: k,
                    control_point: i,
                    amount: v,
                });
            }
        }
        let r = seg.order() as f64;
        for (i, w) in seg.control.windows(2).enumerate() {
            let mut worst = 0.0f64;
            for ax in 0..w[0].len() {
                let excess = r * (w[1][ax] - w[0][ax]).abs() - seg.duration * vmax[ax];
                worst = worst.max(excess);
            }
            if worst > tol * vmax.iter().cloned().fold(1.0, f64::max) {
                report.violations.push(Violation::Velocity {
                    segment: k,
                    edge: i,
                    amount: worst,
                });
            }
        }
        // Dense samples; by convexity these pass whenever the control points
        // do, so any hit here flags numerical trouble upstream.
        for s in 0..=SAMPLES_PER_SEGMENT {
            let p = seg.eval(s as f64 / SAMPLES_PER_SEGMENT as f64);
            let v = set.max_violation(&p);
            if v > tol {
                report.violations.push(Violation::SampleContainment {
                    segment: k,
                    sample: s,
                    amount: v,
                });
            }
        }
    }
    for (j, gap) in traj.junction_gaps().into_iter().enumerate() {
        if gap > tol {
            report.violations.push(Violation::Continuity {
                junction: j,
                derivative_order: 0,
                amount: gap,
            });
        }
    }
    if traj.continuity_order >= 1 {
        let vscale = vmax.iter().cloned().fold(1.0, f64::max);
        for (j, w) in traj.segments.windows(2).enumerate() {
            let gap = norm(&sub(&w[0].velocity(1.0), &w[1].velocity(0.0)));
            if gap > tol * (1.0 + vscale) {
                report.violations.push(Violation::Continuity {
                    junction: j,
                    derivative_order: 1,
                    amount: gap,
                });
            }
        }
    }
    report
}

/// Endpoint agreement with a query, for planner results.
pub fn endpoints_match(traj: &Trajectory, start: &[f64], goal: &[f64], tol: f64) -> bool {
    match (traj.start(), traj.end()) {
        (Some(s), Some(e)) => dist(s, start) <= tol && dist(e, goal) <= tol,
        _ => false,
    }
}
