//! Deterministic SVG rendering of 2D worlds: sets as translucent polygons,
//! the trajectory as a sampled polyline, optionally the lower-bound graph.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use ixg_core::geometry::ConvexSet;
use ixg_core::lbg::{EdgeKind, LowerBoundGraph};
use ixg_core::trajopt::Trajectory;

#[derive(Debug, Error)]
pub enum SvgError {
    #[error("svg rendering supports dimension 2, got {0}")]
    UnsupportedDimension(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

const TRAJ_SAMPLES: usize = 256;
const LBG_EDGE_SAMPLES: usize = 16;

pub fn emit_svg<P: AsRef<Path>>(
    sets: &[ConvexSet],
    trajectory: Option<&Trajectory>,
    lbg: Option<&LowerBoundGraph>,
    path: P,
) -> Result<(), SvgError> {
    let text = render_svg(sets, trajectory, lbg)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn render_svg(
    sets: &[ConvexSet],
    trajectory: Option<&Trajectory>,
    lbg: Option<&LowerBoundGraph>,
) -> Result<String, SvgError> {
    for s in sets {
        if s.dim() != 2 {
            return Err(SvgError::UnsupportedDimension(s.dim()));
        }
    }
    // World bounds with a 5% pad.
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for s in sets {
        let (slo, shi) = s.aabb();
        for ax in 0..2 {
            lo[ax] = lo[ax].min(slo[ax]);
            hi[ax] = hi[ax].max(shi[ax]);
        }
    }
    if !lo[0].is_finite() {
        lo = [0.0; 2];
        hi = [1.0; 2];
    }
    let pad = 0.05 * ((hi[0] - lo[0]).max(hi[1] - lo[1])).max(1e-6);
    let (x0, y0) = (lo[0] - pad, lo[1] - pad);
    let (w, h) = (hi[0] - lo[0] + 2.0 * pad, hi[1] - lo[1] + 2.0 * pad);
    let scale = 800.0 / w.max(h);
    let to_px = |p: &[f64]| -> (f64, f64) {
        ((p[0] - x0) * scale, (y0 + h - p[1]) * scale) // flip y for SVG
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {:.4} {:.4}">"#,
        w * scale,
        h * scale
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for s in sets {
        let verts = polygon_vertices(s);
        if verts.len() < 3 {
            continue;
        }
        let mut pts = String::new();
        for v in &verts {
            let (px, py) = to_px(v);
            let _ = write!(pts, "{px:.4},{py:.4} ");
        }
        let _ = writeln!(
            out,
            r##"<polygon points="{}" fill="#4a90d9" fill-opacity="0.30" stroke="#2c5a88" stroke-width="0.8"/>"##,
            pts.trim_end()
        );
    }

    if let Some(lbg) = lbg {
        for (from, v) in lbg.vertices().iter().enumerate() {
            for e in lbg.edges_from(from) {
                match e.kind {
                    EdgeKind::Triplet => {
                        // Draw the cached curve when available, else a line.
                        let a = &v.point;
                        let b = &lbg.vertices()[e.to].point;
                        let mut pts = String::new();
                        let curve = v.interface.and_then(|(p, c)| {
                            lbg.vertices()[e.to]
                                .interface
                                .and_then(|(_, s)| lbg.lookup_triplet(p, c, s))
                        });
                        match curve {
                            Some(t) => {
                                for (_, sample) in t.sample(LBG_EDGE_SAMPLES) {
                                    let (px, py) = to_px(&sample);
                                    let _ = write!(pts, "{px:.4},{py:.4} ");
                                }
                            }
                            None => {
                                let (px, py) = to_px(a);
                                let _ = write!(pts, "{px:.4},{py:.4} ");
                                let (px, py) = to_px(b);
                                let _ = write!(pts, "{px:.4},{py:.4} ");
                            }
                        }
                        let _ = writeln!(
                            out,
                            r##"<polyline points="{}" fill="none" stroke="#1f5fbf" stroke-width="1.0"/>"##,
                            pts.trim_end()
                        );
                    }
                    EdgeKind::Interface => {
                        let (ax, ay) = to_px(&v.point);
                        let (bx, by) = to_px(&lbg.vertices()[e.to].point);
                        let _ = writeln!(
                            out,
                            r##"<line x1="{ax:.4}" y1="{ay:.4}" x2="{bx:.4}" y2="{by:.4}" stroke="#d04040" stroke-width="0.6" stroke-dasharray="2,2"/>"##
                        );
                    }
                    EdgeKind::Query => {}
                }
            }
        }
        for v in lbg.vertices() {
            let (px, py) = to_px(&v.point);
            let _ = writeln!(
                out,
                r##"<circle cx="{px:.4}" cy="{py:.4}" r="2.0" fill="#10356b"/>"##
            );
        }
    }

    if let Some(traj) = trajectory {
        if !traj.is_empty() {
            let mut pts = String::new();
            for (_, p) in traj.sample(TRAJ_SAMPLES) {
                let (px, py) = to_px(&p);
                let _ = write!(pts, "{px:.4},{py:.4} ");
            }
            let _ = writeln!(
                out,
                r##"<polyline points="{}" fill="none" stroke="#e2571c" stroke-width="2.2"/>"##,
                pts.trim_end()
            );
            let (sx, sy) = to_px(traj.start().unwrap());
            let (gx, gy) = to_px(traj.end().unwrap());
            let _ = writeln!(out, r##"<circle cx="{sx:.4}" cy="{sy:.4}" r="4" fill="#b01818"/>"##);
            let _ = writeln!(out, r##"<circle cx="{gx:.4}" cy="{gy:.4}" r="4" fill="#1a7a2a"/>"##);
        }
    }

    let _ = writeln!(out, "</svg>");
    Ok(out)
}

/// Vertices of a bounded 2D polytope: pairwise facet-line intersections kept
/// when feasible, deduplicated, and sorted around the centroid.
fn polygon_vertices(set: &ConvexSet) -> Vec<Vec<f64>> {
    let hs = set.halfspaces();
    let mut verts: Vec<Vec<f64>> = Vec::new();
    for i in 0..hs.len() {
        for j in (i + 1)..hs.len() {
            let (a, b) = (&hs[i], &hs[j]);
            let det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (a.offset * b.normal[1] - b.offset * a.normal[1]) / det;
            let y = (a.normal[0] * b.offset - b.normal[0] * a.offset) / det;
            let p = vec![x, y];
            if set.contains_unchecked(&p, 1e-7)
                && !verts.iter().any(|v| ixg_core::geometry::dist(v, &p) < 1e-9)
            {
                verts.push(p);
            }
        }
    }
    if verts.len() < 3 {
        return verts;
    }
    let cx = verts.iter().map(|v| v[0]).sum::<f64>() / verts.len() as f64;
    let cy = verts.iter().map(|v| v[1]).sum::<f64>() / verts.len() as f64;
    verts.sort_by(|p, q| {
        let ap = (p[1] - cy).atan2(p[0] - cx);
        let aq = (q[1] - cy).atan2(q[0] - cx);
        ap.total_cmp(&aq)
    });
    verts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sets_only_image() {
        let sets = vec![ConvexSet::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap()];
        let svg = render_svg(&sets, None, None).unwrap();
        assert!(svg.contains("<polygon"));
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn trajectory_polyline_present() {
        let sets = vec![ConvexSet::from_box(&[0.0, 0.0], &[4.0, 4.0]).unwrap()];
        let traj = Trajectory::new(
            vec![ixg_core::trajopt::TrajectorySegment {
                set_id: 0,
                control: vec![vec![1.0, 1.0], vec![3.0, 1.0]],
                duration: 2.0,
            }],
            0,
        );
        let svg = render_svg(&sets, Some(&traj), None).unwrap();
        assert!(svg.contains("<polyline"));
    }

    #[test]
    fn deterministic_bytes() {
        let sets = ixg_core::worlds::generate_maze(4, 4, 9);
        let a = render_svg(&sets, None, None).unwrap();
        let b = render_svg(&sets, None, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_non_2d() {
        let sets = vec![ConvexSet::from_box(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap()];
        assert!(matches!(
            render_svg(&sets, None, None),
            Err(SvgError::UnsupportedDimension(3))
        ));
    }
}
