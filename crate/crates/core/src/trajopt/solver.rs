//! Embedded operator-splitting solver for sequence programs.
//!
//! The program is convex: a sum of Euclidean norms of control-point
//! differences plus a linear duration term, over a polyhedron (containment,
//! box-velocity, continuity, and boundary rows). ADMM splits it as
//! `min f(x) + g(Mx)` where `g` carries the norm groups and the constraint
//! indicators; the x-update is a single linear solve whose matrix
//! `sigma I + rho M'M` is banded in the segment-major variable order (plus
//! one dense "arrow" column when all segments share a duration), so each
//! iteration costs O(nnz + n * bandwidth).

use serde::{Deserialize, Serialize};

use crate::geometry::{self, Halfspace};

use super::bezier::{Trajectory, TrajectorySegment};
use super::{Boundary, InfeasibleClass, SeqProgram, SolveOutcome, TrajOptError, MIN_DURATION};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverSettings {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    pub rho: f64,
    /// Over-relaxation factor.
    pub alpha: f64,
    pub adaptive_rho: bool,
    /// Consecutive no-progress iterations above `stall_threshold` before the
    /// program is declared infeasible.
    pub stall_iters: usize,
    pub stall_threshold: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            eps_abs: 1e-9,
            eps_rel: 1e-7,
            max_iter: 20_000,
            rho: 1.0,
            alpha: 1.6,
            adaptive_rho: true,
            stall_iters: 500,
            stall_threshold: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolveInfo {
    pub iterations: usize,
    pub vars: usize,
    pub rows: usize,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RowKind {
    Norm,
    Ineq,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    Objective,
    Containment,
    Velocity,
    Duration,
    Continuity,
    BoundaryPoint,
    BoundaryVelocity,
}

impl Family {
    fn infeasible_class(self) -> InfeasibleClass {
        match self {
            Family::Containment | Family::Objective => InfeasibleClass::Containment,
            Family::Velocity => InfeasibleClass::Velocity,
            Family::Duration => InfeasibleClass::Duration,
            Family::Continuity => InfeasibleClass::Continuity,
            Family::BoundaryPoint => InfeasibleClass::BoundaryPoint,
            Family::BoundaryVelocity => InfeasibleClass::BoundaryVelocity,
        }
    }
}

/// Assembled conic data in CSR form.
struct Model {
    n: usize,
    m: usize,
    dim: usize,
    segs: usize,
    order: usize,
    shared_tau: bool,
    rowptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
    rhs: Vec<f64>,
    kind: Vec<RowKind>,
    family: Vec<Family>,
    norm_groups: usize,
    kappa: f64,
    q: Vec<f64>,
    x0: Vec<f64>,
}

impl Model {
    #[inline]
    fn block(&self) -> usize {
        (self.order + 1) * self.dim + if self.shared_tau { 0 } else { 1 }
    }

    #[inline]
    fn cp(&self, k: usize, i: usize, ax: usize) -> usize {
        k * self.block() + i * self.dim + ax
    }

    #[inline]
    fn dur(&self, k: usize) -> usize {
        if self.shared_tau {
            self.segs * self.block()
        } else {
            k * self.block() + (self.order + 1) * self.dim
        }
    }

    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for r in 0..self.m {
            let mut acc = 0.0;
            for idx in self.rowptr[r]..self.rowptr[r + 1] {
                acc += self.val[idx] * x[self.col[idx]];
            }
            out[r] = acc;
        }
    }

    fn mul_t(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for r in 0..self.m {
            let vr = v[r];
            if vr != 0.0 {
                for idx in self.rowptr[r]..self.rowptr[r + 1] {
                    out[self.col[idx]] += self.val[idx] * vr;
                }
            }
        }
    }
}

struct RowBuilder {
    entries: Vec<(usize, f64)>,
}

impl RowBuilder {
    fn new() -> Self {
        RowBuilder {
            entries: Vec::with_capacity(8),
        }
    }
    fn push(&mut self, col: usize, val: f64) {
        if val != 0.0 {
            self.entries.push((col, val));
        }
    }
}

fn assemble(prog: &SeqProgram) -> Model {
    let d = prog.dim();
    let k_segs = prog.segments();
    let r = prog.order;
    let shared_tau = prog.continuity >= 1;
    let scale = prog.weights.a + prog.weights.b;
    let a_n = prog.weights.a / scale;
    let b_n = prog.weights.b / scale;

    let mut model = Model {
        n: 0,
        m: 0,
        dim: d,
        segs: k_segs,
        order: r,
        shared_tau,
        rowptr: vec![0],
        col: Vec::new(),
        val: Vec::new(),
        rhs: Vec::new(),
        kind: Vec::new(),
        family: Vec::new(),
        norm_groups: 0,
        kappa: a_n,
        q: Vec::new(),
        x0: Vec::new(),
    };
    model.n = k_segs * model.block() + if shared_tau { 1 } else { 0 };
    model.q = vec![0.0; model.n];
    if shared_tau {
        let col = model.dur(0);
        model.q[col] = b_n * k_segs as f64;
    } else {
        for k in 0..k_segs {
            let col = model.dur(k);
            model.q[col] = b_n;
        }
    }

    fn push_row(model: &mut Model, rb: RowBuilder, kind: RowKind, rhs: f64, fam: Family) {
        for (c, v) in rb.entries {
            model.col.push(c);
            model.val.push(v);
        }
        model.rowptr.push(model.col.len());
        model.rhs.push(rhs);
        model.kind.push(kind);
        model.family.push(fam);
        model.m += 1;
    }

    // Norm groups first: d contiguous rows per control-polygon edge.
    if a_n > 0.0 {
        for k in 0..k_segs {
            for i in 0..r {
                for ax in 0..d {
                    let mut rb = RowBuilder::new();
                    rb.push(model.cp(k, i + 1, ax), 1.0);
                    rb.push(model.cp(k, i, ax), -1.0);
                    push_row(&mut model, rb, RowKind::Norm, 0.0, Family::Objective);
                }
                model.norm_groups += 1;
            }
        }
    }

    // Containment of every control point in its segment's set.
    for (k, set) in prog.sets.iter().enumerate() {
        for i in 0..=r {
            for h in set.halfspaces() {
                let mut rb = RowBuilder::new();
                for ax in 0..d {
                    rb.push(model.cp(k, i, ax), h.normal[ax]);
                }
                push_row(&mut model, rb, RowKind::Ineq, h.offset, Family::Containment);
            }
        }
    }
    // Extra boundary halfspaces (interface-restricted endpoints).
    fn boundary_rows(model: &mut Model, hs: &[Halfspace], k: usize, i: usize, d: usize) {
        for h in hs {
            let mut rb = RowBuilder::new();
            for ax in 0..d {
                rb.push(model.cp(k, i, ax), h.normal[ax]);
            }
            push_row(model, rb, RowKind::Ineq, h.offset, Family::BoundaryPoint);
        }
    }
    if let Boundary::InSet(hs) = &prog.start {
        boundary_rows(&mut model, hs, 0, 0, d);
    }
    if let Boundary::InSet(hs) = &prog.goal {
        boundary_rows(&mut model, hs, k_segs - 1, r, d);
    }

    // Velocity: r * |c_{i+1} - c_i| <= T_k * vmax per axis (two rows each).
    let vmax = prog.vset.vmax();
    for k in 0..k_segs {
        for i in 0..r {
            for ax in 0..d {
                for sign in [1.0f64, -1.0] {
                    let mut rb = RowBuilder::new();
                    rb.push(model.cp(k, i + 1, ax), sign * r as f64);
                    rb.push(model.cp(k, i, ax), -sign * r as f64);
                    rb.push(model.dur(k), -vmax[ax]);
                    push_row(&mut model, rb, RowKind::Ineq, 0.0, Family::Velocity);
                }
            }
        }
    }

    // Duration floor.
    let n_dur = if shared_tau { 1 } else { k_segs };
    for k in 0..n_dur {
        let mut rb = RowBuilder::new();
        rb.push(model.dur(k), -1.0);
        push_row(&mut model, rb, RowKind::Ineq, -MIN_DURATION, Family::Duration);
    }

    // C0 junctions, and the shared-duration C1 rows.
    for k in 0..k_segs.saturating_sub(1) {
        for ax in 0..d {
            let mut rb = RowBuilder::new();
            rb.push(model.cp(k, r, ax), 1.0);
            rb.push(model.cp(k + 1, 0, ax), -1.0);
            push_row(&mut model, rb, RowKind::Eq, 0.0, Family::Continuity);
        }
        if prog.continuity >= 1 {
            for ax in 0..d {
                let mut rb = RowBuilder::new();
                rb.push(model.cp(k, r, ax), 1.0);
                rb.push(model.cp(k, r - 1, ax), -1.0);
                rb.push(model.cp(k + 1, 1, ax), -1.0);
                rb.push(model.cp(k + 1, 0, ax), 1.0);
                push_row(&mut model, rb, RowKind::Eq, 0.0, Family::Continuity);
            }
        }
    }

    // Fixed endpoints.
    if let Boundary::Fixed(p) = &prog.start {
        for ax in 0..d {
            let mut rb = RowBuilder::new();
            rb.push(model.cp(0, 0, ax), 1.0);
            push_row(&mut model, rb, RowKind::Eq, p[ax], Family::BoundaryPoint);
        }
    }
    if let Boundary::Fixed(p) = &prog.goal {
        for ax in 0..d {
            let mut rb = RowBuilder::new();
            rb.push(model.cp(k_segs - 1, r, ax), 1.0);
            push_row(&mut model, rb, RowKind::Eq, p[ax], Family::BoundaryPoint);
        }
    }

    // Velocity boundary conditions: r (c_1 - c_0) = v * T on the end segments.
    if let Some(v0) = &prog.start_velocity {
        for ax in 0..d {
            let mut rb = RowBuilder::new();
            rb.push(model.cp(0, 1, ax), r as f64);
            rb.push(model.cp(0, 0, ax), -(r as f64));
            rb.push(model.dur(0), -v0[ax]);
            push_row(&mut model, rb, RowKind::Eq, 0.0, Family::BoundaryVelocity);
        }
    }
    if let Some(vt) = &prog.goal_velocity {
        for ax in 0..d {
            let mut rb = RowBuilder::new();
            rb.push(model.cp(k_segs - 1, r, ax), r as f64);
            rb.push(model.cp(k_segs - 1, r - 1, ax), -(r as f64));
            rb.push(model.dur(k_segs - 1), -vt[ax]);
            push_row(&mut model, rb, RowKind::Eq, 0.0, Family::BoundaryVelocity);
        }
    }

    model.x0 = initial_point(prog, &model);
    model
}

/// Waypoint-interpolated initial iterate, overridden by any warm-start
/// prefix.
fn initial_point(prog: &SeqProgram, model: &Model) -> Vec<f64> {
    let d = model.dim;
    let k_segs = model.segs;
    let r = model.order;
    let mut x = vec![0.0; model.n];

    let warm_len = prog
        .warm_start
        .as_ref()
        .map(|w| {
            if w.dim() == d && w.segments.iter().all(|s| s.order() == r) {
                w.segments.len().min(k_segs)
            } else {
                0
            }
        })
        .unwrap_or(0);

    // Waypoints: start anchor, junction anchors, goal anchor.
    let mut w = Vec::with_capacity(k_segs + 1);
    w.push(match &prog.start {
        Boundary::Fixed(p) => p.clone(),
        _ => prog.sets[0].chebyshev_center().0.to_vec(),
    });
    for k in 0..k_segs - 1 {
        let anchor = geometry::chebyshev_intersection(&prog.sets[k], &prog.sets[k + 1])
            .map(|(c, _)| c)
            .unwrap_or_else(|| prog.sets[k + 1].chebyshev_center().0.to_vec());
        w.push(anchor);
    }
    w.push(match &prog.goal {
        Boundary::Fixed(p) => p.clone(),
        _ => prog.sets[k_segs - 1].chebyshev_center().0.to_vec(),
    });

    if warm_len > 0 && warm_len < k_segs {
        let warm = prog.warm_start.as_ref().unwrap();
        let end = warm.segments[warm_len - 1].end().to_vec();
        w[warm_len] = match &prog.tail_hint {
            Some(h) if h.len() == d => h.clone(),
            _ => end,
        };
    }

    let mut durations = vec![0.0; k_segs];
    for k in 0..k_segs {
        let delta = geometry::sub(&w[k + 1], &w[k]);
        durations[k] = prog.vset.min_traversal_time(&delta) * 1.5 + 0.05;
        for i in 0..=r {
            let t = i as f64 / r as f64;
            for ax in 0..d {
                x[model.cp(k, i, ax)] = (1.0 - t) * w[k][ax] + t * w[k + 1][ax];
            }
        }
    }
    if warm_len > 0 {
        let warm = prog.warm_start.as_ref().unwrap();
        for (k, seg) in warm.segments.iter().take(warm_len).enumerate() {
            for i in 0..=r {
                for ax in 0..d {
                    x[model.cp(k, i, ax)] = seg.control[i][ax];
                }
            }
            durations[k] = seg.duration;
        }
    }
    if model.shared_tau {
        x[model.dur(0)] = durations.iter().cloned().fold(MIN_DURATION, f64::max);
    } else {
        for k in 0..k_segs {
            x[model.dur(k)] = durations[k].max(MIN_DURATION);
        }
    }
    x
}

/// Lower-banded Cholesky with an optional trailing dense column.
struct ArrowBandFactor {
    nb: usize,
    bw: usize,
    l: Vec<f64>,
    arrow_w: Vec<f64>,
    arrow_s: f64,
    has_arrow: bool,
}

impl ArrowBandFactor {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * (self.bw + 1) + (self.bw - (i - j))]
    }

    fn factor(
        nb: usize,
        bw: usize,
        band: &[f64],
        arrow: &[f64],
        arrow_diag: f64,
        has_arrow: bool,
    ) -> Option<ArrowBandFactor> {
        let w = bw + 1;
        let mut l = band.to_vec();
        for i in 0..nb {
            let lo = i.saturating_sub(bw);
            for j in lo..i {
                let mut sum = l[i * w + (bw - (i - j))];
                for t in lo..j {
                    sum -= l[i * w + (bw - (i - t))] * l[j * w + (bw - (j - t))];
                }
                l[i * w + (bw - (i - j))] = sum / l[j * w + bw];
            }
            let mut diag = l[i * w + bw];
            for t in lo..i {
                let lt = l[i * w + (bw - (i - t))];
                diag -= lt * lt;
            }
            if diag <= 0.0 {
                return None;
            }
            l[i * w + bw] = diag.sqrt();
        }
        let mut f = ArrowBandFactor {
            nb,
            bw,
            l,
            arrow_w: Vec::new(),
            arrow_s: 1.0,
            has_arrow,
        };
        if has_arrow {
            let mut aw = arrow.to_vec();
            f.forward(&mut aw);
            let s2 = arrow_diag - aw.iter().map(|v| v * v).sum::<f64>();
            if s2 <= 0.0 {
                return None;
            }
            f.arrow_w = aw;
            f.arrow_s = s2.sqrt();
        }
        Some(f)
    }

    fn forward(&self, b: &mut [f64]) {
        for i in 0..self.nb {
            let lo = i.saturating_sub(self.bw);
            let mut v = b[i];
            for t in lo..i {
                v -= self.at(i, t) * b[t];
            }
            b[i] = v / self.at(i, i);
        }
    }

    fn backward(&self, y: &mut [f64]) {
        for i in (0..self.nb).rev() {
            let hi = (i + self.bw).min(self.nb - 1);
            let mut v = y[i];
            for t in i + 1..=hi {
                v -= self.at(t, i) * y[t];
            }
            y[i] = v / self.at(i, i);
        }
    }

    /// Solves in place; `rhs` has length `nb` plus one when there is an arrow.
    fn solve(&self, rhs: &mut [f64]) {
        if self.has_arrow {
            let (head, tail) = rhs.split_at_mut(self.nb);
            self.forward(head);
            let dot: f64 = self.arrow_w.iter().zip(head.iter()).map(|(a, b)| a * b).sum();
            let t = (tail[0] - dot) / (self.arrow_s * self.arrow_s);
            for i in 0..self.nb {
                head[i] -= self.arrow_w[i] * t;
            }
            self.backward(head);
            tail[0] = t;
        } else {
            self.forward(rhs);
            self.backward(rhs);
        }
    }
}

/// Band/arrow Gram of `M'M` (unscaled); the factor is rebuilt as
/// `sigma I + rho * gram` whenever rho changes.
struct Gram {
    nb: usize,
    bw: usize,
    band: Vec<f64>,
    arrow: Vec<f64>,
    arrow_diag: f64,
    has_arrow: bool,
}

fn build_gram(model: &Model) -> Gram {
    let has_arrow = model.shared_tau;
    let nb = if has_arrow { model.n - 1 } else { model.n };
    let arrow_col = model.n - 1;
    let mut bw = 1usize;
    for r in 0..model.m {
        let cols = &model.col[model.rowptr[r]..model.rowptr[r + 1]];
        let mut mn = usize::MAX;
        let mut mx = 0usize;
        for &c in cols {
            if has_arrow && c == arrow_col {
                continue;
            }
            mn = mn.min(c);
            mx = mx.max(c);
        }
        if mn != usize::MAX {
            bw = bw.max(mx - mn);
        }
    }
    let w = bw + 1;
    let mut band = vec![0.0; nb * w];
    let mut arrow = vec![0.0; nb];
    let mut arrow_diag = 0.0;
    for r in 0..model.m {
        let lo = model.rowptr[r];
        let hi = model.rowptr[r + 1];
        for i in lo..hi {
            let (ci, vi) = (model.col[i], model.val[i]);
            let i_arrow = has_arrow && ci == arrow_col;
            for j in lo..=i {
                let (cj, vj) = (model.col[j], model.val[j]);
                let j_arrow = has_arrow && cj == arrow_col;
                let prod = vi * vj;
                match (i_arrow, j_arrow) {
                    (true, true) => arrow_diag += prod,
                    (true, false) => arrow[cj] += prod,
                    (false, true) => arrow[ci] += prod,
                    (false, false) => {
                        let (hc, lc) = if ci >= cj { (ci, cj) } else { (cj, ci) };
                        band[hc * w + (bw - (hc - lc))] += prod;
                    }
                }
            }
        }
    }
    Gram {
        nb,
        bw,
        band,
        arrow,
        arrow_diag,
        has_arrow,
    }
}

fn factor_with(gram: &Gram, sigma: f64, rho: f64) -> Option<ArrowBandFactor> {
    let w = gram.bw + 1;
    let mut band = vec![0.0; gram.band.len()];
    for i in 0..gram.nb {
        for k in 0..w {
            band[i * w + k] = rho * gram.band[i * w + k];
        }
        band[i * w + gram.bw] += sigma;
    }
    let arrow: Vec<f64> = gram.arrow.iter().map(|v| rho * v).collect();
    let arrow_diag = rho * gram.arrow_diag + sigma;
    ArrowBandFactor::factor(gram.nb, gram.bw, &band, &arrow, arrow_diag, gram.has_arrow)
}

fn prox(model: &Model, rho: f64, v: &mut [f64]) {
    let d = model.dim;
    let kap = model.kappa / rho;
    for g in 0..model.norm_groups {
        let s = g * d;
        let nrm = v[s..s + d].iter().map(|a| a * a).sum::<f64>().sqrt();
        if nrm <= kap {
            v[s..s + d].iter_mut().for_each(|a| *a = 0.0);
        } else {
            let scale = 1.0 - kap / nrm;
            v[s..s + d].iter_mut().for_each(|a| *a *= scale);
        }
    }
    for r in model.norm_groups * d..model.m {
        match model.kind[r] {
            RowKind::Ineq => {
                if v[r] > model.rhs[r] {
                    v[r] = model.rhs[r];
                }
            }
            RowKind::Eq => v[r] = model.rhs[r],
            RowKind::Norm => {}
        }
    }
}

fn extract(prog: &SeqProgram, model: &Model, x: &[f64]) -> Trajectory {
    let mut segments = Vec::with_capacity(model.segs);
    for k in 0..model.segs {
        let mut control = Vec::with_capacity(model.order + 1);
        for i in 0..=model.order {
            let mut p = Vec::with_capacity(model.dim);
            for ax in 0..model.dim {
                p.push(x[model.cp(k, i, ax)]);
            }
            control.push(p);
        }
        let duration = x[model.dur(k)].max(MIN_DURATION * 0.5);
        segments.push(TrajectorySegment {
            set_id: prog.set_ids[k],
            control,
            duration,
        });
    }
    Trajectory::new(segments, prog.continuity)
}

/// Max constraint violation of the extracted trajectory, per family, using
/// the same tolerance class as the public validator.
fn max_violation(prog: &SeqProgram, traj: &Trajectory) -> f64 {
    let r = prog.order as f64;
    let vmax = prog.vset.vmax();
    let mut worst = 0.0f64;
    for (k, seg) in traj.segments.iter().enumerate() {
        for c in &seg.control {
            worst = worst.max(prog.sets[k].max_violation(c));
        }
        for w in seg.control.windows(2) {
            for ax in 0..prog.dim() {
                let d = r * (w[1][ax] - w[0][ax]).abs() - seg.duration * vmax[ax];
                worst = worst.max(d);
            }
        }
    }
    for gap in traj.junction_gaps() {
        worst = worst.max(gap);
    }
    if prog.continuity >= 1 {
        for w in traj.segments.windows(2) {
            for ax in 0..prog.dim() {
                let d = (w[0].control[prog.order][ax] - w[0].control[prog.order - 1][ax])
                    - (w[1].control[1][ax] - w[1].control[0][ax]);
                worst = worst.max(d.abs());
            }
        }
    }
    match (&prog.start, traj.start()) {
        (Boundary::Fixed(p), Some(s)) => worst = worst.max(geometry::dist(p, s)),
        (Boundary::InSet(hs), Some(s)) => {
            for h in hs {
                worst = worst.max(h.violation(s));
            }
        }
        _ => {}
    }
    match (&prog.goal, traj.end()) {
        (Boundary::Fixed(p), Some(e)) => worst = worst.max(geometry::dist(p, e)),
        (Boundary::InSet(hs), Some(e)) => {
            for h in hs {
                worst = worst.max(h.violation(e));
            }
        }
        _ => {}
    }
    if let (Some(v0), Some(seg)) = (&prog.start_velocity, traj.segments.first()) {
        for ax in 0..prog.dim() {
            let lhs = r * (seg.control[1][ax] - seg.control[0][ax]);
            worst = worst.max((lhs - v0[ax] * seg.duration).abs());
        }
    }
    if let (Some(vt), Some(seg)) = (&prog.goal_velocity, traj.segments.last()) {
        let ri = prog.order;
        for ax in 0..prog.dim() {
            let lhs = r * (seg.control[ri][ax] - seg.control[ri - 1][ax]);
            worst = worst.max((lhs - vt[ax] * seg.duration).abs());
        }
    }
    worst
}

pub(super) fn solve(
    prog: &SeqProgram,
    settings: &SolverSettings,
) -> Result<(SolveOutcome, SolveInfo), TrajOptError> {
    const CHECK_TOL: f64 = 1e-6;
    const SIGMA: f64 = 1e-6;

    let model = assemble(prog);
    let (n, m) = (model.n, model.m);
    let gram = build_gram(&model);
    let mut rho = settings.rho;
    let mut factor = factor_with(&gram, SIGMA, rho)
        .ok_or_else(|| TrajOptError::BadProgram("normal matrix not positive definite".into()))?;

    let mut x = model.x0.clone();
    let mut mx = vec![0.0; m];
    model.mul(&x, &mut mx);
    let mut z = mx.clone();
    prox(&model, rho, &mut z);
    let mut u = vec![0.0; m];
    let mut mxr = vec![0.0; m];
    let mut z_prev = vec![0.0; m];
    let mut rhs = vec![0.0; n];
    let mut work_m = vec![0.0; m];
    let mut work_n = vec![0.0; n];

    let sqrt_m = (m as f64).sqrt();
    let sqrt_n = (n as f64).sqrt();
    let mut eps_abs = settings.eps_abs;
    let mut eps_rel = settings.eps_rel;
    let mut best_rel = f64::INFINITY;
    let mut stall = 0usize;
    let mut tightened = false;
    let max_iter_total = settings.max_iter + settings.max_iter / 2;
    let mut rel_p = f64::INFINITY;
    let mut iter = 0usize;

    while iter < max_iter_total {
        iter += 1;

        // x-update: (sigma I + rho M'M) x = sigma x - q + rho M'(z - u).
        for j in 0..m {
            work_m[j] = z[j] - u[j];
        }
        model.mul_t(&work_m, &mut work_n);
        for i in 0..n {
            rhs[i] = SIGMA * x[i] - model.q[i] + rho * work_n[i];
        }
        factor.solve(&mut rhs);
        x.copy_from_slice(&rhs);

        model.mul(&x, &mut mx);
        z_prev.copy_from_slice(&z);
        for j in 0..m {
            mxr[j] = settings.alpha * mx[j] + (1.0 - settings.alpha) * z_prev[j];
            z[j] = mxr[j] + u[j];
        }
        prox(&model, rho, &mut z);
        for j in 0..m {
            u[j] += mxr[j] - z[j];
        }

        // Residuals (Boyd-style stopping criteria).
        let mut r_p2 = 0.0;
        let mut norm_mx2 = 0.0;
        let mut norm_z2 = 0.0;
        for j in 0..m {
            let d = mx[j] - z[j];
            r_p2 += d * d;
            norm_mx2 += mx[j] * mx[j];
            norm_z2 += z[j] * z[j];
        }
        let r_p = r_p2.sqrt();
        for j in 0..m {
            work_m[j] = z[j] - z_prev[j];
        }
        model.mul_t(&work_m, &mut work_n);
        let r_d = rho * work_n.iter().map(|v| v * v).sum::<f64>().sqrt();

        let scale_p = norm_mx2.sqrt().max(norm_z2.sqrt());
        let eps_p = eps_abs * sqrt_m + eps_rel * scale_p;
        model.mul_t(&u, &mut work_n);
        let dual_scale = rho * work_n.iter().map(|v| v * v).sum::<f64>().sqrt();
        let eps_d = eps_abs * sqrt_n + eps_rel * dual_scale;

        rel_p = r_p / scale_p.max(1.0);
        let rel_d = r_d / dual_scale.max(1.0);

        if r_p <= eps_p && r_d <= eps_d {
            let traj = extract(prog, &model, &x);
            if max_violation(prog, &traj) <= CHECK_TOL {
                return Ok((
                    SolveOutcome::Solved(traj),
                    SolveInfo {
                        iterations: iter,
                        vars: n,
                        rows: m,
                        residual: rel_p.max(rel_d),
                    },
                ));
            }
            if tightened {
                return Err(TrajOptError::Stalled {
                    iterations: iter,
                    residual: rel_p.max(rel_d),
                });
            }
            // Converged by residuals but the extracted point misses the
            // per-constraint check; tighten once and keep iterating.
            eps_abs *= 0.02;
            eps_rel *= 0.02;
            tightened = true;
            continue;
        }

        // Infeasibility shows up as a plateaued primal residual.
        let combined = rel_p.max(rel_d);
        if combined > settings.stall_threshold && combined > best_rel * (1.0 - 1e-6) {
            stall += 1;
        } else {
            stall = 0;
        }
        best_rel = best_rel.min(combined);
        if stall >= settings.stall_iters {
            let class = classify_infeasible(&model, &mx, &z);
            return Ok((
                SolveOutcome::Infeasible(class),
                SolveInfo {
                    iterations: iter,
                    vars: n,
                    rows: m,
                    residual: combined,
                },
            ));
        }

        if settings.adaptive_rho && iter % 25 == 0 {
            let mut new_rho = rho;
            if rel_p > 10.0 * rel_d {
                new_rho = (rho * 2.0).min(1e6);
            } else if rel_d > 10.0 * rel_p {
                new_rho = (rho * 0.5).max(1e-4);
            }
            if new_rho != rho {
                let ratio = rho / new_rho;
                u.iter_mut().for_each(|v| *v *= ratio);
                rho = new_rho;
                factor = factor_with(&gram, SIGMA, rho).ok_or_else(|| {
                    TrajOptError::BadProgram("normal matrix not positive definite".into())
                })?;
            }
        }
    }

    Err(TrajOptError::Stalled {
        iterations: max_iter_total,
        residual: rel_p,
    })
}

fn classify_infeasible(model: &Model, mx: &[f64], z: &[f64]) -> InfeasibleClass {
    let mut worst = 0.0;
    let mut fam = Family::Containment;
    for r in model.norm_groups * model.dim..model.m {
        let gap = (mx[r] - z[r]).abs();
        if gap > worst {
            worst = gap;
            fam = model.family[r];
        }
    }
    fam.infeasible_class()
}
