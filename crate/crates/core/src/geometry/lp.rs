//! Dense two-phase simplex for the feasibility, support, and inscribed-ball
//! programs behind the geometric predicates.
//!
//! Problems here have a handful of free columns and at most a few dozen rows
//! (`max c·x` subject to `A x <= b`), so a dense tableau with a Bland
//! fallback is the right tool. No external solver is involved.

/// Absolute tolerance for pivoting and feasibility decisions.
pub(crate) const LP_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Maximizer in the original (free) variables; empty unless `Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LpOutcome {
    fn of(status: LpStatus) -> Self {
        LpOutcome {
            status,
            x: Vec::new(),
            objective: f64::NAN,
        }
    }
}

/// Maximize `c·x` over `{x : rows[i]·x <= rhs[i]}` with `x` free.
///
/// Free variables are split internally (`x = x+ - x-`); rows with negative
/// right-hand sides get artificial columns resolved in a first phase.
pub fn maximize(c: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> LpOutcome {
    let n = c.len();
    let m = rows.len();
    debug_assert!(rows.iter().all(|r| r.len() == n));
    debug_assert_eq!(rhs.len(), m);

    // Columns: [x+ (n) | x- (n) | slack (m) | artificial (n_art)] + rhs.
    let mut need_art: Vec<bool> = Vec::with_capacity(m);
    let mut n_art = 0usize;
    for &b in rhs {
        let a = b < 0.0;
        need_art.push(a);
        if a {
            n_art += 1;
        }
    }
    let ncols = 2 * n + m + n_art;
    let mut a = vec![vec![0.0f64; ncols + 1]; m];
    let mut basis = vec![0usize; m];
    let mut art_cols: Vec<usize> = Vec::with_capacity(n_art);
    let mut next_art = 2 * n + m;
    for i in 0..m {
        let sgn = if need_art[i] { -1.0 } else { 1.0 };
        for j in 0..n {
            a[i][j] = sgn * rows[i][j];
            a[i][n + j] = -sgn * rows[i][j];
        }
        a[i][2 * n + i] = sgn; // slack
        a[i][ncols] = sgn * rhs[i];
        if need_art[i] {
            a[i][next_art] = 1.0;
            basis[i] = next_art;
            art_cols.push(next_art);
            next_art += 1;
        } else {
            basis[i] = 2 * n + i;
        }
    }

    if n_art > 0 {
        // Phase 1: minimize the sum of artificials.
        let mut obj = vec![0.0f64; ncols + 1];
        for &col in &art_cols {
            obj[col] = 1.0;
        }
        price_out(&mut obj, &a, &basis);
        if !run_simplex(&mut a, &mut basis, &mut obj, ncols) {
            // Phase-1 objective is bounded below by 0; unbounded here means
            // numerical trouble, treat as infeasible.
            return LpOutcome::of(LpStatus::Infeasible);
        }
        if obj[ncols].abs() > 1e3 * LP_EPS {
            return LpOutcome::of(LpStatus::Infeasible);
        }
        // Drive remaining artificials out of the basis.
        for i in 0..m {
            if art_cols.contains(&basis[i]) {
                let mut pivoted = false;
                for j in 0..2 * n + m {
                    if a[i][j].abs() > LP_EPS {
                        pivot(&mut a, &mut basis, i, j, ncols);
                        pivoted = true;
                        break;
                    }
                }
                if !pivoted {
                    // Redundant row; neutralize it.
                    for v in a[i].iter_mut() {
                        *v = 0.0;
                    }
                }
            }
        }
        // Forbid artificial columns from re-entering.
        for row in a.iter_mut() {
            for &col in &art_cols {
                row[col] = 0.0;
            }
        }
    }

    // Phase 2: minimize -c·x.
    let mut obj = vec![0.0f64; ncols + 1];
    for j in 0..n {
        obj[j] = -c[j];
        obj[n + j] = c[j];
    }
    for &col in &art_cols {
        obj[col] = 0.0;
    }
    price_out(&mut obj, &a, &basis);
    if !run_simplex(&mut a, &mut basis, &mut obj, ncols) {
        return LpOutcome::of(LpStatus::Unbounded);
    }

    let mut x = vec![0.0f64; n];
    for i in 0..m {
        let col = basis[i];
        let val = a[i][ncols];
        if col < n {
            x[col] += val;
        } else if col < 2 * n {
            x[col - n] -= val;
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    LpOutcome {
        status: LpStatus::Optimal,
        x,
        objective,
    }
}

/// Subtract basic rows from the objective so reduced costs of basic columns
/// are zero.
fn price_out(obj: &mut [f64], a: &[Vec<f64>], basis: &[usize]) {
    let ncols = obj.len() - 1;
    for (i, &col) in basis.iter().enumerate() {
        let coef = obj[col];
        if coef != 0.0 {
            for j in 0..=ncols {
                obj[j] -= coef * a[i][j];
            }
        }
    }
}

/// Minimize the tableau objective. Returns false when unbounded.
fn run_simplex(a: &mut [Vec<f64>], basis: &mut [usize], obj: &mut [f64], ncols: usize) -> bool {
    let m = a.len();
    let dantzig_limit = 50 + 20 * (m + ncols);
    let hard_limit = dantzig_limit + 100 * (m + ncols) + 1000;
    for iter in 0..hard_limit {
        let bland = iter >= dantzig_limit;
        let mut enter = None;
        if bland {
            for j in 0..ncols {
                if obj[j] < -LP_EPS {
                    enter = Some(j);
                    break;
                }
            }
        } else {
            let mut best = -LP_EPS;
            for j in 0..ncols {
                if obj[j] < best {
                    best = obj[j];
                    enter = Some(j);
                }
            }
        }
        let enter = match enter {
            Some(j) => j,
            None => return true, // optimal
        };
        let mut leave = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            if a[i][enter] > LP_EPS {
                let ratio = a[i][ncols] / a[i][enter];
                let better = ratio < best_ratio - LP_EPS
                    || (ratio < best_ratio + LP_EPS
                        && leave.map_or(true, |l: usize| basis[i] < basis[l]));
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let leave = match leave {
            Some(i) => i,
            None => return false, // unbounded direction
        };
        pivot_with_obj(a, basis, obj, leave, enter, ncols);
    }
    // Tiny problems with Bland's rule terminate; reaching here means a
    // degenerate stall. Report the current (feasible) point as optimal.
    true
}

fn pivot(a: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize, ncols: usize) {
    let piv = a[row][col];
    for j in 0..=ncols {
        a[row][j] /= piv;
    }
    for i in 0..a.len() {
        if i != row {
            let f = a[i][col];
            if f != 0.0 {
                for j in 0..=ncols {
                    a[i][j] -= f * a[row][j];
                }
            }
        }
    }
    basis[row] = col;
}

fn pivot_with_obj(
    a: &mut [Vec<f64>],
    basis: &mut [usize],
    obj: &mut [f64],
    row: usize,
    col: usize,
    ncols: usize,
) {
    pivot(a, basis, row, col, ncols);
    let f = obj[col];
    if f != 0.0 {
        for j in 0..=ncols {
            obj[j] -= f * a[row][j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_box_max() {
        // max x + y on [0,1]^2
        let rows = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let rhs = vec![1.0, 0.0, 1.0, 0.0];
        let out = maximize(&[1.0, 1.0], &rows, &rhs);
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective - 2.0).abs() < 1e-8);
    }

    #[test]
    fn negative_rhs_needs_phase_one() {
        // x >= 2, x <= 5, max -x  => x = 2
        let rows = vec![vec![-1.0], vec![1.0]];
        let rhs = vec![-2.0, 5.0];
        let out = maximize(&[-1.0], &rows, &rhs);
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.x[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn infeasible_detected() {
        // x <= -1, x >= 0
        let rows = vec![vec![1.0], vec![-1.0]];
        let rhs = vec![-1.0, 0.0];
        let out = maximize(&[1.0], &rows, &rhs);
        assert_eq!(out.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let rows = vec![vec![-1.0]];
        let rhs = vec![0.0];
        let out = maximize(&[1.0], &rows, &rhs);
        assert_eq!(out.status, LpStatus::Unbounded);
    }
}
