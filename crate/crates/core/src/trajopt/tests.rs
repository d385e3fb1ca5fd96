use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{dist, ConvexSet, VelocitySet};

use super::*;

fn solve_ok(prog: &SeqProgram) -> Trajectory {
    let (out, _) = solve_sequence(prog, &SolverSettings::default()).expect("solver ran");
    match out {
        SolveOutcome::Solved(t) => t,
        SolveOutcome::Infeasible(class) => panic!("unexpectedly infeasible: {class:?}"),
    }
}

fn single_box_program(a: f64, b: f64, vmax: f64, order: usize) -> SeqProgram {
    let set = Arc::new(ConvexSet::from_box(&[0.0, 0.0], &[4.0, 4.0]).unwrap());
    SeqProgram::new(
        vec![0],
        vec![set],
        Boundary::Fixed(vec![1.0, 1.0]),
        Boundary::Fixed(vec![3.0, 1.0]),
        order,
        0,
        CostWeights::new(a, b).unwrap(),
        VelocitySet::uniform(2, vmax).unwrap(),
    )
    .unwrap()
}

#[test]
fn straight_line_in_one_box() {
    let prog = single_box_program(1.0, 0.0, 1.0, 1);
    let traj = solve_ok(&prog);
    let c = cost(&traj, &prog.weights);
    assert!((c - 2.0).abs() < 1e-4, "cost {c}");
    assert!(dist(traj.start().unwrap(), &[1.0, 1.0]) < 1e-6);
    assert!(dist(traj.end().unwrap(), &[3.0, 1.0]) < 1e-6);
}

#[test]
fn duration_priced_at_speed_limit() {
    // Independent time-scaling bound: moving by delta under per-axis limits
    // takes at least max_ax |delta_ax| / vmax, and the straight segment at the
    // limit achieves it, so the optimum is a*|delta| + b*|delta|_inf/vmax.
    let prog = single_box_program(1.0, 1.0, 1.0, 1);
    let delta: [f64; 2] = [2.0, 0.0];
    let oracle = 1.0 * 2.0 + 1.0 * delta.iter().cloned().fold(0.0, f64::max) / 1.0;
    let traj = solve_ok(&prog);
    let c = cost(&traj, &prog.weights);
    assert!((c - oracle).abs() < 2e-4, "cost {c} vs oracle {oracle}");
    assert!((c - 4.0).abs() < 2e-4);
}

#[test]
fn l_corridor_matches_waypoint_grid_search() {
    let a = Arc::new(ConvexSet::from_box(&[0.0, 0.0], &[1.0, 3.0]).unwrap());
    let b = Arc::new(ConvexSet::from_box(&[0.0, 0.0], &[3.0, 1.0]).unwrap());
    let s = [0.5, 2.5];
    let g = [2.5, 0.5];
    let prog = SeqProgram::new(
        vec![0, 1],
        vec![a, b],
        Boundary::Fixed(s.to_vec()),
        Boundary::Fixed(g.to_vec()),
        1,
        0,
        CostWeights::new(1.0, 0.0).unwrap(),
        VelocitySet::uniform(2, 1.0).unwrap(),
    )
    .unwrap();
    let traj = solve_ok(&prog);
    let c = cost(&traj, &prog.weights);

    // Dense grid over the interface box [0,1]^2 at resolution 1e-3.
    let res = 1e-3;
    let steps = (1.0 / res) as usize;
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        for j in 0..=steps {
            let p = [i as f64 * res, j as f64 * res];
            let v = dist(&p, &s) + dist(&g, &p);
            if v < best {
                best = v;
            }
        }
    }
    assert!((c - best).abs() < 2e-3, "solver {c} vs grid {best}");
    // The analytic optimum threads the inner corner (1,1).
    assert!((c - 10.0f64.sqrt()).abs() < 2e-3);
}

#[test]
fn degree_one_velocity_boundary_infeasible() {
    let set = Arc::new(ConvexSet::from_box(&[0.0, 0.0], &[4.0, 4.0]).unwrap());
    let prog = SeqProgram::new(
        vec![0],
        vec![set],
        Boundary::Fixed(vec![1.0, 1.0]),
        Boundary::Fixed(vec![3.0, 1.0]),
        1,
        1,
        CostWeights::new(1.0, 0.1).unwrap(),
        VelocitySet::uniform(2, 1.0).unwrap(),
    )
    .unwrap()
    .with_start_velocity(Some(vec![0.0, 0.0]));
    let (out, _) = solve_sequence(&prog, &SolverSettings::default()).expect("solver ran");
    assert!(
        matches!(out, SolveOutcome::Infeasible(_)),
        "a linear segment with a zero start velocity cannot move"
    );
}

#[test]
fn cost_is_additive_over_concatenation() {
    let w = CostWeights::new(1.0, 0.5).unwrap();
    let seg = |x0: f64, x1: f64| TrajectorySegment {
        set_id: 0,
        control: vec![vec![x0, 0.0], vec![x1, 0.0]],
        duration: 3.0,
    };
    let t1 = Trajectory::new(vec![seg(0.0, 1.0)], 0);
    let t2 = Trajectory::new(vec![seg(1.0, 2.5)], 0);
    let joined = t1.concat(&t2);
    assert!((cost(&t1, &w) + cost(&t2, &w) - cost(&joined, &w)).abs() < 1e-12);
    assert!((cost(&t1, &CostWeights::new(1.0, 0.0).unwrap()) - 1.0).abs() < 1e-12);
    assert!((cost(&t1, &CostWeights::new(0.0, 1.0).unwrap()) - 3.0).abs() < 1e-12);
}

#[test]
fn warm_start_does_not_move_the_optimum() {
    let prog = single_box_program(1.0, 0.3, 1.5, 3);
    let cold = solve_ok(&prog);
    let cold_cost = cost(&cold, &prog.weights);

    let mut warm_prog = prog.clone();
    warm_prog = warm_prog.with_warm_start(Some(cold.clone()), None);
    let warm = solve_ok(&warm_prog);
    let warm_cost = cost(&warm, &prog.weights);
    assert!(
        (warm_cost - cold_cost).abs() <= REL_TOL * cold_cost.max(1.0),
        "warm {warm_cost} vs cold {cold_cost}"
    );
}

#[test]
fn deterministic_for_identical_inputs() {
    let prog = single_box_program(1.0, 0.2, 1.0, 2);
    let t1 = solve_ok(&prog);
    let t2 = solve_ok(&prog);
    assert_eq!(cost(&t1, &prog.weights), cost(&t2, &prog.weights));
}

#[test]
fn doubling_length_weight_doubles_cost() {
    let base = single_box_program(1.0, 0.0, 1.0, 2);
    let doubled = single_box_program(2.0, 0.0, 1.0, 2);
    let t1 = solve_ok(&base);
    let t2 = solve_ok(&doubled);
    let c1 = cost(&t1, &base.weights);
    let c2 = cost(&t2, &doubled.weights);
    assert!((c2 - 2.0 * c1).abs() < REL_TOL * c2.max(1.0));
    // Positive scaling preserves minimizers.
    for (s1, s2) in t1.segments.iter().zip(&t2.segments) {
        for (p1, p2) in s1.control.iter().zip(&s2.control) {
            assert!(dist(p1, p2) < 1e-3, "{p1:?} vs {p2:?}");
        }
    }
}

#[test]
fn relaxing_velocity_limit_never_raises_cost() {
    let tight = single_box_program(1.0, 1.0, 0.5, 2);
    let loose = single_box_program(1.0, 1.0, 50.0, 2);
    let ct = cost(&solve_ok(&tight), &tight.weights);
    let cl = cost(&solve_ok(&loose), &loose.weights);
    assert!(cl <= ct + REL_TOL * ct.max(1.0), "loose {cl} vs tight {ct}");
}

#[test]
fn convexity_regression_small() {
    // Solver cost must not exceed any feasible waypoint-sampled trajectory.
    let a = Arc::new(ConvexSet::from_box(&[0.0, 0.0], &[2.0, 2.0]).unwrap());
    let b = Arc::new(ConvexSet::from_box(&[1.5, 0.0], &[3.5, 2.0]).unwrap());
    let s = vec![0.3, 1.7];
    let g = vec![3.2, 0.4];
    let w = CostWeights::new(1.0, 0.4).unwrap();
    let vset = VelocitySet::uniform(2, 1.0).unwrap();
    let prog = SeqProgram::new(
        vec![0, 1],
        vec![a.clone(), b.clone()],
        Boundary::Fixed(s.clone()),
        Boundary::Fixed(g.clone()),
        1,
        0,
        w,
        vset.clone(),
    )
    .unwrap();
    let solved_cost = cost(&solve_ok(&prog), &w);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        // Random junction inside the interface strip.
        let p = vec![rng.gen_range(1.5..2.0), rng.gen_range(0.0..2.0)];
        let mk = |from: &[f64], to: &[f64], id: usize| TrajectorySegment {
            set_id: id,
            control: vec![from.to_vec(), to.to_vec()],
            duration: vset.min_traversal_time(&crate::geometry::sub(to, from)) + 1e-9,
        };
        let traj = Trajectory::new(vec![mk(&s, &p, 0), mk(&p, &g, 1)], 0);
        let sampled = cost(&traj, &w);
        assert!(
            solved_cost <= sampled + REL_TOL * sampled.max(1.0),
            "solved {solved_cost} beat by sample {sampled}"
        );
    }
}

#[test]
fn collapses_repeated_consecutive_ids() {
    let set = Arc::new(ConvexSet::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap());
    let prog = SeqProgram::new(
        vec![0, 0, 0],
        vec![set.clone(), set.clone(), set],
        Boundary::Free,
        Boundary::Free,
        1,
        0,
        CostWeights::new(1.0, 0.0).unwrap(),
        VelocitySet::uniform(2, 1.0).unwrap(),
    )
    .unwrap();
    assert_eq!(prog.segments(), 1);
}

#[test]
fn fixed_boundary_outside_set_rejected() {
    let set = Arc::new(ConvexSet::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap());
    let r = SeqProgram::new(
        vec![0],
        vec![set],
        Boundary::Fixed(vec![5.0, 5.0]),
        Boundary::Free,
        1,
        0,
        CostWeights::new(1.0, 0.0).unwrap(),
        VelocitySet::uniform(2, 1.0).unwrap(),
    );
    assert!(matches!(r, Err(TrajOptError::BadProgram(_))));
}

#[test]
fn three_segment_chain_threads_the_corridor() {
    let sets = vec![
        Arc::new(ConvexSet::from_box(&[0.0, 0.0], &[1.1, 1.0]).unwrap()),
        Arc::new(ConvexSet::from_box(&[0.9, 0.0], &[2.1, 1.0]).unwrap()),
        Arc::new(ConvexSet::from_box(&[1.9, 0.0], &[3.0, 1.0]).unwrap()),
    ];
    let prog = SeqProgram::new(
        vec![0, 1, 2],
        sets,
        Boundary::Fixed(vec![0.2, 0.5]),
        Boundary::Fixed(vec![2.8, 0.5]),
        1,
        0,
        CostWeights::new(1.0, 0.0).unwrap(),
        VelocitySet::uniform(2, 1.0).unwrap(),
    )
    .unwrap();
    let traj = solve_ok(&prog);
    // Straight corridor: the chord is feasible, so it is the optimum.
    assert!((cost(&traj, &prog.weights) - 2.6).abs() < 1e-3);
}
