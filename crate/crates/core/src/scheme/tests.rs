use std::f64::consts::TAU;

use super::*;
use crate::model::{make_modified_t0, make_nelson, CoeffTable};

/// `u_t + a u_q = 0`, `v_t + a v_q = 0`.
fn advection(a: f64) -> PdeSystem {
    PdeSystem::custom(
        "advection",
        move |_, _, _| CoeffTable {
            a1: 1.0,
            b1: a,
            c1: 0.0,
            d1: 0.0,
            a2: 0.0,
            b2: 0.0,
            c2: 1.0,
            d2: a,
        },
        |_, _, _| [0.0; 2],
    )
}

fn sine_field(grid: Grid, t: f64, a: f64) -> FieldState {
    let len = grid.q_max - grid.q_min;
    FieldState::from_fn(grid, t, |q| {
        let phase = TAU * (q - a * t) / len;
        StateVec::new(phase.sin(), 0.5 * phase.cos())
    })
}

fn max_error(a: &FieldState, b: &FieldState) -> f64 {
    sup_change(a, b)
}

#[test]
fn zero_advection_reduces_to_pointwise_recurrence() {
    let grid = Grid::new(0.0, 1.0, 16, 0.05, Boundary::Periodic).unwrap();
    let sys = advection(0.0);
    let prev = FieldState::from_fn(grid, 0.0, |q| StateVec::new(q, 1.0 - q * q));
    let curr = FieldState::from_fn(grid, grid.tau, |q| StateVec::new(2.0 * q, q.sin()));
    let out = step_three_layer(&sys, &prev, &curr, &SolverConfig::default()).unwrap();
    for k in 0..grid.len() {
        let eu = (4.0 * curr.u[k] - prev.u[k]) / 3.0;
        let ev = (4.0 * curr.v[k] - prev.v[k]) / 3.0;
        assert!((out.field.u[k] - eu).abs() < 1e-15);
        assert!((out.field.v[k] - ev).abs() < 1e-15);
    }
    assert!((out.field.t - 2.0 * grid.tau).abs() < 1e-15);

    let first = bootstrap_first_step(&sys, &prev, &SolverConfig::default()).unwrap();
    assert_eq!(first.field.u, prev.u);
    assert_eq!(first.field.v, prev.v);
}

#[test]
fn linear_solve_with_zero_blocks_is_the_recurrence_with_source() {
    let grid = Grid::new(0.0, 1.0, 12, 0.1, Boundary::Periodic).unwrap();
    let prev = FieldState::from_fn(grid, 0.0, |q| StateVec::new(q, -q));
    let curr = FieldState::from_fn(grid, 0.1, |q| StateVec::new(q * q, 3.0));
    let source: Vec<Vec2> = (0..12).map(|k| [k as f64, 1.0]).collect();
    let sol = solve_linear_system(
        &vec![Mat2::ZERO; 12],
        TimeLevels::ThreeLayer { prev: &prev, curr: &curr },
        &source,
        &grid,
    )
    .unwrap();
    for k in 0..12 {
        let eu = (4.0 * curr.u[k] - prev.u[k] + 2.0 * grid.tau * source[k][0]) / 3.0;
        let ev = (4.0 * curr.v[k] - prev.v[k] + 2.0 * grid.tau * source[k][1]) / 3.0;
        assert!((sol.field.u[k] - eu).abs() < 1e-14);
        assert!((sol.field.v[k] - ev).abs() < 1e-14);
    }
}

#[test]
fn uniform_state_is_a_fixed_point() {
    for boundary in [Boundary::Periodic, Boundary::FarField] {
        let grid = Grid::with_ratio(-10.0, 10.0, 64, 1.0, boundary).unwrap();
        for sys in [make_modified_t0(), make_nelson(), make_general_t_for_tests()] {
            let s = StateVec::new(0.5, -0.2);
            let init = FieldState::uniform(grid, 0.0, s);
            let first = bootstrap_first_step(&sys, &init, &SolverConfig::default()).unwrap();
            assert_eq!(first.field.u, init.u);
            assert_eq!(first.field.v, init.v);
            let mut curr = first.field.clone();
            curr.t = grid.tau;
            let next = step_three_layer(&sys, &init, &curr, &SolverConfig::default()).unwrap();
            assert_eq!(next.field.u, init.u);
            assert_eq!(next.field.v, init.v);
        }
    }
}

fn make_general_t_for_tests() -> PdeSystem {
    crate::model::make_general_t(2.5).unwrap()
}

/// One step from exact levels: the local error of a second-order scheme
/// shrinks by ~8 when `h` and `τ` are halved together.
#[test]
fn three_layer_local_error_is_third_order() {
    let a = 1.0;
    let sys = advection(a);
    let mut errors = Vec::new();
    for n in [64, 128, 256] {
        let grid = Grid::with_ratio(0.0, 1.0, n, 1.0, Boundary::Periodic).unwrap();
        let prev = sine_field(grid, 0.0, a);
        let curr = sine_field(grid, grid.tau, a);
        let out = step_three_layer(&sys, &prev, &curr, &SolverConfig::default()).unwrap();
        errors.push(max_error(&out.field, &sine_field(grid, 2.0 * grid.tau, a)));
    }
    for w in errors.windows(2) {
        assert!(w[0] / w[1] > 7.0, "errors {errors:?}");
    }
}

#[test]
fn bootstrap_local_error_is_second_order() {
    let a = 1.0;
    let sys = advection(a);
    let mut errors = Vec::new();
    for n in [64, 128, 256] {
        let grid = Grid::with_ratio(0.0, 1.0, n, 1.0, Boundary::Periodic).unwrap();
        let init = sine_field(grid, 0.0, a);
        let out = bootstrap_first_step(&sys, &init, &SolverConfig::default()).unwrap();
        errors.push(max_error(&out.field, &sine_field(grid, grid.tau, a)));
    }
    for w in errors.windows(2) {
        assert!(w[0] / w[1] > 3.5, "errors {errors:?}");
    }
}

#[test]
fn linear_problems_converge_in_two_picard_iterations() {
    let grid = Grid::with_ratio(0.0, 1.0, 32, 2.0, Boundary::Periodic).unwrap();
    let init = sine_field(grid, 0.0, 1.0);
    let out = bootstrap_first_step(&advection(1.0), &init, &SolverConfig::default()).unwrap();
    assert_eq!(out.iterations, 2);
    assert_eq!(out.last_change, 0.0);
}

fn bump(n: usize, epsilon: f64) -> FieldState {
    let grid = Grid::with_ratio(-50.0, 50.0, n, 1.0, Boundary::Periodic).unwrap();
    FieldState::gaussian_bump(grid, StateVec::new(0.5, 0.0), epsilon, 1.0, 0.0)
}

#[test]
fn picard_converges_quickly_on_smooth_data() {
    for epsilon in [0.05, 0.1, 0.2] {
        let init = bump(1024, epsilon);
        let cfg = SolverConfig { max_steps: 20, ..SolverConfig::default() };
        let report = run(&make_modified_t0(), &init, &cfg, &[]).unwrap();
        assert_eq!(report.status, RunStatus::Completed);
        assert!(report.max_picard_iterations <= 10, "ε = {epsilon}: {}", report.max_picard_iterations);
        assert!(report.max_relative_residual <= RESIDUAL_RTOL);
    }
}

#[test]
fn mean_of_u_plus_v_is_conserved() {
    let init = bump(512, 0.1);
    let cfg = SolverConfig { max_steps: 100, ..SolverConfig::default() };
    let snapshots: Vec<f64> = vec![0.0, 100.0 * init.grid.tau];
    let report = run(&make_modified_t0(), &init, &cfg, &snapshots).unwrap();
    assert_eq!(report.status, RunStatus::Completed);
    let mean = |f: &FieldState| f.u.iter().zip(&f.v).map(|(u, v)| u + v).sum::<f64>() / f.len() as f64;
    let m0 = mean(&report.snapshots[0]);
    let m1 = mean(&report.snapshots[1]);
    assert!(((m1 - m0) / m0).abs() <= 1e-6, "{m0} -> {m1}");
}

#[test]
fn unperturbed_run_stays_constant() {
    let init = bump(256, 0.0);
    let cfg = SolverConfig { max_steps: 30, ..SolverConfig::default() };
    for sys in [make_modified_t0(), make_nelson()] {
        let report = run(&sys, &init, &cfg, &[0.0, 10.0 * init.grid.tau, 30.0 * init.grid.tau]).unwrap();
        assert_eq!(report.status, RunStatus::Completed);
        assert_eq!(report.steps_taken, 30);
        for snap in &report.snapshots {
            assert_eq!(snap.u, init.u);
            assert_eq!(snap.v, init.v);
        }
        assert!(report.diagnostics.iter().all(|d| d.max_du == 0.0 && d.max_dv == 0.0));
    }
}

#[test]
fn snapshots_interpolate_between_levels() {
    let init = bump(256, 0.1);
    let tau = init.grid.tau;
    let cfg = SolverConfig { max_steps: 10, ..SolverConfig::default() };
    let times = [0.0, tau, 2.5 * tau, 3.0 * tau];
    let report = run(&make_modified_t0(), &init, &cfg, &times).unwrap();
    assert_eq!(report.steps_taken, 3);
    assert_eq!(report.snapshots.len(), 4);
    let s2 = &report.snapshots[2];
    assert!((s2.t - 2.5 * tau).abs() < 1e-15);
    // Re-run to level 2 and check the midpoint rule.
    let at2 = run(&make_modified_t0(), &init, &cfg, &[2.0 * tau]).unwrap();
    let lvl2 = &at2.snapshots[0];
    let lvl3 = &report.snapshots[3];
    for k in 0..s2.len() {
        let mid = 0.5 * lvl2.u[k] + 0.5 * lvl3.u[k];
        assert!((s2.u[k] - mid).abs() < 1e-15);
    }
    assert_eq!(report.snapshot_at(tau).unwrap().t, tau);
}

#[test]
fn rejects_bad_snapshot_times() {
    let init = bump(128, 0.1);
    let tau = init.grid.tau;
    let cfg = SolverConfig { max_steps: 5, ..SolverConfig::default() };
    assert!(run(&make_modified_t0(), &init, &cfg, &[2.0 * tau, tau]).is_err());
    assert!(run(&make_modified_t0(), &init, &cfg, &[6.0 * tau]).is_err());
    assert!(run(&make_modified_t0(), &init, &cfg, &[-tau]).is_err());
}

#[test]
fn nelson_bump_diverges() {
    let init = bump(1024, 0.1);
    let cfg = SolverConfig { max_steps: 60, ..SolverConfig::default() };
    let report = run(&make_nelson(), &init, &cfg, &[60.0 * init.grid.tau]).unwrap();
    assert_eq!(report.status, RunStatus::Diverged);
    assert!(report.steps_taken < 60);
    assert!(report.failure.is_some());
}

#[test]
fn iteration_budget_exhaustion_is_reported() {
    let init = bump(256, 0.1);
    let cfg = SolverConfig { picard_max_iters: 1, max_steps: 3, ..SolverConfig::default() };
    let err = bootstrap_first_step(&make_modified_t0(), &init, &cfg).unwrap_err();
    assert!(matches!(err, SolverError::IterationFailed { iterations: 1, .. }));
    let report = run(&make_modified_t0(), &init, &cfg, &[]).unwrap();
    assert_eq!(report.status, RunStatus::IterationFailed);
    assert_eq!(report.status.exit_code(), 3);
}

#[test]
fn blowup_threshold_is_enforced() {
    let init = bump(256, 0.1);
    // A tiny threshold turns the first iterate into a blow-up.
    let cfg = SolverConfig { blowup_factor: 1.0 + 1e-9, ..SolverConfig::default() };
    let grown = FieldState { u: init.u.iter().map(|u| u * 2.0).collect(), ..init.clone() };
    let err = picard(
        &make_modified_t0(),
        TimeLevels::Bootstrap { curr: &grown },
        &cfg,
        blowup_limit(&cfg, &init),
    )
    .unwrap_err();
    assert!(matches!(err, SolverError::Diverged { .. }));
}

#[test]
fn far_field_pins_the_ends() {
    let grid = Grid::with_ratio(-20.0, 20.0, 256, 1.0, Boundary::FarField).unwrap();
    let init = FieldState::gaussian_bump(grid, StateVec::new(0.5, 0.0), 0.1, 1.0, 0.0);
    assert_eq!(init.len(), 257);
    let cfg = SolverConfig { max_steps: 20, ..SolverConfig::default() };
    let report = run(&make_modified_t0(), &init, &cfg, &[20.0 * grid.tau]).unwrap();
    assert_eq!(report.status, RunStatus::Completed);
    let last = &report.snapshots[0];
    assert_eq!((last.u[0], last.v[0]), (0.5, 0.0));
    assert_eq!((last.u[256], last.v[256]), (0.5, 0.0));
}

#[test]
fn rejects_mismatched_levels() {
    let init = bump(128, 0.1);
    let other = bump(64, 0.1);
    assert!(step_three_layer(&make_modified_t0(), &other, &init, &SolverConfig::default()).is_err());
    let mut late = init.clone();
    late.t = 5.0;
    assert!(step_three_layer(&make_modified_t0(), &init, &late, &SolverConfig::default()).is_err());
    let mut short = init.clone();
    short.u.pop();
    assert!(bootstrap_first_step(&make_modified_t0(), &short, &SolverConfig::default()).is_err());
}

#[test]
fn reference_solver_translates_sinusoid() {
    let a = 1.0;
    let grid = Grid::with_ratio(0.0, 1.0, 256, 1.0, Boundary::Periodic).unwrap();
    let init = sine_field(grid, 0.0, a);
    let out = reference_explicit_solve(&advection(a), &init, 0.5).unwrap();
    assert!(max_error(&out, &sine_field(grid, 0.5, a)) < 2e-3);

    let uniform = FieldState::uniform(grid, 0.0, StateVec::new(0.3, 0.1));
    let same = reference_explicit_solve(&make_modified_t0(), &uniform, 0.2).unwrap();
    assert_eq!(same.u, uniform.u);
    assert_eq!(same.v, uniform.v);

    let err = reference_explicit_solve_with(&advection(a), &init, 0.1, ReferenceOptions { cfl: 0.5 })
        .unwrap_err();
    assert!(matches!(err, SolverError::Cfl { .. }));
}
