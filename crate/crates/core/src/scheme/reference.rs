//! Explicit method-of-lines solver used to cross-check the implicit scheme.
//!
//! Space: fourth-order centered differences for `y_t = −A(y) y_q + f`
//! (second order next to far-field ends, which stay pinned). Time: classical
//! four-stage Runge–Kutta. It shares no code with the implicit path beyond
//! coefficient evaluation, and is accurate enough on smooth data to serve as
//! an oracle for it.

use crate::error::{ModelError, SolverError};
use crate::model::PdeSystem;

use super::{Boundary, FieldState, Mat2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    /// `α·Δt/h`, at most [`ReferenceOptions::MAX_CFL`].
    pub cfl: f64,
}

impl ReferenceOptions {
    pub const MAX_CFL: f64 = 0.2;
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self { cfl: Self::MAX_CFL }
    }
}

pub fn reference_explicit_solve(
    sys: &PdeSystem,
    init: &FieldState,
    t_end: f64,
) -> Result<FieldState, SolverError> {
    reference_explicit_solve_with(sys, init, t_end, ReferenceOptions::default())
}

pub fn reference_explicit_solve_with(
    sys: &PdeSystem,
    init: &FieldState,
    t_end: f64,
    opts: ReferenceOptions,
) -> Result<FieldState, SolverError> {
    init.validate()?;
    if !(opts.cfl > 0.0 && opts.cfl <= ReferenceOptions::MAX_CFL) {
        return Err(SolverError::Cfl {
            cfl: opts.cfl,
            max: ReferenceOptions::MAX_CFL,
        });
    }
    let grid = init.grid;
    let h = grid.h();
    let mut t = init.t;
    let mut y: Vec<Vec2> = init.u.iter().zip(&init.v).map(|(&u, &v)| [u, v]).collect();
    while t_end - t > 1e-12 * t_end.abs().max(grid.tau) {
        let speed = max_speed(sys, t, &grid, &y)?;
        let dt_cfl = if speed > 0.0 { opts.cfl * h / speed } else { f64::INFINITY };
        let dt = dt_cfl.min(t_end - t);

        let stage = |base: &[Vec2], k: &[Vec2], w: f64| -> Vec<Vec2> {
            base.iter()
                .zip(k)
                .map(|(a, k)| [a[0] + w * k[0], a[1] + w * k[1]])
                .collect()
        };
        let k1 = rhs(sys, t, &grid, &y)?;
        let k2 = rhs(sys, t + 0.5 * dt, &grid, &stage(&y, &k1, 0.5 * dt))?;
        let k3 = rhs(sys, t + 0.5 * dt, &grid, &stage(&y, &k2, 0.5 * dt))?;
        let k4 = rhs(sys, t + dt, &grid, &stage(&y, &k3, dt))?;
        for (i, yi) in y.iter_mut().enumerate() {
            for c in 0..2 {
                yi[c] += dt / 6.0 * (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]);
            }
        }
        t += dt;
        if y.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(SolverError::NonFinite { t });
        }
    }
    let (u, v) = y.iter().map(|p| (p[0], p[1])).unzip();
    Ok(FieldState { t: t_end, u, v, grid })
}

fn frozen(sys: &PdeSystem, t: f64, q: f64, s: Vec2) -> Result<(Mat2, Vec2), ModelError> {
    let state = crate::model::StateVec::new(s[0], s[1]);
    let table = sys.coeffs(t, q, state);
    let a = table
        .advection_matrix()
        .ok_or(ModelError::SingularTimeMatrix { q })?;
    let f = table
        .normalize_source(sys.source(t, q, state))
        .ok_or(ModelError::SingularTimeMatrix { q })?;
    Ok((Mat2(a), f))
}

// Row-sum norm bounds the spectral radius, including non-diagonalizable A.
fn max_speed(sys: &PdeSystem, t: f64, grid: &super::Grid, y: &[Vec2]) -> Result<f64, SolverError> {
    let mut speed = 0.0f64;
    for (k, s) in y.iter().enumerate() {
        let (a, _) = frozen(sys, t, grid.node(k), *s)?;
        speed = speed.max(a.norm_inf());
    }
    if !speed.is_finite() {
        return Err(SolverError::NonFinite { t });
    }
    Ok(speed)
}

fn rhs(sys: &PdeSystem, t: f64, grid: &super::Grid, y: &[Vec2]) -> Result<Vec<Vec2>, SolverError> {
    let n = y.len();
    let h = grid.h();
    let periodic = grid.boundary == Boundary::Periodic;
    let at = |j: isize| -> Vec2 { y[j.rem_euclid(n as isize) as usize] };
    let mut out = vec![[0.0; 2]; n];
    for (k, slot) in out.iter_mut().enumerate() {
        if !periodic && (k == 0 || k == n - 1) {
            continue;
        }
        let (a, f) = frozen(sys, t, grid.node(k), y[k])?;
        let j = k as isize;
        let wide = periodic || (k >= 2 && k + 2 < n);
        let dq: Vec2 = std::array::from_fn(|c| {
            if wide {
                (8.0 * (at(j + 1)[c] - at(j - 1)[c]) - (at(j + 2)[c] - at(j - 2)[c])) / (12.0 * h)
            } else {
                (at(j + 1)[c] - at(j - 1)[c]) / (2.0 * h)
            }
        });
        let adv = a.apply(dq);
        *slot = [f[0] - adv[0], f[1] - adv[1]];
    }
    Ok(out)
}
