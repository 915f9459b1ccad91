//! Implicit three-layer integrator for `y_t + A(y) y_q = φ`, `y = (u, v)ᵀ`.
//!
//! Level `n+1` solves
//!
//! ```text
//! (3y^{n+1} − 4y^n + y^{n−1}) / 2τ + A(y^{n+1}) (y^{n+1}_{k+1} − y^{n+1}_{k−1}) / 2h = φ(y^{n+1})
//! ```
//!
//! by Picard iteration on the frozen coefficients. Level 1 comes from one
//! backward-Euler step with the same space operator. Each frozen linear
//! problem is solved for the increment `δ = y^{n+1} − y^n`, so states that
//! the scheme leaves invariant are reproduced bit for bit.

mod linear;
mod reconstruct;
mod reference;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ParamError, SolverError};
use crate::model::{PdeSystem, StateVec};

pub use linear::{relative_residual, BlockTridiagonal, Mat2, Vec2};
pub use reconstruct::{reconstruct_rho_theta, LOG_RANGE_GUARD};
pub use reference::{reference_explicit_solve, reference_explicit_solve_with, ReferenceOptions};

/// Residual bound for each frozen-coefficient solve, relative to the rhs.
pub const RESIDUAL_RTOL: f64 = 1e-10;

/// An unconverged Picard step counts as blow-up once the iterate exceeds
/// this multiple of the initial field scale.
pub const PICARD_RUNAWAY_FACTOR: f64 = 2.0;

/// Below this many nodes the assembly is not worth splitting across threads.
const PARALLEL_MIN_NODES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Nodes `q_min + kh`, `k = 0..n`, with `q_max` identified with `q_min`.
    Periodic,
    /// Nodes `q_min + kh`, `k = 0..=n`; the end values stay pinned.
    FarField,
}

impl Boundary {
    pub fn as_str(&self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::FarField => "far-field",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "periodic" => Ok(Boundary::Periodic),
            "far-field" => Ok(Boundary::FarField),
            other => Err(format!("unknown boundary `{other}` (expected periodic | far-field)")),
        }
    }
}

/// Uniform space-time mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub q_min: f64,
    pub q_max: f64,
    pub n_cells: usize,
    pub tau: f64,
    pub boundary: Boundary,
}

impl Grid {
    pub fn new(
        q_min: f64,
        q_max: f64,
        n_cells: usize,
        tau: f64,
        boundary: Boundary,
    ) -> Result<Self, ParamError> {
        let grid = Self {
            q_min,
            q_max,
            n_cells,
            tau,
            boundary,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid with `τ = γh`.
    pub fn with_ratio(
        q_min: f64,
        q_max: f64,
        n_cells: usize,
        gamma: f64,
        boundary: Boundary,
    ) -> Result<Self, ParamError> {
        let h = (q_max - q_min) / n_cells as f64;
        Self::new(q_min, q_max, n_cells, gamma * h, boundary)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.n_cells < 8 {
            return Err(ParamError::new("n_cells", self.n_cells as f64, "must be >= 8"));
        }
        if !(self.q_min.is_finite() && self.q_max.is_finite() && self.q_max > self.q_min) {
            return Err(ParamError::new("q_max", self.q_max, "must be finite and > q_min"));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(ParamError::new("tau", self.tau, "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        (self.q_max - self.q_min) / self.n_cells as f64
    }

    /// `γ = τ/h`.
    pub fn gamma(&self) -> f64 {
        self.tau / self.h()
    }

    pub fn len(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.n_cells,
            Boundary::FarField => self.n_cells + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, k: usize) -> f64 {
        self.q_min + k as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }
}

/// `(u, v)` on every node at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub grid: Grid,
}

impl FieldState {
    pub fn from_fn(grid: Grid, t: f64, f: impl Fn(f64) -> StateVec) -> Self {
        let (u, v) = grid.nodes().into_iter().map(|q| {
            let s = f(q);
            (s.u, s.v)
        }).unzip();
        Self { t, u, v, grid }
    }

    pub fn uniform(grid: Grid, t: f64, s: StateVec) -> Self {
        Self::from_fn(grid, t, |_| s)
    }

    /// Background `(u∞, v∞)` plus a Gaussian bump `ε·exp(−(q−q₀)²/2σ²)` in `u`.
    pub fn gaussian_bump(grid: Grid, background: StateVec, epsilon: f64, sigma: f64, q0: f64) -> Self {
        Self::from_fn(grid, 0.0, |q| {
            let z = (q - q0) / sigma;
            StateVec::new(background.u + epsilon * (-0.5 * z * z).exp(), background.v)
        })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn state(&self, k: usize) -> StateVec {
        StateVec::new(self.u[k], self.v[k])
    }

    pub fn states(&self) -> impl Iterator<Item = (f64, StateVec)> + '_ {
        (0..self.len()).map(|k| (self.grid.node(k), self.state(k)))
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.grid.validate()?;
        let n = self.grid.len();
        if self.u.len() != n || self.v.len() != n {
            return Err(SolverError::Layout(format!(
                "expected {n} nodes for a {} grid, got u = {}, v = {}",
                self.grid.boundary.as_str(),
                self.u.len(),
                self.v.len()
            )));
        }
        if let Some(k) = (0..n).find(|&k| !(self.u[k].is_finite() && self.v[k].is_finite())) {
            return Err(SolverError::Layout(format!("non-finite value at node {k}")));
        }
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.v)
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    fn pairs(&self) -> Vec<Vec2> {
        self.u.iter().zip(&self.v).map(|(&u, &v)| [u, v]).collect()
    }

    fn from_pairs(grid: Grid, t: f64, y: &[Vec2]) -> Self {
        let (u, v) = y.iter().map(|p| (p[0], p[1])).unzip();
        Self { t, u, v, grid }
    }

    /// `(1 − w)·self + w·other`, at the interpolated time.
    pub fn lerp(&self, other: &FieldState, w: f64) -> FieldState {
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect()
        };
        FieldState {
            t: (1.0 - w) * self.t + w * other.t,
            u: mix(&self.u, &other.u),
            v: mix(&self.v, &other.v),
            grid: self.grid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub blowup_factor: f64,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            picard_tol: 1e-10,
            picard_max_iters: 50,
            blowup_factor: 1e6,
            max_steps: 60,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.picard_tol.is_finite() && self.picard_tol > 0.0) {
            return Err(ParamError::new("picard_tol", self.picard_tol, "must be > 0"));
        }
        if self.picard_max_iters < 1 {
            return Err(ParamError::new("picard_max_iters", 0.0, "must be >= 1"));
        }
        if !(self.blowup_factor.is_finite() && self.blowup_factor > 1.0) {
            return Err(ParamError::new("blowup_factor", self.blowup_factor, "must be > 1"));
        }
        Ok(())
    }
}

/// Which time levels feed the frozen-coefficient solve.
#[derive(Debug, Clone, Copy)]
pub enum TimeLevels<'a> {
    /// Backward-Euler start from a single level.
    Bootstrap { curr: &'a FieldState },
    /// Three-layer step from levels `n−1` and `n`.
    ThreeLayer { prev: &'a FieldState, curr: &'a FieldState },
}

impl<'a> TimeLevels<'a> {
    fn curr(&self) -> &'a FieldState {
        match *self {
            TimeLevels::Bootstrap { curr } | TimeLevels::ThreeLayer { curr, .. } => curr,
        }
    }

    /// Weight of `A·(δ_{k+1} − δ_{k−1})` relative to `δ_k`.
    fn coupling(&self, grid: &Grid) -> f64 {
        match self {
            TimeLevels::Bootstrap { .. } => grid.tau / (2.0 * grid.h()),
            TimeLevels::ThreeLayer { .. } => grid.tau / (3.0 * grid.h()),
        }
    }

    fn source_weight(&self, grid: &Grid) -> f64 {
        match self {
            TimeLevels::Bootstrap { .. } => grid.tau,
            TimeLevels::ThreeLayer { .. } => 2.0 * grid.tau / 3.0,
        }
    }
}

/// Result of one frozen-coefficient solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub field: FieldState,
    /// `‖r − Mδ‖∞ / ‖r‖∞` of the increment system.
    pub relative_residual: f64,
}

/// Solves the frozen-coefficient system of one step.
///
/// `blocks[k]` is the advection matrix `A_k` and `source[k]` the normalized
/// right-hand side `φ_k`, both frozen at the current Picard iterate.
pub fn solve_linear_system(
    blocks: &[Mat2],
    levels: TimeLevels<'_>,
    source: &[Vec2],
    grid: &Grid,
) -> Result<LinearSolution, SolverError> {
    let curr = levels.curr();
    let n = grid.len();
    if blocks.len() != n || source.len() != n || curr.len() != n {
        return Err(SolverError::Layout(format!(
            "expected {n} blocks/sources/nodes, got {}/{}/{}",
            blocks.len(),
            source.len(),
            curr.len()
        )));
    }
    let c = levels.coupling(grid);
    let w = levels.source_weight(grid);
    let y = curr.pairs();
    let history: Vec<Vec2> = match levels {
        TimeLevels::Bootstrap { .. } => vec![[0.0; 2]; n],
        TimeLevels::ThreeLayer { prev, .. } => y
            .iter()
            .zip(prev.u.iter().zip(&prev.v))
            .map(|(yn, (&pu, &pv))| [(yn[0] - pu) / 3.0, (yn[1] - pv) / 3.0])
            .collect(),
    };

    let (left, right) = neighbour_indices(grid);
    let rhs: Vec<Vec2> = (0..n)
        .map(|k| {
            let jump = match (left[k], right[k]) {
                (Some(l), Some(r)) => [y[r][0] - y[l][0], y[r][1] - y[l][1]],
                _ => [0.0; 2],
            };
            let adv = blocks[k].apply(jump);
            [
                history[k][0] + w * source[k][0] - c * adv[0],
                history[k][1] + w * source[k][1] - c * adv[1],
            ]
        })
        .collect();

    let system = BlockTridiagonal {
        lower: blocks.iter().map(|a| a.scaled(-c)).collect(),
        diag: vec![Mat2::IDENTITY; n],
        upper: blocks.iter().map(|a| a.scaled(c)).collect(),
    };

    let (delta, residual) = match grid.boundary {
        Boundary::Periodic => {
            let d = system.solve_periodic(&rhs)?;
            let r = system.residual_periodic(&d, &rhs);
            (d, r)
        }
        Boundary::FarField => {
            let d = system.solve_bordered(&rhs, [0.0; 2], [0.0; 2])?;
            let r = system.residual_bordered(&d, &rhs);
            (d, r)
        }
    };
    let relative_residual = relative_residual(&residual, &rhs);
    if relative_residual > RESIDUAL_RTOL {
        return Err(SolverError::Residual {
            residual: relative_residual,
            limit: RESIDUAL_RTOL,
        });
    }

    let next: Vec<Vec2> = y
        .iter()
        .zip(&delta)
        .map(|(a, d)| [a[0] + d[0], a[1] + d[1]])
        .collect();
    Ok(LinearSolution {
        field: FieldState::from_pairs(*grid, curr.t + grid.tau, &next),
        relative_residual,
    })
}

fn neighbour_indices(grid: &Grid) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let n = grid.len();
    match grid.boundary {
        Boundary::Periodic => (
            (0..n).map(|k| Some((k + n - 1) % n)).collect(),
            (0..n).map(|k| Some((k + 1) % n)).collect(),
        ),
        Boundary::FarField => (
            (0..n).map(|k| (k > 0 && k < n - 1).then(|| k - 1)).collect(),
            (0..n).map(|k| (k > 0 && k < n - 1).then_some(k + 1)).collect(),
        ),
    }
}

/// Outcome of a converged implicit step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub field: FieldState,
    pub iterations: usize,
    pub last_change: f64,
    pub max_residual: f64,
}

fn freeze(sys: &PdeSystem, t: f64, grid: &Grid, y: &FieldState) -> Result<(Vec<Mat2>, Vec<Vec2>), SolverError> {
    let eval = |k: usize| -> Result<(Mat2, Vec2), SolverError> {
        let q = grid.node(k);
        let s = y.state(k);
        let table = sys.coeffs(t, q, s);
        let a = table
            .advection_matrix()
            .ok_or(crate::error::ModelError::SingularTimeMatrix { q })?;
        let phi = table
            .normalize_source(sys.source(t, q, s))
            .ok_or(crate::error::ModelError::SingularTimeMatrix { q })?;
        Ok((Mat2(a), phi))
    };
    let n = grid.len();
    let pairs: Result<Vec<(Mat2, Vec2)>, SolverError> = if n >= PARALLEL_MIN_NODES {
        (0..n).into_par_iter().map(eval).collect()
    } else {
        (0..n).map(eval).collect()
    };
    Ok(pairs?.into_iter().unzip())
}

fn sup_change(a: &FieldState, b: &FieldState) -> f64 {
    a.u.iter()
        .zip(&b.u)
        .chain(a.v.iter().zip(&b.v))
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn picard(
    sys: &PdeSystem,
    levels: TimeLevels<'_>,
    cfg: &SolverConfig,
    blowup_limit: f64,
) -> Result<StepOutcome, SolverError> {
    cfg.validate()?;
    let curr = levels.curr();
    curr.validate()?;
    if let TimeLevels::ThreeLayer { prev, curr } = levels {
        prev.validate()?;
        if prev.grid != curr.grid {
            return Err(SolverError::Layout("levels live on different grids".into()));
        }
        let dt = curr.t - prev.t;
        if (dt - curr.grid.tau).abs() > 1e-9 * curr.grid.tau.max(curr.t.abs()) {
            return Err(SolverError::Layout(format!(
                "levels are {dt} apart, expected tau = {}",
                curr.grid.tau
            )));
        }
    }
    let grid = curr.grid;
    let t_next = curr.t + grid.tau;
    let mut iterate = curr.clone();
    let mut max_residual = 0.0f64;
    let mut last_change = f64::INFINITY;
    for it in 1..=cfg.picard_max_iters {
        let (blocks, source) = freeze(sys, t_next, &grid, &iterate)?;
        let sol = solve_linear_system(&blocks, levels, &source, &grid)?;
        max_residual = max_residual.max(sol.relative_residual);
        let sup = sol.field.sup_norm();
        if !sup.is_finite() || sup > blowup_limit {
            return Err(SolverError::Diverged { sup, limit: blowup_limit });
        }
        last_change = sup_change(&sol.field, &iterate) / sup.max(f64::MIN_POSITIVE);
        iterate = sol.field;
        if last_change <= cfg.picard_tol {
            return Ok(StepOutcome {
                field: iterate,
                iterations: it,
                last_change,
                max_residual,
            });
        }
    }
    Err(SolverError::IterationFailed {
        iterations: cfg.picard_max_iters,
        last_change,
        last_sup: iterate.sup_norm(),
    })
}

fn blowup_limit(cfg: &SolverConfig, reference: &FieldState) -> f64 {
    cfg.blowup_factor * reference.sup_norm().max(1.0)
}

/// One implicit three-layer step from levels `prev` (`t − τ`) and `curr` (`t`).
pub fn step_three_layer(
    sys: &PdeSystem,
    prev: &FieldState,
    curr: &FieldState,
    cfg: &SolverConfig,
) -> Result<StepOutcome, SolverError> {
    picard(sys, TimeLevels::ThreeLayer { prev, curr }, cfg, blowup_limit(cfg, curr))
}

/// Level 1 from level 0 by one implicit backward-Euler step.
pub fn bootstrap_first_step(
    sys: &PdeSystem,
    init: &FieldState,
    cfg: &SolverConfig,
) -> Result<StepOutcome, SolverError> {
    picard(sys, TimeLevels::Bootstrap { curr: init }, cfg, blowup_limit(cfg, init))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    Diverged,
    IterationFailed,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Completed => "Completed",
            RunStatus::Diverged => "Diverged",
            RunStatus::IterationFailed => "IterationFailed",
        }
    }

    /// Process exit code for this terminal status.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Completed => 0,
            RunStatus::Diverged => 2,
            RunStatus::IterationFailed => 3,
        }
    }
}

/// Per-level observables, measured against the reference state `(u∞, v∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSample {
    pub step: usize,
    pub t: f64,
    pub max_du: f64,
    pub max_dv: f64,
    pub l2_du: f64,
    pub l2_dv: f64,
    /// `Σ q|u − u∞| / Σ |u − u∞|`; NaN when the perturbation vanishes.
    pub centroid: f64,
    /// Picard iterations spent producing this level (0 for the initial data).
    pub picard_iterations: usize,
}

impl DiagnosticSample {
    pub fn measure(field: &FieldState, reference: StateVec, step: usize, picard_iterations: usize) -> Self {
        let h = field.grid.h();
        let mut max_du = 0.0f64;
        let mut max_dv = 0.0f64;
        let mut sq_u = 0.0;
        let mut sq_v = 0.0;
        let mut mass = 0.0;
        let mut moment = 0.0;
        for (k, (&u, &v)) in field.u.iter().zip(&field.v).enumerate() {
            let du = u - reference.u;
            let dv = v - reference.v;
            max_du = max_du.max(du.abs());
            max_dv = max_dv.max(dv.abs());
            sq_u += du * du;
            sq_v += dv * dv;
            mass += du.abs();
            moment += field.grid.node(k) * du.abs();
        }
        Self {
            step,
            t: field.t,
            max_du,
            max_dv,
            l2_du: (h * sq_u).sqrt(),
            l2_dv: (h * sq_v).sqrt(),
            centroid: if mass > 0.0 { moment / mass } else { f64::NAN },
            picard_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub system: String,
    pub status: RunStatus,
    pub reference: StateVec,
    pub snapshots: Vec<FieldState>,
    pub diagnostics: Vec<DiagnosticSample>,
    pub steps_taken: usize,
    pub max_picard_iterations: usize,
    pub max_relative_residual: f64,
    /// Solver message for a non-Completed run.
    pub failure: Option<String>,
}

impl RunReport {
    /// Snapshot recorded at `t` (to within `1e-9 τ`).
    pub fn snapshot_at(&self, t: f64) -> Option<&FieldState> {
        let tol = self
            .snapshots
            .first()
            .map_or(0.0, |s| 1e-9 * s.grid.tau.max(t.abs()));
        self.snapshots.iter().find(|s| (s.t - t).abs() <= tol)
    }
}

/// Marches from `init` to the last snapshot time (or `max_steps`), measuring
/// perturbations against the state at the first node of `init`.
pub fn run(
    sys: &PdeSystem,
    init: &FieldState,
    cfg: &SolverConfig,
    snapshot_times: &[f64],
) -> Result<RunReport, SolverError> {
    init.validate()?;
    run_about(sys, init, cfg, snapshot_times, init.state(0))
}

/// [`run`] with an explicit reference state for the diagnostics.
pub fn run_about(
    sys: &PdeSystem,
    init: &FieldState,
    cfg: &SolverConfig,
    snapshot_times: &[f64],
    reference: StateVec,
) -> Result<RunReport, SolverError> {
    init.validate()?;
    cfg.validate()?;
    let tau = init.grid.tau;
    let horizon = cfg.max_steps as f64 * tau;
    let slack = 1e-9 * tau;
    let mut last = init.t;
    for &ts in snapshot_times {
        if !ts.is_finite() || ts < init.t - slack || ts > init.t + horizon + slack {
            return Err(ParamError::new("snapshot_times", ts, "must lie within the run horizon").into());
        }
        if ts < last - slack {
            return Err(ParamError::new("snapshot_times", ts, "must be nondecreasing").into());
        }
        last = ts;
    }
    let target_steps = if snapshot_times.is_empty() {
        cfg.max_steps
    } else {
        (((last - init.t) / tau) - 1e-9).ceil().max(0.0) as usize
    }
    .min(cfg.max_steps);

    let limit = blowup_limit(cfg, init);
    let level_time = |k: usize| init.t + k as f64 * tau;
    let mut snapshots = Vec::with_capacity(snapshot_times.len());
    let mut pending = snapshot_times.iter().copied().peekable();
    let mut diagnostics = vec![DiagnosticSample::measure(init, reference, 0, 0)];
    let mut max_iters = 0;
    let mut max_residual = 0.0f64;

    let mut take_snapshots = |lo: &FieldState, hi: &FieldState, k_hi: usize, out: &mut Vec<FieldState>| {
        while let Some(&ts) = pending.peek() {
            let x = (ts - init.t) / tau;
            let nearest = x.round();
            if (x - nearest).abs() <= 1e-9 && nearest as usize <= k_hi {
                let level = if nearest as usize == k_hi { hi } else { lo };
                let mut snap = level.clone();
                snap.t = ts;
                out.push(snap);
            } else if ts <= level_time(k_hi) {
                let w = (ts - lo.t) / (hi.t - lo.t);
                out.push(lo.lerp(hi, w));
            } else {
                break;
            }
            pending.next();
        }
    };

    take_snapshots(init, init, 0, &mut snapshots);

    let mut prev: Option<FieldState> = None;
    let mut curr = init.clone();
    let mut status = RunStatus::Completed;
    let mut failure = None;
    let mut steps_taken = 0;
    for k in 1..=target_steps {
        let levels = match &prev {
            None => TimeLevels::Bootstrap { curr: &curr },
            Some(p) => TimeLevels::ThreeLayer { prev: p, curr: &curr },
        };
        match picard(sys, levels, cfg, limit) {
            Ok(outcome) => {
                let mut next = outcome.field;
                next.t = level_time(k);
                max_iters = max_iters.max(outcome.iterations);
                max_residual = max_residual.max(outcome.max_residual);
                diagnostics.push(DiagnosticSample::measure(&next, reference, k, outcome.iterations));
                take_snapshots(&curr, &next, k, &mut snapshots);
                prev = Some(std::mem::replace(&mut curr, next));
                steps_taken = k;
            }
            Err(err) => {
                status = terminal_status(&err, limit / cfg.blowup_factor);
                failure = Some(err.to_string());
                break;
            }
        }
    }

    Ok(RunReport {
        system: sys.name().to_owned(),
        status,
        reference,
        snapshots,
        diagnostics,
        steps_taken,
        max_picard_iterations: max_iters,
        max_relative_residual: max_residual,
        failure,
    })
}

/// Maps a step failure onto a terminal run status. An unconverged Picard
/// iteration whose iterate has already run away from the initial scale is
/// blow-up; any other failure to produce the next level is an iteration
/// failure.
fn terminal_status(err: &SolverError, initial_scale: f64) -> RunStatus {
    match err {
        SolverError::Diverged { .. } => RunStatus::Diverged,
        SolverError::IterationFailed { last_sup, .. }
            if !last_sup.is_finite() || *last_sup > PICARD_RUNAWAY_FACTOR * initial_scale =>
        {
            RunStatus::Diverged
        }
        _ => RunStatus::IterationFailed,
    }
}

#[cfg(test)]
mod tests;
