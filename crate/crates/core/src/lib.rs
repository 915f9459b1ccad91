//! Numerical laboratory for two-velocity stochastic hydrodynamics.
//!
//! - [`thermo`]: effective temperature, influence, diffusion coefficient and
//!   the temperature factors of a quantum thermostat.
//! - [`model`]: the Nelson, cold-vacuum and warm-vacuum quasilinear systems
//!   and their characteristic classification.
//! - [`scheme`]: the implicit three-layer integrator with Picard iteration,
//!   an explicit reference solver and density/phase reconstruction.
//! - [`stability`]: amplification roots and the stability boundary curve.
//! - [`harness`]: scenario configuration, orchestration and output files.

pub mod error;
pub mod harness;
pub mod model;
pub mod scheme;
pub mod stability;
pub mod thermo;

pub use error::{ModelError, ParamError, SolverError, StabilityError};
pub use model::{
    characteristic_speed, classify, make_general_t, make_modified_t0, make_nelson, Classification,
    PdeSystem, StateVec, SystemLabel, TypeTag,
};
pub use scheme::{
    bootstrap_first_step, reference_explicit_solve, run, step_three_layer, Boundary, FieldState,
    Grid, RunReport, RunStatus, SolverConfig,
};
pub use thermo::{EffectiveQuantities, ThermoParams};
