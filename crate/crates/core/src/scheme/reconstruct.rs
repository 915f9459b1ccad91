//! Recovering the density `ρ` and phase `θ` behind a velocity field.
//!
//! `u = −𝔻 ∂ln ρ/∂q` and `v = (ħ/m) ∂θ/∂q`, so both are cumulative
//! trapezoid integrals from `q_min`.

use crate::error::SolverError;

use super::{Boundary, FieldState};

/// Largest admissible `|∫u dq / 𝔻|` before `exp` would overflow.
pub const LOG_RANGE_GUARD: f64 = 700.0;

fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(values.len());
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Returns `(ρ, θ)` on the nodes of `field`, with `ρ` normalized to unit
/// trapezoid mass over the domain and `θ(q_min) = 0`.
pub fn reconstruct_rho_theta(
    field: &FieldState,
    d_eff: f64,
    hbar_over_m: f64,
) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
    field.validate()?;
    for (name, value) in [("d_eff", d_eff), ("hbar_over_m", hbar_over_m)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(crate::error::ParamError::new(name, value, "must be finite and > 0").into());
        }
    }
    let h = field.grid.h();
    let log_rho: Vec<f64> = cumulative_trapezoid(&field.u, h)
        .into_iter()
        .map(|x| -x / d_eff)
        .collect();
    if let Some(&bad) = log_rho.iter().find(|x| x.abs() > LOG_RANGE_GUARD) {
        return Err(SolverError::LogOverflow {
            value: bad,
            limit: LOG_RANGE_GUARD,
        });
    }
    let mut rho: Vec<f64> = log_rho.iter().map(|x| x.exp()).collect();
    let mass = match field.grid.boundary {
        // One period of n nodes.
        Boundary::Periodic => h * rho.iter().sum::<f64>(),
        Boundary::FarField => {
            let n = rho.len();
            h * (rho.iter().sum::<f64>() - 0.5 * (rho[0] + rho[n - 1]))
        }
    };
    rho.iter_mut().for_each(|r| *r /= mass);

    let theta = cumulative_trapezoid(&field.v, h)
        .into_iter()
        .map(|x| x / hbar_over_m)
        .collect();
    Ok((rho, theta))
}
