//! Effective thermodynamics of a system in contact with a quantum thermostat.
//!
//! Every quantity here is a closed-form function of `coth(ϰω/T)` with
//! `ϰ = ħ/2k_B`. The cold-vacuum state `T = 0` is a first-class input and is
//! evaluated through its exact limits instead of through `coth(∞)`.

use serde::{Deserialize, Serialize};

use crate::error::ParamError;

/// Above this argument `coth x` is evaluated as `1 + 2e^{-2x}`.
const COTH_SERIES_CUTOFF: f64 = 20.0;

/// Physical constants and thermostat state.
///
/// Defaults are reduced units `ħ = k_B = m = ω = 1` at `T = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoParams {
    pub hbar: f64,
    pub k_b: f64,
    pub mass: f64,
    pub omega: f64,
    pub temperature: f64,
}

impl Default for ThermoParams {
    fn default() -> Self {
        Self::reduced(0.0)
    }
}

impl ThermoParams {
    /// Reduced units at Kelvin temperature `temperature`.
    pub fn reduced(temperature: f64) -> Self {
        Self {
            hbar: 1.0,
            k_b: 1.0,
            mass: 1.0,
            omega: 1.0,
            temperature,
        }
    }

    pub fn with_temperature(self, temperature: f64) -> Self {
        Self { temperature, ..self }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("hbar", self.hbar),
            ("k_b", self.k_b),
            ("mass", self.mass),
            ("omega", self.omega),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParamError::new(name, value, "must be finite and > 0"));
            }
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(ParamError::new(
                "temperature",
                self.temperature,
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }

    /// `ϰ = ħ / 2k_B`.
    pub fn kappa(&self) -> f64 {
        self.hbar / (2.0 * self.k_b)
    }

    /// `ϰω/T`, or `None` for the cold vacuum where the ratio is unbounded.
    pub fn coth_argument(&self) -> Option<f64> {
        if self.temperature == 0.0 {
            None
        } else {
            Some(self.kappa() * self.omega / self.temperature)
        }
    }

    /// `Υ = coth(ϰω/T)`, exactly 1 at `T = 0`.
    fn upsilon(&self) -> f64 {
        self.coth_argument().map_or(1.0, coth)
    }
}

/// `coth x` for `x > 0`, switching to the exponential tail for large `x`.
pub fn coth(x: f64) -> f64 {
    if x > COTH_SERIES_CUTOFF {
        1.0 + 2.0 * (-2.0 * x).exp()
    } else {
        1.0 / x.tanh()
    }
}

/// `sinh⁻²x` for `x > 0`; tends to zero as `4e^{-2x}` for large `x`.
fn inv_sinh_sq(x: f64) -> f64 {
    if x > COTH_SERIES_CUTOFF {
        let e = (-2.0 * x).exp();
        4.0 * e / ((1.0 - e) * (1.0 - e))
    } else {
        let s = x.sinh();
        1.0 / (s * s)
    }
}

/// Effective temperature `𝕋 = ϰω·coth(ϰω/T)`; equals `ϰω` at `T = 0`.
pub fn effective_temperature(p: &ThermoParams) -> Result<f64, ParamError> {
    p.validate()?;
    Ok(p.omega * half_hbar_coth(p) / p.k_b)
}

/// Effective influence `𝕁 = (ħ/2)·coth(ϰω/T)`; equals `ħ/2` at `T = 0`.
pub fn effective_influence(p: &ThermoParams) -> Result<f64, ParamError> {
    p.validate()?;
    Ok(half_hbar_coth(p))
}

/// Effective self-diffusion coefficient `𝔻 = 𝕁/m`.
pub fn effective_diffusion(p: &ThermoParams) -> Result<f64, ParamError> {
    p.validate()?;
    Ok(half_hbar_coth(p) / p.mass)
}

/// Effective internal energy `𝕌 = ω𝕁`.
pub fn effective_energy(p: &ThermoParams) -> Result<f64, ParamError> {
    p.validate()?;
    Ok(p.omega * half_hbar_coth(p))
}

/// Effective entropy `𝕊 = −k_B(1 + ln(2𝕁/ħ))`.
///
/// Evaluated as written; the value is negative for every `T`, so callers
/// should not treat it as a conventional thermodynamic entropy.
pub fn effective_entropy(p: &ThermoParams) -> Result<f64, ParamError> {
    p.validate()?;
    let ratio = 2.0 * half_hbar_coth(p) / p.hbar;
    Ok(-p.k_b * (1.0 + ratio.ln()))
}

/// Temperature factors entering the generalized momentum equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureFactors {
    /// `α² = sinh⁻²(ϰω/T)`.
    pub alpha_sq: f64,
    /// `Υ = coth(ϰω/T)`.
    pub upsilon: f64,
    /// `Ξ_T = 2Υ² − 1`.
    pub xi: f64,
}

pub fn temperature_factors(p: &ThermoParams) -> Result<TemperatureFactors, ParamError> {
    p.validate()?;
    Ok(match p.coth_argument() {
        None => TemperatureFactors {
            alpha_sq: 0.0,
            upsilon: 1.0,
            xi: 1.0,
        },
        Some(x) => {
            let upsilon = coth(x);
            TemperatureFactors {
                alpha_sq: inv_sinh_sq(x),
                upsilon,
                xi: 2.0 * upsilon * upsilon - 1.0,
            }
        }
    })
}

/// All effective quantities at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveQuantities {
    pub kappa: f64,
    pub temperature: f64,
    pub influence: f64,
    pub diffusion: f64,
    pub energy: f64,
    pub entropy: f64,
    pub alpha_sq: f64,
    pub upsilon: f64,
    pub xi: f64,
}

impl EffectiveQuantities {
    pub fn evaluate(p: &ThermoParams) -> Result<Self, ParamError> {
        let factors = temperature_factors(p)?;
        Ok(Self {
            kappa: p.kappa(),
            temperature: effective_temperature(p)?,
            influence: effective_influence(p)?,
            diffusion: effective_diffusion(p)?,
            energy: effective_energy(p)?,
            entropy: effective_entropy(p)?,
            alpha_sq: factors.alpha_sq,
            upsilon: factors.upsilon,
            xi: factors.xi,
        })
    }
}

// Shared kernel so that 𝕋, 𝕁, 𝔻 and 𝕌 are scalings of one expression.
fn half_hbar_coth(p: &ThermoParams) -> f64 {
    0.5 * p.hbar * p.upsilon()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn cold_vacuum_limits() {
        let p = ThermoParams::reduced(0.0);
        assert_eq!(effective_temperature(&p).unwrap(), 0.5);
        assert_eq!(effective_influence(&p).unwrap(), 0.5);
        assert_eq!(effective_diffusion(&p).unwrap(), 0.5);
        assert_eq!(effective_entropy(&p).unwrap(), -1.0);
        let f = temperature_factors(&p).unwrap();
        assert_eq!((f.alpha_sq, f.upsilon, f.xi), (0.0, 1.0, 1.0));
    }

    // Reference values from a 40-digit evaluation of coth.
    #[test]
    fn arbitrary_precision_references() {
        let t10 = effective_temperature(&ThermoParams::reduced(10.0)).unwrap();
        assert!(rel(t10, 10.008_331_944_775_05) < 1e-14);

        let j = effective_influence(&ThermoParams::reduced(0.5)).unwrap();
        assert!(rel(j, 0.656_517_642_749_665_7) < 1e-14);

        let s = effective_entropy(&ThermoParams::reduced(0.5)).unwrap();
        assert!(rel(s, -1.272_341_468_911_831_6) < 1e-14);

        let d = effective_diffusion(&ThermoParams::reduced(100.0)).unwrap();
        assert!(rel(d, 100.000_833_331_944_45) < 1e-13);
        assert!(rel(d, 100.0) < 1e-4);

        // ϰω/T = 1 at T = 0.5 in reduced units.
        let f = temperature_factors(&ThermoParams::reduced(0.5)).unwrap();
        assert!(rel(f.upsilon, 1.313_035_285_499_331_3) < 1e-14);
        assert!(rel(f.xi, 2.448_123_321_932_621) < 1e-14);
        assert!(rel(f.alpha_sq, 0.724_061_660_966_310_5) < 1e-14);
    }

    #[test]
    fn high_temperature_tracks_kelvin_temperature() {
        let p = ThermoParams::reduced(0.0);
        for s in [1e3, 1e4, 1e5] {
            let t = p.kappa() * p.omega * s;
            let te = effective_temperature(&p.with_temperature(t)).unwrap();
            assert!(rel(te, t) <= 1.0 / (s * s), "s = {s}");
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        let bad = [
            ThermoParams { hbar: 0.0, ..ThermoParams::default() },
            ThermoParams { k_b: -1.0, ..ThermoParams::default() },
            ThermoParams { mass: f64::NAN, ..ThermoParams::default() },
            ThermoParams { omega: 0.0, ..ThermoParams::default() },
            ThermoParams::reduced(-1e-3),
        ];
        for p in bad {
            assert!(effective_temperature(&p).is_err());
            assert!(effective_influence(&p).is_err());
            assert!(effective_diffusion(&p).is_err());
            assert!(effective_entropy(&p).is_err());
            assert!(temperature_factors(&p).is_err());
        }
        let err = effective_influence(&ThermoParams::reduced(-1.0)).unwrap_err();
        assert_eq!(err.field, "temperature");
    }

    #[test]
    fn entropy_magnitude_grows_with_temperature() {
        let mut last = effective_entropy(&ThermoParams::reduced(0.0)).unwrap().abs();
        for k in 0..40 {
            let t = 10f64.powf(-2.0 + 0.1 * k as f64);
            let s = effective_entropy(&ThermoParams::reduced(t)).unwrap().abs();
            assert!(s >= last);
            last = s;
        }
    }

    #[test]
    fn continuous_across_cold_vacuum() {
        let cold = EffectiveQuantities::evaluate(&ThermoParams::reduced(0.0)).unwrap();
        let warm = EffectiveQuantities::evaluate(&ThermoParams::reduced(1e-12)).unwrap();
        for (a, b) in [
            (cold.temperature, warm.temperature),
            (cold.influence, warm.influence),
            (cold.diffusion, warm.diffusion),
            (cold.energy, warm.energy),
            (cold.entropy, warm.entropy),
            (cold.upsilon, warm.upsilon),
            (cold.xi, warm.xi),
        ] {
            assert!(rel(b, a) <= 1e-9);
        }
        assert!(warm.alpha_sq.abs() <= 1e-9);
    }

    #[test]
    fn coth_branches_agree_at_cutoff() {
        let x = COTH_SERIES_CUTOFF;
        let direct = 1.0 / x.tanh();
        let tail = 1.0 + 2.0 * (-2.0 * x).exp();
        assert!((direct - tail).abs() <= 2.0 * f64::EPSILON);
    }
}
