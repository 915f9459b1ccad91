//! Von Neumann analysis of the three-layer scheme on `y_t + a y_q = 0`.
//!
//! The Fourier mode `y_k^n = η^n e^{ikhθ}` turns the scheme into
//! `μη² − 4η + 1 = 0` with `μ = 3 + 2aγ i sin θ` and `γ = τ/h`. Setting
//! `|η| = 1` traces the boundary curve
//!
//! ```text
//! Γ(φ) = 4e^{iφ} − e^{2iφ},   r = 4cos φ − cos 2φ,   s = 4sin φ − sin 2φ
//! ```
//!
//! Points outside Γ keep both roots in the closed unit disk.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ParamError, StabilityError};

/// Slack on `|η| ≤ 1` so the neutral mode at `μ = 3` counts as stable.
pub const STABILITY_TOL: f64 = 1e-12;

/// Relative distance below which a point is reported as lying on Γ.
pub const ON_CURVE_RTOL: f64 = 1e-9;

/// Smallest polygon resolution accepted by [`curve_region_check`].
pub const MIN_CURVE_SAMPLES: usize = 64;

/// Both roots of `μη² − 4η + 1 = 0`, larger modulus first.
pub fn amplification_roots(mu: Complex64) -> Result<(Complex64, Complex64), StabilityError> {
    if mu == Complex64::new(0.0, 0.0) {
        return Err(StabilityError::DegenerateLeading { root: 0.25 });
    }
    // η = (2 ± √(4 − μ))/μ; (2 + s)(2 − s) = μ gives the small root as 1/(2 ± s).
    let s = (Complex64::new(4.0, 0.0) - mu).sqrt();
    let two = Complex64::new(2.0, 0.0);
    let w = if (two + s).norm() >= (two - s).norm() { two + s } else { two - s };
    Ok((w / mu, w.inv()))
}

/// A frozen-coefficient Fourier query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplificationQuery {
    /// Advection speed `a`.
    pub a: f64,
    /// `γ = τ/h`.
    pub gamma: f64,
    /// Fourier phase `θ`.
    pub theta: f64,
}

impl AmplificationQuery {
    pub fn mu(&self) -> Complex64 {
        Complex64::new(3.0, 2.0 * self.a * self.gamma * self.theta.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub max_root_modulus: f64,
}

pub fn is_stable(q: &AmplificationQuery) -> Result<StabilityVerdict, StabilityError> {
    if !(q.gamma.is_finite() && q.gamma > 0.0) {
        return Err(ParamError::new("gamma", q.gamma, "must be > 0").into());
    }
    // Re μ = 3, so the degenerate case cannot occur here.
    let (big, _) = amplification_roots(q.mu())?;
    let max_root_modulus = big.norm();
    Ok(StabilityVerdict {
        stable: max_root_modulus <= 1.0 + STABILITY_TOL,
        max_root_modulus,
    })
}

/// `max|η|` over `n` equispaced phases `θ_j = 2πj/n`.
pub fn sweep_theta(a_gamma: f64, n: usize) -> Result<StabilityVerdict, StabilityError> {
    let mut worst = 0.0f64;
    for j in 0..n {
        let q = AmplificationQuery {
            a: a_gamma,
            gamma: 1.0,
            theta: TAU * j as f64 / n as f64,
        };
        worst = worst.max(is_stable(&q)?.max_root_modulus);
    }
    Ok(StabilityVerdict {
        stable: worst <= 1.0 + STABILITY_TOL,
        max_root_modulus: worst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaCurvePoint {
    pub phi: f64,
    pub r: f64,
    pub s: f64,
}

impl GammaCurvePoint {
    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.r, self.s)
    }
}

/// Point of Γ at parameter `phi`.
///
/// Parameters above π are folded to `φ − 2π` so that mirrored parameters
/// produce exactly conjugate points.
pub fn gamma_curve(phi: f64) -> GammaCurvePoint {
    let x = if phi > PI { -(TAU - phi) } else { phi };
    GammaCurvePoint {
        phi,
        r: 4.0 * x.cos() - (2.0 * x).cos(),
        s: 4.0 * x.sin() - (2.0 * x).sin(),
    }
}

/// Γ sampled at `φ_j = 2πj/n`, `j = 0..n`.
pub fn gamma_polygon(n: usize) -> Vec<GammaCurvePoint> {
    (0..n).map(|j| gamma_curve(TAU * j as f64 / n as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    InsideGamma,
    OutsideGamma,
    OnGamma,
}

/// Locates `mu` relative to the polygonal Γ with `n_samples` vertices.
pub fn curve_region_check(mu: Complex64, n_samples: usize) -> Result<Region, StabilityError> {
    if n_samples < MIN_CURVE_SAMPLES {
        return Err(ParamError::new(
            "n_samples",
            n_samples as f64,
            "need at least 64 samples",
        )
        .into());
    }
    let poly = gamma_polygon(n_samples);
    let (px, py) = (mu.re, mu.im);
    let mut winding = 0i64;
    let mut dist = f64::INFINITY;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        dist = dist.min(segment_distance(px, py, a.r, a.s, b.r, b.s));
        let cross = (b.r - a.r) * (py - a.s) - (px - a.r) * (b.s - a.s);
        if a.s <= py {
            if b.s > py && cross > 0.0 {
                winding += 1;
            }
        } else if b.s <= py && cross < 0.0 {
            winding -= 1;
        }
    }
    Ok(if dist < ON_CURVE_RTOL * (1.0 + mu.norm()) {
        Region::OnGamma
    } else if winding != 0 {
        Region::InsideGamma
    } else {
        Region::OutsideGamma
    })
}

fn segment_distance(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (px - (ax + t * dx)).hypot(py - (ay + t * dy))
}

/// `max|η|` on a rectangular `aγ × θ` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityMap {
    pub a_gamma: Vec<f64>,
    pub theta: Vec<f64>,
    /// Row-major: `max_modulus[i * theta.len() + j]`.
    pub max_modulus: Vec<f64>,
}

impl StabilityMap {
    /// Evaluates the map; `theta` covers `θ_j = 2πj/n_theta`, `j = 0..n_theta`.
    pub fn compute(a_gamma: &[f64], n_theta: usize) -> Result<Self, StabilityError> {
        let theta: Vec<f64> = (0..n_theta).map(|j| TAU * j as f64 / n_theta as f64).collect();
        let mut max_modulus = Vec::with_capacity(a_gamma.len() * n_theta);
        for &ag in a_gamma {
            for &th in &theta {
                let q = AmplificationQuery { a: ag, gamma: 1.0, theta: th };
                max_modulus.push(is_stable(&q)?.max_root_modulus);
            }
        }
        Ok(Self {
            a_gamma: a_gamma.to_vec(),
            theta,
            max_modulus,
        })
    }

    pub fn all_stable(&self) -> bool {
        self.max_modulus.iter().all(|&m| m <= 1.0 + STABILITY_TOL)
    }

    pub fn worst(&self) -> f64 {
        self.max_modulus.iter().copied().fold(0.0, f64::max)
    }
}
