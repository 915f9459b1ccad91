//! Two-velocity quasilinear systems in coefficient form and their type
//! classification.
//!
//! Each row of a system is
//!
//! ```text
//! L_i = A_i u_t + B_i u_q + C_i v_t + D_i v_q = f_i(t, q, u, v),   i = 1, 2
//! ```
//!
//! A direction `(t_l, q_l)` is characteristic when some combination of the
//! rows differentiates `u` and `v` only along it, which happens exactly when
//!
//! ```text
//! a t_l² − 2b t_l q_l + c q_l² = 0,   a = [BD], 2b = [AD] + [BC], c = [AC]
//! ```
//!
//! with `[XY] = X₁Y₂ − X₂Y₁`. The sign of `b² − ac` decides the type.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, ParamError};

/// Relative tolerance below which the discriminant counts as zero.
pub const DISCRIMINANT_RTOL: f64 = 1e-12;

/// Diffusion velocity `u` and drift velocity `v` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVec {
    pub u: f64,
    pub v: f64,
}

impl StateVec {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// The eight coefficients of a 2×2 first-order quasilinear system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffTable {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub d1: f64,
    pub a2: f64,
    pub b2: f64,
    pub c2: f64,
    pub d2: f64,
}

impl CoeffTable {
    pub fn as_array(&self) -> [f64; 8] {
        [
            self.a1, self.b1, self.c1, self.d1, self.a2, self.b2, self.c2, self.d2,
        ]
    }

    /// Multiplies row 1 by `k1` and row 2 by `k2`.
    pub fn scale_rows(&self, k1: f64, k2: f64) -> Self {
        Self {
            a1: k1 * self.a1,
            b1: k1 * self.b1,
            c1: k1 * self.c1,
            d1: k1 * self.d1,
            a2: k2 * self.a2,
            b2: k2 * self.b2,
            c2: k2 * self.c2,
            d2: k2 * self.d2,
        }
    }

    /// Advection matrix `M` of the vector form `y_t + M y_q = T⁻¹f`, where
    /// `T = [[A₁, C₁], [A₂, C₂]]` multiplies the time derivatives.
    pub fn advection_matrix(&self) -> Option<[[f64; 2]; 2]> {
        let space = [[self.b1, self.d1], [self.b2, self.d2]];
        if self.has_unit_time_part() {
            return Some(space);
        }
        let t_inv = self.time_inverse()?;
        Some(mat_mul(&t_inv, &space))
    }

    /// `T⁻¹ f` for a right-hand side `f`.
    pub fn normalize_source(&self, f: [f64; 2]) -> Option<[f64; 2]> {
        if self.has_unit_time_part() {
            return Some(f);
        }
        let t = self.time_inverse()?;
        Some([
            t[0][0] * f[0] + t[0][1] * f[1],
            t[1][0] * f[0] + t[1][1] * f[1],
        ])
    }

    fn has_unit_time_part(&self) -> bool {
        self.a1 == 1.0 && self.c1 == 0.0 && self.a2 == 0.0 && self.c2 == 1.0
    }

    fn time_inverse(&self) -> Option<[[f64; 2]; 2]> {
        let det = self.a1 * self.c2 - self.c1 * self.a2;
        let scale = self.a1.abs().max(self.c1.abs()).max(self.a2.abs()).max(self.c2.abs());
        if det == 0.0 || det.abs() <= 1e-14 * scale * scale {
            return None;
        }
        Some([
            [self.c2 / det, -self.c1 / det],
            [-self.a2 / det, self.a1 / det],
        ])
    }
}

fn mat_mul(x: &[[f64; 2]; 2], y: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            x[0][0] * y[0][0] + x[0][1] * y[1][0],
            x[0][0] * y[0][1] + x[0][1] * y[1][1],
        ],
        [
            x[1][0] * y[0][0] + x[1][1] * y[1][0],
            x[1][0] * y[0][1] + x[1][1] * y[1][1],
        ],
    ]
}

/// Which governing system a [`PdeSystem`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemLabel {
    /// Nelson stochastic mechanics, T = 0.
    Nelson,
    /// Self-diffusion-corrected cold-vacuum system.
    ModifiedT0,
    /// Warm-vacuum system with temperature factor `Ξ_T`.
    GeneralT,
    /// User-supplied coefficients (tests, model problems).
    Custom,
}

impl SystemLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            SystemLabel::Nelson => "nelson",
            SystemLabel::ModifiedT0 => "modified-t0",
            SystemLabel::GeneralT => "general-t",
            SystemLabel::Custom => "custom",
        }
    }
}

impl fmt::Display for SystemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "nelson" => Ok(SystemLabel::Nelson),
            "modified-t0" => Ok(SystemLabel::ModifiedT0),
            "general-t" => Ok(SystemLabel::GeneralT),
            other => Err(format!(
                "unknown system `{other}` (expected nelson | modified-t0 | general-t)"
            )),
        }
    }
}

type CoeffFn = dyn Fn(f64, f64, StateVec) -> CoeffTable + Send + Sync;
type SourceFn = dyn Fn(f64, f64, StateVec) -> [f64; 2] + Send + Sync;
type GradientFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum Coefficients {
    Nelson,
    ModifiedT0,
    GeneralT { xi: f64 },
    Custom { coeffs: Arc<CoeffFn>, source: Arc<SourceFn> },
}

/// A 2×2 quasilinear first-order system for `(u, v)`.
///
/// Values are immutable after construction and cheap to clone.
#[derive(Clone)]
pub struct PdeSystem {
    coefficients: Coefficients,
    name: String,
    potential_gradient: Option<Arc<GradientFn>>,
}

impl fmt::Debug for PdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeSystem")
            .field("label", &self.label())
            .field("name", &self.name)
            .field("xi", &self.xi())
            .field("has_potential", &self.potential_gradient.is_some())
            .finish()
    }
}

/// `u_t + v u_q + u v_q = 0`, `v_t + v v_q − u u_q = α̃(q)`.
pub fn make_nelson() -> PdeSystem {
    PdeSystem::builtin(Coefficients::Nelson)
}

/// `u_t + (v + 2u) u_q + u v_q = 0`, `v_t + v v_q − u u_q = α̃(q)`.
pub fn make_modified_t0() -> PdeSystem {
    PdeSystem::builtin(Coefficients::ModifiedT0)
}

/// `u_t + (v + 2u) u_q + u v_q = 0`, `v_t + v v_q − Ξ u u_q = −α̃(q)`,
/// with `u` standing for the effective diffusion velocity.
pub fn make_general_t(xi: f64) -> Result<PdeSystem, ParamError> {
    if !(xi.is_finite() && xi >= 1.0) {
        return Err(ParamError::new("xi", xi, "temperature factor must be >= 1"));
    }
    Ok(PdeSystem::builtin(Coefficients::GeneralT { xi }))
}

impl PdeSystem {
    fn builtin(coefficients: Coefficients) -> Self {
        let mut sys = Self {
            coefficients,
            name: String::new(),
            potential_gradient: None,
        };
        sys.name = sys.label().as_str().to_owned();
        sys
    }

    /// Builds a system from arbitrary coefficient and source functions.
    pub fn custom<C, S>(name: impl Into<String>, coeffs: C, source: S) -> Self
    where
        C: Fn(f64, f64, StateVec) -> CoeffTable + Send + Sync + 'static,
        S: Fn(f64, f64, StateVec) -> [f64; 2] + Send + Sync + 'static,
    {
        Self {
            coefficients: Coefficients::Custom {
                coeffs: Arc::new(coeffs),
                source: Arc::new(source),
            },
            name: name.into(),
            potential_gradient: None,
        }
    }

    /// Builds one of the three named systems.
    pub fn from_label(label: SystemLabel, xi: f64) -> Result<Self, ParamError> {
        match label {
            SystemLabel::Nelson => Ok(make_nelson()),
            SystemLabel::ModifiedT0 => Ok(make_modified_t0()),
            SystemLabel::GeneralT => make_general_t(xi),
            SystemLabel::Custom => Err(ParamError::new(
                "system",
                f64::NAN,
                "custom systems need explicit coefficient functions",
            )),
        }
    }

    /// Installs `α̃(q) = (1/m) ∂U/∂q`.
    pub fn with_potential_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.potential_gradient = Some(Arc::new(gradient));
        self
    }

    pub fn label(&self) -> SystemLabel {
        match self.coefficients {
            Coefficients::Nelson => SystemLabel::Nelson,
            Coefficients::ModifiedT0 => SystemLabel::ModifiedT0,
            Coefficients::GeneralT { .. } => SystemLabel::GeneralT,
            Coefficients::Custom { .. } => SystemLabel::Custom,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Temperature factor; `None` outside the general-T family.
    pub fn xi(&self) -> Option<f64> {
        match self.coefficients {
            Coefficients::GeneralT { xi } => Some(xi),
            _ => None,
        }
    }

    fn alpha(&self, q: f64) -> f64 {
        self.potential_gradient.as_ref().map_or(0.0, |g| g(q))
    }

    pub fn coeffs(&self, t: f64, q: f64, s: StateVec) -> CoeffTable {
        let StateVec { u, v } = s;
        match &self.coefficients {
            Coefficients::Nelson => CoeffTable {
                a1: 1.0,
                b1: v,
                c1: 0.0,
                d1: u,
                a2: 0.0,
                b2: -u,
                c2: 1.0,
                d2: v,
            },
            Coefficients::ModifiedT0 => modified_table(u, v, -u),
            Coefficients::GeneralT { xi } => {
                // Ξ = 1 must reproduce the cold-vacuum table bit for bit.
                let b2 = if *xi == 1.0 { -u } else { -xi * u };
                modified_table(u, v, b2)
            }
            Coefficients::Custom { coeffs, .. } => coeffs(t, q, s),
        }
    }

    /// Right-hand sides `(f₁, f₂)` of the two rows.
    pub fn source(&self, t: f64, q: f64, s: StateVec) -> [f64; 2] {
        match &self.coefficients {
            Coefficients::Nelson | Coefficients::ModifiedT0 => [0.0, self.alpha(q)],
            // `0.0 - α` keeps the zero source positive, matching the cold table.
            Coefficients::GeneralT { .. } => [0.0, 0.0 - self.alpha(q)],
            Coefficients::Custom { source, .. } => {
                let [f1, f2] = source(t, q, s);
                [f1, f2 + self.alpha(q)]
            }
        }
    }

    /// Whether the system is known to be homogeneous (zero source everywhere).
    pub fn is_homogeneous(&self) -> bool {
        self.potential_gradient.is_none() && !matches!(self.coefficients, Coefficients::Custom { .. })
    }
}

fn modified_table(u: f64, v: f64, b2: f64) -> CoeffTable {
    CoeffTable {
        a1: 1.0,
        b1: 2.0 * u + v,
        c1: 0.0,
        d1: u,
        a2: 0.0,
        b2,
        c2: 1.0,
        d2: v,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeTag {
    Elliptic,
    Parabolic,
    Hyperbolic,
    Degenerate,
}

impl TypeTag {
    pub const ALL: [TypeTag; 4] = [
        TypeTag::Elliptic,
        TypeTag::Parabolic,
        TypeTag::Hyperbolic,
        TypeTag::Degenerate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TypeTag::Elliptic => "elliptic",
            TypeTag::Parabolic => "parabolic",
            TypeTag::Hyperbolic => "hyperbolic",
            TypeTag::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Type of a system at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub discriminant: f64,
    pub type_tag: TypeTag,
    /// Characteristic slopes `dq/dt`; `±∞` marks the direction `t_l = 0`.
    pub char_slopes: Vec<f64>,
}

/// Bracket `[XY] = X₁Y₂ − X₂Y₁`.
fn bracket(x1: f64, x2: f64, y1: f64, y2: f64) -> f64 {
    x1 * y2 - x2 * y1
}

/// Magnitude against which `b² − ac` is judged to vanish: `max(1, b̂² + âĉ)`
/// with `â`, `b̂`, `ĉ` the brackets evaluated on absolute values, so that the
/// test is insensitive to cancellation inside the brackets and to row scaling.
pub fn discriminant_scale(k: &CoeffTable) -> f64 {
    let abs_bracket = |x1: f64, x2: f64, y1: f64, y2: f64| (x1 * y2).abs() + (x2 * y1).abs();
    let a = abs_bracket(k.b1, k.b2, k.d1, k.d2);
    let b = 0.5 * (abs_bracket(k.a1, k.a2, k.d1, k.d2) + abs_bracket(k.b1, k.b2, k.c1, k.c2));
    let c = abs_bracket(k.a1, k.a2, k.c1, k.c2);
    1f64.max(b * b + a * c)
}

/// Classifies the coefficient table directly.
pub fn classify_table(k: &CoeffTable) -> Classification {
    let a = bracket(k.b1, k.b2, k.d1, k.d2);
    let b = 0.5 * (bracket(k.a1, k.a2, k.d1, k.d2) + bracket(k.b1, k.b2, k.c1, k.c2));
    let c = bracket(k.a1, k.a2, k.c1, k.c2);
    let discriminant = b * b - a * c;

    if a == 0.0 && b == 0.0 && c == 0.0 {
        return Classification {
            a,
            b,
            c,
            discriminant,
            type_tag: TypeTag::Degenerate,
            char_slopes: Vec::new(),
        };
    }

    let scale = discriminant_scale(k);
    let (type_tag, char_slopes) = if discriminant.abs() <= DISCRIMINANT_RTOL * scale {
        // Double root of c s² − 2b s + a = 0 with s = q_l / t_l.
        let slope = if c != 0.0 { b / c } else { f64::INFINITY };
        (TypeTag::Parabolic, vec![slope])
    } else if discriminant < 0.0 {
        (TypeTag::Elliptic, Vec::new())
    } else {
        (TypeTag::Hyperbolic, hyperbolic_slopes(a, b, c, discriminant))
    };

    Classification {
        a,
        b,
        c,
        discriminant,
        type_tag,
        char_slopes,
    }
}

// Distinct real roots of c s² − 2b s + a = 0, ascending.
fn hyperbolic_slopes(a: f64, b: f64, c: f64, disc: f64) -> Vec<f64> {
    let root = disc.sqrt();
    let w = b + root.copysign(b);
    let mut slopes = if c == 0.0 {
        // One direction has t_l = 0.
        vec![a / (2.0 * b), f64::INFINITY]
    } else if w == 0.0 {
        vec![root / c, -root / c]
    } else {
        vec![w / c, a / w]
    };
    slopes.sort_by(|x, y| x.total_cmp(y));
    slopes
}

pub fn classify(sys: &PdeSystem, t: f64, q: f64, s: StateVec) -> Classification {
    classify_table(&sys.coeffs(t, q, s))
}

/// Transport speed `dq/dt` of a parabolic system.
///
/// For the cold- and warm-vacuum families this is `u + v`; any other
/// parabolic system returns the double root of its quadratic form.
pub fn characteristic_speed(sys: &PdeSystem, s: StateVec) -> Result<f64, ModelError> {
    let class = classify(sys, 0.0, 0.0, s);
    if class.type_tag != TypeTag::Parabolic {
        return Err(ModelError::NotParabolic {
            label: sys.name().to_owned(),
            found: class.type_tag.to_string(),
        });
    }
    Ok(match sys.label() {
        SystemLabel::ModifiedT0 | SystemLabel::GeneralT => s.u + s.v,
        _ => class.char_slopes[0],
    })
}

/// Per-point classification of a field plus aggregate counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldClassification {
    pub points: Vec<Classification>,
    pub summary: ClassificationSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSummary {
    pub elliptic: usize,
    pub parabolic: usize,
    pub hyperbolic: usize,
    pub degenerate: usize,
    pub min_discriminant: f64,
    pub max_discriminant: f64,
}

impl ClassificationSummary {
    pub fn total(&self) -> usize {
        self.elliptic + self.parabolic + self.hyperbolic + self.degenerate
    }

    pub fn count(&self, tag: TypeTag) -> usize {
        match tag {
            TypeTag::Elliptic => self.elliptic,
            TypeTag::Parabolic => self.parabolic,
            TypeTag::Hyperbolic => self.hyperbolic,
            TypeTag::Degenerate => self.degenerate,
        }
    }

    /// The single type shared by every point, if there is one.
    pub fn uniform_type(&self) -> Option<TypeTag> {
        TypeTag::ALL
            .into_iter()
            .find(|&tag| self.total() > 0 && self.count(tag) == self.total())
    }
}

/// Classifies `(t, q_k, u_k, v_k)` at every node.
pub fn classify_points(
    sys: &PdeSystem,
    t: f64,
    nodes: impl IntoIterator<Item = (f64, StateVec)>,
) -> FieldClassification {
    let points: Vec<Classification> = nodes
        .into_iter()
        .map(|(q, s)| classify(sys, t, q, s))
        .collect();
    let mut summary = ClassificationSummary {
        elliptic: 0,
        parabolic: 0,
        hyperbolic: 0,
        degenerate: 0,
        min_discriminant: f64::INFINITY,
        max_discriminant: f64::NEG_INFINITY,
    };
    for p in &points {
        match p.type_tag {
            TypeTag::Elliptic => summary.elliptic += 1,
            TypeTag::Parabolic => summary.parabolic += 1,
            TypeTag::Hyperbolic => summary.hyperbolic += 1,
            TypeTag::Degenerate => summary.degenerate += 1,
        }
        summary.min_discriminant = summary.min_discriminant.min(p.discriminant);
        summary.max_discriminant = summary.max_discriminant.max(p.discriminant);
    }
    FieldClassification { points, summary }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nelson_table() {
        let sys = make_nelson();
        let k = sys.coeffs(0.0, 0.0, StateVec::new(1.0, 2.0));
        assert_eq!(k.as_array(), [1.0, 2.0, 0.0, 1.0, 0.0, -1.0, 1.0, 2.0]);
        let k0 = sys.coeffs(0.0, 0.0, StateVec::new(0.0, 0.0));
        assert_eq!(k0.as_array(), [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(sys.source(0.3, 1.0, StateVec::new(0.4, 0.2)), [0.0, 0.0]);
    }

    #[test]
    fn modified_table_values() {
        let sys = make_modified_t0();
        let k = sys.coeffs(0.0, 0.0, StateVec::new(1.0, 2.0));
        assert_eq!(k.as_array(), [1.0, 4.0, 0.0, 1.0, 0.0, -1.0, 1.0, 2.0]);
        assert_eq!(sys.source(0.0, -3.0, StateVec::new(1.0, 1.0)), [0.0, 0.0]);
        // At u = 0 the Nelson and modified tables coincide.
        for v in [-3.0, 0.0, 0.25, 7.0] {
            let s = StateVec::new(0.0, v);
            assert_eq!(
                sys.coeffs(0.0, 0.0, s),
                make_nelson().coeffs(0.0, 0.0, s)
            );
        }
    }

    #[test]
    fn general_t_table() {
        assert!(make_general_t(0.999).is_err());
        assert!(make_general_t(f64::NAN).is_err());
        let xi = 2.448_123_321_932_621;
        let sys = make_general_t(xi).unwrap();
        let k = sys.coeffs(0.0, 0.0, StateVec::new(1.0, 0.0));
        assert_eq!(k.b2, -2.448_123_321_932_621);
        assert_eq!(sys.source(0.0, 0.0, StateVec::new(1.0, 0.0)), [0.0, 0.0]);
    }

    #[test]
    fn potential_gradient_enters_second_row() {
        let sys = make_modified_t0().with_potential_gradient(|q| 2.0 * q);
        assert_eq!(sys.source(0.0, 1.5, StateVec::default()), [0.0, 3.0]);
        let warm = make_general_t(2.0).unwrap().with_potential_gradient(|q| q);
        assert_eq!(warm.source(0.0, 1.5, StateVec::default()), [0.0, -1.5]);
        assert!(!sys.is_homogeneous());
    }

    #[test]
    fn classification_examples() {
        let c = classify(&make_nelson(), 0.0, 0.0, StateVec::new(1.0, 2.0));
        assert_eq!(c.discriminant, -1.0);
        assert_eq!(c.type_tag, TypeTag::Elliptic);
        assert!(c.char_slopes.is_empty());

        let c = classify(&make_modified_t0(), 0.0, 0.0, StateVec::new(1.0, 2.0));
        assert_eq!(c.discriminant, 0.0);
        assert_eq!(c.type_tag, TypeTag::Parabolic);
        assert_eq!(c.char_slopes, vec![3.0]);

        // u = 0: the quadratic form is (q_l − v t_l)², a real double root.
        let c = classify(&make_nelson(), 0.0, 0.0, StateVec::new(0.0, 5.0));
        assert_eq!(c.discriminant, 0.0);
        assert_eq!(c.type_tag, TypeTag::Parabolic);
        assert_eq!(c.char_slopes, vec![5.0]);
    }

    #[test]
    fn degenerate_when_all_brackets_vanish() {
        let zero = PdeSystem::custom(
            "zero",
            |_, _, _| CoeffTable {
                a1: 0.0,
                b1: 0.0,
                c1: 0.0,
                d1: 0.0,
                a2: 0.0,
                b2: 0.0,
                c2: 0.0,
                d2: 0.0,
            },
            |_, _, _| [0.0; 2],
        );
        let c = classify(&zero, 0.0, 0.0, StateVec::default());
        assert_eq!(c.type_tag, TypeTag::Degenerate);
        assert!(c.char_slopes.is_empty());
    }

    #[test]
    fn hyperbolic_system_has_two_slopes() {
        // Wave system u_t + v_q = 0, v_t + 4 u_q = 0: speeds ±2.
        let wave = PdeSystem::custom(
            "wave",
            |_, _, _| CoeffTable {
                a1: 1.0,
                b1: 0.0,
                c1: 0.0,
                d1: 1.0,
                a2: 0.0,
                b2: 4.0,
                c2: 1.0,
                d2: 0.0,
            },
            |_, _, _| [0.0; 2],
        );
        let c = classify(&wave, 0.0, 0.0, StateVec::default());
        assert_eq!(c.type_tag, TypeTag::Hyperbolic);
        assert_eq!(c.char_slopes, vec![-2.0, 2.0]);
        assert!(characteristic_speed(&wave, StateVec::default()).is_err());
    }

    #[test]
    fn characteristic_speed_examples() {
        let sys = make_modified_t0();
        assert_eq!(characteristic_speed(&sys, StateVec::new(1.0, 2.0)).unwrap(), 3.0);
        assert_eq!(characteristic_speed(&sys, StateVec::new(0.0, 0.0)).unwrap(), 0.0);
        assert_eq!(characteristic_speed(&sys, StateVec::new(-1.0, 1.0)).unwrap(), 0.0);
        let err = characteristic_speed(&make_nelson(), StateVec::new(1.0, 2.0)).unwrap_err();
        assert!(matches!(err, ModelError::NotParabolic { .. }));
        // Nelson at u = 0 is parabolic with the double root v.
        assert_eq!(
            characteristic_speed(&make_nelson(), StateVec::new(0.0, -2.5)).unwrap(),
            -2.5
        );
    }

    #[test]
    fn double_root_multiplier_resubstitution() {
        // λ = 1 in q_l = (2u + v − λu) t_l and λ q_l = (u + λv) t_l.
        for (u, v) in [(1.0, 2.0), (0.5, 0.0), (-3.0, 1.25), (2.0, -7.5)] {
            let lambda = 1.0;
            let first = 2.0 * u + v - lambda * u;
            let second = (u + lambda * v) / lambda;
            assert_eq!(first, u + v);
            assert_eq!(second, u + v);
        }
    }

    #[test]
    fn label_round_trip() {
        for label in [SystemLabel::Nelson, SystemLabel::ModifiedT0, SystemLabel::GeneralT] {
            assert_eq!(label.as_str().parse::<SystemLabel>().unwrap(), label);
        }
        assert!("elliptic".parse::<SystemLabel>().is_err());
    }

    #[test]
    fn advection_matrix_normalizes_time_part() {
        let doubled = PdeSystem::custom(
            "doubled",
            |_, _, s: StateVec| make_modified_t0().coeffs(0.0, 0.0, s).scale_rows(2.0, -3.0),
            |_, _, _| [2.0, -3.0],
        );
        let s = StateVec::new(0.4, -0.1);
        let plain = make_modified_t0().coeffs(0.0, 0.0, s).advection_matrix().unwrap();
        let k = doubled.coeffs(0.0, 0.0, s);
        let scaled = k.advection_matrix().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((plain[i][j] - scaled[i][j]).abs() < 1e-15);
            }
        }
        assert_eq!(k.normalize_source([2.0, -3.0]).unwrap(), [1.0, 1.0]);
    }

    fn ulp_scale(sys: &PdeSystem, s: StateVec) -> f64 {
        discriminant_scale(&sys.coeffs(0.0, 0.0, s)) * f64::EPSILON
    }

    proptest! {
        #[test]
        fn nelson_discriminant_is_minus_u_squared(u in -10.0..10.0f64, v in -10.0..10.0f64) {
            let s = StateVec::new(u, v);
            let c = classify(&make_nelson(), 0.0, 0.0, s);
            prop_assert!((c.discriminant + u * u).abs() <= 8.0 * ulp_scale(&make_nelson(), s));
        }

        #[test]
        fn modified_discriminant_vanishes(u in -10.0..10.0f64, v in -10.0..10.0f64) {
            let s = StateVec::new(u, v);
            let c = classify(&make_modified_t0(), 0.0, 0.0, s);
            prop_assert!(c.discriminant.abs() <= 8.0 * ulp_scale(&make_modified_t0(), s));
            prop_assert_eq!(c.type_tag, TypeTag::Parabolic);
            let speed = characteristic_speed(&make_modified_t0(), StateVec::new(u, v)).unwrap();
            prop_assert_eq!(speed, u + v);
        }

        #[test]
        fn general_t_at_unit_xi_matches_cold_vacuum(u in -10.0..10.0f64, v in -10.0..10.0f64) {
            let s = StateVec::new(u, v);
            let warm = make_general_t(1.0).unwrap().coeffs(0.0, 0.0, s).as_array();
            let cold = make_modified_t0().coeffs(0.0, 0.0, s).as_array();
            for (w, c) in warm.iter().zip(cold.iter()) {
                prop_assert_eq!(w.to_bits(), c.to_bits());
            }
        }

        // Bracket algebra on the warm table gives b² − ac = (1 − Ξ)u².
        #[test]
        fn general_t_discriminant(u in -10.0..10.0f64, v in -10.0..10.0f64, xi in 1.0..5.0f64) {
            let sys = make_general_t(xi).unwrap();
            let s = StateVec::new(u, v);
            let c = classify(&sys, 0.0, 0.0, s);
            let expected = (1.0 - xi) * u * u;
            prop_assert!((c.discriminant - expected).abs() <= 16.0 * ulp_scale(&sys, s));
        }

        #[test]
        fn type_invariant_under_row_scaling(
            u in -10.0..10.0f64,
            v in -10.0..10.0f64,
            k1 in prop_oneof![-8.0..-0.125f64, 0.125..8.0f64],
            k2 in prop_oneof![-8.0..-0.125f64, 0.125..8.0f64],
        ) {
            for sys in [make_nelson(), make_modified_t0()] {
                let table = sys.coeffs(0.0, 0.0, StateVec::new(u, v));
                let base = classify_table(&table);
                let scaled = classify_table(&table.scale_rows(k1, k1));
                prop_assert_eq!(base.type_tag, scaled.type_tag);
                // Independent row factors scale c, a and b the same way too.
                let mixed = classify_table(&table.scale_rows(k1, k2));
                prop_assert_eq!(base.type_tag, mixed.type_tag);
            }
        }
    }
}
