//! Parameter types and the test-function representation shared by every module.

mod angular;
mod spline;

pub use angular::{legendre, sphere_eigenvalue, AngularJet, AngularMode};
pub use spline::{log_breakpoints, SplineSpace, MAX_DERIV};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("unsupported dimension N = {n}: {what}")]
    UnsupportedDimension { n: usize, what: &'static str },
    #[error("parameter violation: {0}")]
    Violation(#[from] Violation),
}

/// Dimension, integrability exponent and power-weight exponent `|x|^a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub n: usize,
    pub p: f64,
    pub a: f64,
}

impl SpaceParams {
    pub fn new(n: usize, p: f64, a: f64) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::UnsupportedDimension {
                n,
                what: "dimension must be at least 1",
            });
        }
        if !(p > 0.0) || !p.is_finite() || !a.is_finite() {
            return Err(ModelError::InvalidProfile(format!(
                "exponents must be finite with p > 0 (p = {p}, a = {a})"
            )));
        }
        Ok(Self { n, p, a })
    }

    /// The critical exponent p = N.
    pub fn critical(n: usize, a: f64) -> Result<Self, ModelError> {
        Self::new(n, n as f64, a)
    }
}

/// Parameters of the one-dimensional averaging operator bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneDimConfig {
    pub p: f64,
    pub a_op: f64,
    pub b_op: f64,
    pub alpha: f64,
}

impl OneDimConfig {
    /// `p (a - 1) - α`, positive exactly when the operator bound applies.
    pub fn gap(&self) -> f64 {
        self.p * (self.a_op - 1.0) - self.alpha
    }
}

/// Which proof step a parameter set is about to be used in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValidationContext {
    PropBound(OneDimConfig),
    RadialStep,
    AngularStep,
    CzRange,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{restriction} required (got {got})")]
pub struct Violation {
    pub restriction: &'static str,
    pub got: String,
}

pub fn validate(params: &SpaceParams, context: ValidationContext) -> Result<(), Violation> {
    let n = params.n as f64;
    match context {
        ValidationContext::PropBound(cfg) => {
            if cfg.p < 1.0 {
                return Err(Violation {
                    restriction: "p>=1",
                    got: format!("p = {}", cfg.p),
                });
            }
            if !(cfg.gap() > 0.0) {
                return Err(Violation {
                    restriction: "p(a-1)>alpha",
                    got: format!(
                        "p = {}, a = {}, alpha = {}",
                        cfg.p, cfg.a_op, cfg.alpha
                    ),
                });
            }
        }
        ValidationContext::RadialStep => {
            if !(params.a < 1.0) {
                return Err(Violation {
                    restriction: "a<1",
                    got: format!("a = {}", params.a),
                });
            }
        }
        ValidationContext::AngularStep => {
            // β = -N + a - 1 ≠ -1  ⇔  a ≠ N
            if params.a == n {
                return Err(Violation {
                    restriction: "a!=N",
                    got: format!("a = {}, N = {}", params.a, params.n),
                });
            }
        }
        ValidationContext::CzRange => {
            if !(params.a > -n) {
                return Err(Violation {
                    restriction: "a>-N",
                    got: format!("a = {}, N = {}", params.a, params.n),
                });
            }
        }
    }
    Ok(())
}

/// A compactly supported spline `f(r)` on `(r_min, r_max)`, `r_min > 0`.
///
/// The first and last `degree` coefficients are zero, so the profile and its
/// derivatives up to order `degree - 1` vanish at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    space: SplineSpace,
    coefficients: Vec<f64>,
}

impl RadialProfile {
    pub fn new(knots: Vec<f64>, degree: usize, coefficients: Vec<f64>) -> Result<Self, ModelError> {
        if degree < 4 {
            return Err(ModelError::InvalidProfile(format!(
                "degree must be at least 4 (got {degree})"
            )));
        }
        if knots.first().is_some_and(|&r| !(r > 0.0)) {
            return Err(ModelError::InvalidProfile(
                "support must stay away from the origin (r_min > 0)".into(),
            ));
        }
        let space = SplineSpace::new(knots, degree)?;
        Self::in_space(space, coefficients)
    }

    pub fn in_space(space: SplineSpace, coefficients: Vec<f64>) -> Result<Self, ModelError> {
        let degree = space.degree();
        if degree < 4 {
            return Err(ModelError::InvalidProfile(format!(
                "degree must be at least 4 (got {degree})"
            )));
        }
        if !(space.start() > 0.0) {
            return Err(ModelError::InvalidProfile(
                "support must stay away from the origin (r_min > 0)".into(),
            ));
        }
        let dim = space.dim();
        if coefficients.len() != dim {
            return Err(ModelError::InvalidProfile(format!(
                "expected {dim} coefficients, got {}",
                coefficients.len()
            )));
        }
        if dim <= 2 * degree {
            return Err(ModelError::InvalidProfile(format!(
                "{} breakpoints leave no interior coefficient at degree {degree}",
                space.breakpoints().len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(ModelError::InvalidProfile("non-finite coefficient".into()));
        }
        let clamped = coefficients[..degree]
            .iter()
            .chain(&coefficients[dim - degree..])
            .all(|&c| c == 0.0);
        if !clamped {
            return Err(ModelError::InvalidProfile(format!(
                "the first and last {degree} coefficients must be zero"
            )));
        }
        Ok(Self {
            space,
            coefficients,
        })
    }

    /// Pads `interior` with the mandatory zero coefficients at both ends.
    pub fn from_interior(space: SplineSpace, interior: &[f64]) -> Result<Self, ModelError> {
        let d = space.degree();
        let mut c = vec![0.0; d];
        c.extend_from_slice(interior);
        c.extend(std::iter::repeat_n(0.0, d));
        Self::in_space(space, c)
    }

    /// Number of free (interior) coefficients for a space.
    pub fn free_dim(space: &SplineSpace) -> usize {
        space.dim().saturating_sub(2 * space.degree())
    }

    pub fn interior(&self) -> &[f64] {
        let d = self.space.degree();
        &self.coefficients[d..self.coefficients.len() - d]
    }

    pub fn space(&self) -> &SplineSpace {
        &self.space
    }

    pub fn knots(&self) -> &[f64] {
        self.space.breakpoints()
    }

    pub fn degree(&self) -> usize {
        self.space.degree()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn support(&self) -> (f64, f64) {
        (self.space.start(), self.space.end())
    }

    /// `[f, f', f'', f''', f'''']` at `r`, zero outside the support.
    pub fn jet(&self, r: f64) -> [f64; MAX_DERIV + 1] {
        self.space.eval_jet(&self.coefficients, r)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r)[0]
    }

    pub fn derivative(&self, r: f64, order: usize) -> f64 {
        assert!(order <= MAX_DERIV, "derivative order {order} exceeds {MAX_DERIV}");
        self.jet(r)[order]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            space: self.space.clone(),
            coefficients: self.coefficients.iter().map(|c| c * s).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Radial { profile: RadialProfile },
    Separable { profile: RadialProfile, mode: AngularMode },
}

/// A test function `u` on `R^N \ {0}`: radial, or `g(r) Y(ω)` for `N ∈ {2, 3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestField {
    kind: FieldKind,
    params: SpaceParams,
}

impl TestField {
    pub fn radial(profile: RadialProfile, params: SpaceParams) -> Self {
        Self {
            kind: FieldKind::Radial { profile },
            params,
        }
    }

    pub fn separable(
        profile: RadialProfile,
        ell: usize,
        params: SpaceParams,
    ) -> Result<Self, ModelError> {
        if !matches!(params.n, 2 | 3) {
            return Err(ModelError::UnsupportedDimension {
                n: params.n,
                what: "separable fields exist only for N = 2 and N = 3",
            });
        }
        let mode = AngularMode::new(ell, params.n)?;
        Ok(Self {
            kind: FieldKind::Separable { profile, mode },
            params,
        })
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn params(&self) -> &SpaceParams {
        &self.params
    }

    pub fn dimension(&self) -> usize {
        self.params.n
    }

    /// Same field, different `(p, a)` or dimension. Separable fields keep their `l`.
    pub fn with_params(&self, params: SpaceParams) -> Result<Self, ModelError> {
        match &self.kind {
            FieldKind::Radial { profile } => Ok(Self::radial(profile.clone(), params)),
            FieldKind::Separable { profile, mode } => {
                Self::separable(profile.clone(), mode.ell(), params)
            }
        }
    }

    pub fn profile(&self) -> &RadialProfile {
        match &self.kind {
            FieldKind::Radial { profile } | FieldKind::Separable { profile, .. } => profile,
        }
    }

    pub fn mode(&self) -> Option<&AngularMode> {
        match &self.kind {
            FieldKind::Radial { .. } => None,
            FieldKind::Separable { mode, .. } => Some(mode),
        }
    }

    pub fn ell(&self) -> usize {
        self.mode().map_or(0, |m| m.ell())
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.kind, FieldKind::Radial { .. })
    }

    pub fn angular_jet(&self, angle: f64) -> AngularJet {
        self.mode().map_or(AngularJet::CONSTANT, |m| m.jet(angle))
    }

    /// `u(r ω)` with ω given by its angle coordinate (θ for N = 2, polar φ for N = 3).
    pub fn eval_polar(&self, r: f64, angle: f64) -> f64 {
        self.profile().value(r) * self.angular_jet(angle).y
    }

    /// Point evaluation from Cartesian coordinates; the polar axis for N = 3 is `x₃`.
    pub fn eval_cartesian(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.params.n, "point dimension mismatch");
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return 0.0;
        }
        let g = self.profile().value(r);
        match &self.kind {
            FieldKind::Radial { .. } => g,
            FieldKind::Separable { mode, .. } => {
                let angle = match self.params.n {
                    2 => x[1].atan2(x[0]),
                    _ => (x[2] / r).clamp(-1.0, 1.0).acos(),
                };
                g * mode.jet(angle).y
            }
        }
    }
}

/// Serializable description of a radial profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub knots: Vec<f64>,
    pub degree: usize,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKindSpec {
    Radial,
    Separable,
}

/// Builds a validated field from its serializable description.
pub fn make_field(
    kind: FieldKindSpec,
    profile: &ProfileSpec,
    ell: Option<usize>,
    params: SpaceParams,
) -> Result<TestField, ModelError> {
    let profile = RadialProfile::new(
        profile.knots.clone(),
        profile.degree,
        profile.coefficients.clone(),
    )?;
    match kind {
        FieldKindSpec::Radial => Ok(TestField::radial(profile, params)),
        FieldKindSpec::Separable => TestField::separable(profile, ell.unwrap_or(0), params),
    }
}
