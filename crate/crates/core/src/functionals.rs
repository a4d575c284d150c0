//! Weighted N-dimensional functionals of a test field, evaluated through the
//! polar decomposition `x = r ω`.
//!
//! Radial fields reduce to one-dimensional integrals times `|S^{N-1}|`, using the
//! kink-aware rule for `|·|^p`. Separable fields `g(r) Y(ω)` are integrated on a
//! tensor product of the knot-aligned radial rule and an angular rule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AngularJet, TestField, MAX_DERIV};
use crate::quadrature::{
    integrate_radial_abs_pow, pairwise_sum, sphere_area, AngularRule, QuadratureError,
    QuadratureRule, DEFAULT_ORDER,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("unsupported field: {0}")]
    Unsupported(String),
}

/// Coefficient of the last surrogate term `|∂_r u|²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateVariant {
    /// `(N-1)/r²`, dimensionally consistent with the other terms.
    #[default]
    InverseSquare,
    /// `(N-1)/r`, the form as displayed in the source.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub radial_order: usize,
    /// `None` picks a default from the dimension and whether `p` is an even integer.
    pub angular_resolution: Option<usize>,
    pub surrogate: SurrogateVariant,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            radial_order: DEFAULT_ORDER,
            angular_resolution: None,
            surrogate: SurrogateVariant::InverseSquare,
        }
    }
}

impl EvalOptions {
    fn angular_rule(&self, n: usize, p: f64) -> Result<AngularRule, QuadratureError> {
        let smooth = p.fract() == 0.0 && (p as i64) % 2 == 0;
        let res = self.angular_resolution.unwrap_or(match (n, smooth) {
            (2, true) => 128,
            (2, false) => 256,
            (_, true) => 16,
            (_, false) => 32,
        });
        AngularRule::new(n, res)
    }
}

/// Pointwise squared quantities at `(r, ω)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValues {
    /// `r^{-4} |r ∂_r u - u|²`
    pub radial_sq: f64,
    /// `r^{-4} |∇_S u|²`
    pub angular_sq: f64,
    pub laplacian: f64,
    /// `|D²u|²`, Frobenius norm of the exact Hessian.
    pub hessian_sq: f64,
    pub surrogate_sq: f64,
    /// `∂_rr u`
    pub u_rr: f64,
    /// `|r^{-1} ∂_r ∇_S u|`
    pub mixed: f64,
}

impl PointValues {
    /// `|∇(u/|x|)|²`
    pub fn grad_quotient_sq(&self) -> f64 {
        self.radial_sq + self.angular_sq
    }
}

/// Pointwise values from a radial jet `g` and angular jet `y` in dimension `n`
/// with eigenvalue `lambda`.
pub fn point_values_from_jets(
    g: &[f64; MAX_DERIV + 1],
    r: f64,
    y: &AngularJet,
    n: usize,
    lambda: f64,
    variant: SurrogateVariant,
) -> PointValues {
    let (g0, g1, g2) = (g[0], g[1], g[2]);
    let nm1 = (n - 1) as f64;
    let r2 = r * r;
    let radial_sq = ((r * g1 - g0) * y.y).powi(2) / (r2 * r2);
    let angular_sq = (g0 * y.dy).powi(2) / (r2 * r2);
    let laplacian = (g2 + nm1 * g1 / r - lambda * g0 / r2) * y.y;

    let u_rr = g2 * y.y;
    let hessian_sq = if n == 1 || (y.dy == 0.0 && y.d2y == 0.0 && lambda == 0.0) {
        // radial: f''² + (N-1)(f'/r)²
        u_rr * u_rr + nm1 * (g1 * y.y / r).powi(2)
    } else {
        let m = (g1 - g0 / r) / r * y.dy;
        let t_aa = g1 / r * y.y + g0 / r2 * y.d2y;
        let mut s = u_rr * u_rr + 2.0 * m * m + t_aa * t_aa;
        if n == 3 {
            let t_cc = g1 / r * y.y + g0 / r2 * y.cot_dy;
            s += t_cc * t_cc;
        }
        s
    };

    let mixed = (g1 * y.dy / r).abs();
    let sphere_hess = g0 / r2 * y.hess_norm();
    let last = match variant {
        SurrogateVariant::InverseSquare => nm1 / r2,
        SurrogateVariant::AsPrinted => nm1 / r,
    };
    let surrogate_sq =
        u_rr * u_rr + 2.0 * mixed * mixed + sphere_hess * sphere_hess + last * (g1 * y.y).powi(2);

    PointValues {
        radial_sq,
        angular_sq,
        laplacian,
        hessian_sq,
        surrogate_sq,
        u_rr,
        mixed,
    }
}

/// Pointwise values of `field` at radius `r` and angle coordinate `angle`.
pub fn point_values(field: &TestField, r: f64, angle: f64, variant: SurrogateVariant) -> PointValues {
    let lambda = field.mode().map_or(0.0, |m| m.lambda());
    point_values_from_jets(
        &field.profile().jet(r),
        r,
        &field.angular_jet(angle),
        field.dimension(),
        lambda,
        variant,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LhsReport {
    /// `∫|∇(u/|x|)|^p |x|^a dx`
    pub lhs: f64,
    pub radial_part: f64,
    pub angular_part: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub lhs_grad_quotient: f64,
    pub rhs_lap: f64,
    pub rhs_hess_exact: f64,
    pub rhs_surrogate: f64,
    pub radial_part: f64,
    pub angular_part: f64,
}

impl FunctionalReport {
    pub fn is_valid(&self) -> bool {
        [
            self.lhs_grad_quotient,
            self.rhs_lap,
            self.rhs_hess_exact,
            self.rhs_surrogate,
            self.radial_part,
            self.angular_part,
        ]
        .iter()
        .all(|v| v.is_finite() && *v >= 0.0)
    }
}

fn radial_gamma(field: &TestField) -> f64 {
    let p = field.params();
    (p.n - 1) as f64 + p.a
}

fn radial_rule(field: &TestField, opts: &EvalOptions) -> QuadratureRule {
    QuadratureRule::for_profile(field.profile(), opts.radial_order)
}

/// `∫∫ F(r, ω) r^{N-1+a} dr dω` for several integrands at once.
fn tensor_integrals<const K: usize, F>(
    field: &TestField,
    opts: &EvalOptions,
    f: F,
) -> Result<[f64; K], FunctionalError>
where
    F: Fn(&PointValues) -> [f64; K],
{
    let rule = radial_rule(field, opts);
    let n = field.dimension();
    let p = field.params().p;
    let gamma = radial_gamma(field);
    let lambda = field.mode().map_or(0.0, |m| m.lambda());
    let angular = opts.angular_rule(n, p)?;
    let jets: Vec<AngularJet> = angular.angles().iter().map(|&t| field.angular_jet(t)).collect();
    let mut terms: Vec<[f64; K]> = Vec::with_capacity(rule.nodes().len());
    for (i, (&r, &w)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
        let g = field.profile().jet(r);
        let mut inner = [0.0; K];
        for (y, &wa) in jets.iter().zip(angular.weights()) {
            let v = f(&point_values_from_jets(&g, r, y, n, lambda, opts.surrogate));
            for k in 0..K {
                inner[k] += wa * v[k];
            }
        }
        let rw = w * r.powf(gamma);
        for v in inner.iter_mut() {
            *v *= rw;
        }
        if inner.iter().any(|v| !v.is_finite()) {
            let panel = i / rule.order();
            let (left, right) = rule.panels()[panel];
            return Err(QuadratureError::NonFinite { panel, left, right }.into());
        }
        terms.push(inner);
    }
    let mut out = [0.0; K];
    let mut column = vec![0.0; terms.len()];
    for (k, o) in out.iter_mut().enumerate() {
        for (c, t) in column.iter_mut().zip(&terms) {
            *c = t[k];
        }
        *o = pairwise_sum(&column);
    }
    Ok(out)
}

/// `∫ |h(r)|^p r^{N-1+a} dr · |S^{N-1}|` with kink splitting.
fn radial_integral<H: Fn(f64) -> f64>(
    field: &TestField,
    opts: &EvalOptions,
    h: H,
) -> Result<f64, FunctionalError> {
    let rule = radial_rule(field, opts);
    let p = field.params();
    let v = integrate_radial_abs_pow(h, p.p, radial_gamma(field), &rule)?;
    Ok(sphere_area(p.n) * v)
}

/// `∫|Y|^p dω` on the field's angular rule.
fn angular_power(field: &TestField, opts: &EvalOptions) -> Result<f64, FunctionalError> {
    let p = field.params().p;
    let rule = opts.angular_rule(field.dimension(), p)?;
    Ok(rule.integrate(|t| field.angular_jet(t).y.abs().powf(p)))
}

/// The weighted left-hand side and its radial and angular parts.
pub fn lhs_functional(field: &TestField, opts: &EvalOptions) -> Result<LhsReport, FunctionalError> {
    let half = field.params().p / 2.0;
    if field.ell() == 0 {
        let prof = field.profile();
        let lhs = radial_integral(field, opts, |r| {
            let j = prof.jet(r);
            (r * j[1] - j[0]) / (r * r)
        })?;
        return Ok(LhsReport {
            lhs,
            radial_part: lhs,
            angular_part: 0.0,
        });
    }
    let [lhs, radial_part, angular_part] = tensor_integrals(field, opts, |v| {
        [
            v.grad_quotient_sq().powf(half),
            v.radial_sq.powf(half),
            v.angular_sq.powf(half),
        ]
    })?;
    Ok(LhsReport {
        lhs,
        radial_part,
        angular_part,
    })
}

/// `∫|Δu|^p |x|^a dx`; the angular factor separates exactly.
pub fn rhs_laplacian(field: &TestField, opts: &EvalOptions) -> Result<f64, FunctionalError> {
    let n = field.dimension();
    let lambda = field.mode().map_or(0.0, |m| m.lambda());
    let prof = field.profile();
    let l = |r: f64| {
        let j = prof.jet(r);
        j[2] + (n - 1) as f64 * j[1] / r - lambda * j[0] / (r * r)
    };
    if field.ell() == 0 {
        return radial_integral(field, opts, l);
    }
    let radial = radial_integral(field, opts, l)? / sphere_area(n);
    Ok(radial * angular_power(field, opts)?)
}

/// `∫|D²u|^p |x|^a dx` from the exact polar Hessian components.
pub fn rhs_hessian_exact(field: &TestField, opts: &EvalOptions) -> Result<f64, FunctionalError> {
    let half = field.params().p / 2.0;
    if field.ell() == 0 {
        let n = field.dimension();
        let prof = field.profile();
        if n == 1 {
            return radial_integral(field, opts, |r| prof.derivative(r, 2));
        }
        return radial_integral(field, opts, |r| {
            let j = prof.jet(r);
            (j[2] * j[2] + (n - 1) as f64 * (j[1] / r).powi(2)).sqrt()
        });
    }
    let [v] = tensor_integrals(field, opts, |v| [v.hessian_sq.powf(half)])?;
    Ok(v)
}

/// `∫S(u)^p |x|^a dx` for the decomposition surrogate `S`.
pub fn rhs_surrogate(field: &TestField, opts: &EvalOptions) -> Result<f64, FunctionalError> {
    let half = field.params().p / 2.0;
    if field.ell() == 0 {
        let n = field.dimension();
        let prof = field.profile();
        if n == 1 {
            return radial_integral(field, opts, |r| prof.derivative(r, 2));
        }
        let variant = opts.surrogate;
        return radial_integral(field, opts, |r| {
            let j = prof.jet(r);
            let c = match variant {
                SurrogateVariant::InverseSquare => (n - 1) as f64 / (r * r),
                SurrogateVariant::AsPrinted => (n - 1) as f64 / r,
            };
            (j[2] * j[2] + c * j[1] * j[1]).sqrt()
        });
    }
    let [v] = tensor_integrals(field, opts, |v| [v.surrogate_sq.powf(half)])?;
    Ok(v)
}

/// `∫|∂_rr u|^p |x|^a dx`, the right-hand side of the radial step.
pub fn radial_second_derivative_functional(
    field: &TestField,
    opts: &EvalOptions,
) -> Result<f64, FunctionalError> {
    let prof = field.profile();
    let radial = radial_integral(field, opts, |r| prof.derivative(r, 2))?;
    if field.ell() == 0 {
        return Ok(radial);
    }
    Ok(radial / sphere_area(field.dimension()) * angular_power(field, opts)?)
}

/// All functionals of one field.
pub fn evaluate(field: &TestField, opts: &EvalOptions) -> Result<FunctionalReport, FunctionalError> {
    let lhs = lhs_functional(field, opts)?;
    Ok(FunctionalReport {
        lhs_grad_quotient: lhs.lhs,
        rhs_lap: rhs_laplacian(field, opts)?,
        rhs_hess_exact: rhs_hessian_exact(field, opts)?,
        rhs_surrogate: rhs_surrogate(field, opts)?,
        radial_part: lhs.radial_part,
        angular_part: lhs.angular_part,
    })
}

/// Largest relative violation of `(s+t)^{N/2} ≤ 2^{N/2-1}(s^{N/2} + t^{N/2})`
/// over `samples` random pairs, plus a few fixed edge cases.
pub fn convexity_check(n: usize, samples: usize, seed: u64) -> f64 {
    assert!(n >= 2, "convexity step needs N >= 2");
    let q = n as f64 / 2.0;
    let c = 2f64.powf(q - 1.0);
    let violation = |s: f64, t: f64| {
        let lhs = (s + t).powf(q);
        let rhs = c * (s.powf(q) + t.powf(q));
        let scale = lhs.max(rhs).max(f64::MIN_POSITIVE);
        ((lhs - rhs) / scale).max(0.0)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for &(s, t) in &[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 3.0), (1e-8, 1e8)] {
        worst = worst.max(violation(s, t));
    }
    for _ in 0..samples {
        let s: f64 = 10f64.powf(rng.gen_range(-6.0..6.0));
        let t: f64 = 10f64.powf(rng.gen_range(-6.0..6.0));
        worst = worst.max(violation(s, t));
    }
    worst
}

/// The three terms of the two-dimensional cancellation identity
/// `∫|∇(u/|x|)|² = ∫|∇u|²/|x|² - ∫u²/|x|⁴` for one field, with `p = 2, a = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub r_cut: f64,
    /// `∫|∇u|²/|x|²`
    pub hardy_term: f64,
    /// `∫u²/|x|⁴`
    pub rellich_term: f64,
    /// `∫|Δu|²`
    pub lap_term: f64,
    /// `∫|∇(u/|x|)|²`
    pub grad_quotient: f64,
    pub identity_residual: f64,
    pub scale: f64,
}

pub fn plateau_blowup_report(
    field: &TestField,
    r_cut: f64,
    opts: &EvalOptions,
) -> Result<BlowupReport, FunctionalError> {
    if field.dimension() != 2 {
        return Err(FunctionalError::Unsupported(format!(
            "the cancellation identity is two-dimensional (got N = {})",
            field.dimension()
        )));
    }
    let params = crate::model::SpaceParams {
        n: 2,
        p: 2.0,
        a: 0.0,
    };
    let field = field
        .with_params(params)
        .map_err(|e| FunctionalError::Unsupported(e.to_string()))?;
    let opts = EvalOptions {
        angular_resolution: opts.angular_resolution.or(Some(128)),
        ..*opts
    };
    let lambda = field.mode().map_or(0.0, |m| m.lambda());
    let rule = radial_rule(&field, &opts);
    let angular = opts.angular_rule(2, 2.0)?;
    let jets: Vec<AngularJet> = angular.angles().iter().map(|&t| field.angular_jet(t)).collect();
    let mut hardy = Vec::new();
    let mut rellich = Vec::new();
    let mut grad = Vec::new();
    for (&r, &w) in rule.nodes().iter().zip(rule.weights()) {
        let g = field.profile().jet(r);
        let (mut h, mut re, mut gq) = (0.0, 0.0, 0.0);
        for (y, &wa) in jets.iter().zip(angular.weights()) {
            let grad_sq = (g[1] * y.y).powi(2) + (g[0] * y.dy / r).powi(2);
            h += wa * grad_sq / (r * r);
            re += wa * (g[0] * y.y).powi(2) / r.powi(4);
            gq += wa
                * point_values_from_jets(&g, r, y, 2, lambda, opts.surrogate).grad_quotient_sq();
        }
        hardy.push(w * r * h);
        rellich.push(w * r * re);
        grad.push(w * r * gq);
    }
    let hardy_term = pairwise_sum(&hardy);
    let rellich_term = pairwise_sum(&rellich);
    let grad_quotient = pairwise_sum(&grad);
    let lap_term = rhs_laplacian(&field, &opts)?;
    for v in [hardy_term, rellich_term, grad_quotient, lap_term] {
        if !v.is_finite() {
            let (left, right) = rule.support();
            return Err(QuadratureError::NonFinite {
                panel: 0,
                left,
                right,
            }
            .into());
        }
    }
    Ok(BlowupReport {
        r_cut,
        hardy_term,
        rellich_term,
        lap_term,
        grad_quotient,
        identity_residual: (grad_quotient - (hardy_term - rellich_term)).abs(),
        scale: hardy_term + rellich_term,
    })
}
