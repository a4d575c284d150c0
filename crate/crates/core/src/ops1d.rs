//! One-dimensional machinery on the half-line: the averaging operator
//! `T_{a,b} f(x) = x^{-a} ∫_0^x s^b f(s) ds`, its weighted `L^p` bound, the
//! derivative identity `(u/x)' = T_{2,1}(u'')` and the 1D Hardy inequalities.

use thiserror::Error;

use crate::model::{validate, OneDimConfig, RadialProfile, SpaceParams, ValidationContext, Violation};
use crate::quadrature::{integrate_radial_abs_pow, pairwise_sum, QuadratureError, QuadratureRule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Ops1dError {
    #[error(transparent)]
    Violation(#[from] Violation),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("derivative order {0} exceeds 4")]
    DerivativeOrder(usize),
    #[error("beta = -1 is the critical weight and is excluded")]
    CriticalWeight,
    #[error("exponent out of range: {0}")]
    Exponent(String),
}

/// `T_{a,b}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolterraOperator {
    pub a: f64,
    pub b: f64,
}

impl From<&OneDimConfig> for VolterraOperator {
    fn from(c: &OneDimConfig) -> Self {
        Self { a: c.a_op, b: c.b_op }
    }
}

/// `T_{a,b} f` for an `f` supported inside the rule's panels.
///
/// Panel integrals are accumulated left to right once; a point value costs one
/// partial-panel Gauss rule.
pub struct VolterraImage<'r, F> {
    op: VolterraOperator,
    f: F,
    rule: &'r QuadratureRule,
    prefix: Vec<f64>,
    total: f64,
}

pub fn apply_t<F>(op: VolterraOperator, f: F, rule: &QuadratureRule) -> VolterraImage<'_, F>
where
    F: Fn(f64) -> f64,
{
    let b = op.b;
    let mut prefix = Vec::with_capacity(rule.panels().len() + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for &(l, r) in rule.panels() {
        let piece: Vec<f64> = rule.sub_rule(l, r).map(|(s, w)| w * s.powf(b) * f(s)).collect();
        acc += pairwise_sum(&piece);
        prefix.push(acc);
    }
    VolterraImage {
        op,
        f,
        rule,
        prefix,
        total: acc,
    }
}

impl<F: Fn(f64) -> f64> VolterraImage<'_, F> {
    /// `∫_0^x s^b f(s) ds`.
    pub fn primitive(&self, x: f64) -> f64 {
        let (lo, hi) = self.rule.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return self.total;
        }
        let k = self.rule.panel_of(x);
        let left = self.rule.panels()[k].0;
        let b = self.op.b;
        let partial: f64 = self
            .rule
            .sub_rule(left, x)
            .map(|(s, w)| w * s.powf(b) * (self.f)(s))
            .sum();
        self.prefix[k] + partial
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.rule.support().0 {
            return 0.0;
        }
        x.powf(-self.op.a) * self.primitive(x)
    }

    pub fn at_nodes(&self) -> Vec<f64> {
        self.rule.nodes().iter().map(|&x| self.eval(x)).collect()
    }

    /// `∫_0^∞ s^b f(s) ds`; past the support `T f(x) = total · x^{-a}`.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// `∫_0^∞ |T f|^p x^α dx`, the part beyond the support in closed form.
    /// Finite whenever `p a - α - 1 > 0`.
    pub fn weighted_norm_p(&self, p: f64, alpha: f64) -> Result<f64, QuadratureError> {
        let inside = integrate_radial_abs_pow(|x| self.eval(x), p, alpha, self.rule)?;
        let hi = self.rule.support().1;
        let decay = p * self.op.a - alpha - 1.0;
        let tail = if self.total == 0.0 {
            0.0
        } else if decay > 0.0 {
            self.total.abs().powf(p) * hi.powf(-decay) / decay
        } else {
            f64::INFINITY
        };
        Ok(inside + tail)
    }
}

/// Two sides of an inequality `lhs ≤ rhs_bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs_bound: f64,
    pub ratio: f64,
}

impl BoundReport {
    pub fn new(lhs: f64, rhs_bound: f64) -> Self {
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs_bound };
        Self {
            lhs,
            rhs_bound,
            ratio,
        }
    }

    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lhs <= self.rhs_bound * (1.0 + rel_tol)
    }
}

/// Both sides of `∫|T_{a,b} f|^p x^α ≤ (p(a-1)-α)^{-1} ∫ |f|^p x^{α - p(a-b-1)}`.
pub fn operator_bound_check<F>(
    config: &OneDimConfig,
    f: F,
    rule: &QuadratureRule,
) -> Result<BoundReport, Ops1dError>
where
    F: Fn(f64) -> f64,
{
    let params = SpaceParams {
        n: 1,
        p: config.p,
        a: 0.0,
    };
    validate(&params, ValidationContext::PropBound(*config))?;
    let p = config.p;
    let op = VolterraOperator::from(config);
    let image = apply_t(op, &f, rule);
    let lhs = image.weighted_norm_p(p, config.alpha)?;
    let gamma = config.alpha - p * (config.a_op - config.b_op - 1.0);
    let rhs = integrate_radial_abs_pow(&f, p, gamma, rule)?;
    Ok(BoundReport::new(lhs, rhs / config.gap()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub max_residual: f64,
    /// `max |(u/x)'|` over the nodes.
    pub scale: f64,
}

/// Largest nodal gap between `(u/x)'` evaluated from the spline and `T_{2,1}(u'')`.
pub fn identity_check(u: &RadialProfile, rule: &QuadratureRule) -> IdentityReport {
    let op = VolterraOperator { a: 2.0, b: 1.0 };
    let image = apply_t(op, |s| u.derivative(s, 2), rule);
    let mut max_residual: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &x in rule.nodes() {
        let j = u.jet(x);
        let direct = j[1] / x - j[0] / (x * x);
        max_residual = max_residual.max((direct - image.eval(x)).abs());
        scale = scale.max(direct.abs());
    }
    IdentityReport {
        max_residual,
        scale,
    }
}

/// `∫|(u/x)'| dx ≤ ∫|u''| dx`.
pub fn l1_quotient_check(u: &RadialProfile, rule: &QuadratureRule) -> Result<BoundReport, Ops1dError> {
    let lhs = integrate_radial_abs_pow(
        |x| {
            let j = u.jet(x);
            j[1] / x - j[0] / (x * x)
        },
        1.0,
        0.0,
        rule,
    )?;
    let rhs = integrate_radial_abs_pow(|x| u.derivative(x, 2), 1.0, 0.0, rule)?;
    Ok(BoundReport::new(lhs, rhs))
}

/// `d^n/dx^n (u^{(k)}(x) / x)` by the Leibniz rule on the spline derivatives.
pub fn leibniz_quotient_derivative(u: &RadialProfile, n: usize, k: usize, x: f64) -> f64 {
    let jet = u.jet(x);
    let mut acc = 0.0;
    let mut binom = 1.0;
    let mut fact = 1.0;
    let inv = 1.0 / x;
    let mut inv_pow = inv;
    for j in 0..=n {
        if j > 0 {
            binom *= (n - j + 1) as f64 / j as f64;
            fact *= j as f64;
            inv_pow *= inv;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += binom * jet[k + n - j] * sign * fact * inv_pow;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeQuotientReport {
    pub bound: BoundReport,
    /// `max |Leibniz route - T_{n+1,n}(u^{(n+k+1)})|` over the nodes.
    pub route_gap: f64,
    /// `max |d^n/dx^n (u^{(k)}/x)|` over the nodes.
    pub scale: f64,
}

/// `∫|d^n (u^{(k)}/x)|^p x^α ≤ (pn - α)^{-1} ∫|u^{(n+k+1)}|^p x^α`, with the inner
/// derivative computed by two independent routes.
pub fn derivative_quotient_check(
    u: &RadialProfile,
    n: usize,
    k: usize,
    p: f64,
    alpha: f64,
    rule: &QuadratureRule,
) -> Result<DerivativeQuotientReport, Ops1dError> {
    let top = n + k + 1;
    if top > 4 {
        return Err(Ops1dError::DerivativeOrder(top));
    }
    if p < 1.0 {
        return Err(Ops1dError::Exponent(format!("p >= 1 required (got {p})")));
    }
    let gap = p * n as f64 - alpha;
    if !(gap > 0.0) {
        return Err(Violation {
            restriction: "pn>alpha",
            got: format!("p = {p}, n = {n}, alpha = {alpha}"),
        }
        .into());
    }
    let op = VolterraOperator {
        a: (n + 1) as f64,
        b: n as f64,
    };
    let image = apply_t(op, |s| u.derivative(s, top), rule);
    let mut route_gap: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &x in rule.nodes() {
        let direct = leibniz_quotient_derivative(u, n, k, x);
        route_gap = route_gap.max((direct - image.eval(x)).abs());
        scale = scale.max(direct.abs());
    }
    let lhs = integrate_radial_abs_pow(|x| leibniz_quotient_derivative(u, n, k, x), p, alpha, rule)?;
    let rhs = integrate_radial_abs_pow(|x| u.derivative(x, top), p, alpha, rule)?;
    Ok(DerivativeQuotientReport {
        bound: BoundReport::new(lhs, rhs / gap),
        route_gap,
        scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub sharp: f64,
}

impl HardyReport {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lhs <= self.sharp * self.rhs * (1.0 + rel_tol)
    }
}

/// Sharp constant `(p / |β + 1|)^p` of `∫ r^β |f|^p ≤ C ∫ r^{β+p} |f'|^p`.
pub fn hardy1d_sharp(p: f64, beta: f64) -> Result<f64, Ops1dError> {
    if !(p > 1.0) {
        return Err(Ops1dError::Exponent(format!("p > 1 required (got {p})")));
    }
    if beta == -1.0 {
        return Err(Ops1dError::CriticalWeight);
    }
    Ok((p / (beta + 1.0).abs()).powf(p))
}

pub fn hardy1d_quotient(
    f: &RadialProfile,
    p: f64,
    beta: f64,
    rule: &QuadratureRule,
) -> Result<HardyReport, Ops1dError> {
    let sharp = hardy1d_sharp(p, beta)?;
    let lhs = integrate_radial_abs_pow(|r| f.value(r), p, beta, rule)?;
    let rhs = integrate_radial_abs_pow(|r| f.derivative(r, 1), p, beta + p, rule)?;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(HardyReport {
        lhs,
        rhs,
        ratio,
        sharp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SplineSpace;
    use crate::quadrature::DEFAULT_ORDER;

    fn profile(seed: u64) -> RadialProfile {
        let space = SplineSpace::log_spaced(0.2, 5.0, 14, 5).unwrap();
        let k = RadialProfile::free_dim(&space);
        let c: Vec<f64> = (0..k)
            .map(|i| ((i as f64 + 1.0) * (seed as f64 + 0.37) * 2.1).sin())
            .collect();
        RadialProfile::from_interior(space, &c).unwrap()
    }

    #[test]
    fn t_of_constant_and_linear() {
        // f ≡ 1 on [x0, 4]: T_{2,1} f(x) = (x² - x0²) / (2 x²)
        let rule = QuadratureRule::on_breakpoints(&[0.5, 1.0, 2.0, 4.0], DEFAULT_ORDER).unwrap();
        let op = VolterraOperator { a: 2.0, b: 1.0 };
        let img = apply_t(op, |_| 1.0, &rule);
        for &x in &[0.7, 1.5, 3.3] {
            let want = (x * x - 0.25) / (2.0 * x * x);
            assert!((img.eval(x) - want).abs() < 1e-14);
        }
        assert_eq!(img.eval(0.3), 0.0);
        // formal limit x0 → 0: f(s) = s gives x/3
        let rule = QuadratureRule::from_panels(vec![(0.0, 1.0), (1.0, 3.0)], DEFAULT_ORDER).unwrap();
        let img = apply_t(op, |s| s, &rule);
        for &x in &[0.4, 1.0, 2.5] {
            assert!((img.eval(x) - x / 3.0).abs() < 1e-14);
        }
        let img = apply_t(op, |_| 1.0, &rule);
        assert!((img.eval(2.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn t_matches_direct_quadrature() {
        let u = profile(3);
        let rule = QuadratureRule::for_profile(&u, DEFAULT_ORDER);
        let op = VolterraOperator { a: 1.7, b: 0.4 };
        let img = apply_t(op, |s| u.value(s), &rule);
        // oracle: fresh composite rule on [r_min, x] with 64 uniform panels
        for i in 0..50 {
            let x = 0.2 + (5.2 - 0.2) * (i as f64 + 0.5) / 50.0;
            let xe = x.min(5.0);
            let panels: Vec<(f64, f64)> = (0..64)
                .map(|j| {
                    let l = 0.2 + (xe - 0.2) * j as f64 / 64.0;
                    (l, 0.2 + (xe - 0.2) * (j + 1) as f64 / 64.0)
                })
                .collect();
            let fine = QuadratureRule::from_panels(panels, 16).unwrap();
            let direct: f64 = fine
                .nodes()
                .iter()
                .zip(fine.weights())
                .map(|(&s, &w)| w * s.powf(0.4) * u.value(s))
                .sum::<f64>()
                * x.powf(-1.7);
            let got = img.eval(x);
            assert!((got - direct).abs() <= 1e-9 * direct.abs().max(1e-3), "x={x}");
        }
    }

    #[test]
    fn tonelli_equality_for_nonnegative_f() {
        let space = SplineSpace::log_spaced(0.3, 3.0, 10, 5).unwrap();
        let k = RadialProfile::free_dim(&space);
        let c: Vec<f64> = (0..k).map(|i| 0.2 + ((i * 7) % 5) as f64 * 0.15).collect();
        let f = RadialProfile::from_interior(space, &c).unwrap();
        let rule = QuadratureRule::for_profile(&f, DEFAULT_ORDER);
        let cfg = OneDimConfig {
            p: 1.0,
            a_op: 2.0,
            b_op: 1.0,
            alpha: 0.0,
        };
        let r = operator_bound_check(&cfg, |x| f.value(x), &rule).unwrap();
        assert!((r.lhs - r.rhs_bound).abs() <= 1e-9 * r.rhs_bound);
    }

    #[test]
    fn operator_bound_examples() {
        let u = profile(1);
        let rule = QuadratureRule::for_profile(&u, DEFAULT_ORDER);
        let cfg = OneDimConfig {
            p: 2.0,
            a_op: 2.0,
            b_op: 1.0,
            alpha: 1.0,
        };
        let r = operator_bound_check(&cfg, |x| u.value(x), &rule).unwrap();
        assert!(r.ratio <= 1.0);
        let cfg = OneDimConfig {
            p: 3.0,
            a_op: 2.0,
            b_op: 1.0,
            alpha: 2.0,
        };
        assert!((cfg.gap() - 1.0).abs() < 1e-15);
        let r = operator_bound_check(&cfg, |x| u.derivative(x, 2), &rule).unwrap();
        assert!(r.holds(1e-8));
        let bad = OneDimConfig { alpha: 3.0, ..cfg };
        assert!(matches!(
            operator_bound_check(&bad, |x| u.value(x), &rule),
            Err(Ops1dError::Violation(_))
        ));
    }

    #[test]
    fn identity_residual_and_homogeneity() {
        let u = profile(2);
        let rule = QuadratureRule::for_profile(&u, DEFAULT_ORDER);
        let r = identity_check(&u, &rule);
        assert!(r.max_residual <= 1e-8 * r.scale);
        let zero = u.scaled(0.0);
        assert_eq!(identity_check(&zero, &rule).max_residual, 0.0);
        let big = identity_check(&u.scaled(1e3), &rule);
        assert!((big.scale - 1e3 * r.scale).abs() <= 1e-9 * big.scale);
        assert!(big.max_residual <= 1e-8 * big.scale);
    }

    #[test]
    fn l1_quotient_examples() {
        let u = profile(4);
        let rule = QuadratureRule::for_profile(&u, DEFAULT_ORDER);
        let r = l1_quotient_check(&u, &rule).unwrap();
        assert!(r.ratio <= 1.0 + 1e-8);
        let z = l1_quotient_check(&u.scaled(0.0), &rule).unwrap();
        assert_eq!(z.ratio, 0.0);
    }

    #[test]
    fn derivative_quotient_routes_and_errors() {
        let u = profile(5);
        let rule = QuadratureRule::for_profile(&u, DEFAULT_ORDER);
        let r = derivative_quotient_check(&u, 1, 0, 1.0, 0.0, &rule).unwrap();
        let c = l1_quotient_check(&u, &rule).unwrap();
        assert!((r.bound.lhs - c.lhs).abs() <= 1e-12 * c.lhs);
        assert!((r.bound.rhs_bound - c.rhs_bound).abs() <= 1e-12 * c.rhs_bound);
        let r = derivative_quotient_check(&u, 2, 0, 2.0, 1.0, &rule).unwrap();
        assert!(r.route_gap <= 1e-8 * r.scale);
        assert!(r.bound.holds(1e-8));
        let r = derivative_quotient_check(&u, 1, 1, 3.0, 0.0, &rule).unwrap();
        assert!(r.bound.ratio <= 1.0 + 1e-8);
        assert!(matches!(
            derivative_quotient_check(&u, 2, 2, 1.0, 0.0, &rule),
            Err(Ops1dError::DerivativeOrder(5))
        ));
        assert!(derivative_quotient_check(&u, 1, 0, 1.0, 1.0, &rule).is_err());
    }

    #[test]
    fn hardy_sharp_constants() {
        assert_eq!(hardy1d_sharp(2.0, -3.0).unwrap(), 1.0);
        // p = N = 3, β = -N + a - 1 with a = 0
        assert!((hardy1d_sharp(3.0, -4.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(hardy1d_sharp(2.0, -1.0), Err(Ops1dError::CriticalWeight));
        assert!(hardy1d_sharp(1.0, 0.0).is_err());
        let u = profile(6);
        let rule = QuadratureRule::for_profile(&u, DEFAULT_ORDER);
        let h = hardy1d_quotient(&u, 3.0, -4.0, &rule).unwrap();
        assert!(h.holds(1e-8));
    }
}
