//! Knot-aligned Gauss-Legendre panel rules on `(0, ∞)` with power weights, and
//! tensor angular rules on S¹ / zonal S².
//!
//! Supports never touch the origin, so `r^γ` with negative `γ` is integrated
//! with the same rule as everything else.

use std::f64::consts::PI;

use thiserror::Error;

use crate::model::RadialProfile;

pub const DEFAULT_ORDER: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("non-finite integrand on panel {panel} = [{left}, {right}]")]
    NonFinite { panel: usize, left: f64, right: f64 },
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("no sphere rule for N = {0} (only N = 2, 3)")]
    UnsupportedSphere(usize),
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp;
        loop {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss rule whose panels are given intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    panels: Vec<(f64, f64)>,
    order: usize,
    ref_nodes: Vec<f64>,
    ref_weights: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn on_breakpoints(breakpoints: &[f64], order: usize) -> Result<Self, QuadratureError> {
        if breakpoints.len() < 2 || breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(QuadratureError::InvalidRule(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if !(breakpoints[0] > 0.0) {
            return Err(QuadratureError::InvalidRule(
                "panels must lie inside (0, inf)".into(),
            ));
        }
        let panels = breakpoints.windows(2).map(|w| (w[0], w[1])).collect();
        Self::from_panels(panels, order)
    }

    pub fn from_panels(panels: Vec<(f64, f64)>, order: usize) -> Result<Self, QuadratureError> {
        if order == 0 || panels.is_empty() {
            return Err(QuadratureError::InvalidRule("empty rule".into()));
        }
        let (ref_nodes, ref_weights) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(panels.len() * order);
        let mut weights = Vec::with_capacity(panels.len() * order);
        for &(l, r) in &panels {
            let (mid, half) = (0.5 * (l + r), 0.5 * (r - l));
            for (&t, &w) in ref_nodes.iter().zip(&ref_weights) {
                nodes.push(mid + half * t);
                weights.push(half * w);
            }
        }
        Ok(Self {
            panels,
            order,
            ref_nodes,
            ref_weights,
            nodes,
            weights,
        })
    }

    /// Panels aligned to the profile's knots.
    pub fn for_profile(profile: &RadialProfile, order: usize) -> Self {
        Self::on_breakpoints(profile.knots(), order).expect("profile knots are valid panels")
    }

    /// Every panel split at its midpoint.
    pub fn refined(&self) -> Self {
        let panels = self
            .panels
            .iter()
            .flat_map(|&(l, r)| {
                let m = 0.5 * (l + r);
                [(l, m), (m, r)]
            })
            .collect();
        Self::from_panels(panels, self.order).unwrap()
    }

    pub fn panels(&self) -> &[(f64, f64)] {
        &self.panels
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support(&self) -> (f64, f64) {
        (self.panels[0].0, self.panels.last().unwrap().1)
    }

    /// Gauss rule of the same order mapped onto `[l, r]`.
    pub fn sub_rule(&self, l: f64, r: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (mid, half) = (0.5 * (l + r), 0.5 * (r - l));
        self.ref_nodes
            .iter()
            .zip(&self.ref_weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }

    /// Panel index containing `x` (clamped).
    pub fn panel_of(&self, x: f64) -> usize {
        let idx = self.panels.partition_point(|&(_, r)| r < x);
        idx.min(self.panels.len() - 1)
    }
}

/// Sum in a fixed binary-tree order, independent of how the terms were produced.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// `∫ f(r) r^γ dr` over the rule's panels.
pub fn integrate_radial<F>(f: F, gamma: f64, rule: &QuadratureRule) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    let q = rule.order();
    let nodes = rule.nodes();
    let weights = rule.weights();
    let mut totals = Vec::with_capacity(rule.panels().len());
    for (k, &(l, r)) in rule.panels().iter().enumerate() {
        let mut s = 0.0;
        for i in k * q..(k + 1) * q {
            let x = nodes[i];
            s += weights[i] * f(x) * x.powf(gamma);
        }
        if !s.is_finite() {
            return Err(QuadratureError::NonFinite {
                panel: k,
                left: l,
                right: r,
            });
        }
        totals.push(s);
    }
    Ok(pairwise_sum(&totals))
}

/// Result with the change under one panel refinement as error estimate.
pub fn integrate_radial_estimate<F>(
    f: F,
    gamma: f64,
    rule: &QuadratureRule,
) -> Result<(f64, f64), QuadratureError>
where
    F: Fn(f64) -> f64,
{
    let coarse = integrate_radial(&f, gamma, rule)?;
    let fine = integrate_radial(&f, gamma, &rule.refined())?;
    Ok((fine, (fine - coarse).abs()))
}

fn is_even_integer(p: f64) -> bool {
    p.fract() == 0.0 && (p as i64) % 2 == 0
}

const KINK_SAMPLES: usize = 24;

/// Zeros of `g` on `[l, r]` located by sign changes on a uniform sample plus bisection.
fn sign_change_points<G: Fn(f64) -> f64>(g: &G, l: f64, r: f64) -> Vec<f64> {
    let mut cuts = Vec::new();
    let h = (r - l) / KINK_SAMPLES as f64;
    let mut x0 = l;
    let mut v0 = g(l);
    for i in 1..=KINK_SAMPLES {
        let x1 = if i == KINK_SAMPLES { r } else { l + h * i as f64 };
        let v1 = g(x1);
        if v0 * v1 < 0.0 {
            let (mut a, mut b, mut va) = (x0, x1, v0);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let vm = g(m);
                if vm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if (vm < 0.0) == (va < 0.0) {
                    a = m;
                    va = vm;
                } else {
                    b = m;
                }
            }
            cuts.push(0.5 * (a + b));
        }
        x0 = x1;
        v0 = v1;
    }
    cuts
}

/// `∫ |g(r)|^p r^γ dr`, splitting panels at sign changes of `g` so that the
/// kinks of `|g|^p` fall on sub-panel boundaries.
pub fn integrate_radial_abs_pow<G>(
    g: G,
    p: f64,
    gamma: f64,
    rule: &QuadratureRule,
) -> Result<f64, QuadratureError>
where
    G: Fn(f64) -> f64,
{
    if is_even_integer(p) {
        return integrate_radial(|r| g(r).abs().powf(p), gamma, rule);
    }
    let mut totals = Vec::with_capacity(rule.panels().len());
    for (k, &(l, r)) in rule.panels().iter().enumerate() {
        let mut edges = vec![l];
        edges.extend(sign_change_points(&g, l, r));
        edges.push(r);
        let mut s = 0.0;
        for w in edges.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            for (x, wt) in rule.sub_rule(w[0], w[1]) {
                s += wt * g(x).abs().powf(p) * x.powf(gamma);
            }
        }
        if !s.is_finite() {
            return Err(QuadratureError::NonFinite {
                panel: k,
                left: l,
                right: r,
            });
        }
        totals.push(s);
    }
    Ok(pairwise_sum(&totals))
}

/// `|S^{N-1}| = 2 π^{N/2} / Γ(N/2)`; `N = 1` gives 2 (two half-lines).
pub fn sphere_area(n: usize) -> f64 {
    assert!(n >= 1, "sphere_area needs N >= 1");
    let (mut area, mut k) = if n % 2 == 1 { (2.0, 1) } else { (2.0 * PI, 2) };
    while k < n {
        area *= 2.0 * PI / k as f64;
        k += 2;
    }
    area
}

/// Angular nodes with weights that include the surface measure.
///
/// S¹: periodic trapezoid in θ. S²: composite Gauss-Legendre in `cos φ`, times the
/// azimuthal factor `2π` (zonal integrands only). Angles are θ or φ respectively.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularRule {
    n: usize,
    angles: Vec<f64>,
    weights: Vec<f64>,
}

impl AngularRule {
    /// `resolution` is the node count on S¹ and the panel count on S² (8 nodes each).
    pub fn new(n: usize, resolution: usize) -> Result<Self, QuadratureError> {
        match n {
            2 => {
                let m = resolution.max(1);
                let h = 2.0 * PI / m as f64;
                Ok(Self {
                    n,
                    angles: (0..m).map(|k| h * k as f64).collect(),
                    weights: vec![h; m],
                })
            }
            3 => {
                let panels = resolution.max(1);
                let (t, w) = gauss_legendre(8);
                let mut angles = Vec::with_capacity(panels * 8);
                let mut weights = Vec::with_capacity(panels * 8);
                for k in 0..panels {
                    let l = -1.0 + 2.0 * k as f64 / panels as f64;
                    let r = -1.0 + 2.0 * (k + 1) as f64 / panels as f64;
                    let (mid, half) = (0.5 * (l + r), 0.5 * (r - l));
                    for (&ti, &wi) in t.iter().zip(&w) {
                        angles.push((mid + half * ti).acos());
                        weights.push(2.0 * PI * half * wi);
                    }
                }
                Ok(Self { n, angles, weights })
            }
            _ => Err(QuadratureError::UnsupportedSphere(n)),
        }
    }

    pub fn default_for(n: usize) -> Result<Self, QuadratureError> {
        match n {
            2 => Self::new(2, 128),
            _ => Self::new(n, 16),
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<H: Fn(f64) -> f64>(&self, h: H) -> f64 {
        let terms: Vec<f64> = self
            .angles
            .iter()
            .zip(&self.weights)
            .map(|(&a, &w)| w * h(a))
            .collect();
        pairwise_sum(&terms)
    }
}

/// `∫_{S^{N-1}} h dω` for `N ∈ {2, 3}`; `h` takes θ (N = 2) or the polar angle φ (N = 3).
pub fn integrate_sphere<H: Fn(f64) -> f64>(h: H, n: usize) -> Result<f64, QuadratureError> {
    Ok(AngularRule::default_for(n)?.integrate(h))
}
