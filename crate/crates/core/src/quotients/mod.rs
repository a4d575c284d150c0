//! Rayleigh quotients: the sharp-constant catalog, p = 2 generalized
//! eigenproblems over spline spaces, the two-dimensional degeneracy sweep, and
//! multi-start maximization of the critical `p = N` ratios.

pub mod linalg;
pub mod nelder_mead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, CorpusError};
use crate::functionals::{
    lhs_functional, plateau_blowup_report, rhs_hessian_exact, rhs_laplacian, rhs_surrogate,
    EvalOptions, FunctionalError, SurrogateVariant,
};
use crate::model::{
    sphere_eigenvalue, ModelError, RadialProfile, SpaceParams, SplineSpace, TestField,
};
use crate::quadrature::{QuadratureError, QuadratureRule, DEFAULT_ORDER};
use linalg::{cholesky, congruence_inverse, jacobi_eigen, solve_upper_transposed, Matrix};
use nelder_mead::{minimize, NelderMeadOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuotientError {
    #[error("{name} is defined for {range} (got N={n}, p={p})")]
    Range {
        name: &'static str,
        range: &'static str,
        n: usize,
        p: f64,
    },
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantName {
    Hardy,
    Rellich,
    HardyRellichP2,
}

impl ConstantName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstantName::Hardy => "hardy",
            ConstantName::Rellich => "rellich",
            ConstantName::HardyRellichP2 => "hardy_rellich_p2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: ConstantName,
    pub n: usize,
    pub p: f64,
    pub value: f64,
    pub validity: &'static str,
}

/// Known best constants, as sup of numerator over denominator.
pub fn catalog(name: ConstantName, n: usize, p: f64) -> Result<CatalogEntry, QuotientError> {
    let nf = n as f64;
    let (validity, value) = match name {
        ConstantName::Hardy => {
            let range = "N >= 1, p >= 1, p != N";
            if n < 1 || p < 1.0 || p == nf {
                return Err(QuotientError::Range {
                    name: "hardy",
                    range,
                    n,
                    p,
                });
            }
            (range, (p / (nf - p)).abs().powf(p))
        }
        ConstantName::Rellich => {
            let range = "N >= 3, 1 < p < N/2";
            if n < 3 || !(p > 1.0 && p < nf / 2.0) {
                return Err(QuotientError::Range {
                    name: "rellich",
                    range,
                    n,
                    p,
                });
            }
            (range, (p * p / (nf * (nf - 2.0 * p) * (p - 1.0))).powf(p))
        }
        ConstantName::HardyRellichP2 => {
            let range = "p = 2, N >= 3";
            if n < 3 || p != 2.0 {
                return Err(QuotientError::Range {
                    name: "hardy_rellich_p2",
                    range,
                    n,
                    p,
                });
            }
            let v = match n {
                3 => 36.0 / 25.0,
                4 => 1.0 / 3.0,
                _ => 4.0 / (nf * nf),
            };
            (range, v)
        }
    };
    Ok(CatalogEntry {
        name,
        n,
        p,
        value,
        validity,
    })
}

/// The p = 2 quotients, for `u = g(r) Y_ℓ` with `∫Y² = 1`.
///
/// `Hardy`, `Rellich` and `HardyRellich` are unweighted; the two gradient
/// quotients carry the weight `|x|^a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    /// `∫u²/|x|²` over `∫|∇u|²`
    Hardy,
    /// `∫u²/|x|⁴` over `∫|Δu|²`
    Rellich,
    /// `∫|∇u|²/|x|²` over `∫|Δu|²`
    HardyRellich,
    /// `∫|∇(u/|x|)|²|x|^a` over `∫|Δu|²|x|^a`
    GradQuotientVsLap,
    /// `∫|∇(u/|x|)|²|x|^a` over `∫S(u)²|x|^a`
    GradQuotientVsSurrogate,
}

impl Problem {
    pub fn as_str(&self) -> &'static str {
        match self {
            Problem::Hardy => "hardy",
            Problem::Rellich => "rellich",
            Problem::HardyRellich => "hardy_rellich",
            Problem::GradQuotientVsLap => "grad_quotient_vs_lap",
            Problem::GradQuotientVsSurrogate => "grad_quotient_vs_surrogate",
        }
    }

    /// Catalog constant this problem reproduces, when one applies.
    pub fn catalog_value(&self, n: usize) -> Option<f64> {
        let entry = match self {
            Problem::Hardy => catalog(ConstantName::Hardy, n, 2.0),
            Problem::Rellich => catalog(ConstantName::Rellich, n, 2.0),
            Problem::HardyRellich => catalog(ConstantName::HardyRellichP2, n, 2.0),
            _ => return None,
        };
        entry.ok().map(|e| e.value)
    }
}

/// Numerator form `B` and denominator form `A` over the interior basis functions.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFormPair {
    pub a: Matrix,
    pub b: Matrix,
    pub problem: Problem,
    pub ell: usize,
    pub lambda: f64,
    pub params: SpaceParams,
    pub space: SplineSpace,
}

/// One squared term `(c₀ g + c₁ g' + c₂ g'')²` of a form.
type Feature = [f64; 3];

struct FormSpec {
    gamma_num: f64,
    gamma_den: f64,
    num: Box<dyn Fn(f64) -> Vec<Feature> + Sync>,
    den: Box<dyn Fn(f64) -> Vec<Feature> + Sync>,
}

fn form_spec(problem: Problem, params: &SpaceParams, lambda: f64, variant: SurrogateVariant) -> FormSpec {
    let nf = params.n as f64;
    let a = params.a;
    let sl = lambda.sqrt();
    let lap = move |r: f64| vec![[-lambda / (r * r), (nf - 1.0) / r, 1.0]];
    let grad = move |r: f64| vec![[0.0, 1.0, 0.0], [sl / r, 0.0, 0.0]];
    let grad_quotient = move |r: f64| {
        let r2 = r * r;
        vec![[-1.0 / r2, 1.0 / r, 0.0], [sl / r2, 0.0, 0.0]]
    };
    match problem {
        Problem::Hardy => FormSpec {
            gamma_num: nf - 3.0,
            gamma_den: nf - 1.0,
            num: Box::new(|_| vec![[1.0, 0.0, 0.0]]),
            den: Box::new(grad),
        },
        Problem::Rellich => FormSpec {
            gamma_num: nf - 5.0,
            gamma_den: nf - 1.0,
            num: Box::new(|_| vec![[1.0, 0.0, 0.0]]),
            den: Box::new(lap),
        },
        Problem::HardyRellich => FormSpec {
            gamma_num: nf - 3.0,
            gamma_den: nf - 1.0,
            num: Box::new(grad),
            den: Box::new(lap),
        },
        Problem::GradQuotientVsLap => FormSpec {
            gamma_num: nf - 1.0 + a,
            gamma_den: nf - 1.0 + a,
            num: Box::new(grad_quotient),
            den: Box::new(lap),
        },
        Problem::GradQuotientVsSurrogate => {
            // ∫|∇_S Y|² = λ and ∫|D²_S Y|² = λ² - (N-2)λ for normalized Y
            let sphere_hess = (lambda * lambda - (nf - 2.0) * lambda).max(0.0).sqrt();
            let two_l = (2.0 * lambda).sqrt();
            FormSpec {
                gamma_num: nf - 1.0 + a,
                gamma_den: nf - 1.0 + a,
                num: Box::new(grad_quotient),
                den: Box::new(move |r: f64| {
                    let last = match variant {
                        SurrogateVariant::InverseSquare => (nf - 1.0) / (r * r),
                        SurrogateVariant::AsPrinted => (nf - 1.0) / r,
                    };
                    vec![
                        [0.0, 0.0, 1.0],
                        [0.0, two_l / r, 0.0],
                        [sphere_hess / (r * r), 0.0, 0.0],
                        [0.0, last.sqrt(), 0.0],
                    ]
                }),
            }
        }
    }
}

/// Options for [`assemble_forms`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormOptions {
    pub order: usize,
    pub surrogate: SurrogateVariant,
}

impl Default for FormOptions {
    fn default() -> Self {
        Self {
            order: DEFAULT_ORDER,
            surrogate: SurrogateVariant::InverseSquare,
        }
    }
}

/// Assembles both forms panel by panel; each panel touches `(degree+1)²` entries.
pub fn assemble_forms(
    problem: Problem,
    params: &SpaceParams,
    ell: usize,
    space: &SplineSpace,
    opts: &FormOptions,
) -> Result<QuadraticFormPair, QuotientError> {
    if params.p != 2.0 {
        return Err(QuotientError::Input(format!(
            "quadratic forms need p = 2 (got {})",
            params.p
        )));
    }
    if ell > 0 && params.n < 2 {
        return Err(QuotientError::Input("angular modes need N >= 2".into()));
    }
    let deg = space.degree();
    let free = RadialProfile::free_dim(space);
    if free == 0 {
        return Err(QuotientError::Input("spline space has no interior basis functions".into()));
    }
    let lambda = if params.n >= 2 { sphere_eigenvalue(ell, params.n) } else { 0.0 };
    let spec = form_spec(problem, params, lambda, opts.surrogate);
    let rule = QuadratureRule::on_breakpoints(space.breakpoints(), opts.order)?;
    let q = rule.order();
    let nodes = rule.nodes();
    let weights = rule.weights();

    let blocks: Vec<(usize, Vec<f64>, Vec<f64>)> = (0..rule.panels().len())
        .into_par_iter()
        .map(|k| {
            let m = deg + 1;
            let mut bn = vec![0.0; m * m];
            let mut ba = vec![0.0; m * m];
            let mid = 0.5 * (rule.panels()[k].0 + rule.panels()[k].1);
            let base = space.span(mid) - deg;
            for i in k * q..(k + 1) * q {
                let x = nodes[i];
                let (span, d) = space.basis_derivs(x, 2);
                debug_assert_eq!(span - deg, base);
                for (target, feats, gamma) in [
                    (&mut bn, (spec.num)(x), spec.gamma_num),
                    (&mut ba, (spec.den)(x), spec.gamma_den),
                ] {
                    let w = weights[i] * x.powf(gamma);
                    for f in &feats {
                        let v: Vec<f64> = (0..m)
                            .map(|j| f[0] * d[0][j] + f[1] * d[1][j] + f[2] * d[2][j])
                            .collect();
                        for r in 0..m {
                            for c in r..m {
                                target[r * m + c] += w * v[r] * v[c];
                            }
                        }
                    }
                }
            }
            (base, bn, ba)
        })
        .collect();

    let mut a = Matrix::zeros(free);
    let mut b = Matrix::zeros(free);
    let m = deg + 1;
    for (base, bn, ba) in blocks {
        for r in 0..m {
            for c in r..m {
                let (gi, gj) = (base + r, base + c);
                if gi < deg || gj < deg || gi >= deg + free || gj >= deg + free {
                    continue;
                }
                let (i, j) = (gi - deg, gj - deg);
                b[(i, j)] += bn[r * m + c];
                a[(i, j)] += ba[r * m + c];
            }
        }
    }
    for i in 0..free {
        for j in 0..i {
            b[(i, j)] = b[(j, i)];
            a[(i, j)] = a[(j, i)];
        }
    }
    Ok(QuadraticFormPair {
        a,
        b,
        problem,
        ell,
        lambda,
        params: *params,
        space: space.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Eig,
    NelderMead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub ell: usize,
    pub solver: Solver,
    pub evaluations: usize,
    pub iterations: usize,
    pub budget_exhausted: bool,
    pub tracked_bound: Option<f64>,
    /// Denominator form not positive definite.
    pub degenerate: bool,
    /// Relative eigen-residual for the `eig` solver.
    pub residual: f64,
}

/// Eigenpairs of `B c = μ A c`, largest first.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedEigen {
    pub values: Vec<f64>,
    /// `vectors[k]` pairs with `values[k]`, in the original coordinates.
    pub vectors: Vec<Vec<f64>>,
    /// Cholesky needed the `1e-12·trace` diagonal shift.
    pub jittered: bool,
}

/// Diagonal scaling to unit `A_ii`, Cholesky (with one jitter retry), cyclic
/// Jacobi on `L⁻¹ B L⁻ᵀ`. `None` if `A` is not positive definite.
pub fn generalized_eigen(a: &Matrix, b: &Matrix) -> Option<GeneralizedEigen> {
    let n = a.dim();
    if n == 0 || (0..n).any(|i| !(a[(i, i)] > 0.0)) {
        return None;
    }
    let d: Vec<f64> = (0..n).map(|i| 1.0 / a[(i, i)].sqrt()).collect();
    let sa = a.scaled(&d);
    let sb = b.scaled(&d);
    let (l, jittered) = match cholesky(&sa) {
        Some(l) => (l, false),
        None => {
            let shift = 1e-12 * sa.trace();
            let mut shifted = sa.clone();
            for i in 0..n {
                shifted[(i, i)] += shift;
            }
            (cholesky(&shifted)?, true)
        }
    };
    let c = congruence_inverse(&l, &sb);
    let (w, v) = jacobi_eigen(&c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[j].total_cmp(&w[i]).then(i.cmp(&j)));
    let vectors = order
        .iter()
        .map(|&k| {
            let y: Vec<f64> = (0..n).map(|i| v[(i, k)]).collect();
            let z = solve_upper_transposed(&l, &y);
            z.iter().zip(&d).map(|(zi, di)| zi * di).collect()
        })
        .collect();
    Some(GeneralizedEigen {
        values: order.iter().map(|&k| w[k]).collect(),
        vectors,
        jittered,
    })
}

/// `‖Bc - μAc‖ / ((‖B‖ + |μ|‖A‖)‖c‖)` with Frobenius matrix norms.
pub fn eigen_residual(a: &Matrix, b: &Matrix, mu: f64, c: &[f64]) -> f64 {
    let bc = b.mul_vec(c);
    let ac = a.mul_vec(c);
    let r: f64 = bc.iter().zip(&ac).map(|(x, y)| (x - mu * y).powi(2)).sum::<f64>().sqrt();
    let cn = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = (b.frobenius() + mu.abs() * a.frobenius()) * cn;
    if scale == 0.0 {
        0.0
    } else {
        r / scale
    }
}

/// Largest generalized eigenvalue of the pair as a quotient report.
pub fn max_generalized_eig(pair: &QuadraticFormPair) -> QuotientReport {
    let degenerate = QuotientReport {
        value: f64::NAN,
        argmax: Vec::new(),
        ell: pair.ell,
        solver: Solver::Eig,
        evaluations: 0,
        iterations: 0,
        budget_exhausted: false,
        tracked_bound: None,
        degenerate: true,
        residual: f64::NAN,
    };
    let Some(eig) = generalized_eigen(&pair.a, &pair.b) else {
        return degenerate;
    };
    let mu = eig.values[0];
    let mut c = eig.vectors[0].clone();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in c.iter_mut() {
            *v /= norm;
        }
    }
    let residual = eigen_residual(&pair.a, &pair.b, mu, &c);
    QuotientReport {
        value: mu,
        argmax: c,
        ell: pair.ell,
        solver: Solver::Eig,
        evaluations: 1,
        iterations: 1,
        budget_exhausted: false,
        tracked_bound: None,
        degenerate: eig.jittered,
        residual,
    }
}

/// Discretization for [`reproduce_sharp`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpConfig {
    pub r_min: f64,
    pub r_max: f64,
    /// Log-spaced knot spans per decade.
    pub per_decade: usize,
    pub degree: usize,
    pub ell_max: usize,
}

impl Default for SharpConfig {
    fn default() -> Self {
        Self {
            r_min: 1e-3,
            r_max: 1e3,
            per_decade: 21,
            degree: 5,
            ell_max: 3,
        }
    }
}

impl SharpConfig {
    pub fn space(&self) -> Result<SplineSpace, QuotientError> {
        let decades = (self.r_max / self.r_min).log10();
        let spans = ((decades * self.per_decade as f64).round() as usize).max(1);
        Ok(SplineSpace::log_spaced(self.r_min, self.r_max, spans, self.degree)?)
    }

    /// Number of free coefficients.
    pub fn basis_size(&self) -> Result<usize, QuotientError> {
        Ok(RadialProfile::free_dim(&self.space()?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpReport {
    pub problem: Problem,
    pub n: usize,
    pub best: QuotientReport,
    pub per_mode: Vec<QuotientReport>,
    pub catalog: Option<f64>,
    pub basis_size: usize,
}

/// Best p = 2 quotient over the modes `0..=ell_max` (only `ℓ = 0` for `N = 1`).
pub fn reproduce_sharp(
    problem: Problem,
    n: usize,
    a: f64,
    config: &SharpConfig,
) -> Result<SharpReport, QuotientError> {
    let params = SpaceParams::new(n, 2.0, a)?;
    let space = config.space()?;
    let ell_max = if n >= 2 { config.ell_max } else { 0 };
    let per_mode: Vec<QuotientReport> = (0..=ell_max)
        .into_par_iter()
        .map(|ell| {
            let pair = assemble_forms(problem, &params, ell, &space, &FormOptions::default())?;
            Ok(max_generalized_eig(&pair))
        })
        .collect::<Result<_, QuotientError>>()?;
    let best = per_mode
        .iter()
        .filter(|r| !r.degenerate && r.value.is_finite())
        .fold(None::<&QuotientReport>, |acc, r| match acc {
            Some(b) if b.value >= r.value => Some(b),
            _ => Some(r),
        })
        .cloned()
        .unwrap_or_else(|| per_mode[0].clone());
    Ok(SharpReport {
        problem,
        n,
        best,
        per_mode,
        catalog: problem.catalog_value(n),
        basis_size: RadialProfile::free_dim(&space),
    })
}

/// `∫|Δu|²` over `∫u²/|x|⁴` for a two-dimensional field.
pub fn rellich_quotient_2d(field: &TestField) -> Result<f64, QuotientError> {
    let rep = plateau_blowup_report(field, f64::NAN, &EvalOptions::default())?;
    Ok(rep.lap_term / rep.rellich_term)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub radii: Vec<f64>,
    /// `ℓ = 1` quotients on the logarithmic-ramp family.
    pub dipole: Vec<f64>,
    /// `ℓ = 0` quotients on the same profiles.
    pub radial: Vec<f64>,
    /// `ℓ = 1` quotients on the linear-ramp harmonic plateau family (exploratory).
    pub linear_ramp: Vec<f64>,
    pub strictly_decreasing: bool,
    pub final_value: f64,
    pub radial_floor: f64,
}

/// The infimum-zero sweep of `∫|Δu|²/∫u²/|x|⁴` in two dimensions.
pub fn rellich_degeneracy(radii: &[f64], degree: usize) -> Result<DegeneracyReport, QuotientError> {
    if radii.is_empty() {
        return Err(QuotientError::Input("empty radius grid".into()));
    }
    let rows: Vec<(f64, f64, f64)> = radii
        .par_iter()
        .map(|&r| {
            let prof = corpus::rellich_profile(r, degree)?;
            let p2 = SpaceParams { n: 2, p: 2.0, a: 0.0 };
            let dipole = rellich_quotient_2d(&TestField::separable(prof.clone(), 1, p2)?)?;
            let radial = rellich_quotient_2d(&TestField::radial(prof, p2))?;
            let linear = rellich_quotient_2d(&corpus::harmonic_plateau(r, degree)?)?;
            Ok((dipole, radial, linear))
        })
        .collect::<Result<_, QuotientError>>()?;
    let dipole: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let radial: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let linear_ramp: Vec<f64> = rows.iter().map(|r| r.2).collect();
    Ok(DegeneracyReport {
        radii: radii.to_vec(),
        strictly_decreasing: dipole.windows(2).all(|w| w[1] < w[0]),
        final_value: *dipole.last().unwrap(),
        radial_floor: radial.iter().cloned().fold(f64::INFINITY, f64::min),
        dipole,
        radial,
        linear_ramp,
    })
}

/// Critical-exponent ratios probed by [`maximize_ratio_pn`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PnProblem {
    ThmVsSurrogate,
    ThmVsLap,
    ThmVsHessExact,
}

impl PnProblem {
    pub fn as_str(&self) -> &'static str {
        match self {
            PnProblem::ThmVsSurrogate => "thm_vs_surrogate",
            PnProblem::ThmVsLap => "thm_vs_lap",
            PnProblem::ThmVsHessExact => "thm_vs_hess_exact",
        }
    }
}

/// `lhs_functional / denominator` for one field; 0 when both vanish.
pub fn pn_ratio(problem: PnProblem, field: &TestField, opts: &EvalOptions) -> Result<f64, QuotientError> {
    let lhs = lhs_functional(field, opts)?.lhs;
    let den = match problem {
        PnProblem::ThmVsSurrogate => rhs_surrogate(field, opts)?,
        PnProblem::ThmVsLap => rhs_laplacian(field, opts)?,
        PnProblem::ThmVsHessExact => rhs_hessian_exact(field, opts)?,
    };
    Ok(if lhs == 0.0 { 0.0 } else { lhs / den })
}

fn with_interior(field: &TestField, interior: &[f64]) -> Result<TestField, QuotientError> {
    let prof = RadialProfile::from_interior(field.profile().space().clone(), interior)?;
    Ok(if field.is_radial() {
        TestField::radial(prof, *field.params())
    } else {
        TestField::separable(prof, field.ell(), *field.params())?
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    /// Total evaluation budget across all starts.
    pub budget: usize,
    pub starts: usize,
    pub seed: u64,
    /// Initial simplex edge relative to the largest start coefficient.
    pub step_fraction: f64,
    pub eval: EvalOptions,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            budget: 20_000,
            starts: 20,
            seed: 0,
            step_fraction: 0.1,
            eval: EvalOptions::default(),
        }
    }
}

/// Multi-start Nelder-Mead maximization of a critical ratio over the interior
/// coefficients of the start fields. The value is an empirical lower bound on
/// the best constant.
pub fn maximize_ratio_pn(
    problem: PnProblem,
    params: &SpaceParams,
    starts: &[TestField],
    opts: &OptimizerOptions,
) -> Result<QuotientReport, QuotientError> {
    if (params.p - params.n as f64).abs() > 1e-12 {
        return Err(QuotientError::Input(format!(
            "critical ratios need p = N (got N={}, p={})",
            params.n, params.p
        )));
    }
    if starts.is_empty() || opts.starts == 0 {
        return Err(QuotientError::Input("at least one start is required".into()));
    }
    let tracked = match problem {
        PnProblem::ThmVsSurrogate => Some(tracked_constant(params.n, params.a)?),
        _ => None,
    };
    let fields: Vec<TestField> = starts
        .iter()
        .map(|f| f.with_params(*params))
        .collect::<Result<_, _>>()?;
    let per_start = (opts.budget / opts.starts).max(2);
    let runs: Vec<(f64, Vec<f64>, usize, usize, usize, bool)> = (0..opts.starts)
        .into_par_iter()
        .map(|k| {
            let base = &fields[k % fields.len()];
            let mut x0 = base.profile().interior().to_vec();
            let scale = x0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
            if k >= fields.len() {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                for v in x0.iter_mut() {
                    *v += 0.5 * scale * rng.gen_range(-1.0..1.0);
                }
            }
            let objective = |c: &[f64]| -> f64 {
                match with_interior(base, c).and_then(|f| pn_ratio(problem, &f, &opts.eval)) {
                    Ok(v) => -v,
                    Err(_) => f64::INFINITY,
                }
            };
            let res = minimize(
                objective,
                &x0,
                &NelderMeadOptions {
                    max_evals: per_start,
                    step: opts.step_fraction * scale,
                    f_tol: 1e-10,
                },
            );
            (-res.f, res.x, base.ell(), res.evals, res.iterations, !res.converged)
        })
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.0 > runs[best].0 {
            best = i;
        }
    }
    let b = &runs[best];
    Ok(QuotientReport {
        value: b.0,
        argmax: b.1.clone(),
        ell: b.2,
        solver: Solver::NelderMead,
        evaluations: runs.iter().map(|r| r.3).sum(),
        iterations: runs.iter().map(|r| r.4).sum(),
        budget_exhausted: runs.iter().any(|r| r.5),
        tracked_bound: tracked,
        degenerate: false,
        residual: 0.0,
    })
}

/// The constant obtained by composing the convexity, radial and angular steps
/// against the surrogate: `2^{N/2-1}(1/(1-a) + (N/(N-a))^N)`, and `1/(1-a)` for `N = 1`.
pub fn tracked_constant(n: usize, a: f64) -> Result<f64, QuotientError> {
    if !(a < 1.0) {
        return Err(QuotientError::Input(format!("a<1 required (got a={a})")));
    }
    if n == 0 {
        return Err(QuotientError::Input("N >= 1 required".into()));
    }
    let radial = 1.0 / (1.0 - a);
    if n == 1 {
        return Ok(radial);
    }
    let nf = n as f64;
    Ok(2f64.powf(nf / 2.0 - 1.0) * (radial + (nf / (nf - a)).powf(nf)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightClass {
    /// `|x|^a ∈ A_q`
    pub a_q: bool,
    /// `|x|^a ∈ A_∞`
    pub a_infinity: bool,
}

/// Muckenhoupt membership of the power weight: `A_q` iff `-N < a < N(q-1)`.
pub fn weight_class_check(n: usize, a: f64, q: f64) -> Result<WeightClass, QuotientError> {
    if !(q > 1.0) {
        return Err(QuotientError::Input(format!("q > 1 required (got {q})")));
    }
    let nf = n as f64;
    Ok(WeightClass {
        a_q: -nf < a && a < nf * (q - 1.0),
        a_infinity: a > -nf,
    })
}
