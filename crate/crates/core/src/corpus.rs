//! Deterministic test-function corpora and the plateau families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, RadialProfile, SpaceParams, SplineSpace, TestField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorpusError {
    #[error("inconsistent corpus spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    RandomRadial,
    /// Angular degree drawn uniformly from `0..=ell_max`.
    RandomSeparable { ell_max: usize },
    /// `u = g(r) cos θ` in N = 2 with `g = r` on `[1, R]` and linear ramps on
    /// `[1/2, 1]` and `[R, 2R]`; one field per `R`.
    HarmonicPlateau { radii: Vec<f64> },
    /// `g = r` on `[1, R]` with ramps in `ln r` over `[R^{-2}, 1]` and `[R, R^3]`.
    RellichDegeneracy { radii: Vec<f64>, ell: usize },
    /// Truncated power `r^{-(β+1)/p}` on `[r_min, r_max]` with logarithmic ramps.
    NearExtremalHardy { p: f64, beta: f64, ramp_width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub seed: u64,
    /// Number of fields for the random families; grid families emit one per radius.
    pub count: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// Knot spans per random profile.
    pub spans: usize,
    pub degree: usize,
    pub params: SpaceParams,
    pub family: Family,
}

impl CorpusSpec {
    pub fn random_radial(seed: u64, count: usize, params: SpaceParams) -> Self {
        Self {
            seed,
            count,
            r_min: 0.1,
            r_max: 10.0,
            spans: 12,
            degree: 5,
            params,
            family: Family::RandomRadial,
        }
    }

    pub fn random_separable(seed: u64, count: usize, params: SpaceParams, ell_max: usize) -> Self {
        Self {
            family: Family::RandomSeparable { ell_max },
            ..Self::random_radial(seed, count, params)
        }
    }
}

/// Independent stream per corpus item.
fn item_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

fn random_profile(spec: &CorpusSpec, rng: &mut ChaCha8Rng) -> Result<RadialProfile, CorpusError> {
    let (l0, l1) = (spec.r_min.ln(), spec.r_max.ln());
    let width = l1 - l0;
    let lo = l0 + rng.gen_range(0.0..0.3) * width;
    let hi = l1 - rng.gen_range(0.0..0.3) * width;
    let m = spec.spans;
    let h = (hi - lo) / m as f64;
    let mut bps: Vec<f64> = (0..=m)
        .map(|i| {
            let jitter = if i == 0 || i == m { 0.0 } else { rng.gen_range(-0.3..0.3) * h };
            (lo + h * i as f64 + jitter).exp()
        })
        .collect();
    bps[0] = lo.exp();
    bps[m] = hi.exp();
    let space = SplineSpace::new(bps, spec.degree)?;
    let k = RadialProfile::free_dim(&space);
    let interior: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    Ok(RadialProfile::from_interior(space, &interior)?)
}

/// Builds the corpus; identical specs give bitwise-identical fields.
pub fn generate(spec: &CorpusSpec) -> Result<Vec<TestField>, CorpusError> {
    if spec.degree < 4 {
        return Err(CorpusError::Spec(format!("degree >= 4 required (got {})", spec.degree)));
    }
    let random = matches!(spec.family, Family::RandomRadial | Family::RandomSeparable { .. });
    if random {
        if spec.count == 0 {
            return Err(CorpusError::Spec("count must be positive".into()));
        }
        if !(spec.r_min > 0.0 && spec.r_max > spec.r_min) {
            return Err(CorpusError::Spec(format!(
                "0 < r_min < r_max required (got [{}, {}])",
                spec.r_min, spec.r_max
            )));
        }
        if spec.spans == 0 {
            return Err(CorpusError::Spec("spans must be positive".into()));
        }
    }
    match &spec.family {
        Family::RandomRadial => (0..spec.count as u64)
            .map(|i| {
                let mut rng = item_rng(spec.seed, i);
                Ok(TestField::radial(random_profile(spec, &mut rng)?, spec.params))
            })
            .collect(),
        Family::RandomSeparable { ell_max } => (0..spec.count as u64)
            .map(|i| {
                let mut rng = item_rng(spec.seed, i);
                let prof = random_profile(spec, &mut rng)?;
                let ell = rng.gen_range(0..=*ell_max);
                Ok(TestField::separable(prof, ell, spec.params)?)
            })
            .collect(),
        Family::HarmonicPlateau { radii } => {
            check_radii(radii)?;
            radii.iter().map(|&r| harmonic_plateau(r, spec.degree)).collect()
        }
        Family::RellichDegeneracy { radii, ell } => {
            check_radii(radii)?;
            radii
                .iter()
                .map(|&r| {
                    let prof = rellich_profile(r, spec.degree)?;
                    Ok(TestField::separable(prof, *ell, SpaceParams { n: 2, p: 2.0, a: 0.0 })?)
                })
                .collect()
        }
        Family::NearExtremalHardy { p, beta, ramp_width } => {
            let prof = near_extremal_hardy(*p, *beta, spec.r_min, spec.r_max, *ramp_width, spec.degree)?;
            Ok(vec![TestField::radial(prof, spec.params)])
        }
    }
}

fn check_radii(radii: &[f64]) -> Result<(), CorpusError> {
    if radii.is_empty() {
        return Err(CorpusError::Spec("radius grid is empty".into()));
    }
    if let Some(r) = radii.iter().find(|&&r| !(r > 1.0 && r.is_finite())) {
        return Err(CorpusError::Spec(format!("plateau radius must exceed 1 (got {r})")));
    }
    Ok(())
}

/// Degree-9 smoothstep ramp: 0 below `inner`, 1 above `outer`, C⁴ at both ends.
pub fn plateau_cutoff(r: f64, inner: f64, outer: f64) -> f64 {
    assert!(inner < outer, "plateau_cutoff needs inner < outer");
    let t = ((r - inner) / (outer - inner)).clamp(0.0, 1.0);
    let t5 = t.powi(5);
    t5 * (126.0 + t * (-420.0 + t * (540.0 + t * (-315.0 + t * 70.0))))
}

/// How the ramp breakpoints and the cutoff variable are spaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RampScale {
    Linear,
    Log,
}

/// Geometry of a plateau profile `r^e` on `[inner, outer]`, ramped to zero at `lo` and `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauShape {
    pub lo: f64,
    pub inner: f64,
    pub outer: f64,
    pub hi: f64,
    pub exponent: f64,
    pub scale: RampScale,
    /// Breakpoint spans per unit of `ln r` on the plateau.
    pub plateau_density: f64,
    pub ramp_spans: usize,
}

fn spaced(a: f64, b: f64, m: usize, scale: RampScale) -> Vec<f64> {
    match scale {
        RampScale::Linear => (0..=m).map(|i| a + (b - a) * i as f64 / m as f64).collect(),
        RampScale::Log => crate::model::log_breakpoints(a, b, m),
    }
}

/// Schoenberg quasi-interpolant of `r^e` with coefficient weights ramped by
/// [`plateau_cutoff`] in the Greville abscissae.
///
/// Every basis function alive on `[inner, outer]` keeps weight 1, so for
/// `e = 1` the profile equals `r` exactly there.
pub fn plateau_profile(shape: &PlateauShape, degree: usize) -> Result<RadialProfile, CorpusError> {
    let s = shape;
    if !(0.0 < s.lo && s.lo < s.inner && s.inner < s.outer && s.outer < s.hi) {
        return Err(CorpusError::Spec(format!(
            "plateau needs 0 < lo < inner < outer < hi (got {}, {}, {}, {})",
            s.lo, s.inner, s.outer, s.hi
        )));
    }
    let plateau_spans = (((s.outer / s.inner).ln() * s.plateau_density).ceil() as usize).max(1);
    let mut bps = spaced(s.lo, s.inner, s.ramp_spans, s.scale);
    bps.pop();
    bps.extend(crate::model::log_breakpoints(s.inner, s.outer, plateau_spans));
    bps.pop();
    bps.extend(spaced(s.outer, s.hi, s.ramp_spans, s.scale));
    let space = SplineSpace::new(bps, degree)?;
    let t = space.knot_vector().to_vec();
    let xi = space.greville();
    let dim = space.dim();
    let alive = |i: usize| t[i + degree + 1] > s.inner && t[i] < s.outer;
    let j_in = (0..dim).find(|&i| alive(i)).unwrap();
    let j_out = (0..dim).rev().find(|&i| alive(i)).unwrap();
    let var = |x: f64| match s.scale {
        RampScale::Linear => x,
        RampScale::Log => x.ln(),
    };
    let left = (var(xi[degree - 1]), var(xi[j_in]));
    let right = (var(xi[j_out]), var(xi[dim - degree]));
    let coeffs: Vec<f64> = (0..dim)
        .map(|i| {
            if i < degree || i >= dim - degree {
                return 0.0;
            }
            let w = if i < j_in {
                plateau_cutoff(var(xi[i]), left.0, left.1)
            } else if i > j_out {
                1.0 - plateau_cutoff(var(xi[i]), right.0, right.1)
            } else {
                1.0
            };
            xi[i].powf(s.exponent) * w
        })
        .collect();
    Ok(RadialProfile::in_space(space, coeffs)?)
}

/// Member `R` of the two-dimensional harmonic plateau family (`g = r` on `[1, R]`).
pub fn harmonic_plateau(r_cut: f64, degree: usize) -> Result<TestField, CorpusError> {
    let prof = plateau_profile(
        &PlateauShape {
            lo: 0.5,
            inner: 1.0,
            outer: r_cut,
            hi: 2.0 * r_cut,
            exponent: 1.0,
            scale: RampScale::Linear,
            plateau_density: 6.0,
            ramp_spans: 3 * degree,
        },
        degree,
    )?;
    Ok(TestField::separable(prof, 1, SpaceParams { n: 2, p: 2.0, a: 0.0 })?)
}

/// `g = r` on `[1, R]` with ramps of two plateau lengths in `ln r`.
pub fn rellich_profile(r_cut: f64, degree: usize) -> Result<RadialProfile, CorpusError> {
    plateau_profile(
        &PlateauShape {
            lo: r_cut.powi(-2),
            inner: 1.0,
            outer: r_cut,
            hi: r_cut.powi(3),
            exponent: 1.0,
            scale: RampScale::Log,
            plateau_density: 6.0,
            ramp_spans: 3 * degree,
        },
        degree,
    )
}

/// Truncated extremal power for the 1D Hardy quotient with exponent `p` and weight `r^β`.
pub fn near_extremal_hardy(
    p: f64,
    beta: f64,
    r_min: f64,
    r_max: f64,
    ramp_width: f64,
    degree: usize,
) -> Result<RadialProfile, CorpusError> {
    if !(p > 1.0) || beta == -1.0 {
        return Err(CorpusError::Spec(format!("p > 1 and beta != -1 required (got p={p}, beta={beta})")));
    }
    let inner = r_min * ramp_width.exp();
    let outer = r_max * (-ramp_width).exp();
    plateau_profile(
        &PlateauShape {
            lo: r_min,
            inner,
            outer,
            hi: r_max,
            exponent: -(beta + 1.0) / p,
            scale: RampScale::Log,
            plateau_density: 6.0,
            ramp_spans: 3 * degree,
        },
        degree,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{point_values, SurrogateVariant};
    use crate::ops1d::hardy1d_quotient;
    use crate::quadrature::{QuadratureRule, DEFAULT_ORDER};

    fn params() -> SpaceParams {
        SpaceParams::new(3, 3.0, 0.0).unwrap()
    }

    #[test]
    fn deterministic_generation() {
        let spec = CorpusSpec::random_separable(42, 50, params(), 3);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        let other = generate(&CorpusSpec::random_separable(43, 50, params(), 3)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn rejects_inconsistent_specs() {
        let mut spec = CorpusSpec::random_radial(1, 0, params());
        assert!(generate(&spec).is_err());
        spec.count = 3;
        spec.degree = 3;
        assert!(generate(&spec).is_err());
        let grid = CorpusSpec {
            family: Family::HarmonicPlateau { radii: vec![] },
            ..CorpusSpec::random_radial(1, 3, params())
        };
        assert!(generate(&grid).is_err());
        let sep = CorpusSpec::random_separable(1, 3, SpaceParams::new(4, 4.0, 0.0).unwrap(), 2);
        assert!(generate(&sep).is_err());
    }

    #[test]
    fn cutoff_examples() {
        assert_eq!(plateau_cutoff(0.5, 1.0, 2.0), 0.0);
        assert_eq!(plateau_cutoff(1.0, 1.0, 2.0), 0.0);
        assert_eq!(plateau_cutoff(2.0, 1.0, 2.0), 1.0);
        assert_eq!(plateau_cutoff(3.0, 1.0, 2.0), 1.0);
        assert!((plateau_cutoff(1.5, 1.0, 2.0) - 0.5).abs() < 1e-15);
        // symmetry and monotonicity
        for i in 0..100 {
            let t = i as f64 / 100.0;
            let a = plateau_cutoff(t, 0.0, 1.0);
            assert!((a + plateau_cutoff(1.0 - t, 0.0, 1.0) - 1.0).abs() < 1e-13);
            assert!(plateau_cutoff(t + 0.01, 0.0, 1.0) >= a);
        }
    }

    #[test]
    fn harmonic_plateau_is_linear_on_plateau() {
        let f = harmonic_plateau(16.0, 5).unwrap();
        let prof = f.profile();
        assert_eq!(prof.support(), (0.5, 32.0));
        let rule = QuadratureRule::for_profile(prof, DEFAULT_ORDER);
        for &r in rule.nodes().iter().filter(|&&r| (1.0..=16.0).contains(&r)) {
            let j = prof.jet(r);
            assert!((j[0] - r).abs() <= 1e-12 * r);
            assert!((j[1] - 1.0).abs() <= 1e-11);
            let lap = point_values(&f, r, 0.3, SurrogateVariant::InverseSquare).laplacian;
            assert!(lap.abs() <= 1e-10 * r, "r={r} lap={lap}");
        }
    }

    #[test]
    fn near_extremal_profile_approaches_sharp_constant() {
        let prof = near_extremal_hardy(2.0, -3.0, 1e-4, 1e4, 5.0, 5).unwrap();
        let rule = QuadratureRule::for_profile(&prof, DEFAULT_ORDER);
        let rep = hardy1d_quotient(&prof, 2.0, -3.0, &rule).unwrap();
        assert!(rep.ratio >= 0.9 * rep.sharp, "{} vs {}", rep.ratio, rep.sharp);
        assert!(rep.holds(1e-8));
    }
}
