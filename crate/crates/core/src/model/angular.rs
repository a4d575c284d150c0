//! Angular factors: `cos(l θ)` on the circle and zonal Legendre modes on S².

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Laplace-Beltrami eigenvalue `l (l + N - 2)` of degree-`l` spherical harmonics.
pub fn sphere_eigenvalue(ell: usize, n: usize) -> f64 {
    (ell * (ell + n - 2)) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularMode {
    ell: usize,
    n: usize,
    lambda: f64,
}

/// An angular factor and its derivatives with respect to the angle coordinate
/// (θ on S¹, the polar angle φ on S²).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AngularJet {
    pub y: f64,
    pub dy: f64,
    pub d2y: f64,
    /// `cot φ · dY/dφ` on S² (zero on S¹); finite at the poles.
    pub cot_dy: f64,
}

impl AngularJet {
    pub const CONSTANT: AngularJet = AngularJet {
        y: 1.0,
        dy: 0.0,
        d2y: 0.0,
        cot_dy: 0.0,
    };

    /// Norm of the spherical gradient of `Y`.
    pub fn grad_norm(&self) -> f64 {
        self.dy.abs()
    }

    /// Frobenius norm of the covariant Hessian of `Y` on the sphere.
    pub fn hess_norm(&self) -> f64 {
        self.d2y.hypot(self.cot_dy)
    }
}

impl AngularMode {
    /// Any `N >= 2` is accepted so that the eigenvalue can drive the p = 2
    /// quadratic forms; explicit evaluation is limited to `N ∈ {2, 3}`.
    pub fn new(ell: usize, n: usize) -> Result<Self, ModelError> {
        if n < 2 {
            return Err(ModelError::UnsupportedDimension {
                n,
                what: "angular modes need N >= 2",
            });
        }
        Ok(Self {
            ell,
            n,
            lambda: sphere_eigenvalue(ell, n),
        })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn has_explicit_factor(&self) -> bool {
        matches!(self.n, 2 | 3)
    }

    /// `(∫ Y² dω)^{1/2}`, available where the factor is explicit.
    pub fn normalization(&self) -> Option<f64> {
        match self.n {
            2 if self.ell == 0 => Some((2.0 * PI).sqrt()),
            2 => Some(PI.sqrt()),
            3 => Some((4.0 * PI / (2 * self.ell + 1) as f64).sqrt()),
            _ => None,
        }
    }

    /// Factor and derivatives at the angle coordinate.
    ///
    /// Only meaningful for `N ∈ {2, 3}`; callers go through [`TestField`](super::TestField),
    /// which enforces that.
    pub fn jet(&self, angle: f64) -> AngularJet {
        match self.n {
            2 => {
                let l = self.ell as f64;
                let (s, c) = (l * angle).sin_cos();
                AngularJet {
                    y: c,
                    dy: -l * s,
                    d2y: -l * l * c,
                    cot_dy: 0.0,
                }
            }
            3 => {
                let (sin_phi, x) = angle.sin_cos();
                let (p, dp, d2p) = legendre(self.ell, x);
                AngularJet {
                    y: p,
                    dy: -sin_phi * dp,
                    d2y: sin_phi * sin_phi * d2p - x * dp,
                    cot_dy: -x * dp,
                }
            }
            _ => panic!("no explicit angular factor for N = {}", self.n),
        }
    }
}

/// `P_l(x)`, `P_l'(x)`, `P_l''(x)` by the three-term recurrence and the
/// derivative recurrences `P'_{l+1} = P'_{l-1} + (2l+1) P_l` (same for `P''`).
pub fn legendre(ell: usize, x: f64) -> (f64, f64, f64) {
    if ell == 0 {
        return (1.0, 0.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    let (mut s0, mut s1) = (0.0, 0.0);
    for l in 1..ell {
        let lf = l as f64;
        let p2 = ((2.0 * lf + 1.0) * x * p1 - lf * p0) / (lf + 1.0);
        let d2 = d0 + (2.0 * lf + 1.0) * p1;
        let s2 = s0 + (2.0 * lf + 1.0) * d1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
        s0 = s1;
        s1 = s2;
    }
    (p1, d1, s1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_are_exact() {
        for n in 2..=3 {
            for ell in 0..=10 {
                let m = AngularMode::new(ell, n).unwrap();
                assert_eq!(m.lambda() - (ell * (ell + n - 2)) as f64, 0.0);
            }
        }
        assert_eq!(AngularMode::new(2, 3).unwrap().lambda(), 6.0);
        assert_eq!(AngularMode::new(0, 3).unwrap().lambda(), 0.0);
    }

    #[test]
    fn legendre_matches_closed_forms() {
        for &x in &[-0.9, -0.3, 0.0, 0.4, 1.0] {
            let (p, dp, d2p) = legendre(2, x);
            assert!((p - (1.5 * x * x - 0.5)).abs() < 1e-15);
            assert!((dp - 3.0 * x).abs() < 1e-15);
            assert!((d2p - 3.0).abs() < 1e-15);
            let (p, dp, d2p) = legendre(3, x);
            assert!((p - (2.5 * x * x * x - 1.5 * x)).abs() < 1e-14);
            assert!((dp - (7.5 * x * x - 1.5)).abs() < 1e-14);
            assert!((d2p - 15.0 * x).abs() < 1e-14);
        }
    }

    #[test]
    fn zonal_jet_matches_finite_differences() {
        let m = AngularMode::new(4, 3).unwrap();
        let h = 1e-5;
        for &phi in &[0.3, 1.1, 2.0, 2.9] {
            let j = m.jet(phi);
            let fd1 = (m.jet(phi + h).y - m.jet(phi - h).y) / (2.0 * h);
            let fd2 = (m.jet(phi + h).y - 2.0 * j.y + m.jet(phi - h).y) / (h * h);
            assert!((fd1 - j.dy).abs() < 1e-8);
            assert!((fd2 - j.d2y).abs() < 1e-4);
            assert!((j.cot_dy - j.dy / phi.tan()).abs() < 1e-12);
        }
        // poles stay finite
        assert!(m.jet(0.0).cot_dy.is_finite());
        assert!(m.jet(PI).cot_dy.is_finite());
    }

    #[test]
    fn rejects_low_dimension() {
        assert!(AngularMode::new(1, 1).is_err());
    }
}
