//! A numerical laboratory for weighted Hardy-Rellich inequalities at the
//! critical exponent `p = N`.
//!
//! Test functions are compactly supported B-spline profiles on `(0, ∞)`,
//! optionally multiplied by an angular factor on S¹ or a zonal factor on S².
//! All functionals are evaluated by knot-aligned Gauss quadrature with exact
//! spline derivatives.

pub mod corpus;
pub mod functionals;
pub mod model;
pub mod ops1d;
pub mod quadrature;
pub mod quotients;
