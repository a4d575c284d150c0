//! Clamped B-spline spaces on a breakpoint sequence.
//!
//! Evaluation follows the classical Cox-de Boor triangular scheme with the
//! derivative recursion of Piegl & Tiller (algorithm A2.3), so derivatives of
//! every order up to the degree are exact piecewise polynomials.

use super::ModelError;

/// Highest derivative order any functional in this crate asks for.
pub const MAX_DERIV: usize = 4;

/// A clamped B-spline space of fixed degree over strictly increasing breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSpace {
    breakpoints: Vec<f64>,
    degree: usize,
    knots: Vec<f64>,
}

impl SplineSpace {
    pub fn new(breakpoints: Vec<f64>, degree: usize) -> Result<Self, ModelError> {
        if breakpoints.len() < 2 {
            return Err(ModelError::InvalidProfile(
                "at least two breakpoints are required".into(),
            ));
        }
        if breakpoints.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::InvalidProfile("non-finite breakpoint".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::InvalidProfile(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if degree == 0 {
            return Err(ModelError::InvalidProfile("degree must be positive".into()));
        }
        let first = breakpoints[0];
        let last = *breakpoints.last().unwrap();
        let mut knots = Vec::with_capacity(breakpoints.len() + 2 * degree);
        knots.extend(std::iter::repeat_n(first, degree));
        knots.extend_from_slice(&breakpoints);
        knots.extend(std::iter::repeat_n(last, degree));
        Ok(Self {
            breakpoints,
            degree,
            knots,
        })
    }

    /// Log-spaced breakpoints: `spans` intervals between `lo` and `hi`.
    pub fn log_spaced(lo: f64, hi: f64, spans: usize, degree: usize) -> Result<Self, ModelError> {
        if !(lo > 0.0 && hi > lo) || spans == 0 {
            return Err(ModelError::InvalidProfile(format!(
                "log-spaced range needs 0 < lo < hi and spans > 0 (got [{lo}, {hi}], {spans})"
            )));
        }
        Self::new(log_breakpoints(lo, hi, spans), degree)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knot_vector(&self) -> &[f64] {
        &self.knots
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Number of basis functions.
    pub fn dim(&self) -> usize {
        self.breakpoints.len() - 1 + self.degree
    }

    /// Index `j` of the knot span `[t_j, t_{j+1})` containing `x`, clamped to the
    /// valid range. The basis functions alive there are `j - degree ..= j`.
    pub fn span(&self, x: f64) -> usize {
        let n = self.dim();
        if x >= self.knots[n] {
            return n - 1;
        }
        if x <= self.knots[self.degree] {
            return self.degree;
        }
        // first knot strictly greater than x, minus one
        let idx = self.knots.partition_point(|&t| t <= x);
        (idx - 1).clamp(self.degree, n - 1)
    }

    /// Greville abscissae, one per basis function.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree as f64;
        (0..self.dim())
            .map(|i| self.knots[i + 1..=i + self.degree].iter().sum::<f64>() / p)
            .collect()
    }

    /// Values and derivatives of the `degree + 1` basis functions alive at `x`.
    ///
    /// `ders[d][i]` is the `d`-th derivative of basis function `span - degree + i`.
    /// Orders above the degree are zero.
    pub fn basis_derivs(&self, x: f64, nd: usize) -> (usize, Vec<Vec<f64>>) {
        let p = self.degree;
        let span = self.span(x);
        let t = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let mut ders = vec![vec![0.0; p + 1]; nd + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let top = nd.min(p);
        let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=top {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let col = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][col];
                    d += a[s2][j] * ndu[col][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for k in 1..=top {
            for v in ders[k].iter_mut() {
                *v *= factor;
            }
            factor *= (p - k) as f64;
        }
        (span, ders)
    }

    /// Derivatives `0..=MAX_DERIV` of the spline with the given coefficients.
    /// Zero outside the closed support interval.
    pub fn eval_jet(&self, coefficients: &[f64], x: f64) -> [f64; MAX_DERIV + 1] {
        let mut out = [0.0; MAX_DERIV + 1];
        if !(x >= self.start() && x <= self.end()) {
            return out;
        }
        let (span, ders) = self.basis_derivs(x, MAX_DERIV);
        let base = span - self.degree;
        for (d, row) in ders.iter().enumerate() {
            out[d] = row
                .iter()
                .enumerate()
                .map(|(i, b)| b * coefficients[base + i])
                .sum();
        }
        out
    }
}

pub fn log_breakpoints(lo: f64, hi: f64, spans: usize) -> Vec<f64> {
    let (l0, l1) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..=spans)
        .map(|i| (l0 + (l1 - l0) * i as f64 / spans as f64).exp())
        .collect();
    v[0] = lo;
    v[spans] = hi;
    v
}
