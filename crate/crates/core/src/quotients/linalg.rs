//! Dense symmetric linear algebra for small generalized eigenproblems.

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(|c| c.to_vec()).collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// `‖M - Mᵀ‖_F`
    pub fn asymmetry(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                s += 2.0 * (self[(i, j)] - self[(j, i)]).powi(2);
            }
        }
        s.sqrt()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `xᵀ M x`
    pub fn quad(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `D M D` for diagonal `D`.
    pub fn scaled(&self, d: &[f64]) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] *= d[i] * d[j];
            }
        }
        m
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Lower Cholesky factor, or `None` if a pivot is not positive.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.dim();
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// `L⁻¹ B L⁻ᵀ` for lower-triangular `L`.
pub fn congruence_inverse(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.dim();
    // Y = L⁻¹ B, column by column
    let mut y = b.clone();
    for c in 0..n {
        for i in 0..n {
            let mut s = y[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * y[(k, c)];
            }
            y[(i, c)] = s / l[(i, i)];
        }
    }
    // C = Y L⁻ᵀ = (L⁻¹ Yᵀ)ᵀ
    let mut c = Matrix::zeros(n);
    for r in 0..n {
        for i in 0..n {
            let mut s = y[(r, i)];
            for k in 0..i {
                s -= l[(i, k)] * c[(r, k)];
            }
            c[(r, i)] = s / l[(i, i)];
        }
    }
    // exact symmetry
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

/// Solves `Lᵀ x = y`.
pub fn solve_upper_transposed(l: &Matrix, y: &[f64]) -> Vec<f64> {
    let n = l.dim();
    let mut x = y.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
///
/// Returns eigenvalues and the matrix whose columns are the eigenvectors.
pub fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.dim();
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let total = m.frobenius().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..i {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[(i, i)]).collect(), v)
}

/// Number of eigenvalues of the pencil `(B, A)` above `mu`, for positive
/// definite `A`: the positive inertia of `B - mu A` (Sylvester), read off the
/// pivots of an unpivoted `LDLᵀ` factorization.
pub fn count_above(a: &Matrix, b: &Matrix, mu: f64) -> usize {
    let n = a.dim();
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = b[(i, j)] - mu * a[(i, j)];
        }
    }
    let tiny = 1e-300_f64.max(f64::EPSILON * m.frobenius() * 1e-6);
    let mut count = 0;
    for k in 0..n {
        let mut d = m[(k, k)];
        if d == 0.0 {
            d = tiny;
        }
        if d > 0.0 {
            count += 1;
        }
        for i in k + 1..n {
            let f = m[(i, k)] / d;
            for j in k + 1..n {
                m[(i, j)] -= f * m[(k, j)];
            }
        }
    }
    count
}

/// All eigenvalues of `(B, A)` in decreasing order by inertia bisection.
pub fn bisection_eigenvalues(a: &Matrix, b: &Matrix) -> Vec<f64> {
    let n = a.dim();
    let mut hi = 1.0;
    while count_above(a, b, hi) > 0 {
        hi *= 2.0;
    }
    let mut lo = -1.0;
    while count_above(a, b, lo) < n {
        lo *= 2.0;
    }
    (0..n)
        .map(|k| {
            // the (k+1)-th largest: smallest mu with count_above(mu) <= k
            let (mut l, mut h) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (l + h);
                if m <= l || m >= h {
                    break;
                }
                if count_above(a, b, m) > k {
                    l = m;
                } else {
                    h = m;
                }
            }
            0.5 * (l + h)
        })
        .collect()
}
