//! Small dense linear algebra helpers: vector ops, a row-major matrix,
//! power iteration for spectral norms, and a cyclic Jacobi eigensolver
//! for symmetric matrices.

use crate::error::{Error, Result};

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// y += a * x
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scaled(a: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|xi| a * xi).collect()
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from a row list; rows must be nonempty and of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("matrix rows"));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            if !all_finite(r) {
                return Err(Error::NonFinite("matrix entry"));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// Aᵀ x
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            axpy(x[i], self.row(i), &mut out);
        }
        out
    }

    /// Aᵀ A (cols × cols)
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..self.rows {
                    s += self.get(k, i) * self.get(k, j);
                }
                g.set(i, j, s);
                g.set(j, i, s);
            }
        }
        g
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
/// Returns None when the matrix is numerically singular.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return None;
    }
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let scale = 1.0 + m.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if m.get(row, col).abs() > m.get(pivot, col).abs() {
                pivot = row;
            }
        }
        if m.get(pivot, col).abs() < 1e-14 * scale {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m.get(col, j);
                m.set(col, j, m.get(pivot, j));
                m.set(pivot, j, tmp);
            }
            rhs.swap(col, pivot);
        }
        for row in col + 1..n {
            let factor = m.get(row, col) / m.get(col, col);
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                let v = m.get(row, j) - factor * m.get(col, j);
                m.set(row, j, v);
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for j in row + 1..n {
            s -= m.get(row, j) * x[j];
        }
        x[row] = s / m.get(row, row);
    }
    Some(x)
}

/// Spectral norm ‖A‖ by power iteration on AᵀA.
///
/// Deterministic start vector; 200 iterations or relative change below 1e-12.
pub fn spectral_norm(a: &Matrix) -> f64 {
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 1e-3 * i as f64).collect();
    let nv = norm(&v);
    for vi in v.iter_mut() {
        *vi /= nv;
    }
    let mut lambda = 0.0_f64;
    for _ in 0..200 {
        let w = a.mul_transpose_vec(&a.mul_vec(&v));
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        let new_lambda = dot(&v, &w);
        v = w.iter().map(|x| x / nw).collect();
        if (new_lambda - lambda).abs() <= 1e-12 * new_lambda.abs().max(1.0) {
            lambda = new_lambda;
            break;
        }
        lambda = new_lambda;
    }
    lambda.max(0.0).sqrt()
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues (unsorted) and the matrix whose columns are the
/// corresponding eigenvectors. Converges when the off-diagonal Frobenius
/// mass drops below 1e-12; cap 100 sweeps.
pub fn jacobi_eigh(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: a.cols(),
        });
    }
    let n = a.rows();
    let mut m = a.clone();
    let mut q = Matrix::identity(n);
    if n == 1 {
        return Ok((vec![m.get(0, 0)], q));
    }
    let tol = 1e-12 * (1.0 + m.frobenius());
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n - 1 {
            for r in p + 1..n {
                off += m.get(p, r) * m.get(p, r);
            }
        }
        if (2.0 * off).sqrt() < tol {
            let eig = (0..n).map(|i| m.get(i, i)).collect();
            return Ok((eig, q));
        }
        for p in 0..n - 1 {
            for r in p + 1..n {
                let apq = m.get(p, r);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(r, r);
                let theta = 0.5 * (aqq - app) / apq;
                let t = {
                    let s = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -s
                    } else {
                        s
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                m.set(p, p, app - t * apq);
                m.set(r, r, aqq + t * apq);
                m.set(p, r, 0.0);
                m.set(r, p, 0.0);
                for j in 0..n {
                    if j != p && j != r {
                        let mjp = m.get(j, p);
                        let mjq = m.get(j, r);
                        m.set(j, p, mjp - s * (mjq + tau * mjp));
                        m.set(p, j, m.get(j, p));
                        m.set(j, r, mjq + s * (mjp - tau * mjq));
                        m.set(r, j, m.get(j, r));
                    }
                }
                for j in 0..n {
                    let qjp = q.get(j, p);
                    let qjq = q.get(j, r);
                    q.set(j, p, qjp - s * (qjq + tau * qjp));
                    q.set(j, r, qjq + s * (qjp - tau * qjq));
                }
            }
        }
    }
    Err(Error::NoConvergence {
        what: "jacobi eigensolver",
        gap: f64::NAN,
        iters: 100,
        last: vec![],
    })
}

/// Largest eigenvalue and its eigenvector of a symmetric matrix.
pub fn max_eigenpair(a: &Matrix) -> Result<(f64, Vec<f64>)> {
    let (eig, q) = jacobi_eigh(a)?;
    let (mut best, mut idx) = (f64::NEG_INFINITY, 0);
    for (i, &e) in eig.iter().enumerate() {
        if e > best {
            best = e;
            idx = i;
        }
    }
    let v = (0..a.rows()).map(|i| q.get(i, idx)).collect();
    Ok((best, v))
}

/// Dimension of the scaled upper-triangular vectorization of an l×l
/// symmetric matrix.
pub fn sym_vec_dim(l: usize) -> usize {
    l * (l + 1) / 2
}

/// Vectorize a symmetric matrix in row-major upper-triangular order with
/// off-diagonal entries scaled by √2, so that ⟨vec A, vec B⟩ = trace(AB).
pub fn sym_to_vec(a: &Matrix) -> Vec<f64> {
    let l = a.rows();
    let s2 = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(sym_vec_dim(l));
    for i in 0..l {
        for j in i..l {
            out.push(if i == j {
                a.get(i, j)
            } else {
                s2 * a.get(i, j)
            });
        }
    }
    out
}

/// Inverse of [`sym_to_vec`].
pub fn vec_to_sym(v: &[f64], l: usize) -> Matrix {
    debug_assert_eq!(v.len(), sym_vec_dim(l));
    let s2 = std::f64::consts::SQRT_2;
    let mut m = Matrix::zeros(l, l);
    let mut k = 0;
    for i in 0..l {
        for j in i..l {
            let x = if i == j { v[k] } else { v[k] / s2 };
            m.set(i, j, x);
            m.set(j, i, x);
            k += 1;
        }
    }
    m
}
