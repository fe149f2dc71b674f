//! Dense real linear algebra for Jacobians: one-sided Jacobi SVD, numerical
//! rank, pivoted-QR least squares and LU solves.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("Jacobi SVD did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
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
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        }
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Thin SVD `A = U diag(s) V^T` with `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    /// rows x k
    pub u: Matrix,
    /// cols x k
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for j in 0..us.cols() {
            for i in 0..us.rows() {
                us[(i, j)] *= self.singular_values[j];
            }
        }
        us.matmul(&self.v.transpose())
    }
}

const JACOBI_MAX_SWEEPS: usize = 60;

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(a: &Matrix) -> Result<Svd, LinalgError> {
    if a.rows < a.cols {
        let t = svd(&a.transpose())?;
        return Ok(Svd {
            singular_values: t.singular_values,
            u: t.v,
            v: t.u,
        });
    }
    let (m, n) = (a.rows, a.cols);
    // columns of `w` are orthogonalised in place
    let mut w = a.transpose();
    let mut v = Matrix::identity(n);
    let tol = f64::EPSILON;
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (wp, wq) = (w.row(p), w.row(q));
                let alpha = dot(wp, wp);
                let beta = dot(wq, wq);
                let gamma = dot(wp, wq);
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut w, p, q, c, s);
                rotate_rows(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }
    let mut order: Vec<(f64, usize)> = (0..n).map(|j| (norm2(w.row(j)), j)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut u = Matrix::zeros(m, n);
    let mut vv = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &(sigma, j)) in order.iter().enumerate() {
        s.push(sigma);
        for i in 0..m {
            u[(i, k)] = if sigma > 0.0 { w[(j, i)] / sigma } else { 0.0 };
        }
        for i in 0..n {
            vv[(i, k)] = v[(j, i)];
        }
    }
    Ok(Svd {
        singular_values: s,
        u,
        v: vv,
    })
}

// Rows p and q hold the p-th and q-th columns of the working matrix.
fn rotate_rows(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..m.cols {
        let a = m[(p, k)];
        let b = m[(q, k)];
        m[(p, k)] = c * a - s * b;
        m[(q, k)] = s * a + c * b;
    }
}

pub fn singular_values(a: &Matrix) -> Result<Vec<f64>, LinalgError> {
    Ok(svd(a)?.singular_values)
}

/// How the rank tolerance is applied to singular values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RankMode {
    /// `sigma_i > eps`
    #[default]
    Absolute,
    /// `sigma_i > eps * sigma_1`
    Relative,
}

pub fn rank_from_singular_values(s: &[f64], eps: f64, mode: RankMode) -> usize {
    let threshold = match mode {
        RankMode::Absolute => eps,
        RankMode::Relative => eps * s.first().copied().unwrap_or(0.0),
    };
    s.iter().filter(|&&v| v > threshold).count()
}

/// Number of singular values above the tolerance.
pub fn numerical_rank(a: &Matrix, eps: f64, mode: RankMode) -> Result<usize, LinalgError> {
    if a.rows == 0 || a.cols == 0 {
        return Ok(0);
    }
    Ok(rank_from_singular_values(&singular_values(a)?, eps, mode))
}

/// Householder QR with column pivoting: `A P = Q R`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// R on and above the diagonal, Householder vectors below it.
    qr: Matrix,
    tau: Vec<f64>,
    perm: Vec<usize>,
}

impl PivotedQr {
    pub fn new(a: &Matrix) -> Self {
        let (m, n) = (a.rows, a.cols);
        let mut qr = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut norms: Vec<f64> = (0..n).map(|j| norm2(&qr.column(j))).collect();
        let kmax = m.min(n);
        let mut tau = vec![0.0; kmax];
        for k in 0..kmax {
            // pivot: largest remaining column norm, lowest index on ties
            let (piv, _) = (k..n).fold((k, -1.0), |(bj, bn), j| {
                if norms[j] > bn {
                    (j, norms[j])
                } else {
                    (bj, bn)
                }
            });
            if piv != k {
                for i in 0..m {
                    let t = qr[(i, k)];
                    qr[(i, k)] = qr[(i, piv)];
                    qr[(i, piv)] = t;
                }
                perm.swap(k, piv);
                norms.swap(k, piv);
            }
            let x: Vec<f64> = (k..m).map(|i| qr[(i, k)]).collect();
            let alpha = norm2(&x);
            if alpha == 0.0 {
                tau[k] = 0.0;
                continue;
            }
            let beta = if x[0] >= 0.0 { -alpha } else { alpha };
            let v0 = x[0] - beta;
            for i in k + 1..m {
                qr[(i, k)] /= v0;
            }
            tau[k] = (beta - x[0]) / beta;
            qr[(k, k)] = beta;
            for j in k + 1..n {
                let mut s = qr[(k, j)];
                for i in k + 1..m {
                    s += qr[(i, k)] * qr[(i, j)];
                }
                s *= tau[k];
                qr[(k, j)] -= s;
                for i in k + 1..m {
                    let vik = qr[(i, k)];
                    qr[(i, j)] -= s * vik;
                }
            }
            for j in k + 1..n {
                norms[j] = norm2(&(k + 1..m).map(|i| qr[(i, j)]).collect::<Vec<_>>());
            }
        }
        PivotedQr { qr, tau, perm }
    }

    pub fn r_diagonal(&self) -> Vec<f64> {
        (0..self.tau.len()).map(|k| self.qr[(k, k)]).collect()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Rank with the usual relative cutoff on |R_kk|.
    pub fn rank(&self) -> usize {
        let d = self.r_diagonal();
        let Some(r00) = d.first().map(|v| v.abs()) else { return 0 };
        let cutoff = r00 * f64::EPSILON * (self.qr.rows.max(self.qr.cols) as f64) * 16.0;
        d.iter().take_while(|v| v.abs() > cutoff).count()
    }

    #[allow(clippy::needless_range_loop)]
    fn apply_qt(&self, b: &mut [f64]) {
        let m = self.qr.rows;
        for k in 0..self.tau.len() {
            let mut s = b[k];
            for i in k + 1..m {
                s += self.qr[(i, k)] * b[i];
            }
            s *= self.tau[k];
            b[k] -= s;
            for i in k + 1..m {
                b[i] -= s * self.qr[(i, k)];
            }
        }
    }

    /// Basic least-squares solution using the leading `rank` columns.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[f64], rank: usize) -> Vec<f64> {
        let n = self.qr.cols;
        let mut z = b.to_vec();
        self.apply_qt(&mut z);
        let mut y = vec![0.0; n];
        for k in (0..rank).rev() {
            let mut s = z[k];
            for j in k + 1..rank {
                s -= self.qr[(k, j)] * y[j];
            }
            y[k] = s / self.qr[(k, k)];
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub x: Vec<f64>,
    pub rank: usize,
    /// The coefficient matrix lost rank; `x` is the minimum-norm solution.
    pub rank_deficient: bool,
}

/// `min ||A x - b||`: pivoted QR, falling back to the SVD pseudo-inverse
/// (minimum-norm solution) when `A` is column-rank deficient.
pub fn least_squares(a: &Matrix, b: &[f64]) -> Result<LeastSquares, LinalgError> {
    if a.rows != b.len() {
        return Err(LinalgError::Shape(format!(
            "least squares: {} rows vs rhs of length {}",
            a.rows,
            b.len()
        )));
    }
    if a.cols == 0 {
        return Ok(LeastSquares {
            x: vec![],
            rank: 0,
            rank_deficient: false,
        });
    }
    let qr = PivotedQr::new(a);
    let rank = qr.rank();
    if rank == a.cols {
        return Ok(LeastSquares {
            x: qr.solve(b, rank),
            rank,
            rank_deficient: false,
        });
    }
    let d = svd(a)?;
    let smax = d.singular_values.first().copied().unwrap_or(0.0);
    let cutoff = smax * f64::EPSILON * (a.rows.max(a.cols) as f64) * 16.0;
    let mut x = vec![0.0; a.cols];
    for (k, &s) in d.singular_values.iter().enumerate() {
        if s <= cutoff {
            continue;
        }
        let coef = (0..a.rows).map(|i| d.u[(i, k)] * b[i]).sum::<f64>() / s;
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += coef * d.v[(j, k)];
        }
    }
    Ok(LeastSquares {
        x,
        rank,
        rank_deficient: true,
    })
}

/// Coefficients of the combination `h + sum_j alpha_j h_j` whose gradient is
/// as small as possible.
///
/// `stack` holds the gradients of `h_1..h_r` in its first `r` rows and the
/// gradient of `h` in the last row; the result minimises
/// `|| stack^T (alpha, 1) ||`.
pub fn least_squares_combination(stack: &Matrix) -> Result<LeastSquares, LinalgError> {
    if stack.rows == 0 {
        return Err(LinalgError::Shape("empty gradient stack".into()));
    }
    let r = stack.rows - 1;
    let basis: Vec<usize> = (0..r).collect();
    let a = stack.select_rows(&basis).transpose();
    let rhs: Vec<f64> = stack.row(r).iter().map(|v| -v).collect();
    least_squares(&a, &rhs)
}

/// LU factorisation with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    piv: Vec<usize>,
}

impl Lu {
    pub fn new(a: &Matrix) -> Result<Self, LinalgError> {
        if a.rows != a.cols {
            return Err(LinalgError::Shape(format!("LU of a {}x{} matrix", a.rows, a.cols)));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        let tiny = (n as f64) * f64::EPSILON * scale;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()).then(j.cmp(&i)))
                .unwrap_or(k);
            let pivot = lu[(p, k)];
            if pivot.abs() <= tiny || !pivot.is_finite() {
                return Err(LinalgError::Singular { column: k, pivot });
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                piv.swap(k, p);
            }
            for i in k + 1..n {
                let l = lu[(i, k)] / pivot;
                lu[(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= l * u;
                    }
                }
            }
        }
        Ok(Lu { lu, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.lu.rows;
        let mut inv = Matrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            for (i, v) in self.solve(&e).into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        inv
    }
}

/// Solves the square system `A x = b`.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if b.len() != a.rows {
        return Err(LinalgError::Shape(format!("rhs of length {} for {} rows", b.len(), a.rows)));
    }
    Ok(Lu::new(a)?.solve(b))
}
