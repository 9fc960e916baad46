//! Dense least-squares kernels.
//!
//! Everything here works on tall, thin designs (many rows, a handful of
//! columns). Systems are solved through a column-pivoted Householder QR of
//! the column-equilibrated design; normal equations are never formed.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Relative singular-value cutoff below which a design is declared rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Column-major dense matrix.
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

    /// Builds a matrix from equal-length columns.
    pub fn from_columns(columns: &[&[f64]]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.len());
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            if c.len() != rows {
                return Err(Error::Shape {
                    expected: rows,
                    found: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Ok(Matrix {
            rows,
            cols: columns.len(),
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (j, &vj) in v.iter().enumerate().take(self.cols) {
            for (o, x) in out.iter_mut().zip(self.column(j)) {
                *o += x * vj;
            }
        }
        out
    }

    /// `selfᵀ * v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.cols).map(|j| dot(self.column(j), v)).collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let col = self.mul_vec(other.column(j));
            out.column_mut(j).copy_from_slice(&col);
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| f64::max(m, libm::fabs(a - b)))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    // Scaled accumulation keeps huge or tiny columns from overflowing.
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(libm::fabs(*x)));
    if scale == 0.0 {
        return 0.0;
    }
    let ss: f64 = a.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * libm::sqrt(ss)
}

pub fn mean(a: &[f64]) -> f64 {
    let n = a.len() as f64;
    let m = a.iter().sum::<f64>() / n;
    // second pass removes most of the rounding in the first
    m + a.iter().map(|x| x - m).sum::<f64>() / n
}

pub fn centered(a: &[f64]) -> Vec<f64> {
    let m = mean(a);
    a.iter().map(|x| x - m).collect()
}

/// Column-pivoted Householder QR of an equilibrated full-column-rank design.
#[derive(Debug, Clone)]
pub struct Qr {
    rows: usize,
    cols: usize,
    /// Householder vectors; reflector k acts on rows k.. and is stored from index 0.
    reflectors: Vec<Vec<f64>>,
    betas: Vec<f64>,
    /// Upper-triangular factor, row-major `cols x cols`, in pivoted column order.
    r: Vec<f64>,
    /// `perm[k]` is the original column sitting at pivoted position k.
    perm: Vec<usize>,
    /// Euclidean norm of every original column.
    scale: Vec<f64>,
    singular_values: Vec<f64>,
}

impl Qr {
    /// Factors `x`. `labels` name the columns for rank-deficiency errors.
    pub fn new(x: &Matrix, labels: &[String]) -> Result<Self> {
        let (n, p) = (x.rows, x.cols);
        if n < p {
            return Err(Error::InsufficientSample { needed: p, got: n });
        }
        let label = |j: usize| labels.get(j).cloned().unwrap_or_else(|| alloc::format!("x{j}"));

        let mut work = x.clone();
        let mut scale = vec![0.0; p];
        let mut zero_cols = Vec::new();
        for (j, s) in scale.iter_mut().enumerate() {
            *s = norm(work.column(j));
            if *s == 0.0 || !s.is_finite() {
                zero_cols.push(label(j));
            } else {
                let inv = 1.0 / *s;
                work.column_mut(j).iter_mut().for_each(|v| *v *= inv);
            }
        }
        if !zero_cols.is_empty() {
            return Err(Error::SingularSystem { columns: zero_cols });
        }

        let mut perm: Vec<usize> = (0..p).collect();
        let mut reflectors = Vec::with_capacity(p);
        let mut betas = Vec::with_capacity(p);
        let mut r = vec![0.0; p * p];

        for k in 0..p {
            // pivot on the largest remaining column norm
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..p {
                let nj = norm(&work.column(j)[k..]);
                if nj > best_norm {
                    best_norm = nj;
                    best = j;
                }
            }
            if best != k {
                for i in 0..n {
                    let t = work.get(i, k);
                    work.set(i, k, work.get(i, best));
                    work.set(i, best, t);
                }
                perm.swap(k, best);
                for i in 0..k {
                    r.swap(i * p + k, i * p + best);
                }
            }

            let mut v: Vec<f64> = work.column(k)[k..].to_vec();
            let alpha = {
                let nv = norm(&v);
                if v[0] >= 0.0 {
                    -nv
                } else {
                    nv
                }
            };
            v[0] -= alpha;
            let vtv = dot(&v, &v);
            let beta = if vtv > 0.0 { 2.0 / vtv } else { 0.0 };

            r[k * p + k] = alpha;
            for j in (k + 1)..p {
                let col = &mut work.column_mut(j)[k..];
                let f = beta * dot(&v, col);
                for (c, vi) in col.iter_mut().zip(&v) {
                    *c -= f * vi;
                }
                r[k * p + j] = col[0];
            }
            reflectors.push(v);
            betas.push(beta);
        }

        let singular_values = jacobi_singular_values(&r, p);
        let smax = singular_values.first().copied().unwrap_or(0.0);
        let rank = singular_values.iter().filter(|&&s| s > RANK_TOLERANCE * smax).count();
        if rank < p {
            let columns = perm[rank..].iter().map(|&j| label(j)).collect();
            return Err(Error::SingularSystem { columns });
        }

        Ok(Qr {
            rows: n,
            cols: p,
            reflectors,
            betas,
            r,
            perm,
            scale,
            singular_values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Singular values of the equilibrated design, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// 2-norm condition number of the equilibrated design.
    pub fn condition_number(&self) -> f64 {
        let s = &self.singular_values;
        s[0] / s[s.len() - 1]
    }

    fn apply_qt(&self, y: &mut [f64]) {
        for (k, (v, &beta)) in self.reflectors.iter().zip(&self.betas).enumerate() {
            let seg = &mut y[k..];
            let f = beta * dot(v, seg);
            for (s, vi) in seg.iter_mut().zip(v) {
                *s -= f * vi;
            }
        }
    }

    fn apply_q(&self, y: &mut [f64]) {
        for (k, (v, &beta)) in self.reflectors.iter().zip(&self.betas).enumerate().rev() {
            let seg = &mut y[k..];
            let f = beta * dot(v, seg);
            for (s, vi) in seg.iter_mut().zip(v) {
                *s -= f * vi;
            }
        }
    }

    /// Least-squares coefficients of `y` on the original (unscaled) columns.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let p = self.cols;
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        let mut b = vec![0.0; p];
        for k in (0..p).rev() {
            let mut s = qty[k];
            for j in (k + 1)..p {
                s -= self.r[k * p + j] * b[j];
            }
            b[k] = s / self.r[k * p + k];
        }
        let mut coef = vec![0.0; p];
        for (k, &j) in self.perm.iter().enumerate() {
            coef[j] = b[k] / self.scale[j];
        }
        coef
    }

    /// Orthogonal projection of `y` onto the column space (`H y`).
    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        let mut t = y.to_vec();
        self.apply_qt(&mut t);
        t[self.cols..].iter_mut().for_each(|v| *v = 0.0);
        self.apply_q(&mut t);
        t
    }

    /// Diagonal of `(XᵀX)⁻¹` in original column order.
    pub fn inverse_gram_diagonal(&self) -> Vec<f64> {
        let p = self.cols;
        // R⁻¹ by back substitution, one column at a time.
        let mut rinv = vec![0.0; p * p];
        for c in 0..p {
            for k in (0..=c).rev() {
                let mut s = if k == c { 1.0 } else { 0.0 };
                for j in (k + 1)..=c {
                    s -= self.r[k * p + j] * rinv[j * p + c];
                }
                rinv[k * p + c] = s / self.r[k * p + k];
            }
        }
        let mut diag = vec![0.0; p];
        for (k, &j) in self.perm.iter().enumerate() {
            let row = &rinv[k * p..(k + 1) * p];
            diag[j] = dot(row, row) / (self.scale[j] * self.scale[j]);
        }
        diag
    }

    /// Dense `n x n` projection matrix `X (XᵀX)⁻¹ Xᵀ`. Quadratic in n; for diagnostics.
    pub fn hat_matrix(&self) -> Matrix {
        let n = self.rows;
        let mut h = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.project(&e);
            h.column_mut(j).copy_from_slice(&col);
        }
        h
    }
}

/// Singular values of a small row-major square matrix by one-sided Jacobi.
fn jacobi_singular_values(a: &[f64], p: usize) -> Vec<f64> {
    // work on columns of a copy
    let mut cols: Vec<Vec<f64>> = (0..p).map(|j| (0..p).map(|i| a[i * p + j]).collect()).collect();
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..p {
            for j in (i + 1)..p {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if gamma == 0.0 || libm::fabs(gamma) <= 1e-15 * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for k in 0..p {
                    let xi = cols[i][k];
                    let xj = cols[j][k];
                    cols[i][k] = c * xi - s * xj;
                    cols[j][k] = s * xi + c * xj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    sv
}
