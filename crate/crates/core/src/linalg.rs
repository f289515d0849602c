//! Minimal dense linear algebra: row-major matrices, a cyclic Jacobi
//! eigensolver for symmetric matrices, and eigendecomposition-backed
//! pseudoinverse solves. Everything here targets the small dense systems
//! this crate needs (graph Laplacians, per-agent Gram matrices); nothing is
//! tuned for large N.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};
use num_traits::Float;

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, actual: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `self * x`
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, actual: x.len() });
        }
        let mut out = vec![0.0; self.rows];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            out[r] = acc;
        }
        Ok(out)
    }

    /// `selfᵀ * x`
    pub fn tr_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, actual: x.len() });
        }
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let xr = x[r];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * xr;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> DenseMat {
        let mut t = DenseMat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    /// `self * selfᵀ`, returned as a dense symmetric matrix.
    pub fn gram_right(&self) -> DenseMat {
        let mut g = DenseMat::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in i..self.rows {
                let ri = &self.data[i * self.cols..(i + 1) * self.cols];
                let rj = &self.data[j * self.cols..(j + 1) * self.cols];
                let mut acc = 0.0;
                for (a, b) in ri.iter().zip(rj) {
                    acc += a * b;
                }
                g[(i, j)] = acc;
                g[(j, i)] = acc;
            }
        }
        g
    }

    /// `selfᵀ * self`.
    pub fn gram_left(&self) -> DenseMat {
        self.transpose().gram_right()
    }

    pub fn scaled(&self, s: f64) -> DenseMat {
        let mut m = self.clone();
        for v in &mut m.data {
            *v *= s;
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for DenseMat {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for DenseMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// `y += s * x`
pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Eigendecomposition of a symmetric matrix: `a = V diag(values) Vᵀ`.
/// Eigenvalues are sorted ascending; `vectors` holds the eigenvectors as
/// columns in the matching order.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMat,
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi iteration. Robust and accurate for the small symmetric
/// (semi)definite matrices used here; O(n³) per sweep.
pub fn symmetric_eigen(a: &DenseMat) -> Result<SymmetricEigen> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch { expected: a.rows(), actual: a.cols() });
    }
    let n = a.rows();
    let mut m = a.clone();
    let mut v = DenseMat::identity(n);
    if n <= 1 {
        return Ok(SymmetricEigen { values: m.data, vectors: v });
    }
    let scale = a.frobenius_norm().max(1.0);
    let tol = 1e-14 * scale;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= tol {
            return Ok(sort_eigen(m, v));
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
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
    Err(Error::Numerical(alloc::format!(
        "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps (n = {n})"
    )))
}

fn sort_eigen(m: DenseMat, v: DenseMat) -> SymmetricEigen {
    let n = m.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).expect("non-NaN eigenvalues"));
    let mut values = vec![0.0; n];
    let mut vectors = DenseMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = m[(src, src)];
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    SymmetricEigen { values, vectors }
}

/// Minimum-norm least-squares solve `a x ≈ b` through an eigendecomposition
/// of the symmetric matrix `a`. Eigenvalues below `rel_cutoff * λ_max` are
/// treated as zero.
pub fn pinv_apply(eig: &SymmetricEigen, b: &[f64], rel_cutoff: f64) -> Result<Vec<f64>> {
    let n = eig.vectors.rows();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: b.len() });
    }
    let lmax = eig.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let cutoff = rel_cutoff * lmax.max(1e-300);
    let coeffs = eig.vectors.tr_matvec(b)?;
    let mut x = vec![0.0; n];
    for (idx, (&lambda, &coef)) in eig.values.iter().zip(&coeffs).enumerate() {
        if lambda.abs() > cutoff {
            let w = coef / lambda;
            for k in 0..n {
                x[k] += eig.vectors[(k, idx)] * w;
            }
        }
    }
    Ok(x)
}
