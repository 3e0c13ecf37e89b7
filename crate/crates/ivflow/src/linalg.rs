//! Small dense linear algebra helpers for the low-dimensional phase spaces
//! handled here (m = 1..8). Row-major storage throughout.

use crate::error::{Error, Result};

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            assert_eq!(r.len(), dim);
            data.extend_from_slice(r);
        }
        Matrix { dim, data }
    }

    /// Diagonal matrix from its entries.
    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Matrix::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = v;
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.data[i * n + j] * x[j];
            }
            out[i] = s;
        }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.apply(x, &mut out);
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                for j in 0..n {
                    out.data[i * n + j] += a * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.at(i, j);
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
/// `a` is consumed as scratch.
pub fn solve(mut a: Matrix, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = a.dim;
    for col in 0..n {
        let (piv, piv_val) = (col..n)
            .map(|r| (r, a.at(r, col).abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if piv_val < 1e-300 {
            return Err(Error::NewtonFailed("singular Jacobian".into()));
        }
        if piv != col {
            for j in 0..n {
                a.data.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let d = a.at(col, col);
        for r in (col + 1)..n {
            let f = a.at(r, col) / d;
            if f != 0.0 {
                for j in col..n {
                    a.data[r * n + j] -= f * a.at(col, j);
                }
                b[r] -= f * b[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for j in (col + 1)..n {
            s -= a.at(col, j) * b[j];
        }
        b[col] = s / a.at(col, col);
    }
    Ok(b)
}

/// Jacobian of `f` at `x` by central differences with step `h`.
pub fn jacobian_fd<F>(mut f: F, x: &[f64], h: f64) -> Result<Matrix>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let n = x.len();
    let mut jac = Matrix::zeros(n);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        xp[j] = x[j] + h;
        f(&xp, &mut fp)?;
        xp[j] = x[j] - h;
        f(&xp, &mut fm)?;
        xp[j] = x[j];
        for i in 0..n {
            jac.data[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Standard symplectic form with pairing `(i, i+d)`:
/// `Omega = [[0, I_d], [-I_d, 0]]`.
pub fn symplectic_form(dim: usize) -> Matrix {
    assert!(dim % 2 == 0);
    let d = dim / 2;
    let mut m = Matrix::zeros(dim);
    for i in 0..d {
        m.data[i * dim + (i + d)] = 1.0;
        m.data[(i + d) * dim + i] = -1.0;
    }
    m
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}
