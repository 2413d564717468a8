//! Dense square matrices and the skew-symmetric matrix type.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Dense row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    n: usize,
    data: Vec<f64>,
}

impl Dense {
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

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::SizeMismatch("matrix rows must all have length n".into()));
        }
        Ok(Self {
            n,
            data: rows.concat(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).take(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn mul(&self, other: &Dense) -> Dense {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = Dense::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Dense {
        let mut out = Dense::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Dense) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Copy with row and column `v` set to zero (same order).
    pub fn zero_row_col(&self, v: usize) -> Dense {
        let mut out = self.clone();
        for k in 0..self.n {
            out[(v, k)] = 0.0;
            out[(k, v)] = 0.0;
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Dense {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Dense {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Negation that maps zero to `+0.0`, so output never shows `-0`.
fn neg(x: f64) -> f64 {
    0.0 - x
}

/// Real skew-symmetric matrix stored as its strict upper triangle.
///
/// Reads below the diagonal return the negated mirror entry, so `A = -A^T`
/// holds exactly and the diagonal is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SkewMatrix {
    n: usize,
    upper: Vec<f64>,
}

impl SkewMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            upper: vec![0.0; n * n.saturating_sub(1) / 2],
        }
    }

    /// Reads a dense array; it must be skew-symmetric to `tol` times its
    /// largest entry. The upper triangle is kept.
    pub fn from_dense_rows(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let d = Dense::from_rows(rows)?;
        let n = d.n();
        let scale = d.data.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        let mut out = Self::zeros(n);
        for i in 0..n {
            if d[(i, i)].abs() > tol * scale {
                return Err(Error::GraphMismatch(format!(
                    "diagonal entry ({}, {}) is {}",
                    i + 1,
                    i + 1,
                    d[(i, i)]
                )));
            }
            for j in i + 1..n {
                if (d[(i, j)] + d[(j, i)]).abs() > tol * scale {
                    return Err(Error::GraphMismatch(format!(
                        "entries ({0}, {1}) and ({1}, {0}) are not negatives",
                        i + 1,
                        j + 1
                    )));
                }
                out.set(i, j, d[(i, j)]);
            }
        }
        Ok(out)
    }

    /// Places `weights[k]` at `(i_k, j_k)` and its negative at `(j_k, i_k)`.
    pub fn from_edge_weights(n: usize, edges: &[(usize, usize)], weights: &[f64]) -> Self {
        let mut out = Self::zeros(n);
        for (&(i, j), &w) in edges.iter().zip(weights) {
            out.set(i, j, w);
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => 0.0,
            Less => self.upper[self.index(i, j)],
            Greater => neg(self.upper[self.index(j, i)]),
        }
    }

    /// Sets entry `(i, j)` to `value` and `(j, i)` to `-value`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => assert!(value == 0.0, "diagonal of a skew matrix is zero"),
            Less => {
                let k = self.index(i, j);
                self.upper[k] = value;
            }
            Greater => {
                let k = self.index(j, i);
                self.upper[k] = -value;
            }
        }
    }

    pub fn to_dense(&self) -> Dense {
        let n = self.n;
        let mut d = Dense::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let v = self.get(i, j);
                d[(i, j)] = v;
                d[(j, i)] = neg(v);
            }
        }
        d
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.to_dense().rows()
    }

    /// Principal submatrix on `indices`, in the given order.
    pub fn principal(&self, indices: &[usize]) -> SkewMatrix {
        let mut out = SkewMatrix::zeros(indices.len());
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate().skip(a + 1) {
                out.set(a, b, self.get(i, j));
            }
        }
        out
    }

    /// `A(v)`: delete row and column `v`.
    pub fn delete(&self, v: usize) -> SkewMatrix {
        let keep: Vec<usize> = (0..self.n).filter(|&i| i != v).collect();
        self.principal(&keep)
    }

    /// Graph of the nonzero pattern.
    pub fn graph(&self) -> Graph {
        let mut edges = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.get(i, j) != 0.0 {
                    edges.push((i, j));
                }
            }
        }
        Graph::new(self.n, &edges).expect("pattern of a matrix is a simple graph")
    }

    /// Errors unless the nonzero pattern is exactly `g`.
    pub fn check_pattern(&self, g: &Graph) -> Result<()> {
        if g.n() != self.n {
            return Err(Error::GraphMismatch(format!(
                "matrix has order {} but graph has {} vertices",
                self.n,
                g.n()
            )));
        }
        for i in 0..self.n {
            for j in i + 1..self.n {
                let nonzero = self.get(i, j) != 0.0;
                if nonzero != g.has_edge(i, j) {
                    return Err(Error::GraphMismatch(format!(
                        "entry ({}, {}) is {} but the pair is {}an edge",
                        i + 1,
                        j + 1,
                        self.get(i, j),
                        if nonzero { "not " } else { "" }
                    )));
                }
            }
        }
        Ok(())
    }

    /// Flips the sign of row and column `v` (a diagonal orthogonal similarity).
    pub fn flip_sign(&mut self, v: usize) {
        for k in 0..self.n {
            if k != v {
                let x = self.get(v, k);
                self.set(v, k, -x);
            }
        }
    }

    /// `tr(A^2) = -2 * sum_{i<j} a_ij^2`.
    pub fn trace_of_square(&self) -> f64 {
        -2.0 * self.upper.iter().map(|x| x * x).sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `det(zI - A)` by partially pivoted elimination. The empty matrix gives 1.
    pub fn characteristic_at(&self, z: Complex64) -> Complex64 {
        let n = self.n;
        let mut m: Vec<Complex64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let diag = if i == j { z } else { Complex64::new(0.0, 0.0) };
                diag - self.get(i, j)
            })
            .collect();
        let mut det = Complex64::new(1.0, 0.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&a, &b| m[a * n + col].norm().total_cmp(&m[b * n + col].norm()))
                .expect("nonempty range");
            if m[pivot * n + col].norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if pivot != col {
                for k in 0..n {
                    m.swap(pivot * n + k, col * n + k);
                }
                det = -det;
            }
            let p = m[col * n + col];
            det *= p;
            for r in col + 1..n {
                let factor = m[r * n + col] / p;
                if factor.norm() == 0.0 {
                    continue;
                }
                for k in col..n {
                    let sub = factor * m[col * n + k];
                    m[r * n + k] -= sub;
                }
            }
        }
        det
    }
}

impl TryFrom<Vec<Vec<f64>>> for SkewMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SkewMatrix::from_dense_rows(&rows, 1e-12)
    }
}

impl From<SkewMatrix> for Vec<Vec<f64>> {
    fn from(m: SkewMatrix) -> Self {
        m.rows()
    }
}
