//! The trace map `f` and its Jacobian with respect to edge weights.
//!
//! For `M` skew with `N = M(v)` padded back to order `n` by a zero row and
//! column (`Ñ`), `f` lists `tr M^{2r} / 4r` followed by `tr Ñ^{2r} / 4r`.
//! With `n = 2m` there are `m` entries of the first kind and `m - 1` of the
//! second; with `n = 2m + 1` there are `m` of each. By Newton's identities
//! these determine both characteristic polynomials.
//!
//! Since `d tr M^{2r} / dx = -4r (M^{2r-1})_{ij}` for the weight `x` at
//! `(i, j)`, the Jacobian rows are `-(M^{2r-1})_{ij}` and `-(Ñ^{2r-1})_{ij}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Tree};
use crate::matrix::{Dense, SkewMatrix};

/// Default relative pivot threshold for [`is_nonsingular`].
pub const SINGULAR_TOLERANCE: f64 = 1e-10;

pub type TraceMapValue = Vec<f64>;

/// Variable order: sorted tree edges first, then chords in the given order.
/// Variables are upper-triangle entries; a chord given as `(i, j)` with
/// `i > j` refers to the entry `a_ij`, so its orientation is `-1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeIndexing {
    pub n: usize,
    pub tree_edges: Vec<(usize, usize)>,
    pub chords: Vec<(usize, usize)>,
    pub chord_orientation: Vec<f64>,
}

impl EdgeIndexing {
    pub fn new(t: &Tree, chords: &[(usize, usize)]) -> Result<Self> {
        let n = t.n();
        let mut seen = Vec::new();
        let mut normalized = Vec::with_capacity(chords.len());
        let mut orientation = Vec::with_capacity(chords.len());
        for &(a, b) in chords {
            t.graph().check_vertex(a)?;
            t.graph().check_vertex(b)?;
            if a == b {
                return Err(Error::InvalidGraph(format!("chord {{{}, {}}} is a loop", a + 1, b + 1)));
            }
            let e = (a.min(b), a.max(b));
            if t.graph().has_edge(e.0, e.1) {
                return Err(Error::InvalidGraph(format!(
                    "chord {{{}, {}}} is already a tree edge",
                    e.0 + 1,
                    e.1 + 1
                )));
            }
            if seen.contains(&e) {
                return Err(Error::InvalidGraph(format!(
                    "chord {{{}, {}}} listed twice",
                    e.0 + 1,
                    e.1 + 1
                )));
            }
            seen.push(e);
            normalized.push(e);
            orientation.push(if a < b { 1.0 } else { -1.0 });
        }
        Ok(Self {
            n,
            tree_edges: t.edges().to_vec(),
            chords: normalized,
            chord_orientation: orientation,
        })
    }

    pub fn len(&self) -> usize {
        self.tree_edges.len() + self.chords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.tree_edges.iter().chain(&self.chords).copied().collect()
    }

    pub fn graph(&self) -> Result<Graph> {
        Graph::new(self.n, &self.edges())
    }

    /// Upper-triangle entries of `a` in variable order.
    pub fn weights_of(&self, a: &SkewMatrix) -> Vec<f64> {
        self.edges().iter().map(|&(i, j)| a.get(i, j)).collect()
    }

    pub fn matrix(&self, weights: &[f64]) -> Result<SkewMatrix> {
        if weights.len() != self.len() {
            return Err(Error::SizeMismatch(format!(
                "{} weights for {} edge variables",
                weights.len(),
                self.len()
            )));
        }
        Ok(SkewMatrix::from_edge_weights(self.n, &self.edges(), weights))
    }
}

/// Number of `M` rows and `Ñ` rows of the trace map for order `n`.
pub fn trace_map_shape(n: usize) -> (usize, usize) {
    (n / 2, n.saturating_sub(1) / 2)
}

/// Odd powers `M, M^3, ..., M^{2k-1}` and the traces of `M^2, ..., M^{2k}`.
fn odd_powers(m: &Dense, k: usize) -> (Vec<Dense>, Vec<f64>) {
    let mut odd = Vec::with_capacity(k);
    let mut traces = Vec::with_capacity(k);
    if k == 0 {
        return (odd, traces);
    }
    let sq = m.mul(m);
    let mut p = m.clone();
    for r in 0..k {
        traces.push(p.mul(m).trace());
        let next = if r + 1 < k { Some(p.mul(&sq)) } else { None };
        odd.push(p);
        match next {
            Some(q) => p = q,
            None => break,
        }
    }
    (odd, traces)
}

/// `f(a)` for the deleted vertex `v`.
pub fn trace_map(a: &SkewMatrix, v: usize) -> Result<TraceMapValue> {
    let n = a.n();
    if v >= n {
        return Err(Error::InvalidVertex { vertex: v + 1, n });
    }
    let (km, kn) = trace_map_shape(n);
    let m = a.to_dense();
    let nt = m.zero_row_col(v);
    let (_, tm) = odd_powers(&m, km);
    let (_, tn) = odd_powers(&nt, kn);
    Ok(scale_traces(&tm).chain(scale_traces(&tn)).collect())
}

fn scale_traces(traces: &[f64]) -> impl Iterator<Item = f64> + '_ {
    traces.iter().enumerate().map(|(r, t)| t / (4.0 * (r + 1) as f64))
}

/// `f` as a function of the weights in `indexing` order.
pub fn trace_map_weights(indexing: &EdgeIndexing, weights: &[f64], v: usize) -> Result<TraceMapValue> {
    trace_map(&indexing.matrix(weights)?, v)
}

/// Partial derivatives of `f` at `a` with respect to the entries at `columns`
/// (upper-triangle positions). The shape is `(n - 1) x columns.len()`.
pub fn jacobian_columns(a: &SkewMatrix, v: usize, columns: &[(usize, usize)]) -> Result<Vec<Vec<f64>>> {
    let n = a.n();
    if v >= n {
        return Err(Error::InvalidVertex { vertex: v + 1, n });
    }
    let (km, kn) = trace_map_shape(n);
    let m = a.to_dense();
    let nt = m.zero_row_col(v);
    let (pm, _) = odd_powers(&m, km);
    let (pn, _) = odd_powers(&nt, kn);
    Ok(pm
        .iter()
        .chain(&pn)
        .map(|p| columns.iter().map(|&(i, j)| -p[(i, j)]).collect())
        .collect())
}

/// `jac(f)` at `a` in tree-edge order. `a` must have graph exactly `t`.
pub fn jacobian_f(a: &SkewMatrix, t: &Tree, v: usize) -> Result<Dense> {
    t.graph().check_vertex(v)?;
    a.check_pattern(t.graph())?;
    let rows = jacobian_columns(a, v, t.edges())?;
    if rows.is_empty() {
        return Ok(Dense::zeros(0));
    }
    Dense::from_rows(&rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonsingularVerdict {
    pub nonsingular: bool,
    pub abs_det: f64,
    /// Smallest pivot magnitude after row equilibration; a cheap lower-side
    /// proxy for the smallest singular value relative to the row norms.
    pub min_pivot: f64,
}

/// LU factorization with partial pivoting of a row-equilibrated matrix.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    row_scale: Vec<f64>,
    log_abs_det: f64,
    min_pivot: f64,
}

impl Lu {
    pub fn factor(a: &Dense) -> Self {
        let n = a.n();
        let mut lu = vec![0.0; n * n];
        let mut row_scale = vec![1.0; n];
        let mut log_abs_det = 0.0;
        for i in 0..n {
            let s = (0..n).fold(0.0f64, |m, j| m.max(a[(i, j)].abs()));
            row_scale[i] = s;
            for j in 0..n {
                lu[i * n + j] = if s > 0.0 { a[(i, j)] / s } else { 0.0 };
            }
            log_abs_det += s.ln();
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| lu[x * n + k].abs().total_cmp(&lu[y * n + k].abs()))
                .unwrap();
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            min_pivot = min_pivot.min(pivot.abs());
            log_abs_det += pivot.abs().ln();
            if pivot == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        if n == 0 {
            min_pivot = 1.0;
        }
        Self {
            n,
            lu,
            perm,
            row_scale,
            log_abs_det,
            min_pivot,
        }
    }

    pub fn abs_det(&self) -> f64 {
        self.log_abs_det.exp()
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Solves `a x = b`; errors if a pivot is below `tol`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::SizeMismatch(format!("right-hand side of length {} for order {n}", b.len())));
        }
        if self.min_pivot <= tol {
            return Err(Error::Singular(format!(
                "smallest equilibrated pivot {:e} is below {tol:e}",
                self.min_pivot
            )));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i] / self.row_scale[i]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.lu[i * n + k] * x[k];
            }
            x[i] /= self.lu[i * n + i];
        }
        Ok(x)
    }
}

/// Pivoted elimination on the row-equilibrated matrix; nonsingular when
/// every pivot exceeds `tol`.
pub fn is_nonsingular(j: &Dense, tol: f64) -> NonsingularVerdict {
    let lu = Lu::factor(j);
    NonsingularVerdict {
        nonsingular: lu.min_pivot() > tol,
        abs_det: lu.abs_det(),
        min_pivot: lu.min_pivot(),
    }
}
