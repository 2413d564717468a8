//! Eigenvalues of real skew-symmetric matrices, interlacing checks and the
//! recursive Duarte-property test.
//!
//! A skew matrix is reduced by Householder similarities to skew tridiagonal
//! form with superdiagonal `b`. Conjugating by `diag(1, i, i^2, ...)` turns
//! that into `i` times the real symmetric tridiagonal matrix with zero
//! diagonal and off-diagonal `b`, whose eigenvalues implicit-shift QL finds
//! without complex arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Tree;
use crate::matrix::{Dense, SkewMatrix};

/// Relative threshold for calling an eigenvalue zero.
pub const ZERO_THRESHOLD: f64 = 1e-10;
/// Default relative margin for strict interlacing in the Duarte test.
pub const DUARTE_TOLERANCE: f64 = 1e-8;

/// Spectrum of a skew matrix: the real `b` with eigenvalue `i b`, ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewSpectrum {
    pub imag_parts: Vec<f64>,
}

impl SkewSpectrum {
    pub fn len(&self) -> usize {
        self.imag_parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.imag_parts.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.imag_parts.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest `|b_j + b_{n+1-j}|`.
    pub fn symmetry_defect(&self) -> f64 {
        let b = &self.imag_parts;
        let n = b.len();
        (0..n).map(|j| (b[j] + b[n - 1 - j]).abs()).fold(0.0, f64::max)
    }

    pub fn has_zero(&self) -> bool {
        let thr = ZERO_THRESHOLD * self.max_abs().max(1.0);
        self.imag_parts.iter().any(|x| x.abs() <= thr)
    }

    /// Max entrywise distance to `other` (same length).
    pub fn deviation(&self, other: &[f64]) -> f64 {
        assert_eq!(self.len(), other.len(), "spectra of different sizes");
        self.imag_parts
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Superdiagonal of a skew tridiagonal matrix orthogonally similar to `a`.
pub fn skew_tridiagonalize(a: &SkewMatrix) -> Vec<f64> {
    tridiagonalize(a, false).0
}

/// Like [`skew_tridiagonalize`] but also returns the orthogonal `Q` with
/// `Q^T A Q` tridiagonal.
pub fn skew_tridiagonalize_with_q(a: &SkewMatrix) -> (Vec<f64>, Dense) {
    let (b, q) = tridiagonalize(a, true);
    (b, q.expect("requested"))
}

fn tridiagonalize(a: &SkewMatrix, want_q: bool) -> (Vec<f64>, Option<Dense>) {
    let n = a.n();
    let mut m = a.to_dense();
    let mut q = want_q.then(|| Dense::identity(n));
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let tail: f64 = (k + 2..n).map(|i| m[(i, k)] * m[(i, k)]).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = m[(k + 1, k)];
        let norm = (x0 * x0 + tail).sqrt();
        let alpha = if x0 > 0.0 { -norm } else { norm };
        // v = x - alpha e1 on rows k+1.., H = I - beta v v^T
        v.fill(0.0);
        v[k + 1] = x0 - alpha;
        for i in k + 2..n {
            v[i] = m[(i, k)];
        }
        let vtv: f64 = v[k + 1..].iter().map(|x| x * x).sum();
        let beta = 2.0 / vtv;
        // Left: M <- M - beta v (v^T M)
        for j in 0..n {
            w[j] = (k + 1..n).map(|i| v[i] * m[(i, j)]).sum();
        }
        for i in k + 1..n {
            for j in 0..n {
                m[(i, j)] -= beta * v[i] * w[j];
            }
        }
        // Right: M <- M - beta (M v) v^T
        for i in 0..n {
            w[i] = (k + 1..n).map(|j| m[(i, j)] * v[j]).sum();
        }
        for i in 0..n {
            for j in k + 1..n {
                m[(i, j)] -= beta * w[i] * v[j];
            }
        }
        if let Some(q) = q.as_mut() {
            for i in 0..n {
                w[i] = (k + 1..n).map(|j| q[(i, j)] * v[j]).sum();
            }
            for i in 0..n {
                for j in k + 1..n {
                    q[(i, j)] -= beta * w[i] * v[j];
                }
            }
        }
        for i in k + 2..n {
            m[(i, k)] = 0.0;
            m[(k, i)] = 0.0;
        }
    }
    let b = (0..n.saturating_sub(1)).map(|k| m[(k, k + 1)]).collect();
    (b, q)
}

/// Eigenvalues of the real symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e`, ascending. Implicit-shift QL.
pub fn symmetric_tridiagonal_eigenvalues(d: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    assert_eq!(e.len(), n.saturating_sub(1), "off-diagonal length");
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.iter().copied().chain(std::iter::once(0.0)).collect();
    let anorm = d
        .iter()
        .zip(&e)
        .fold(0.0f64, |m, (a, b)| m.max(a.abs() + 2.0 * b.abs()));
    let eps = f64::EPSILON;
    let cap = 30 * n.max(1);
    let mut iterations = 0;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd || e[m].abs() <= eps * anorm {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > cap {
                return Err(Error::NoConvergence { n, iterations: cap });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

pub fn skew_eigenvalues(a: &SkewMatrix) -> Result<SkewSpectrum> {
    let n = a.n();
    if n == 0 {
        return Ok(SkewSpectrum { imag_parts: vec![] });
    }
    let b = skew_tridiagonalize(a);
    let imag_parts = symmetric_tridiagonal_eigenvalues(&vec![0.0; n], &b)?;
    Ok(SkewSpectrum { imag_parts })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterlacingVerdict {
    pub holds: bool,
    /// Smallest of `inner[k] - outer[k]` and `outer[k+1] - inner[k]`;
    /// `+inf` when `inner` is empty.
    pub min_margin: f64,
}

/// `outer[0] <= inner[0] <= outer[1] <= ...`. Non-strict mode allows each
/// margin down to `-tol`; strict mode requires every margin above `tol`.
pub fn check_interlacing(
    outer: &[f64],
    inner: &[f64],
    strict: bool,
    tol: f64,
) -> Result<InterlacingVerdict> {
    if inner.len() + 1 != outer.len() {
        return Err(Error::SizeMismatch(format!(
            "interlacing needs |inner| = |outer| - 1, got {} and {}",
            inner.len(),
            outer.len()
        )));
    }
    let min_margin = inner
        .iter()
        .enumerate()
        .flat_map(|(k, &m)| [m - outer[k], outer[k + 1] - m])
        .fold(f64::INFINITY, f64::min);
    let holds = if strict {
        min_margin > tol
    } else {
        min_margin >= -tol
    };
    Ok(InterlacingVerdict { holds, min_margin })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuarteVerdict {
    pub holds: bool,
    /// Smallest strict-interlacing margin over all recursion nodes.
    pub min_margin: f64,
    /// Root-to-node chain of the first node whose interlacing failed.
    pub failing_chain: Option<Vec<usize>>,
}

/// Recursive Duarte test of `a` at `w`; `a` must have graph `t`.
pub fn verify_duarte(a: &SkewMatrix, t: &Tree, w: usize, tol: f64) -> Result<DuarteVerdict> {
    t.graph().check_vertex(w)?;
    a.check_pattern(t.graph())?;
    let labels: Vec<usize> = (0..t.n()).collect();
    let mut verdict = DuarteVerdict {
        holds: true,
        min_margin: f64::INFINITY,
        failing_chain: None,
    };
    duarte_node(a, t, w, &labels, tol, &mut Vec::new(), &mut verdict)?;
    Ok(verdict)
}

fn duarte_node(
    a: &SkewMatrix,
    t: &Tree,
    w: usize,
    labels: &[usize],
    tol: f64,
    chain: &mut Vec<usize>,
    verdict: &mut DuarteVerdict,
) -> Result<()> {
    chain.push(labels[w]);
    if t.n() > 1 {
        let outer = skew_eigenvalues(a)?;
        let inner = skew_eigenvalues(&a.delete(w))?;
        let check = check_interlacing(&outer.imag_parts, &inner.imag_parts, true, tol)?;
        verdict.min_margin = verdict.min_margin.min(check.min_margin);
        if !check.holds && verdict.holds {
            verdict.holds = false;
            verdict.failing_chain = Some(chain.clone());
        }
        for b in t.branches(w)? {
            let sub = a.principal(&b.labels);
            let sub_labels: Vec<usize> = b.labels.iter().map(|&l| labels[l]).collect();
            duarte_node(&sub, &b.tree, b.local_root(), &sub_labels, tol, chain, verdict)?;
        }
    }
    chain.pop();
    Ok(())
}
