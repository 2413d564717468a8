//! Recursive construction of a skew matrix on an NEB tree with prescribed
//! spectra for `A` and `A(v)`, and its verification.
//!
//! At a node with root `v` the mus are split among the branches at `v`
//! (each branch receives the roots of its factor `g_j`), the grouped residues
//! give the squared edge weight `y_j` and the polynomial `h_j`, and the
//! branch is built recursively with spectra `(roots of g_j, roots of h_j)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use tracing::debug;

use crate::eig::{skew_eigenvalues, verify_duarte, DUARTE_TOLERANCE};
use crate::error::{Error, Result};
use crate::graph::{is_neb, Tree};
use crate::matrix::SkewMatrix;
use crate::poly::branch_decompose;
use crate::spectrum::{plan_branches, SpectrumSpec};

/// One recursion node: the subtree rooted at `vertex` and its spectra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceNode {
    pub vertex: usize,
    pub order: usize,
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
    /// Residues aligned with `mus`.
    pub residues: Vec<f64>,
    pub children: Vec<TraceChild>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceChild {
    pub neighbor: usize,
    pub y: f64,
    pub weight: f64,
    pub node: TraceNode,
}

impl TraceNode {
    /// Visits this node and all descendants, parents first.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a TraceNode)) {
        f(self);
        for c in &self.children {
            c.node.walk(f);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionReport {
    pub matrix: SkewMatrix,
    pub vertex: usize,
    pub trace: TraceNode,
    pub verification: Option<VerificationSummary>,
}

/// Builds `A` with graph `t`, spectrum `i * spec.lambdas`, and `A(v)` with
/// spectrum `i * spec.mus`. Tree edges get positive weights in the upper
/// triangle.
pub fn construct(t: &Tree, v: usize, spec: &SpectrumSpec) -> Result<ConstructionReport> {
    t.graph().check_vertex(v)?;
    if spec.n() != t.n() {
        return Err(Error::SizeMismatch(format!(
            "tree has {} vertices but {} lambda values were given",
            t.n(),
            spec.n()
        )));
    }
    spec.validate()?;
    let cert = is_neb(t, v)?;
    if !cert.verdict {
        return Err(Error::NotNeb(Box::new(cert)));
    }
    let mut matrix = SkewMatrix::zeros(t.n());
    let labels: Vec<usize> = (0..t.n()).collect();
    let trace = build(t, v, &labels, spec, &mut matrix)?;
    Ok(ConstructionReport {
        matrix,
        vertex: v,
        trace,
        verification: None,
    })
}

fn set_edge(matrix: &mut SkewMatrix, a: usize, b: usize, weight: f64) {
    matrix.set(a.min(b), a.max(b), weight);
}

fn build(
    tree: &Tree,
    root: usize,
    labels: &[usize],
    spec: &SpectrumSpec,
    matrix: &mut SkewMatrix,
) -> Result<TraceNode> {
    let n = tree.n();
    let mut node = TraceNode {
        vertex: labels[root],
        order: n,
        lambdas: spec.lambdas.clone(),
        mus: spec.mus.clone(),
        residues: Vec::new(),
        children: Vec::new(),
    };
    if n == 1 {
        return Ok(node);
    }
    if n == 2 {
        let other = labels[tree.neighbors(root)[0]];
        let weight = spec.lambdas[1];
        set_edge(matrix, labels[root], other, weight);
        node.residues = vec![weight * weight];
        node.children.push(TraceChild {
            neighbor: other,
            y: weight * weight,
            weight,
            node: TraceNode {
                vertex: other,
                order: 1,
                lambdas: vec![0.0],
                mus: vec![],
                residues: vec![],
                children: vec![],
            },
        });
        return Ok(node);
    }
    let branches = tree.branches(root)?;
    let sizes: Vec<(usize, usize)> = branches.iter().map(|b| (labels[b.root], b.size())).collect();
    let plan = plan_branches(spec, &sizes)?;
    let decomposition = branch_decompose(spec, &plan)?;
    node.residues = decomposition.residues.c.clone();
    for (branch, data) in branches.iter().zip(&decomposition.branches) {
        let weight = data.y.sqrt();
        let neighbor = labels[branch.root];
        set_edge(matrix, labels[root], neighbor, weight);
        let child_spec = SpectrumSpec::new(data.g_roots.clone(), data.h_roots.clone());
        child_spec.validate().map_err(|e| {
            Error::Numerical(format!("spectrum recovered for branch at {}: {e}", neighbor + 1))
        })?;
        debug!(vertex = labels[root] + 1, neighbor = neighbor + 1, y = data.y, "branch weight");
        let sub_labels: Vec<usize> = branch.labels.iter().map(|&l| labels[l]).collect();
        let child = build(&branch.tree, branch.local_root(), &sub_labels, &child_spec, matrix)?;
        node.children.push(TraceChild {
            neighbor,
            y: data.y,
            weight,
            node: child,
        });
    }
    Ok(node)
}

/// Tolerances, relative to `max(1, |lambda_n|)` where noted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Eigenvalue match, relative.
    pub eigen: f64,
    /// Ratio identity residual, relative to the size of the left side.
    pub identity: f64,
    /// Strict interlacing margin in the Duarte test, relative.
    pub duarte: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eigen: 1e-8,
            identity: 1e-7,
            duarte: DUARTE_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub lambda_deviation: f64,
    pub mu_deviation: f64,
    pub identity_residual: f64,
    pub identity_points: usize,
    pub duarte: bool,
    pub duarte_min_margin: f64,
    /// Absolute eigenvalue tolerance used for `passed`.
    pub eigen_tolerance: f64,
    pub passed: bool,
}

/// Compares the spectra of `A` and `A(v)` with `spec`, checks
/// `C_A / C_{A(v)} = x + sum_j a_vj^2 C_{A_j'(v)} / C_{A_j(v)}` at points on
/// the imaginary axis between consecutive mus, and runs the Duarte test.
pub fn verify_construction(
    report: &ConstructionReport,
    t: &Tree,
    v: usize,
    spec: &SpectrumSpec,
    tol: &Tolerances,
) -> Result<VerificationSummary> {
    verify_matrix(&report.matrix, t, v, spec, tol)
}

/// [`verify_construction`] for any matrix with graph `t`.
pub fn verify_matrix(
    a: &SkewMatrix,
    t: &Tree,
    v: usize,
    spec: &SpectrumSpec,
    tol: &Tolerances,
) -> Result<VerificationSummary> {
    t.graph().check_vertex(v)?;
    if a.n() != t.n() || spec.n() != t.n() {
        return Err(Error::SizeMismatch("matrix, tree and spectrum orders differ".into()));
    }
    let scale = spec.scale();
    let lambda_deviation = skew_eigenvalues(a)?.deviation(&spec.lambdas);
    let mu_deviation = skew_eigenvalues(&a.delete(v))?.deviation(&spec.mus);
    let (identity_residual, identity_points) = ratio_identity_residual(a, t, v, &spec.mus)?;
    let duarte = match verify_duarte(a, t, v, tol.duarte * scale) {
        Ok(d) => d,
        Err(Error::GraphMismatch(_)) => crate::eig::DuarteVerdict {
            holds: false,
            min_margin: f64::NEG_INFINITY,
            failing_chain: None,
        },
        Err(e) => return Err(e),
    };
    let eigen_tolerance = tol.eigen * scale;
    let passed = lambda_deviation <= eigen_tolerance
        && mu_deviation <= eigen_tolerance
        && identity_residual <= tol.identity
        && duarte.holds;
    Ok(VerificationSummary {
        lambda_deviation,
        mu_deviation,
        identity_residual,
        identity_points,
        duarte: duarte.holds,
        duarte_min_margin: duarte.min_margin,
        eigen_tolerance,
        passed,
    })
}

/// Largest relative residual of the characteristic-polynomial ratio identity
/// at `x = it`, `t` at the midpoints of consecutive `mus` and one unit beyond
/// each end.
pub fn ratio_identity_residual(
    a: &SkewMatrix,
    t: &Tree,
    v: usize,
    mus: &[f64],
) -> Result<(f64, usize)> {
    if t.n() == 1 {
        return Ok((0.0, 0));
    }
    let mut points: Vec<f64> = mus.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    points.push(mus[0] - 1.0);
    points.push(mus[mus.len() - 1] + 1.0);
    let av = a.delete(v);
    let branches = t.branches(v)?;
    let parts: Vec<(f64, SkewMatrix, SkewMatrix)> = branches
        .iter()
        .map(|b| {
            let weight = a.get(v, b.root);
            let sub = a.principal(&b.labels);
            let inner = sub.delete(b.local_root());
            (weight * weight, sub, inner)
        })
        .collect();
    let mut worst = 0.0f64;
    for &tp in &points {
        let x = Complex64::new(0.0, tp);
        let lhs = a.characteristic_at(x) / av.characteristic_at(x);
        let rhs = parts.iter().fold(x, |acc, (w2, sub, inner)| {
            acc + *w2 * inner.characteristic_at(x) / sub.characteristic_at(x)
        });
        let denom = lhs.norm().max(rhs.norm()).max(1.0);
        worst = worst.max((lhs - rhs).norm() / denom);
    }
    Ok((worst, points.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p4() -> SpectrumSpec {
        SpectrumSpec::new(vec![-2.0, -1.0, 1.0, 2.0], vec![-1.5, 0.0, 1.5])
    }

    #[test]
    fn base_cases() {
        let t = Tree::path(2);
        let spec = SpectrumSpec::new(vec![-1.0, 1.0], vec![0.0]);
        let r = construct(&t, 0, &spec).unwrap();
        assert_eq!(r.matrix.rows(), vec![vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let s = verify_construction(&r, &t, 0, &spec, &Tolerances::default()).unwrap();
        assert!(s.lambda_deviation <= f64::EPSILON && s.mu_deviation == 0.0);

        let r = construct(&Tree::path(1), 0, &SpectrumSpec::new(vec![0.0], vec![])).unwrap();
        assert_eq!(r.matrix.rows(), vec![vec![0.0]]);
        assert!(r.trace.children.is_empty());
    }

    #[test]
    fn p4_matches_golden_entries() {
        let t = Tree::path(4);
        let r = construct(&t, 3, &p4()).unwrap();
        let a = &r.matrix;
        assert_abs_diff_eq!(a.get(0, 1), 1.206045, epsilon = 1e-6);
        assert_abs_diff_eq!(a.get(1, 2), 0.8918826, epsilon = 1e-7);
        assert_abs_diff_eq!(a.get(2, 3), 1.658312, epsilon = 1e-6);
        assert_eq!(a.get(0, 2), 0.0);
        assert_eq!(a.get(0, 3), 0.0);
        assert_eq!(a.get(1, 3), 0.0);
        let s = verify_construction(&r, &t, 3, &p4(), &Tolerances::default()).unwrap();
        assert!(s.passed, "{s:?}");
        assert!(s.lambda_deviation <= 1e-9 && s.mu_deviation <= 1e-9);
        assert!(s.identity_residual <= 1e-8);
    }

    #[test]
    fn perturbed_matrix_is_flagged() {
        let t = Tree::path(4);
        let mut r = construct(&t, 3, &p4()).unwrap();
        let x = r.matrix.get(1, 2);
        r.matrix.set(1, 2, x + 0.1);
        let s = verify_construction(&r, &t, 3, &p4(), &Tolerances::default()).unwrap();
        assert!(s.lambda_deviation > 1e-2);
        assert!(!s.passed);
    }

    #[test]
    fn rejects_non_neb_and_bad_sizes() {
        let spec = SpectrumSpec::new(vec![-1.0, 0.0, 1.0], vec![-0.5, 0.5]);
        match construct(&Tree::path(3), 1, &spec) {
            Err(Error::NotNeb(cert)) => assert!(!cert.verdict),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            construct(&Tree::path(4), 0, &spec),
            Err(Error::SizeMismatch(_))
        ));
        let bad = SpectrumSpec::new(vec![-1.0, 0.0, 1.0], vec![-0.5, 0.6]);
        assert!(matches!(construct(&Tree::path(3), 0, &bad), Err(Error::Spectrum(_))));
    }

    #[test]
    fn trace_mirrors_branch_structure() {
        let t = Tree::path(4);
        let r = construct(&t, 3, &p4()).unwrap();
        let mut orders = Vec::new();
        r.trace.walk(&mut |n| orders.push((n.vertex, n.order)));
        assert_eq!(orders, vec![(3, 4), (2, 3), (1, 2), (0, 1)]);
    }
}
