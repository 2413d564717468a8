//! Extension of a tree solution to a supergraph.
//!
//! The chord weights are ramped linearly from 0 to their targets while the
//! tree weights are corrected by Newton's method so that the trace map, and
//! hence both spectra, stay fixed.

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use crate::error::{Error, Result};
use crate::graph::Tree;
use crate::jacobian::{jacobian_columns, trace_map, EdgeIndexing, Lu, TraceMapValue, SINGULAR_TOLERANCE};
use crate::matrix::{Dense, SkewMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomotopyConfig {
    /// Final value of every chord entry unless `chord_targets` is set. A
    /// chord `(i, j)` ends with `a_ij` equal to its target.
    pub epsilon_target: f64,
    /// Per-chord final weights, in chord order.
    pub chord_targets: Option<Vec<f64>>,
    pub steps: usize,
    /// Bound on `|f_k(x) - target_k| / max(1, |target_k|)`.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Step halvings allowed, both in the homotopy and in the damped Newton
    /// line search.
    pub backtrack: usize,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        Self {
            epsilon_target: 0.1,
            chord_targets: None,
            steps: 10,
            newton_tol: 1e-12,
            max_newton_iters: 50,
            backtrack: 8,
        }
    }
}

impl HomotopyConfig {
    pub fn validate(&self, chords: usize) -> Result<()> {
        let bad = |what: &str| Err(Error::SizeMismatch(format!("homotopy config: {what}")));
        if self.steps == 0 {
            return bad("steps must be at least 1");
        }
        if self.newton_tol.is_nan() || self.newton_tol <= 0.0 {
            return bad("newton_tol must be positive");
        }
        if self.max_newton_iters == 0 {
            return bad("max_newton_iters must be at least 1");
        }
        if !self.epsilon_target.is_finite() {
            return bad("epsilon_target must be finite");
        }
        if let Some(t) = &self.chord_targets {
            if t.len() != chords {
                return bad("chord_targets length differs from the number of chords");
            }
            if t.iter().any(|x| !x.is_finite()) {
                return bad("chord targets must be finite");
            }
        }
        Ok(())
    }

    fn targets(&self, chords: usize) -> Vec<f64> {
        self.chord_targets
            .clone()
            .unwrap_or_else(|| vec![self.epsilon_target; chords])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn relative_residual(f: &[f64], target: &[f64]) -> (Vec<f64>, f64) {
    let mut worst = 0.0f64;
    let r: Vec<f64> = f
        .iter()
        .zip(target)
        .map(|(a, b)| {
            let d = a - b;
            worst = worst.max(d.abs() / b.abs().max(1.0));
            d
        })
        .collect();
    (r, worst)
}

fn full_weights(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().chain(y).copied().collect()
}

/// Damped Newton on the tree weights `x` with chord weights `y_fixed` held
/// constant, until `f(x, y) = target` to `cfg.newton_tol`.
pub fn newton_correct(
    target: &TraceMapValue,
    x0: &[f64],
    y_fixed: &[f64],
    indexing: &EdgeIndexing,
    v: usize,
    cfg: &HomotopyConfig,
) -> Result<NewtonOutcome> {
    if x0.len() != indexing.tree_edges.len() || y_fixed.len() != indexing.chords.len() {
        return Err(Error::SizeMismatch(format!(
            "{} tree and {} chord weights for {} tree edges and {} chords",
            x0.len(),
            y_fixed.len(),
            indexing.tree_edges.len(),
            indexing.chords.len()
        )));
    }
    if target.len() != x0.len() {
        return Err(Error::SizeMismatch(format!(
            "target of length {} for {} unknowns",
            target.len(),
            x0.len()
        )));
    }
    let eval = |x: &[f64]| -> Result<(SkewMatrix, Vec<f64>, f64)> {
        let a = indexing.matrix(&full_weights(x, y_fixed))?;
        let f = trace_map(&a, v)?;
        let (r, res) = relative_residual(&f, target);
        Ok((a, r, res))
    };
    let mut x = x0.to_vec();
    let (mut a, mut r, mut res) = eval(&x)?;
    for iteration in 0..=cfg.max_newton_iters {
        if res <= cfg.newton_tol {
            return Ok(NewtonOutcome {
                x,
                iterations: iteration,
                residual: res,
            });
        }
        if iteration == cfg.max_newton_iters {
            break;
        }
        let rows = jacobian_columns(&a, v, &indexing.tree_edges)?;
        let j = Dense::from_rows(&rows)?;
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let dx = Lu::factor(&j).solve(&rhs, SINGULAR_TOLERANCE)?;
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.backtrack {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + step * d).collect();
            let (ta, tr, tres) = eval(&trial)?;
            if tres < res {
                accepted = Some((trial, ta, tr, tres));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((nx, na, nr, nres)) => {
                x = nx;
                a = na;
                r = nr;
                res = nres;
            }
            None => {
                return Err(Error::NewtonDivergence {
                    iterations: iteration + 1,
                    residual: res,
                })
            }
        }
    }
    Err(Error::NewtonDivergence {
        iterations: cfg.max_newton_iters,
        residual: res,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionResult {
    pub matrix: SkewMatrix,
    pub chords: Vec<(usize, usize)>,
    /// Accepted homotopy steps, including any produced by halving.
    pub steps_taken: usize,
    pub step_halvings: usize,
    pub newton_iterations: usize,
    pub final_residual: f64,
    /// Largest distance between consecutive tree-weight iterates.
    pub max_step_norm: f64,
    pub warnings: Vec<String>,
}

/// Adds `chords` to the graph of `a` (which must be `t`), keeping the
/// spectra of `a` and `a(v)`.
pub fn extend(
    a: &SkewMatrix,
    t: &Tree,
    v: usize,
    chords: &[(usize, usize)],
    cfg: &HomotopyConfig,
) -> Result<ExtensionResult> {
    t.graph().check_vertex(v)?;
    a.check_pattern(t.graph())?;
    let indexing = EdgeIndexing::new(t, chords)?;
    cfg.validate(indexing.chords.len())?;
    let targets: Vec<f64> = cfg
        .targets(indexing.chords.len())
        .iter()
        .zip(&indexing.chord_orientation)
        .map(|(e, o)| e * o)
        .collect();
    let target = trace_map(a, v)?;
    let mut x: Vec<f64> = indexing.tree_edges.iter().map(|&(i, j)| a.get(i, j)).collect();
    let mut result = ExtensionResult {
        matrix: a.clone(),
        chords: indexing.chords.clone(),
        steps_taken: 0,
        step_halvings: 0,
        newton_iterations: 0,
        final_residual: 0.0,
        max_step_norm: 0.0,
        warnings: Vec::new(),
    };
    if targets.iter().all(|&e| e == 0.0) {
        return Ok(result);
    }
    let base = 1.0 / cfg.steps as f64;
    let chord_scale = targets.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let mut s = 0.0f64;
    let mut ds = base;
    while s < 1.0 {
        let s_new = if s + ds >= 1.0 - 1e-15 { 1.0 } else { s + ds };
        let y: Vec<f64> = targets.iter().map(|e| s_new * e).collect();
        match newton_correct(&target, &x, &y, &indexing, v, cfg) {
            Ok(out) => {
                let jump = x.iter().zip(&out.x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                let expected = chord_scale * (s_new - s);
                if jump > 10.0 * expected {
                    let msg = format!(
                        "tree weights moved by {jump:.3e} between parameters {s:.6} and {s_new:.6}, more than 10x the chord step {expected:.3e}"
                    );
                    warn!("{msg}");
                    result.warnings.push(msg);
                }
                result.max_step_norm = result.max_step_norm.max(jump);
                result.newton_iterations += out.iterations;
                result.final_residual = out.residual;
                result.steps_taken += 1;
                debug!(parameter = s_new, iterations = out.iterations, residual = out.residual, "homotopy step");
                x = out.x;
                s = s_new;
                ds = (2.0 * ds).min(base);
            }
            Err(e @ (Error::NewtonDivergence { .. } | Error::Singular(_))) => {
                if result.step_halvings >= cfg.backtrack {
                    return Err(Error::HomotopyStalled {
                        parameter: s,
                        reason: e.to_string(),
                    });
                }
                result.step_halvings += 1;
                ds *= 0.5;
                debug!(parameter = s, step = ds, "halving homotopy step");
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(k) = x.iter().position(|&w| w == 0.0) {
        let (i, j) = indexing.tree_edges[k];
        return Err(Error::Numerical(format!(
            "tree edge {{{}, {}}} lost its weight during continuation",
            i + 1,
            j + 1
        )));
    }
    let weights = full_weights(&x, &targets);
    result.matrix = indexing.matrix(&weights)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn golden() -> SkewMatrix {
        let w = [4.0f64 / 11f64.sqrt(), (2.25f64 - 16.0 / 11.0).sqrt(), 2.75f64.sqrt()];
        SkewMatrix::from_edge_weights(4, &[(0, 1), (1, 2), (2, 3)], &w)
    }

    #[test]
    fn zero_epsilon_is_identity() {
        let cfg = HomotopyConfig {
            epsilon_target: 0.0,
            ..Default::default()
        };
        let r = extend(&golden(), &Tree::path(4), 3, &[(0, 3)], &cfg).unwrap();
        assert_eq!(r.matrix, golden());
        assert_eq!(r.steps_taken, 0);
    }

    #[test]
    fn c4_extension() {
        let r = extend(&golden(), &Tree::path(4), 3, &[(3, 0)], &HomotopyConfig::default()).unwrap();
        let m = &r.matrix;
        assert_abs_diff_eq!(m.get(0, 1), 1.257633, epsilon = 1e-5);
        assert_abs_diff_eq!(m.get(1, 2), 0.8175322, epsilon = 1e-5);
        assert_abs_diff_eq!(m.get(2, 3), 1.655294, epsilon = 1e-5);
        assert_eq!(m.get(3, 0), 0.1);
        assert_eq!(m.get(0, 2), 0.0);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn chord_orientation_picks_the_entry() {
        let r = extend(&golden(), &Tree::path(4), 3, &[(0, 3)], &HomotopyConfig::default()).unwrap();
        assert_eq!(r.matrix.get(0, 3), 0.1);
        let f = trace_map(&r.matrix, 3).unwrap();
        let g = trace_map(&golden(), 3).unwrap();
        for (a, b) in f.iter().zip(&g) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-11);
        }
    }

    #[test]
    fn newton_fixed_point_and_direct_jump() {
        let t = Tree::path(4);
        let ix = EdgeIndexing::new(&t, &[(0, 3)]).unwrap();
        let a = golden();
        let target = trace_map(&a, 3).unwrap();
        let x0: Vec<f64> = ix.tree_edges.iter().map(|&(i, j)| a.get(i, j)).collect();
        let cfg = HomotopyConfig::default();
        let out = newton_correct(&target, &x0, &[0.0], &ix, 3, &cfg).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.x, x0);
        let out = newton_correct(&target, &x0, &[-0.1], &ix, 3, &cfg).unwrap();
        assert!(out.iterations <= 6, "{}", out.iterations);
        assert_abs_diff_eq!(out.x[0], 1.257633, epsilon = 1e-5);
    }

    #[test]
    fn far_start_never_returns_a_non_solution() {
        let t = Tree::path(4);
        let ix = EdgeIndexing::new(&t, &[(0, 3)]).unwrap();
        let a = golden();
        let target = trace_map(&a, 3).unwrap();
        let x0: Vec<f64> = ix.tree_edges.iter().map(|&(i, j)| 2.0 * a.get(i, j)).collect();
        let cfg = HomotopyConfig::default();
        if let Ok(out) = newton_correct(&target, &x0, &[0.1], &ix, 3, &cfg) {
            let f = trace_map_of(&ix, &out.x, 0.1);
            let (_, res) = relative_residual(&f, &target);
            assert!(res <= cfg.newton_tol);
        }
    }

    fn trace_map_of(ix: &EdgeIndexing, x: &[f64], y: f64) -> Vec<f64> {
        trace_map(&ix.matrix(&full_weights(x, &[y])).unwrap(), 3).unwrap()
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = HomotopyConfig {
            steps: 0,
            ..Default::default()
        };
        assert!(extend(&golden(), &Tree::path(4), 3, &[(0, 3)], &cfg).is_err());
    }
}
