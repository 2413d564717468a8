//! Real polynomials with a single parity, the partial-fraction residues of
//! `f(x) / g(x)`, and the per-branch split that yields the edge weights `y_j`
//! and the polynomials `h_j`.
//!
//! A polynomial of degree `d` whose roots are `0` or conjugate pairs on the
//! imaginary axis only has nonzero coefficients at powers with the parity of
//! `d`. On the imaginary axis `p(it)` is then real (even `d`) or `i` times a
//! real number (odd `d`); [`ParityPoly::eval_parity`] returns that real value.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{BranchPlan, SpectrumSpec};

/// Forbidden-parity coefficients must be below this times the coefficient norm.
pub const PARITY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_degree(d: usize) -> Self {
        if d.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn admits(self, power: usize) -> bool {
        Parity::of_degree(power) == self
    }
}

/// Real polynomial, coefficients in ascending degree, with nonzero
/// coefficients only at powers of one parity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityPoly {
    coeffs: Vec<f64>,
    parity: Parity,
}

impl ParityPoly {
    /// Takes the parity from the degree. Coefficients at the other parity
    /// must vanish to [`PARITY_TOLERANCE`]; they are then set to exactly 0.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        let parity = Parity::of_degree(coeffs.len() - 1);
        let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        for (k, c) in coeffs.iter_mut().enumerate() {
            if !parity.admits(k) {
                if c.abs() > PARITY_TOLERANCE * norm {
                    return Err(Error::Numerical(format!(
                        "coefficient of x^{k} is {c:e}, expected 0 for a {parity:?} polynomial"
                    )));
                }
                *c = 0.0;
            }
        }
        Ok(Self { coeffs, parity })
    }

    /// The monic polynomial `prod (x - i r)` over a negation-closed set of
    /// imaginary parts, i.e. `x^z * prod_{r > 0} (x^2 + r^2)` where `z` is the
    /// number of zero roots. Negative entries are taken as the mirrors of the
    /// positive ones.
    pub fn from_imag_roots(roots: &[f64]) -> Self {
        let mut coeffs = vec![1.0];
        for &r in roots {
            if r == 0.0 {
                coeffs.insert(0, 0.0);
            } else if r > 0.0 {
                coeffs = mul_quadratic(&coeffs, r * r);
            }
        }
        Self {
            parity: Parity::of_degree(coeffs.len() - 1),
            coeffs,
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().expect("never empty")
    }

    /// `p(it)` for even polynomials and `p(it) / i` for odd ones, which is
    /// real in both cases.
    pub fn eval_parity(&self, t: f64) -> f64 {
        // Horner in s = t^2 over the admitted powers; i^(2m) = (-1)^m.
        let offset = match self.parity {
            Parity::Even => 0,
            Parity::Odd => 1,
        };
        let s = -t * t;
        let mut acc = 0.0;
        for k in (offset..self.coeffs.len()).step_by(2).rev() {
            acc = acc * s + self.coeffs[k];
        }
        if offset == 1 {
            acc * t
        } else {
            acc
        }
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }
}

fn mul_quadratic(p: &[f64], r2: f64) -> Vec<f64> {
    // p(x) * (x^2 + r2)
    let mut out = vec![0.0; p.len() + 2];
    for (k, &c) in p.iter().enumerate() {
        out[k] += c * r2;
        out[k + 2] += c;
    }
    out
}

/// Residues of `f(x) / g(x) = x + sum_k c_k / (x - i mu_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidueSet {
    /// `c[k]` belongs to `spec.mus[k]`.
    pub c: Vec<f64>,
}

impl ResidueSet {
    pub fn total(&self) -> f64 {
        self.c.iter().sum()
    }

    /// Largest `|c_k - c_{n-k}| / c_k`.
    pub fn palindromy_defect(&self) -> f64 {
        let m = self.c.len();
        (0..m)
            .map(|k| (self.c[k] - self.c[m - 1 - k]).abs() / self.c[k].abs())
            .fold(0.0, f64::max)
    }
}

/// `c_k = -prod_j (mu_k - lambda_j) / prod_{j != k} (mu_k - mu_j)`.
pub fn residues(spec: &SpectrumSpec) -> ResidueSet {
    let c = spec
        .mus
        .iter()
        .enumerate()
        .map(|(k, &mu)| {
            // Interleave numerator and denominator factors to keep the
            // running product near unit magnitude.
            let mut acc = -(mu - spec.lambdas[0]);
            for (j, &l) in spec.lambdas.iter().enumerate().skip(1) {
                acc *= mu - l;
                let other = j - 1;
                if other != k {
                    acc /= mu - spec.mus[other];
                }
            }
            acc
        })
        .collect();
    ResidueSet { c }
}

/// Per-branch data: `y_j * h_j(x) / g_j(x) = sum_{k in branch} c_k / (x - i mu_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchData {
    pub neighbor: usize,
    /// Imaginary parts of the roots of `g_j`, ascending.
    pub g_roots: Vec<f64>,
    /// Residues aligned with `g_roots`.
    pub residues: Vec<f64>,
    /// Squared weight of the edge to `neighbor`.
    pub y: f64,
    pub h: ParityPoly,
    /// Imaginary parts of the roots of `h_j`, ascending and negation-symmetric.
    pub h_roots: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchDecomposition {
    pub residues: ResidueSet,
    pub branches: Vec<BranchData>,
}

/// Groups residues by branch, expands `y_j h_j` in the coefficient basis and
/// recovers the roots of `h_j` by bisection between consecutive roots of
/// `g_j`.
pub fn branch_decompose(spec: &SpectrumSpec, plan: &BranchPlan) -> Result<BranchDecomposition> {
    let residues = residues(spec);
    let mut branches = Vec::with_capacity(plan.branches.len());
    for assignment in &plan.branches {
        let g_roots = assignment.mus.clone();
        let branch_residues: Vec<f64> = g_roots
            .iter()
            .map(|&m| residues.c[nearest_index(&spec.mus, m)])
            .collect();
        let numerator = grouped_numerator(&g_roots, &branch_residues);
        let y = *numerator.last().expect("nonempty branch");
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::Numerical(format!(
                "branch at {} has non-positive weight {y:e}",
                assignment.neighbor + 1
            )));
        }
        let h = ParityPoly::new(numerator.iter().map(|c| c / y).collect())?;
        let brackets: Vec<(f64, f64)> = g_roots.windows(2).map(|w| (w[0], w[1])).collect();
        let raw = roots_by_bisection(&h, &brackets)?;
        let m = raw.len();
        let h_roots: Vec<f64> = (0..m).map(|k| 0.5 * (raw[k] - raw[m - 1 - k])).collect();
        branches.push(BranchData {
            neighbor: assignment.neighbor,
            g_roots,
            residues: branch_residues,
            y,
            h,
            h_roots,
        });
    }
    Ok(BranchDecomposition { residues, branches })
}

fn nearest_index(values: &[f64], target: f64) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .map(|(i, _)| i)
        .expect("nonempty mu list")
}

/// Coefficients of `sum_k c_k g(x) / (x - i mu_k)` for a negation-closed root
/// set. Conjugate terms combine into `(c_k + c_{k'}) x / (x^2 + mu_k^2)` and
/// the zero root contributes `c_0 / x`.
fn grouped_numerator(roots: &[f64], c: &[f64]) -> Vec<f64> {
    let m = roots.len();
    let has_zero = m % 2 == 1;
    let half = m / 2;
    // Positive roots sit in the top half; their mirrors in the bottom half.
    let pairs: Vec<(f64, f64)> = (0..half)
        .map(|r| {
            let top = m - half + r;
            let bottom = half - 1 - r;
            (roots[top], c[top] + c[bottom])
        })
        .collect();
    let quad_product = |skip: Option<usize>| {
        pairs
            .iter()
            .enumerate()
            .filter(|(s, _)| Some(*s) != skip)
            .fold(vec![1.0], |acc, (_, &(mu, _))| mul_quadratic(&acc, mu * mu))
    };
    let mut out = vec![0.0; m];
    for (r, &(_, weight)) in pairs.iter().enumerate() {
        // weight * x * prod_{s != r} (x^2 + mu_s^2), times x again with a zero root.
        let shift = 1 + usize::from(has_zero);
        for (k, v) in quad_product(Some(r)).into_iter().enumerate() {
            out[k + shift] += weight * v;
        }
    }
    if has_zero {
        let c0 = c[half];
        for (k, v) in quad_product(None).into_iter().enumerate() {
            out[k] += c0 * v;
        }
    }
    out
}

/// One root of `h` per bracket, located by bisection on
/// [`ParityPoly::eval_parity`]. Each bracket must show a sign change.
pub fn roots_by_bisection(h: &ParityPoly, brackets: &[(f64, f64)]) -> Result<Vec<f64>> {
    let mut roots = Vec::with_capacity(brackets.len());
    for &(lo, hi) in brackets {
        let (mut a, mut b) = (lo.min(hi), lo.max(hi));
        let (mut fa, fb) = (h.eval_parity(a), h.eval_parity(b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fb == 0.0 {
            roots.push(b);
            continue;
        }
        if fa.signum() == fb.signum() {
            return Err(Error::Numerical(format!(
                "no sign change of h on [{a}, {b}] (values {fa:e}, {fb:e})"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let fm = h.eval_parity(mid);
            if fm == 0.0 {
                a = mid;
                b = mid;
                break;
            }
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        roots.push(0.5 * (a + b));
    }
    if roots.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Numerical("bisection roots are not increasing".into()));
    }
    Ok(roots)
}
