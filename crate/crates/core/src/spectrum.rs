//! Prescribed spectra and the assignment of conjugate pairs to branches.
//!
//! All values are imaginary parts: `lambdas[j]` stands for the eigenvalue
//! `i * lambdas[j]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative gap below which two adjacent values count as equal.
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Relative tolerance for `lambda_j = -lambda_{n+1-j}` and `mu_k = -mu_{n-k}`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SpectrumError {
    #[error("expected {expected} mu values for {n} lambda values, got {got}")]
    Length { n: usize, expected: usize, got: usize },

    #[error("need at least one lambda value")]
    Empty,

    #[error("non-finite value in spectrum")]
    NonFinite,

    #[error("interlacing violated: {left} = {left_value} must be < {right} = {right_value}")]
    Interlacing {
        left: String,
        left_value: f64,
        right: String,
        right_value: f64,
    },

    #[error("{left} = {left_value} and {right} = {right_value} are closer than the tie tolerance {tolerance:e}")]
    Duplicate {
        left: String,
        left_value: f64,
        right: String,
        right_value: f64,
        tolerance: f64,
    },

    #[error("symmetry violated: {name} = {value} but its mirror {mirror} = {mirror_value}")]
    Symmetry {
        name: String,
        value: f64,
        mirror: String,
        mirror_value: f64,
    },

    #[error("positive parts do not determine a spectrum: {lambda_pos} positive lambdas, {mu_pos} positive mus")]
    PositiveParts { lambda_pos: usize, mu_pos: usize },

    #[error("branch sizes {sizes:?} do not fit a spectrum of order {n}: {reason}")]
    Plan {
        n: usize,
        sizes: Vec<usize>,
        reason: String,
    },
}

/// `n` values `lambdas` and `n - 1` values `mus`, required to satisfy
/// `l1 < m1 < l2 < ... < m_{n-1} < l_n` and negation symmetry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    #[serde(rename = "lambda")]
    pub lambdas: Vec<f64>,
    #[serde(rename = "mu")]
    pub mus: Vec<f64>,
}

impl SpectrumSpec {
    pub fn new(lambdas: Vec<f64>, mus: Vec<f64>) -> Self {
        Self { lambdas, mus }
    }

    /// Expands the strictly positive parts into full symmetric lists,
    /// inserting 0 into whichever list has odd length.
    pub fn from_positive(lambda_pos: &[f64], mu_pos: &[f64]) -> Result<Self, SpectrumError> {
        let (p, q) = (lambda_pos.len(), mu_pos.len());
        let n_even = if p >= 1 && q + 1 == p {
            true
        } else if q == p {
            false
        } else {
            return Err(SpectrumError::PositiveParts {
                lambda_pos: p,
                mu_pos: q,
            });
        };
        let mirror = |pos: &[f64], with_zero: bool| {
            let mut sorted = pos.to_vec();
            sorted.sort_by(f64::total_cmp);
            let mut out: Vec<f64> = sorted.iter().rev().map(|x| -x).collect();
            if with_zero {
                out.push(0.0);
            }
            out.extend_from_slice(&sorted);
            out
        };
        Ok(Self {
            lambdas: mirror(lambda_pos, !n_even),
            mus: mirror(mu_pos, n_even),
        })
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    /// Largest absolute value among the lambdas, floored at 1. Tolerances
    /// throughout the crate are relative to this.
    pub fn scale(&self) -> f64 {
        self.lambdas.iter().fold(1.0f64, |m, x| m.max(x.abs()))
    }

    /// The spectrum with both lists negated and reversed.
    pub fn mirror(&self) -> Self {
        Self {
            lambdas: self.lambdas.iter().rev().map(|x| -x).collect(),
            mus: self.mus.iter().rev().map(|x| -x).collect(),
        }
    }

    /// Checks lengths, strict interlacing with the tie tolerance, and
    /// negation symmetry. Reports the first violated condition.
    pub fn validate(&self) -> Result<(), SpectrumError> {
        let n = self.n();
        if n == 0 {
            return Err(SpectrumError::Empty);
        }
        if self.mus.len() != n - 1 {
            return Err(SpectrumError::Length {
                n,
                expected: n - 1,
                got: self.mus.len(),
            });
        }
        if self.lambdas.iter().chain(&self.mus).any(|x| !x.is_finite()) {
            return Err(SpectrumError::NonFinite);
        }
        let scale = self.scale();
        let tie = TIE_TOLERANCE * scale;
        let merged = self.merged();
        for w in merged.windows(2) {
            let ((ln, lv), (rn, rv)) = (&w[0], &w[1]);
            if rv <= lv {
                return Err(SpectrumError::Interlacing {
                    left: ln.clone(),
                    left_value: *lv,
                    right: rn.clone(),
                    right_value: *rv,
                });
            }
            if rv - lv < tie {
                return Err(SpectrumError::Duplicate {
                    left: ln.clone(),
                    left_value: *lv,
                    right: rn.clone(),
                    right_value: *rv,
                    tolerance: tie,
                });
            }
        }
        let sym = SYMMETRY_TOLERANCE * scale;
        for (name, list) in [("lambda", &self.lambdas), ("mu", &self.mus)] {
            let len = list.len();
            for j in 0..len.div_ceil(2) {
                let k = len - 1 - j;
                if (list[j] + list[k]).abs() > sym {
                    return Err(SpectrumError::Symmetry {
                        name: format!("{name}_{}", j + 1),
                        value: list[j],
                        mirror: format!("{name}_{}", k + 1),
                        mirror_value: list[k],
                    });
                }
            }
        }
        Ok(())
    }

    fn merged(&self) -> Vec<(String, f64)> {
        let mut out = Vec::with_capacity(2 * self.n());
        for (j, &l) in self.lambdas.iter().enumerate() {
            out.push((format!("lambda_{}", j + 1), l));
            if let Some(&m) = self.mus.get(j) {
                out.push((format!("mu_{}", j + 1), m));
            }
        }
        out
    }
}

/// The mu values handed to one branch: the roots of its factor `g_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchAssignment {
    pub neighbor: usize,
    pub size: usize,
    /// Ascending and closed under negation.
    pub mus: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPlan {
    pub branches: Vec<BranchAssignment>,
}

/// Splits the mus among branches of the given sizes.
///
/// Positive mus are taken in ascending order and handed out in contiguous
/// blocks, `size / 2` conjugate pairs per branch in the order given; the
/// zero (present when `n` is even) goes to the single odd-sized branch.
pub fn plan_branches(
    spec: &SpectrumSpec,
    branch_sizes: &[(usize, usize)],
) -> Result<BranchPlan, SpectrumError> {
    let n = spec.n();
    let sizes: Vec<usize> = branch_sizes.iter().map(|&(_, s)| s).collect();
    let plan_err = |reason: &str| SpectrumError::Plan {
        n,
        sizes: sizes.clone(),
        reason: reason.to_string(),
    };
    if sizes.iter().sum::<usize>() + 1 != n {
        return Err(plan_err("sizes must sum to n - 1"));
    }
    if sizes.contains(&0) {
        return Err(plan_err("empty branch"));
    }
    let odd = sizes.iter().filter(|s| *s % 2 == 1).count();
    let expected = usize::from(n.is_multiple_of(2));
    if odd != expected {
        return Err(plan_err(if n.is_multiple_of(2) {
            "even order needs exactly one odd branch"
        } else {
            "odd order admits no odd branch"
        }));
    }
    let half = (n - 1) / 2;
    // mus are ascending, so the positive ones are the top half.
    let positive = &spec.mus[n - 1 - half..];
    let mut next = 0;
    let branches = branch_sizes
        .iter()
        .map(|&(neighbor, size)| {
            let pairs = &positive[next..next + size / 2];
            next += size / 2;
            let mut mus: Vec<f64> = pairs.iter().rev().map(|m| -m).collect();
            if size % 2 == 1 {
                mus.push(0.0);
            }
            mus.extend_from_slice(pairs);
            BranchAssignment {
                neighbor,
                size,
                mus,
            }
        })
        .collect();
    Ok(BranchPlan { branches })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p4() -> SpectrumSpec {
        SpectrumSpec::new(vec![-2.0, -1.0, 1.0, 2.0], vec![-1.5, 0.0, 1.5])
    }

    #[test]
    fn validate_accepts_examples() {
        p4().validate().unwrap();
        SpectrumSpec::new(vec![-1.0, 1.0], vec![0.0]).validate().unwrap();
        SpectrumSpec::new(vec![0.0], vec![]).validate().unwrap();
    }

    #[test]
    fn validate_rejects_asymmetric_mu() {
        let s = SpectrumSpec::new(vec![-2.0, -1.0, 1.0, 2.0], vec![-1.5, 0.2, 1.5]);
        match s.validate() {
            Err(SpectrumError::Symmetry { name, .. }) => assert_eq!(name, "mu_2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_rejects_bad_order_and_ties() {
        let s = SpectrumSpec::new(vec![-1.0, 1.0], vec![1.5]);
        assert!(matches!(s.validate(), Err(SpectrumError::Interlacing { .. })));
        let s = SpectrumSpec::new(vec![-1.0, 0.0, 1.0], vec![-1.0 + 1e-12, 1.0 - 1e-12]);
        assert!(matches!(s.validate(), Err(SpectrumError::Duplicate { .. })));
        let s = SpectrumSpec::new(vec![-1.0, 1.0], vec![]);
        assert!(matches!(s.validate(), Err(SpectrumError::Length { .. })));
        let s = SpectrumSpec::new(vec![-1.0, f64::NAN], vec![0.0]);
        assert_eq!(s.validate(), Err(SpectrumError::NonFinite));
    }

    #[test]
    fn positive_parts_expand() {
        let s = SpectrumSpec::from_positive(&[2.0, 1.0], &[1.5]).unwrap();
        assert_eq!(s, p4());
        let s = SpectrumSpec::from_positive(&[3.0], &[1.0]).unwrap();
        assert_eq!(s.lambdas, vec![-3.0, 0.0, 3.0]);
        assert_eq!(s.mus, vec![-1.0, 1.0]);
        assert!(SpectrumSpec::from_positive(&[1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn plan_single_branch() {
        let plan = plan_branches(&p4(), &[(2, 3)]).unwrap();
        assert_eq!(plan.branches[0].mus, vec![-1.5, 0.0, 1.5]);
        let s = SpectrumSpec::new(vec![-1.0, 1.0], vec![0.0]);
        assert_eq!(plan_branches(&s, &[(0, 1)]).unwrap().branches[0].mus, vec![0.0]);
    }

    #[test]
    fn plan_deals_pairs_in_order() {
        let s = SpectrumSpec::new(
            vec![-3.0, -2.0, -1.0, 1.0, 2.0, 3.0],
            vec![-2.5, -1.5, 0.0, 1.5, 2.5],
        );
        let plan = plan_branches(&s, &[(1, 2), (4, 3)]).unwrap();
        assert_eq!(plan.branches[0].mus, vec![-1.5, 1.5]);
        assert_eq!(plan.branches[1].mus, vec![-2.5, 0.0, 2.5]);
    }

    #[test]
    fn plan_rejects_parity_mismatch() {
        assert!(plan_branches(&p4(), &[(0, 1), (2, 1), (3, 1)]).is_err());
        assert!(plan_branches(&p4(), &[(0, 2)]).is_err());
    }
}
